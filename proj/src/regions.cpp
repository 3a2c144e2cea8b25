#include "mnlink/regions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mnlink/boxopt.hpp"
#include "mnlink/czado.hpp"
#include "mnlink/errors.hpp"
#include "mnlink/stats.hpp"

namespace mnlink {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

std::string region_method_name(RegionMethod m) {
  switch (m) {
    case RegionMethod::Conservative:
      return "conservative";
    case RegionMethod::LikelihoodRatio:
      return "lr";
    case RegionMethod::ScoreTest:
      return "score";
  }
  return "?";
}

std::vector<Eigen::VectorXd> solve_percentile(const FitResult& fit, const ModelSpec& spec,
                                              const MultinomialLink& link,
                                              const Eigen::VectorXd& pi0) {
  const ParameterLayout layout(spec, link);
  const MultinomialLink lk = link.with_alpha(fit.delta.alpha);
  const Eigen::VectorXd beta0 = fit.delta.intercepts(layout);
  const Eigen::VectorXd eta_target = link_g(lk, pi0, beta0);  // InverseDomainError

  // The system f_j(x) beta_j = eta_target_j must be linear in x.
  int k = -1;
  for (int j = 0; j < spec.q(); ++j)
    for (const Term& t : spec.terms(j)) {
      if (t.kind == Term::Kind::Product)
        throw Underdetermined(
            "solve_percentile: product terms make the percentile system nonlinear");
      if (t.kind == Term::Kind::Covariate) k = std::max(k, t.first + 1);
    }
  if (k <= 0) throw Underdetermined("solve_percentile: the model has no covariate terms");

  const int q = spec.q();
  if (k > q)
    throw Underdetermined("solve_percentile: " + std::to_string(k) + " covariates but only " +
                          std::to_string(q) + " equations");

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(q, k);
  Eigen::VectorXd rhs(q);
  for (int j = 0; j < q; ++j) {
    const auto& terms = spec.terms(j);
    rhs[j] = eta_target[j] - fit.delta.beta[layout.intercept_index(j)];
    for (std::size_t m = 1; m < terms.size(); ++m)
      A(j, terms[m].first) += fit.delta.beta[layout.beta_index(j, static_cast<int>(m))];
  }

  if (k == q) {
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (lu.rank() < k) {
      // rank-deficient square system: a consistent one has a solution line,
      // an inconsistent one has none
      const Eigen::VectorXd x = lu.solve(rhs);
      if ((A * x - rhs).cwiseAbs().maxCoeff() < 1e-8 * (1.0 + rhs.cwiseAbs().maxCoeff()))
        throw Underdetermined("solve_percentile: singular coefficient matrix, solution not unique");
      throw NoSolution("solve_percentile: inconsistent percentile system");
    }
    return {lu.solve(rhs)};
  }

  // k < q: overdetermined; accept a consistent least-squares solution
  const Eigen::VectorXd x = A.colPivHouseholderQr().solve(rhs);
  if ((A * x - rhs).cwiseAbs().maxCoeff() > 1e-8 * (1.0 + rhs.cwiseAbs().maxCoeff()))
    throw NoSolution("solve_percentile: inconsistent percentile system (k < q)");
  return {x};
}

namespace {

Eigen::VectorXd percentile_point(const FitResult& fit, const ModelSpec& spec,
                                 const MultinomialLink& link, const Eigen::VectorXd& pi0) {
  const auto solutions = solve_percentile(fit, spec, link, pi0);
  if (solutions.size() != 1)
    throw NotSingleton("percentile region: the percentile set is not a single point");
  return solutions.front();
}

Eigen::VectorXd eta_of_x(const ModelSpec& spec, const ParameterLayout& layout,
                         const Eigen::VectorXd& beta, const Eigen::VectorXd& x) {
  Eigen::VectorXd eta(spec.q());
  for (int j = 0; j < spec.q(); ++j)
    eta[j] = spec.feature_row(j, x).dot(beta.segment(layout.beta_index(j, 0), spec.p_j(j)));
  return eta;
}

}  // namespace

ConfidenceRegion conservative_region(const FitResult& fit, const ModelSpec& spec,
                                     const MultinomialLink& link, const PercentileQuery& query) {
  const ParameterLayout layout(spec, link);
  const int q = spec.q();
  const Eigen::VectorXd x0 = percentile_point(fit, spec, link, query.pi0);
  const MultinomialLink lk = link.with_alpha(fit.delta.alpha);
  const Eigen::VectorXd beta0 = fit.delta.intercepts(layout);
  const double tau = query.tau_prime / q;

  ConfidenceRegion region;
  region.method = RegionMethod::Conservative;
  region.level = 1.0 - query.tau_prime;
  region.x0 = x0;
  region.chi2_per_category.resize(q);
  region.eta_lower.resize(q);
  region.eta_upper.resize(q);

  // Cauchy-Schwarz band per category.  The fitted covariance is J^{-1}; the
  // band uses its beta_j block scaled by 1/N, matching how the asymptotic
  // covariance of sqrt(N) beta_hat enters the band formula.
  const double n_units = fit.total_units;
  for (int j = 0; j < q; ++j) {
    const Eigen::VectorXd f = spec.feature_row(j, x0);
    const Eigen::MatrixXd cj =
        fit.covariance.block(layout.beta_index(j, 0), layout.beta_index(j, 0), spec.p_j(j),
                             spec.p_j(j)) /
        n_units;
    region.chi2_per_category[j] = stats::chi2_quantile(spec.p_j(j), 1.0 - tau);
    const double center = f.dot(fit.delta.beta.segment(layout.beta_index(j, 0), spec.p_j(j)));
    const double half = std::sqrt(f.dot(cj * f) * region.chi2_per_category[j]);
    region.eta_lower[j] = center - half;
    region.eta_upper[j] = center + half;
  }

  // Componentwise extrema of h over the box C(x0).
  std::vector<std::pair<double, double>> box;
  for (int j = 0; j < q; ++j) box.emplace_back(region.eta_lower[j], region.eta_upper[j]);
  region.p_lower.resize(q);
  region.p_upper.resize(q);
  for (int j = 0; j < q; ++j) {
    const BoxResult ext = box_optimize(
        [&](const Eigen::VectorXd& xi) { return link_h(lk, xi, beta0)[j]; }, box);
    region.p_lower[j] = ext.min;
    region.p_upper[j] = ext.max;
  }

  // Membership: h(alpha_hat, eta_hat(x)) inside [P_L, P_U] componentwise;
  // the statistic is the largest componentwise violation.
  const Eigen::VectorXd p_lo = region.p_lower;
  const Eigen::VectorXd p_hi = region.p_upper;
  const Eigen::VectorXd beta_hat = fit.delta.beta;
  region.statistic = [spec, layout, lk, beta0, beta_hat, p_lo, p_hi](const Eigen::VectorXd& x) {
    const Eigen::VectorXd h = link_h(lk, eta_of_x(spec, layout, beta_hat, x), beta0);
    double worst = -kInf;
    for (int j = 0; j < h.size(); ++j)
      worst = std::max({worst, p_lo[j] - h[j], h[j] - p_hi[j]});
    return worst;
  };
  region.threshold = 0.0;
  return region;
}

namespace {

// Reduced parametrization of the constrained fit: rho carries the
// non-intercept betas and the active alphas; every intercept is the explicit
// function of rho that pins theta_j(x) at t_j = log(pi0_j/(1 - sum pi0)).
struct Elimination {
  const ModelSpec& spec;
  const MultinomialLink& base_link;  // carries the estimation mask
  ParameterLayout layout;
  Eigen::VectorXd x;
  Eigen::VectorXd t;  // target natural parameters
  int dim;            // (p - q) + r

  Elimination(const ModelSpec& s, const MultinomialLink& l, const Eigen::VectorXd& x_,
              const Eigen::VectorXd& pi0)
      : spec(s), base_link(l), layout(s, l), x(x_), t(natural_params(pi0).theta) {
    dim = layout.p() - spec.q() + layout.r();
  }

  // rho layout: non-intercept betas by category then term, followed by alpha.
  ParameterVector lift(const Eigen::VectorXd& rho) const {
    ParameterVector pv;
    pv.beta.resize(layout.p());
    pv.alpha = rho.tail(layout.r());
    const MultinomialLink lk = base_link.with_alpha(pv.alpha);
    int s = 0;
    for (int j = 0; j < spec.q(); ++j) {
      double u = 0.0;  // f~_j(x) beta~_j
      for (int m = 1; m < spec.p_j(j); ++m) {
        const double b = rho[s++];
        pv.beta[layout.beta_index(j, m)] = b;
        u += spec.terms(j)[static_cast<std::size_t>(m)].eval(x) * b;
      }
      double b0 = 0.0;
      const auto& fam = lk.family(j);
      if (base_link.standardization() == StandardizationMode::AtIntercepts) {
        const double g = fam.kind == FamilyKind::Identity
                             ? u
                             : czado::value(lk.param(j, 0), lk.param(j, 1), u);
        b0 = t[j] - g;
      } else {
        const double w = fam.kind == FamilyKind::Identity
                             ? t[j]
                             : czado::inverse(lk.param(j, 0), lk.param(j, 1), t[j]);
        b0 = w - u;
      }
      pv.beta[layout.intercept_index(j)] = b0;
    }
    return pv;
  }

  // T = d delta / d rho, (p+r) x dim.
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& rho) const {
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(layout.size(), dim);
    const ParameterVector pv = lift(rho);
    const MultinomialLink lk = base_link.with_alpha(pv.alpha);
    // alpha slots of rho, positioned after the betas
    const int beta_dim = layout.p() - spec.q();
    for (int s = 0; s < layout.r(); ++s)
      T(layout.alpha_index(s), beta_dim + s) = 1.0;
    int s = 0;
    for (int j = 0; j < spec.q(); ++j) {
      double u = 0.0;
      const int s_start = s;
      for (int m = 1; m < spec.p_j(j); ++m) {
        T(layout.beta_index(j, m), s) = 1.0;
        u += spec.terms(j)[static_cast<std::size_t>(m)].eval(x) * pv.beta[layout.beta_index(j, m)];
        ++s;
      }
      const int row0 = layout.intercept_index(j);
      const auto& fam = lk.family(j);
      if (base_link.standardization() == StandardizationMode::AtIntercepts) {
        const double gp = fam.kind == FamilyKind::Identity
                              ? 1.0
                              : czado::deriv_eta(lk.param(j, 0), lk.param(j, 1), u);
        for (int m = 1; m < spec.p_j(j); ++m)
          T(row0, s_start + m - 1) =
              -gp * spec.terms(j)[static_cast<std::size_t>(m)].eval(x);
        if (fam.kind != FamilyKind::Identity) {
          double d1 = 0.0, d2 = 0.0;
          czado::deriv_alpha(lk.param(j, 0), lk.param(j, 1), u, &d1, &d2);
          int slot = 0;
          for (int jj = 0; jj <= j; ++jj)
            for (int kk = 0; kk < base_link.family(jj).param_dim(); ++kk) {
              if (!base_link.family(jj).active[static_cast<std::size_t>(kk)]) continue;
              if (jj == j) T(row0, beta_dim + slot) = -(kk == 0 ? d1 : d2);
              ++slot;
            }
        }
      } else {
        for (int m = 1; m < spec.p_j(j); ++m)
          T(row0, s_start + m - 1) = -spec.terms(j)[static_cast<std::size_t>(m)].eval(x);
        if (fam.kind != FamilyKind::Identity) {
          // d/d alpha of G^{-1}(alpha, t_j) = -(dG/dalpha)/(dG/deta) at the
          // inverse point
          const double w = czado::inverse(lk.param(j, 0), lk.param(j, 1), t[j]);
          const double gp = czado::deriv_eta(lk.param(j, 0), lk.param(j, 1), w);
          double d1 = 0.0, d2 = 0.0;
          czado::deriv_alpha(lk.param(j, 0), lk.param(j, 1), w, &d1, &d2);
          int slot = 0;
          for (int jj = 0; jj <= j; ++jj)
            for (int kk = 0; kk < base_link.family(jj).param_dim(); ++kk) {
              if (!base_link.family(jj).active[static_cast<std::size_t>(kk)]) continue;
              if (jj == j) T(row0, beta_dim + slot) = -(kk == 0 ? d1 : d2) / gp;
              ++slot;
            }
        }
      }
    }
    return T;
  }

  Eigen::VectorXd project(const ParameterVector& pv) const {
    Eigen::VectorXd rho(dim);
    int s = 0;
    for (int j = 0; j < spec.q(); ++j)
      for (int m = 1; m < spec.p_j(j); ++m) rho[s++] = pv.beta[layout.beta_index(j, m)];
    rho.tail(layout.r()) = pv.alpha;
    return rho;
  }
};

}  // namespace

FitResult constrained_fit(const Dataset& data, const ModelSpec& spec,
                          const MultinomialLink& link, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& pi0, const FitOptions& opts,
                          const ParameterVector* init) {
  const Elimination elim(spec, link, x, pi0);
  const ParameterLayout& layout = elim.layout;

  Eigen::VectorXd rho;
  if (init) {
    rho = elim.project(*init);
  } else {
    rho = elim.project(initial_values(data, spec, link, opts));
  }

  ParameterVector delta = elim.lift(rho);
  double ll = loglik(data, spec, link, delta);
  if (!std::isfinite(ll))
    throw LinkDomainError("constrained fit: log-likelihood not finite at the starting values");

  bool converged = false;
  int it = 0;
  double score_norm = kInf;
  for (; it < opts.max_iter; ++it) {
    const ScoreInfo si = score_and_info(data, spec, link, delta);
    const Eigen::MatrixXd T = elim.jacobian(rho);
    const Eigen::VectorXd sr = T.transpose() * si.score;
    score_norm = sr.cwiseAbs().maxCoeff();
    if (score_norm < opts.tol) {
      converged = true;
      break;
    }
    const Eigen::MatrixXd jr = T.transpose() * si.info * T;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(jr);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
      throw SingularInformation("constrained fit: reduced information is singular");
    const Eigen::VectorXd step = ldlt.solve(sr);
    const double slack = 1e-11 * std::max(1.0, std::abs(ll));
    double tstep = 1.0;
    bool accepted = false;
    Eigen::VectorXd rho_new;
    ParameterVector delta_new;
    double ll_new = ll;
    for (int h = 0; h <= opts.max_step_halvings; ++h) {
      rho_new = rho + tstep * step;
      try {
        delta_new = elim.lift(rho_new);
        ll_new = loglik(data, spec, link, delta_new);
      } catch (const InverseDomainError&) {
        ll_new = -kInf;  // left the reachable set; halve
      }
      if (std::isfinite(ll_new) && ll_new > ll - slack) {
        accepted = true;
        break;
      }
      tstep *= 0.5;
    }
    if (!accepted) break;
    rho = rho_new;
    delta = delta_new;
    ll = ll_new;
  }

  FitResult res;
  res.method = FitMethod::FisherScoring;
  res.delta = delta;
  res.loglik = ll;
  res.deviance = 2.0 * (saturated_loglik(data) - ll);
  res.aic = -2.0 * ll + 2.0 * elim.dim;
  res.iterations = it;
  res.converged = converged;
  res.n_obs = data.size();
  res.total_units = data.total_units();
  // delta-scale covariance under the constraint: T (T' J T)^{-1} T'
  const ScoreInfo si = score_and_info(data, spec, link, delta);
  const Eigen::MatrixXd T = elim.jacobian(rho);
  const Eigen::MatrixXd jr = T.transpose() * si.info * T;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(jr);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
    res.covariance = T * ldlt.solve(T.transpose());
    res.covariance_alpha_fixed = res.covariance.topLeftCorner(layout.p(), layout.p());
  } else {
    res.covariance = Eigen::MatrixXd::Zero(layout.size(), layout.size());
    res.covariance_alpha_fixed = Eigen::MatrixXd::Zero(layout.p(), layout.p());
  }
  return res;
}

namespace {

// Shared scaffolding of the LR and score regions.
ConfidenceRegion test_region(RegionMethod method, const Dataset& data, const FitResult& fit,
                             const ModelSpec& spec, const MultinomialLink& link,
                             const PercentileQuery& query) {
  ConfidenceRegion region;
  region.method = method;
  region.level = 1.0 - query.tau_prime;
  region.threshold = stats::chi2_quantile(spec.q(), 1.0 - query.tau_prime);
  region.x0 = percentile_point(fit, spec, link, query.pi0);

  const ParameterLayout layout(spec, link);
  const Eigen::VectorXd pi0 = query.pi0;
  const ParameterVector init = fit.delta;
  const double ll_hat = fit.loglik;
  const FitOptions opts;  // constrained fits use the defaults

  // the statistic closures own copies of everything they touch
  if (method == RegionMethod::LikelihoodRatio) {
    region.statistic = [data, spec, link, pi0, opts, init,
                        ll_hat](const Eigen::VectorXd& x) -> double {
      try {
        const FitResult cf = constrained_fit(data, spec, link, x, pi0, opts, &init);
        if (!cf.converged) return kInf;
        return std::max(0.0, 2.0 * (ll_hat - cf.loglik));
      } catch (const Error&) {
        return kInf;
      }
    };
  } else {
    region.statistic = [data, spec, link, pi0, opts, init,
                        layout](const Eigen::VectorXd& x) -> double {
      try {
        const FitResult cf = constrained_fit(data, spec, link, x, pi0, opts, &init);
        if (!cf.converged) return kInf;
        const ScoreInfo si = score_and_info(data, spec, link, cf.delta);
        const int q = spec.q();
        Eigen::VectorXd u0(q);
        Eigen::MatrixXd sigma0(q, q);
        for (int a = 0; a < q; ++a) {
          u0[a] = si.score[layout.intercept_index(a)];
          for (int b = 0; b < q; ++b)
            sigma0(a, b) = si.info(layout.intercept_index(a), layout.intercept_index(b));
        }
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(sigma0);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return kInf;
        return std::max(0.0, u0.dot(ldlt.solve(u0)));
      } catch (const Error&) {
        return kInf;
      }
    };
  }
  return region;
}

}  // namespace

ConfidenceRegion lr_region(const Dataset& data, const FitResult& fit, const ModelSpec& spec,
                           const MultinomialLink& link, const PercentileQuery& query) {
  return test_region(RegionMethod::LikelihoodRatio, data, fit, spec, link, query);
}

ConfidenceRegion score_region(const Dataset& data, const FitResult& fit, const ModelSpec& spec,
                              const MultinomialLink& link, const PercentileQuery& query) {
  return test_region(RegionMethod::ScoreTest, data, fit, spec, link, query);
}

std::vector<BoundaryRecord> trace_region(ConfidenceRegion& region,
                                         const std::vector<std::pair<double, double>>& window,
                                         int n1, int n2) {
  if (window.size() != 2)
    throw ValidationError("trace_region: tracing needs a 2-covariate window");
  if (n1 < 1 || n2 < 2) throw ValidationError("trace_region: grid too small");
  const auto [lo1, hi1] = window[0];
  const auto [lo2, hi2] = window[1];

  region.boundary.clear();
  region.failed_points = 0;
  Eigen::VectorXd x(2);
  const auto x2_at = [&](int j) { return lo2 + (hi2 - lo2) * j / (n2 - 1); };
  const auto member_state = [&](double x1, int j) {
    x[0] = x1;
    x[1] = x2_at(j);
    const double s = region.statistic(x);
    if (!std::isfinite(s)) {
      ++region.failed_points;
      return false;
    }
    return s <= region.threshold;
  };

  for (int i = 0; i < n1; ++i) {
    const double x1 = n1 == 1 ? lo1 : lo1 + (hi1 - lo1) * i / (n1 - 1);
    BoundaryRecord rec;
    rec.x1 = x1;
    // least and greatest member of the column; the scan walks in from both
    // ends, which returns exactly the full-scan bounds
    int lo_idx = -1;
    for (int j = 0; j < n2; ++j)
      if (member_state(x1, j)) {
        lo_idx = j;
        break;
      }
    if (lo_idx >= 0) {
      int hi_idx = lo_idx;
      for (int j = n2 - 1; j > lo_idx; --j)
        if (member_state(x1, j)) {
          hi_idx = j;
          break;
        }
      rec.empty = false;
      rec.x2_lower = x2_at(lo_idx);
      rec.x2_upper = x2_at(hi_idx);
    } else {
      rec.empty = true;
      rec.x2_lower = std::numeric_limits<double>::quiet_NaN();
      rec.x2_upper = std::numeric_limits<double>::quiet_NaN();
    }
    region.boundary.push_back(rec);
  }
  return region.boundary;
}

}  // namespace mnlink
