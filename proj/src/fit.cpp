#include "mnlink/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mnlink/errors.hpp"
#include "mnlink/stats.hpp"

namespace mnlink {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double loglik_prepared(const Dataset& data, const ModelSpec& spec,
                       const MultinomialLink& link, const ParameterLayout& layout,
                       const Eigen::VectorXd& beta, double constant) {
  double ll = constant;
  for (const auto& obs : data.observations) {
    const Eigen::VectorXd theta = theta_prepared(spec, link, layout, beta, obs.x);
    if (!theta.allFinite()) return kNegInf;
    double dot = 0.0;
    for (int j = 0; j < data.q; ++j) dot += obs.y[j] * theta[j];
    ll += dot - obs.n * log_partition(theta);
  }
  return ll;
}

double combinatorial_constant(const Dataset& data) {
  double c = 0.0;
  for (const auto& obs : data.observations) {
    int y0 = obs.n;
    c += std::lgamma(obs.n + 1.0);
    for (int j = 0; j < data.q; ++j) {
      c -= std::lgamma(obs.y[j] + 1.0);
      y0 -= obs.y[j];
    }
    c -= std::lgamma(y0 + 1.0);
  }
  return c;
}

// Solves info * x = rhs through an LDLT factorization, retrying with a small
// diagonal jitter; throws SingularInformation past jitter 1e-10.
Eigen::VectorXd solve_information(const Eigen::MatrixXd& info, const Eigen::VectorXd& rhs) {
  for (double jitter : {0.0, 1e-12, 1e-10}) {
    Eigen::MatrixXd m = info;
    if (jitter > 0.0) m.diagonal().array() += jitter * (1.0 + info.diagonal().maxCoeff());
    Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      const Eigen::VectorXd x = ldlt.solve(rhs);
      if (x.allFinite()) return x;
    }
  }
  throw SingularInformation("Fisher information is singular beyond jitter 1e-10");
}

Eigen::MatrixXd invert_information(const Eigen::MatrixXd& info) {
  const int n = static_cast<int>(info.rows());
  for (double jitter : {0.0, 1e-12, 1e-10}) {
    Eigen::MatrixXd m = info;
    if (jitter > 0.0) m.diagonal().array() += jitter * (1.0 + info.diagonal().maxCoeff());
    Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(n, n));
      if (inv.allFinite()) return 0.5 * (inv + inv.transpose());  // keep symmetric
    }
  }
  throw SingularInformation("Fisher information is singular beyond jitter 1e-10");
}

}  // namespace

double loglik(const Dataset& data, const ModelSpec& spec, const MultinomialLink& link,
              const ParameterVector& delta) {
  const ParameterLayout layout(spec, link);
  return loglik_prepared(data, spec, link.with_alpha(delta.alpha), layout, delta.beta,
                         combinatorial_constant(data));
}

double saturated_loglik(const Dataset& data) {
  double ll = combinatorial_constant(data);
  for (const auto& obs : data.observations) {
    int y0 = obs.n;
    for (int j = 0; j < data.q; ++j) {
      if (obs.y[j] > 0) ll += obs.y[j] * std::log(double(obs.y[j]) / obs.n);
      y0 -= obs.y[j];
    }
    if (y0 > 0) ll += y0 * std::log(double(y0) / obs.n);
  }
  return ll;
}

ScoreInfo score_and_info(const Dataset& data, const ModelSpec& spec,
                         const MultinomialLink& link, const ParameterVector& delta) {
  const ParameterLayout layout(spec, link);
  const MultinomialLink lk = link.with_alpha(delta.alpha);
  ScoreInfo out;
  out.score = Eigen::VectorXd::Zero(layout.size());
  out.info = Eigen::MatrixXd::Zero(layout.size(), layout.size());
  for (const auto& obs : data.observations) {
    const ThetaJacobian tj = theta_and_jacobian_prepared(spec, lk, layout, delta.beta, obs.x);
    const Eigen::VectorXd mu = probabilities_from_theta(tj.theta);
    Eigen::VectorXd resid(data.q);
    for (int j = 0; j < data.q; ++j) resid[j] = double(obs.y[j]) / obs.n - mu[j];
    const Eigen::MatrixXd cov = Eigen::MatrixXd(mu.asDiagonal()) - mu * mu.transpose();
    out.score.noalias() += obs.n * tj.dtheta_ddelta.transpose() * resid;
    out.info.noalias() +=
        obs.n * tj.dtheta_ddelta.transpose() * cov * tj.dtheta_ddelta;
  }
  return out;
}

FitResult fit_fisher_scoring(const Dataset& data, const ModelSpec& spec,
                             const MultinomialLink& link, const ParameterVector& init,
                             const FitOptions& opts) {
  data.validate();
  const ParameterLayout layout(spec, link);
  if (init.beta.size() != layout.p() || init.alpha.size() != layout.r())
    throw ValidationError("fit: initial values do not match the parameter layout");
  const double constant = combinatorial_constant(data);
  const double lsat = saturated_loglik(data);

  ParameterVector delta = init;
  double ll = loglik_prepared(data, spec, link.with_alpha(delta.alpha), layout, delta.beta,
                              constant);
  if (!std::isfinite(ll))
    throw ValidationError("fit: log-likelihood is not finite at the starting values");

  FitResult res;
  res.method = FitMethod::FisherScoring;
  res.n_obs = data.size();
  res.total_units = data.total_units();
  res.loglik_trace.push_back(ll);

  ScoreInfo si = score_and_info(data, spec, link, delta);
  bool converged = false;
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    if (si.score.cwiseAbs().maxCoeff() < opts.tol) {
      converged = true;
      break;
    }
    const Eigen::VectorXd step = solve_information(si.info, si.score);
    // Step halving: accept the first step that does not decrease the
    // log-likelihood (beyond float noise on its scale).
    const double slack = 1e-11 * std::max(1.0, std::abs(ll));
    double t = 1.0;
    bool accepted = false;
    ParameterVector cand = delta;
    double cand_ll = ll;
    for (int h = 0; h <= opts.max_step_halvings; ++h) {
      const Eigen::VectorXd d = delta.packed() + t * step;
      cand = ParameterVector::unpack(d, layout);
      cand_ll = loglik_prepared(data, spec, link.with_alpha(cand.alpha), layout, cand.beta,
                                constant);
      if (std::isfinite(cand_ll) && cand_ll > ll - slack) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // no usable direction left; flagged below
    delta = cand;
    ll = cand_ll;
    res.loglik_trace.push_back(ll);
    si = score_and_info(data, spec, link, delta);
  }

  res.delta = delta;
  res.loglik = ll;
  res.deviance = 2.0 * (lsat - ll);
  res.aic = -2.0 * ll + 2.0 * layout.size();
  res.iterations = it;
  res.converged = converged || si.score.cwiseAbs().maxCoeff() < opts.tol;
  res.covariance = invert_information(si.info);
  if (layout.r() > 0) {
    res.covariance_alpha_fixed =
        invert_information(si.info.topLeftCorner(layout.p(), layout.p()));
  } else {
    res.covariance_alpha_fixed = res.covariance;
  }
  return res;
}

ParameterVector initial_values(const Dataset& data, const ModelSpec& spec,
                               const MultinomialLink& link, const FitOptions& opts) {
  const ParameterLayout layout(spec, link);
  // Identity-link fit started from zero.
  std::vector<GeneratingFamily> identity(static_cast<std::size_t>(spec.q()));
  const MultinomialLink base(identity, link.standardization());
  ParameterVector zero;
  zero.beta = Eigen::VectorXd::Zero(layout.p());
  zero.alpha = Eigen::VectorXd(0);
  const FitResult logit = fit_fisher_scoring(data, spec, base, zero, opts);
  ParameterVector init;
  init.beta = logit.delta.beta;
  init.alpha = Eigen::VectorXd::Ones(layout.r());
  return init;
}

FitResult fit(const Dataset& data, const ModelSpec& spec, const MultinomialLink& link,
              const FitOptions& opts) {
  return fit_fisher_scoring(data, spec, link, initial_values(data, spec, link, opts), opts);
}

std::vector<double> default_alpha_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi > lo))
    throw ValidationError("alpha grid: requires hi > lo and step > 0");
  std::vector<double> grid;
  const long k_lo = static_cast<long>(std::floor(lo / step)) - 1;
  const long k_hi = static_cast<long>(std::ceil(hi / step)) + 1;
  for (long k = k_lo; k <= k_hi; ++k) {
    const double v = k * step;
    if (v > lo + 1e-12 && v < hi - 1e-12) grid.push_back(v);
  }
  if (grid.empty()) throw ValidationError("alpha grid: no interior grid points");
  return grid;
}

FitResult fit_grid_profile(const Dataset& data, const ModelSpec& spec,
                           const MultinomialLink& link,
                           const std::vector<std::vector<double>>& grid,
                           const FitOptions& opts) {
  data.validate();
  const ParameterLayout layout(spec, link);
  const int r = layout.r();
  if (static_cast<int>(grid.size()) != r)
    throw ValidationError("grid profile: need one value list per active link parameter");
  for (const auto& g : grid)
    if (g.empty()) throw ValidationError("grid profile: empty value list");

  // beta-only model: same families with nothing active.
  std::vector<GeneratingFamily> pinned_mask;
  for (int j = 0; j < link.q(); ++j) {
    GeneratingFamily f = link.family(j);
    f.active = {false, false};
    pinned_mask.push_back(f);
  }
  const MultinomialLink pinned_base = link.with_mask(pinned_mask);
  const ParameterLayout beta_layout(spec, pinned_base);
  const ParameterVector beta_init = initial_values(data, spec, pinned_base, opts);

  const double constant = combinatorial_constant(data);
  bool have_best = false;
  Eigen::VectorXd best_alpha(r);
  ParameterVector best_beta;
  double best_ll = kNegInf;

  // Lexicographic scan with strictly-greater acceptance: ties resolve to the
  // smallest alpha.
  std::vector<std::size_t> idx(static_cast<std::size_t>(r), 0);
  bool done = false;
  while (!done) {
    Eigen::VectorXd alpha(r);
    for (int s = 0; s < r; ++s) alpha[s] = grid[static_cast<std::size_t>(s)][idx[static_cast<std::size_t>(s)]];
    const MultinomialLink pinned = pinned_base.with_params(
        link.with_alpha(alpha).params());
    try {
      ParameterVector pv = beta_init;
      const FitResult prof = fit_fisher_scoring(data, spec, pinned, pv, opts);
      if (prof.converged && prof.loglik > best_ll) {
        best_ll = prof.loglik;
        best_alpha = alpha;
        best_beta = prof.delta;
        have_best = true;
      }
    } catch (const Error&) {
      // failed grid point: skipped
    }
    // advance the odometer, last coordinate fastest
    for (int s = r - 1; s >= -1; --s) {
      if (s < 0) {
        done = true;
        break;
      }
      auto& i = idx[static_cast<std::size_t>(s)];
      if (++i < grid[static_cast<std::size_t>(s)].size()) break;
      i = 0;
    }
    if (r == 0) done = true;  // degenerate: a single evaluation
  }

  if (!have_best) throw AllGridFailed("grid profile: no grid point converged");

  ParameterVector delta;
  delta.beta = best_beta.beta;
  delta.alpha = best_alpha;
  const ScoreInfo si = score_and_info(data, spec, link, delta);

  FitResult res;
  res.method = FitMethod::GridProfile;
  res.delta = delta;
  res.loglik = loglik_prepared(data, spec, link.with_alpha(delta.alpha), layout, delta.beta,
                               constant);
  res.deviance = 2.0 * (saturated_loglik(data) - res.loglik);
  res.aic = -2.0 * res.loglik + 2.0 * layout.size();
  res.converged = true;
  res.iterations = 0;
  res.n_obs = data.size();
  res.total_units = data.total_units();
  res.covariance = invert_information(si.info);
  res.covariance_alpha_fixed = invert_information(si.info.topLeftCorner(layout.p(), layout.p()));
  res.loglik_trace.push_back(res.loglik);
  return res;
}

Eigen::VectorXd variance_inflation(const FitResult& fit_joint, const FitResult& fit_alpha_fixed) {
  const int p = static_cast<int>(fit_alpha_fixed.covariance.rows());
  if (fit_joint.covariance.rows() < p)
    throw ValidationError("variance inflation: joint covariance smaller than the beta block");
  Eigen::VectorXd ratios(p);
  for (int i = 0; i < p; ++i)
    ratios[i] = std::sqrt(fit_joint.covariance(i, i) / fit_alpha_fixed.covariance(i, i));
  return ratios;
}

FitResult refit_alpha_fixed(const Dataset& data, const ModelSpec& spec,
                            const MultinomialLink& link, const FitResult& fit_joint,
                            const FitOptions& opts) {
  std::vector<GeneratingFamily> mask;
  for (int j = 0; j < link.q(); ++j) {
    GeneratingFamily f = link.family(j);
    f.active = {false, false};
    mask.push_back(f);
  }
  const MultinomialLink pinned =
      link.with_alpha(fit_joint.delta.alpha).with_mask(mask);
  ParameterVector init;
  init.beta = fit_joint.delta.beta;
  init.alpha = Eigen::VectorXd(0);
  return fit_fisher_scoring(data, spec, pinned, init, opts);
}

std::string alpha_name(const AlphaId& id) {
  return "alpha_" + std::to_string(id.first + 1) + std::to_string(id.second + 1);
}

ScoreTestResult score_test_link(const Dataset& data, const ModelSpec& spec,
                                const MultinomialLink& link,
                                const std::vector<AlphaId>& tested, const FitOptions& opts) {
  ScoreTestResult out;
  out.df = static_cast<int>(tested.size());
  for (const auto& id : tested) out.tested_params.push_back(alpha_name(id));
  if (tested.empty()) {
    out.statistic = 0.0;
    out.p_value = 1.0;
    return out;
  }
  for (const auto& [j, k] : tested) {
    if (j < 0 || j >= link.q() || k < 0 || k >= 2 ||
        link.family(j).kind == FamilyKind::Identity)
      throw ValidationError("score test: " + alpha_name({j, k}) + " does not exist");
    if (link.family(j).active[static_cast<std::size_t>(k)])
      throw ValidationError("score test: " + alpha_name({j, k}) + " is already active");
  }

  // H0 fit with the tested parameters pinned.
  const FitResult h0 = fit(data, spec, link, opts);

  // Activate the tested parameters and evaluate score and information at the
  // H0 solution.
  std::vector<GeneratingFamily> mask;
  for (int j = 0; j < link.q(); ++j) mask.push_back(link.family(j));
  for (const auto& [j, k] : tested) mask[static_cast<std::size_t>(j)].active[static_cast<std::size_t>(k)] = true;
  const MultinomialLink extended = link.with_alpha(h0.delta.alpha).with_mask(mask);
  const ParameterLayout ext_layout(spec, extended);
  ParameterVector delta0;
  delta0.beta = h0.delta.beta;
  delta0.alpha = extended.alpha();
  const ScoreInfo si = score_and_info(data, spec, extended, delta0);

  // Indices of the tested block within the extended layout.
  std::vector<int> t_idx;
  for (int s = 0; s < ext_layout.r(); ++s) {
    const auto slot = ext_layout.alpha_slot(s);
    if (std::find(tested.begin(), tested.end(), slot) != tested.end())
      t_idx.push_back(ext_layout.alpha_index(s));
  }
  std::vector<int> n_idx;
  for (int i = 0; i < ext_layout.size(); ++i)
    if (std::find(t_idx.begin(), t_idx.end(), i) == t_idx.end()) n_idx.push_back(i);

  const int nt = static_cast<int>(t_idx.size());
  const int nn = static_cast<int>(n_idx.size());
  Eigen::VectorXd ut(nt);
  Eigen::MatrixXd jtt(nt, nt), jtn(nt, nn), jnn(nn, nn);
  for (int a = 0; a < nt; ++a) {
    ut[a] = si.score[t_idx[static_cast<std::size_t>(a)]];
    for (int b = 0; b < nt; ++b) jtt(a, b) = si.info(t_idx[static_cast<std::size_t>(a)], t_idx[static_cast<std::size_t>(b)]);
    for (int b = 0; b < nn; ++b) jtn(a, b) = si.info(t_idx[static_cast<std::size_t>(a)], n_idx[static_cast<std::size_t>(b)]);
  }
  for (int a = 0; a < nn; ++a)
    for (int b = 0; b < nn; ++b) jnn(a, b) = si.info(n_idx[static_cast<std::size_t>(a)], n_idx[static_cast<std::size_t>(b)]);

  Eigen::LDLT<Eigen::MatrixXd> ldlt(jnn);
  if (ldlt.info() != Eigen::Success)
    throw SingularInformation("score test: nuisance information is singular");
  const Eigen::MatrixXd schur = jtt - jtn * ldlt.solve(jtn.transpose());
  const Eigen::VectorXd w = solve_information(schur, ut);
  out.statistic = std::max(0.0, ut.dot(w));
  out.p_value = stats::chi2_sf(out.statistic, out.df);
  return out;
}

SelectionResult stepwise_link_selection(const Dataset& data, const ModelSpec& spec,
                                        FamilyKind kind, StandardizationMode mode,
                                        const FitOptions& opts) {
  const int q = spec.q();
  std::vector<GeneratingFamily> families(static_cast<std::size_t>(q));
  for (auto& f : families) f.kind = kind;

  SelectionResult out;
  out.families = families;
  out.fit = fit(data, spec, MultinomialLink{families, mode}, opts);
  double current_aic = out.fit.aic;

  if (kind == FamilyKind::Identity) return out;  // nothing to select

  while (true) {
    // Candidate moves: one pinned parameter, or both pinned parameters of a
    // category at once.  The pair move matters: two-sided families can leave
    // every single-tail activation AIC-neutral while the joint activation of
    // both tails improves the fit substantially.
    std::vector<std::vector<AlphaId>> moves;
    for (int j = 0; j < q; ++j)
      for (int k = 0; k < 2; ++k)
        if (!out.families[static_cast<std::size_t>(j)].active[static_cast<std::size_t>(k)])
          moves.push_back({{j, k}});
    for (int j = 0; j < q; ++j)
      if (!out.families[static_cast<std::size_t>(j)].active[0] &&
          !out.families[static_cast<std::size_t>(j)].active[1])
        moves.push_back({{j, 0}, {j, 1}});

    bool improved = false;
    double best_aic = current_aic;
    std::vector<GeneratingFamily> best_mask;
    FitResult best_fit;
    std::size_t best_step_index = 0;
    for (const auto& move : moves) {
      std::vector<GeneratingFamily> mask = out.families;
      SelectionStep step;
      for (const auto& [j, k] : move) {
        mask[static_cast<std::size_t>(j)].active[static_cast<std::size_t>(k)] = true;
        step.activated.push_back(alpha_name({j, k}));
      }
      step.aic = std::numeric_limits<double>::quiet_NaN();
      try {
        const MultinomialLink lk{mask, mode};
        const ParameterLayout lay(spec, lk);
        const ParameterLayout prev_lay(spec, MultinomialLink{out.families, mode});
        ParameterVector init;
        init.beta = out.fit.delta.beta;
        init.alpha = Eigen::VectorXd::Ones(lay.r());
        // parameters selected earlier keep their fitted values; the newly
        // activated ones start from the pinned value 1
        for (int s = 0; s < lay.r(); ++s)
          for (int sp = 0; sp < prev_lay.r(); ++sp)
            if (prev_lay.alpha_slot(sp) == lay.alpha_slot(s))
              init.alpha[s] = out.fit.delta.alpha[sp];
        const FitResult cand = fit_fisher_scoring(data, spec, lk, init, opts);
        if (cand.converged) {
          step.aic = cand.aic;
          if (cand.aic < best_aic - 1e-9) {
            best_aic = cand.aic;
            best_mask = mask;
            best_fit = cand;
            best_step_index = out.trail.size();
            improved = true;
          }
        }
      } catch (const Error&) {
        // non-converged or degenerate candidate: skipped
      }
      out.trail.push_back(step);
    }
    if (!improved) break;
    out.trail[best_step_index].accepted = true;
    out.families = best_mask;
    out.fit = best_fit;
    current_aic = best_aic;
  }
  return out;
}

}  // namespace mnlink
