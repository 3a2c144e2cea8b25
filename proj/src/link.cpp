#include "mnlink/link.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "mnlink/czado.hpp"
#include "mnlink/errors.hpp"

namespace mnlink {

MultinomialLink::MultinomialLink(std::vector<GeneratingFamily> families,
                                 StandardizationMode mode)
    : families_(std::move(families)), mode_(mode) {
  params_ = Eigen::MatrixXd::Ones(q(), 2);
}

int MultinomialLink::r() const {
  int n = 0;
  for (const auto& f : families_) n += f.active_dim();
  return n;
}

Eigen::VectorXd MultinomialLink::alpha() const {
  Eigen::VectorXd a(r());
  int s = 0;
  for (int j = 0; j < q(); ++j)
    for (int k = 0; k < family(j).param_dim(); ++k)
      if (family(j).active[static_cast<std::size_t>(k)]) a[s++] = params_(j, k);
  return a;
}

MultinomialLink MultinomialLink::with_alpha(const Eigen::VectorXd& alpha) const {
  if (alpha.size() != r())
    throw ValidationError("with_alpha: expected " + std::to_string(r()) +
                          " active link parameters, got " + std::to_string(alpha.size()));
  MultinomialLink out = *this;
  int s = 0;
  for (int j = 0; j < q(); ++j)
    for (int k = 0; k < family(j).param_dim(); ++k)
      if (family(j).active[static_cast<std::size_t>(k)]) out.params_(j, k) = alpha[s++];
  return out;
}

MultinomialLink MultinomialLink::with_params(const Eigen::MatrixXd& params) const {
  if (params.rows() != q() || params.cols() != 2)
    throw ValidationError("with_params: expected a q x 2 matrix");
  MultinomialLink out = *this;
  out.params_ = params;
  return out;
}

MultinomialLink MultinomialLink::with_mask(const std::vector<GeneratingFamily>& families) const {
  if (static_cast<int>(families.size()) != q())
    throw ValidationError("with_mask: family count must match q");
  MultinomialLink out = *this;
  out.families_ = families;
  return out;
}

namespace {

double scalar_G(const GeneratingFamily& f, double a1, double a2, double eta) {
  if (f.kind == FamilyKind::Identity) return eta;
  return czado::value(a1, a2, eta);
}

}  // namespace

Eigen::VectorXd apply_standardization(const MultinomialLink& link,
                                      const Eigen::VectorXd& eta,
                                      const Eigen::VectorXd& beta0) {
  const int q = link.q();
  Eigen::VectorXd v(q);
  for (int j = 0; j < q; ++j) {
    const auto& f = link.family(j);
    if (link.standardization() == StandardizationMode::AtIntercepts) {
      v[j] = beta0[j] + scalar_G(f, link.param(j, 0), link.param(j, 1), eta[j] - beta0[j]);
    } else {
      v[j] = scalar_G(f, link.param(j, 0), link.param(j, 1), eta[j]);
    }
  }
  return v;
}

StandardizedEval standardized_eval(const MultinomialLink& link,
                                   const Eigen::VectorXd& eta,
                                   const Eigen::VectorXd& beta0) {
  const int q = link.q();
  const bool centered = link.standardization() == StandardizationMode::AtIntercepts;
  StandardizedEval out;
  out.value.resize(q);
  out.dv_deta.resize(q);
  out.dv_dbeta0 = Eigen::VectorXd::Zero(q);
  out.dv_dalpha = Eigen::MatrixXd::Zero(q, link.r());
  int s = 0;
  for (int j = 0; j < q; ++j) {
    const auto& f = link.family(j);
    const double a1 = link.param(j, 0);
    const double a2 = link.param(j, 1);
    const double arg = centered ? eta[j] - beta0[j] : eta[j];
    if (f.kind == FamilyKind::Identity) {
      out.value[j] = centered ? beta0[j] + arg : arg;
      out.dv_deta[j] = 1.0;
      // centered identity: v_j = eta_j, the beta0 terms cancel exactly
    } else {
      const double g = czado::value(a1, a2, arg);
      const double gp = czado::deriv_eta(a1, a2, arg);
      out.value[j] = centered ? beta0[j] + g : g;
      out.dv_deta[j] = gp;
      if (centered) out.dv_dbeta0[j] = 1.0 - gp;
      double d1 = 0.0, d2 = 0.0;
      czado::deriv_alpha(a1, a2, arg, &d1, &d2);
      if (f.active[0]) out.dv_dalpha(j, s++) = d1;
      if (f.active[1]) out.dv_dalpha(j, s++) = d2;
    }
  }
  return out;
}

double log_partition(const Eigen::VectorXd& theta) {
  const double m = std::max(0.0, theta.maxCoeff());
  double acc = std::exp(-m);
  for (int j = 0; j < theta.size(); ++j) acc += std::exp(theta[j] - m);
  return m + std::log(acc);
}

Eigen::VectorXd probabilities_from_theta(const Eigen::VectorXd& theta) {
  const double m = std::max(0.0, theta.maxCoeff());
  Eigen::VectorXd e = (theta.array() - m).exp();
  const double denom = std::exp(-m) + e.sum();
  return e / denom;
}

Eigen::VectorXd link_h(const MultinomialLink& link, const Eigen::VectorXd& eta,
                       const Eigen::VectorXd& beta0) {
  return probabilities_from_theta(apply_standardization(link, eta, beta0));
}

Eigen::VectorXd link_g(const MultinomialLink& link, const Eigen::VectorXd& pi,
                       const Eigen::VectorXd& beta0) {
  const int q = link.q();
  const double rest = 1.0 - pi.sum();
  if (pi.minCoeff() <= 0.0 || rest <= 0.0) {
    std::ostringstream msg;
    msg << "link_g: probabilities must be positive with sum < 1 (remainder " << rest << ")";
    throw InverseDomainError(msg.str());
  }
  Eigen::VectorXd eta(q);
  for (int j = 0; j < q; ++j) {
    const double t = std::log(pi[j] / rest);
    const auto& f = link.family(j);
    if (link.standardization() == StandardizationMode::AtIntercepts) {
      const double tc = t - beta0[j];
      eta[j] = f.kind == FamilyKind::Identity
                   ? t
                   : beta0[j] + czado::inverse(link.param(j, 0), link.param(j, 1), tc);
    } else {
      eta[j] = f.kind == FamilyKind::Identity
                   ? t
                   : czado::inverse(link.param(j, 0), link.param(j, 1), t);
    }
  }
  return eta;
}

LinkJacobians link_jacobians(const MultinomialLink& link, const Eigen::VectorXd& eta,
                             const Eigen::VectorXd& beta0) {
  const StandardizedEval ev = standardized_eval(link, eta, beta0);
  const Eigen::VectorXd pi = probabilities_from_theta(ev.value);
  // dpi/dv is the single-trial multinomial covariance diag(pi) - pi pi'.
  const Eigen::MatrixXd cov =
      Eigen::MatrixXd(pi.asDiagonal()) - pi * pi.transpose();
  LinkJacobians out;
  out.dh_deta = cov * ev.dv_deta.asDiagonal();
  out.dh_dalpha = cov * ev.dv_dalpha;
  return out;
}

}  // namespace mnlink
