#include "mnlink/model.hpp"

#include <cmath>
#include <sstream>

#include "mnlink/errors.hpp"

namespace mnlink {

double Term::eval(const Eigen::VectorXd& x) const {
  switch (kind) {
    case Kind::Intercept:
      return 1.0;
    case Kind::Covariate:
      return x[first];
    case Kind::Product:
      return x[first] * x[second];
  }
  return 0.0;
}

std::string Term::name() const {
  switch (kind) {
    case Kind::Intercept:
      return "1";
    case Kind::Covariate:
      return "x" + std::to_string(first + 1);
    case Kind::Product:
      return "x" + std::to_string(first + 1) + "*x" + std::to_string(second + 1);
  }
  return "?";
}

ModelSpec::ModelSpec(std::vector<std::vector<Term>> terms) : terms_(std::move(terms)) {
  if (terms_.empty()) throw ValidationError("model: at least one category required");
  for (std::size_t j = 0; j < terms_.size(); ++j) {
    if (terms_[j].empty() || terms_[j].front().kind != Term::Kind::Intercept) {
      throw ValidationError("model: category " + std::to_string(j + 1) +
                            " must start with the intercept term");
    }
    for (std::size_t m = 1; m < terms_[j].size(); ++m) {
      if (terms_[j][m].kind == Term::Kind::Intercept)
        throw ValidationError("model: duplicate intercept in category " + std::to_string(j + 1));
    }
    p_ += static_cast<int>(terms_[j].size());
  }
}

Eigen::VectorXd ModelSpec::feature_row(int j, const Eigen::VectorXd& x) const {
  const auto& ts = terms_[static_cast<std::size_t>(j)];
  Eigen::VectorXd f(ts.size());
  for (std::size_t m = 0; m < ts.size(); ++m) f[static_cast<Eigen::Index>(m)] = ts[m].eval(x);
  return f;
}

Eigen::MatrixXd design_row(const ModelSpec& spec, const Eigen::VectorXd& x) {
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(spec.q(), spec.p());
  int off = 0;
  for (int j = 0; j < spec.q(); ++j) {
    Z.block(j, off, 1, spec.p_j(j)) = spec.feature_row(j, x).transpose();
    off += spec.p_j(j);
  }
  return Z;
}

NaturalParams natural_params(const Eigen::VectorXd& pi) {
  const double rest = 1.0 - pi.sum();
  if (pi.minCoeff() <= 0.0 || rest <= 0.0)
    throw ValidationError("natural_params: probabilities must be positive with sum < 1");
  NaturalParams out;
  out.theta = (pi.array() / rest).log();
  out.b = -std::log(rest);
  return out;
}

double scaled_multinomial_logpmf(const Eigen::VectorXi& y, int n, const Eigen::VectorXd& pi) {
  const int q = static_cast<int>(y.size());
  int y0 = n;
  double logc = std::lgamma(n + 1.0);
  for (int j = 0; j < q; ++j) {
    y0 -= y[j];
    logc -= std::lgamma(y[j] + 1.0);
  }
  if (y0 < 0) throw ValidationError("logpmf: counts exceed the group size");
  logc -= std::lgamma(y0 + 1.0);
  double t = logc;
  for (int j = 0; j < q; ++j)
    if (y[j] > 0) t += y[j] * std::log(pi[j]);
  if (y0 > 0) t += y0 * std::log(1.0 - pi.sum());
  return t;
}

ParameterLayout::ParameterLayout(const ModelSpec& spec, const MultinomialLink& link)
    : q_(spec.q()) {
  if (link.q() != spec.q())
    throw ValidationError("layout: link and model disagree on the category count");
  beta_offset_.resize(static_cast<std::size_t>(spec.q()));
  for (int j = 0; j < spec.q(); ++j) {
    beta_offset_[static_cast<std::size_t>(j)] = p_;
    p_ += spec.p_j(j);
  }
  for (int j = 0; j < link.q(); ++j)
    for (int k = 0; k < link.family(j).param_dim(); ++k)
      if (link.family(j).active[static_cast<std::size_t>(k)]) slots_.emplace_back(j, k);
  r_ = static_cast<int>(slots_.size());
}

int ParameterLayout::beta_index(int category, int term) const {
  return beta_offset_[static_cast<std::size_t>(category)] + term;
}

std::vector<std::string> ParameterLayout::names() const {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(size()));
  for (int j = 0; j < q_; ++j) {
    const int width = (j + 1 < q_ ? beta_offset_[static_cast<std::size_t>(j + 1)] : p_) -
                      beta_offset_[static_cast<std::size_t>(j)];
    for (int m = 0; m < width; ++m)
      out.push_back("beta_" + std::to_string(j + 1) + std::to_string(m));
  }
  for (const auto& [j, k] : slots_)
    out.push_back("alpha_" + std::to_string(j + 1) + std::to_string(k + 1));
  return out;
}

Eigen::VectorXd ParameterVector::packed() const {
  Eigen::VectorXd d(beta.size() + alpha.size());
  d << beta, alpha;
  return d;
}

ParameterVector ParameterVector::unpack(const Eigen::VectorXd& delta,
                                        const ParameterLayout& layout) {
  if (delta.size() != layout.size())
    throw ValidationError("unpack: delta has the wrong length");
  ParameterVector pv;
  pv.beta = delta.head(layout.p());
  pv.alpha = delta.tail(layout.r());
  return pv;
}

Eigen::VectorXd ParameterVector::intercepts(const ParameterLayout& layout) const {
  Eigen::VectorXd b0(layout.q());
  for (int j = 0; j < layout.q(); ++j) b0[j] = beta[layout.intercept_index(j)];
  return b0;
}

namespace {

void linear_predictor(const ModelSpec& spec, const ParameterLayout& layout,
                      const Eigen::VectorXd& beta, const Eigen::VectorXd& x,
                      Eigen::VectorXd& eta, Eigen::VectorXd& beta0) {
  const int q = spec.q();
  eta.resize(q);
  beta0.resize(q);
  for (int j = 0; j < q; ++j) {
    eta[j] = spec.feature_row(j, x).dot(beta.segment(layout.beta_index(j, 0), spec.p_j(j)));
    beta0[j] = beta[layout.intercept_index(j)];
  }
}

}  // namespace

ThetaJacobian theta_and_jacobian_prepared(const ModelSpec& spec,
                                          const MultinomialLink& link,
                                          const ParameterLayout& layout,
                                          const Eigen::VectorXd& beta,
                                          const Eigen::VectorXd& x) {
  const int q = spec.q();
  Eigen::VectorXd eta, beta0;
  linear_predictor(spec, layout, beta, x, eta, beta0);
  const StandardizedEval ev = standardized_eval(link, eta, beta0);
  ThetaJacobian out;
  out.theta = ev.value;
  out.dtheta_ddelta = Eigen::MatrixXd::Zero(q, layout.size());
  for (int j = 0; j < q; ++j) {
    const Eigen::VectorXd f = spec.feature_row(j, x);
    for (int m = 0; m < spec.p_j(j); ++m)
      out.dtheta_ddelta(j, layout.beta_index(j, m)) = ev.dv_deta[j] * f[m];
    // direct beta0 partial of the standardization (AtIntercepts only)
    out.dtheta_ddelta(j, layout.intercept_index(j)) += ev.dv_dbeta0[j];
  }
  for (int s = 0; s < layout.r(); ++s)
    out.dtheta_ddelta.col(layout.alpha_index(s)) = ev.dv_dalpha.col(s);
  return out;
}

Eigen::VectorXd theta_prepared(const ModelSpec& spec, const MultinomialLink& link,
                               const ParameterLayout& layout, const Eigen::VectorXd& beta,
                               const Eigen::VectorXd& x) {
  Eigen::VectorXd eta, beta0;
  linear_predictor(spec, layout, beta, x, eta, beta0);
  return apply_standardization(link, eta, beta0);
}

ThetaJacobian theta_and_jacobian(const ModelSpec& spec, const MultinomialLink& link0,
                                 const ParameterVector& delta, const Eigen::VectorXd& x) {
  const ParameterLayout layout(spec, link0);
  return theta_and_jacobian_prepared(spec, link0.with_alpha(delta.alpha), layout, delta.beta, x);
}

Eigen::VectorXd theta_at(const ModelSpec& spec, const MultinomialLink& link0,
                         const ParameterVector& delta, const Eigen::VectorXd& x) {
  const ParameterLayout layout(spec, link0);
  return theta_prepared(spec, link0.with_alpha(delta.alpha), layout, delta.beta, x);
}

MuJacobian mu_and_jacobian(const ModelSpec& spec, const MultinomialLink& link,
                           const ParameterVector& delta, const Eigen::VectorXd& x) {
  const ThetaJacobian tj = theta_and_jacobian(spec, link, delta, x);
  MuJacobian out;
  out.mu = probabilities_from_theta(tj.theta);
  const Eigen::MatrixXd cov =
      Eigen::MatrixXd(out.mu.asDiagonal()) - out.mu * out.mu.transpose();
  out.dmu_ddelta = cov * tj.dtheta_ddelta;
  return out;
}

}  // namespace mnlink
