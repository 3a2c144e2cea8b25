#ifndef MNLINK_MODEL_HPP
#define MNLINK_MODEL_HPP

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "mnlink/data.hpp"
#include "mnlink/link.hpp"

namespace mnlink {

// One term of a per-category feature map f_j(x): the intercept, a single
// covariate, or a product of two covariates.
struct Term {
  enum class Kind { Intercept, Covariate, Product };

  Kind kind = Kind::Intercept;
  int first = -1;   // covariate index (0-based)
  int second = -1;  // second factor for products

  static Term intercept() { return {}; }
  static Term covariate(int i) { return {Kind::Covariate, i, -1}; }
  static Term product(int i, int j) { return {Kind::Product, i, j}; }

  double eval(const Eigen::VectorXd& x) const;
  std::string name() const;  // "1", "x1", "x1*x2"

  friend bool operator==(const Term&, const Term&) = default;
};

// Per-category term lists defining the block-diagonal design Z(x).  The
// intercept must be the first term of every category.
class ModelSpec {
 public:
  explicit ModelSpec(std::vector<std::vector<Term>> terms);

  int q() const { return static_cast<int>(terms_.size()); }
  int p() const { return p_; }
  int p_j(int j) const { return static_cast<int>(terms_[static_cast<std::size_t>(j)].size()); }
  const std::vector<Term>& terms(int j) const { return terms_[static_cast<std::size_t>(j)]; }

  // f_j(x), a p_j-vector.
  Eigen::VectorXd feature_row(int j, const Eigen::VectorXd& x) const;

 private:
  std::vector<std::vector<Term>> terms_;
  int p_ = 0;
};

// Z(x) = direct sum of the f_j(x): q x p, row j carries f_j(x) in its
// category's column block and zeros elsewhere.
Eigen::MatrixXd design_row(const ModelSpec& spec, const Eigen::VectorXd& x);

// Natural parameter and cumulant of the scaled multinomial density:
// theta_j = log(pi_j / (1 - sum pi)), b = -log(1 - sum pi).
struct NaturalParams {
  Eigen::VectorXd theta;
  double b = 0.0;
};
NaturalParams natural_params(const Eigen::VectorXd& pi);

// Exact log pmf of the counts y (group size n) at probabilities pi,
// combinatorial constant included via log-gamma.  Zero counts contribute
// 0 * log(0) = 0, so boundary probabilities are allowed where their count
// is zero.
double scaled_multinomial_logpmf(const Eigen::VectorXi& y, int n, const Eigen::VectorXd& pi);

// Index layout of the packed parameter vector delta = [beta', alpha']':
// beta blocks in category order, then the active link parameters in
// (category, parameter) order.
class ParameterLayout {
 public:
  ParameterLayout(const ModelSpec& spec, const MultinomialLink& link);

  int q() const { return q_; }
  int p() const { return p_; }
  int r() const { return r_; }
  int size() const { return p_ + r_; }
  int beta_index(int category, int term) const;
  int intercept_index(int category) const { return beta_index(category, 0); }
  // Slot s of alpha belongs to (category, parameter index).
  std::pair<int, int> alpha_slot(int s) const { return slots_[static_cast<std::size_t>(s)]; }
  int alpha_index(int s) const { return p_ + s; }

  // Report names: beta_10, beta_11, ..., alpha_11, ... (1-based digits).
  std::vector<std::string> names() const;

 private:
  std::vector<int> beta_offset_;
  std::vector<std::pair<int, int>> slots_;
  int p_ = 0;
  int r_ = 0;
  int q_ = 0;
};

// Regression and link parameters, stored unpacked.
struct ParameterVector {
  Eigen::VectorXd beta;   // p
  Eigen::VectorXd alpha;  // r, active link parameters

  Eigen::VectorXd packed() const;
  static ParameterVector unpack(const Eigen::VectorXd& delta, const ParameterLayout& layout);

  // Intercepts beta_{j0}, as used by the AtIntercepts standardization.
  Eigen::VectorXd intercepts(const ParameterLayout& layout) const;
};

// mu(delta) = h(alpha, Z(x) beta) and its Jacobian dmu/ddelta.  In
// AtIntercepts mode the beta0 dependence of the standardization is folded
// into the intercept columns.
struct MuJacobian {
  Eigen::VectorXd mu;
  Eigen::MatrixXd dmu_ddelta;  // q x (p+r)
};
MuJacobian mu_and_jacobian(const ModelSpec& spec, const MultinomialLink& link,
                           const ParameterVector& delta, const Eigen::VectorXd& x);

// theta(delta) and dtheta/ddelta.  These are the link-scale quantities the
// likelihood works with; mu = probabilities_from_theta(theta) and
// dmu/ddelta = V(mu) * dtheta/ddelta with V the single-trial covariance.
struct ThetaJacobian {
  Eigen::VectorXd theta;
  Eigen::MatrixXd dtheta_ddelta;  // q x (p+r)
};
ThetaJacobian theta_and_jacobian(const ModelSpec& spec, const MultinomialLink& link,
                                 const ParameterVector& delta, const Eigen::VectorXd& x);

// theta alone, for likelihood evaluations.
Eigen::VectorXd theta_at(const ModelSpec& spec, const MultinomialLink& link,
                         const ParameterVector& delta, const Eigen::VectorXd& x);

// Workhorse variants for fitting loops: the link must already carry the
// current parameter values and the layout is reused across observations.
ThetaJacobian theta_and_jacobian_prepared(const ModelSpec& spec,
                                          const MultinomialLink& link_with_values,
                                          const ParameterLayout& layout,
                                          const Eigen::VectorXd& beta,
                                          const Eigen::VectorXd& x);
Eigen::VectorXd theta_prepared(const ModelSpec& spec, const MultinomialLink& link_with_values,
                               const ParameterLayout& layout, const Eigen::VectorXd& beta,
                               const Eigen::VectorXd& x);

}  // namespace mnlink

#endif
