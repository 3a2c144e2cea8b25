#ifndef MNLINK_LINK_HPP
#define MNLINK_LINK_HPP

#include <Eigen/Dense>
#include <array>
#include <vector>

namespace mnlink {

enum class FamilyKind { Identity, CzadoTwoSided };

// One scalar generating family G_j(alpha_j, .) together with the estimation
// mask of its parameters.  A masked-off parameter is pinned; the pin defaults
// to the identity value 1 and lives on the MultinomialLink.
struct GeneratingFamily {
  FamilyKind kind = FamilyKind::Identity;
  std::array<bool, 2> active{false, false};

  static GeneratingFamily identity() { return {}; }
  static GeneratingFamily czado(bool first_active, bool second_active) {
    return {FamilyKind::CzadoTwoSided, {first_active, second_active}};
  }

  int param_dim() const { return kind == FamilyKind::CzadoTwoSided ? 2 : 0; }
  int active_dim() const {
    int n = 0;
    for (int k = 0; k < param_dim(); ++k)
      if (active[static_cast<std::size_t>(k)]) ++n;
    return n;
  }
};

enum class StandardizationMode { AtZero, AtIntercepts };

// q-variate link pi = h(alpha, eta): each component is
//   pi_j = exp(v_j) / (1 + sum_l exp(v_l)),
// where v_j is the standardized generating transform of eta_j.  The value
// object carries the family structure, the standardization mode, and the
// current full parameter values (pinned coordinates included).  Instances
// are immutable; updates go through with_alpha()/with_params().
class MultinomialLink {
 public:
  MultinomialLink(std::vector<GeneratingFamily> families, StandardizationMode mode);

  int q() const { return static_cast<int>(families_.size()); }
  int r() const;  // number of active (estimated) link parameters
  StandardizationMode standardization() const { return mode_; }
  const GeneratingFamily& family(int j) const {
    return families_[static_cast<std::size_t>(j)];
  }
  double param(int j, int k) const { return params_(j, k); }
  const Eigen::MatrixXd& params() const { return params_; }

  // Active parameter values concatenated in (category, parameter) order.
  Eigen::VectorXd alpha() const;

  // Copy with the active parameter slots replaced by the given values.
  MultinomialLink with_alpha(const Eigen::VectorXd& alpha) const;

  // Copy with all parameter values replaced (pins included), q x 2.
  MultinomialLink with_params(const Eigen::MatrixXd& params) const;

  // Copy with a different estimation mask, parameter values preserved.
  MultinomialLink with_mask(const std::vector<GeneratingFamily>& families) const;

 private:
  std::vector<GeneratingFamily> families_;
  StandardizationMode mode_;
  Eigen::MatrixXd params_;  // q x 2, identity rows ignored
};

// Standardized transform v = G_c(alpha, eta).  Component j is
//   beta0_j + G_j(alpha_j, eta_j - beta0_j)   (AtIntercepts)
//   G_j(alpha_j, eta_j)                       (AtZero; beta0 ignored)
Eigen::VectorXd apply_standardization(const MultinomialLink& link,
                                      const Eigen::VectorXd& eta,
                                      const Eigen::VectorXd& beta0);

// Transform value plus the partial derivatives needed by the chain rule.
// dv_dbeta0 is the direct partial with beta0 held as a separate argument;
// the dependence of eta on the intercepts enters through dv_deta.
struct StandardizedEval {
  Eigen::VectorXd value;      // q, equals the natural parameter theta
  Eigen::VectorXd dv_deta;    // q, diagonal of dv/deta
  Eigen::VectorXd dv_dbeta0;  // q, diagonal of the direct beta0 partial
  Eigen::MatrixXd dv_dalpha;  // q x r, active columns only
};
StandardizedEval standardized_eval(const MultinomialLink& link,
                                   const Eigen::VectorXd& eta,
                                   const Eigen::VectorXd& beta0);

// pi = h(alpha, eta); positive components summing to < 1 for finite eta.
// Guarded by a max-shift before exponentiation.
Eigen::VectorXd link_h(const MultinomialLink& link, const Eigen::VectorXd& eta,
                       const Eigen::VectorXd& beta0);

// eta = g(alpha, pi), the inverse of link_h.  Requires pi_j > 0 and
// sum(pi) < 1; throws InverseDomainError when pi is unreachable for the
// current link parameters.
Eigen::VectorXd link_g(const MultinomialLink& link, const Eigen::VectorXd& pi,
                       const Eigen::VectorXd& beta0);

struct LinkJacobians {
  Eigen::MatrixXd dh_deta;    // q x q
  Eigen::MatrixXd dh_dalpha;  // q x r
};
LinkJacobians link_jacobians(const MultinomialLink& link, const Eigen::VectorXd& eta,
                             const Eigen::VectorXd& beta0);

// Softmax with an implicit dummy category: pi_j = exp(v_j)/(1 + sum exp(v_l)).
Eigen::VectorXd probabilities_from_theta(const Eigen::VectorXd& theta);

// log(1 + sum exp(v_l)), the cumulant b(theta), computed with a max shift.
double log_partition(const Eigen::VectorXd& theta);

}  // namespace mnlink

#endif
