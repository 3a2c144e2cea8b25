#ifndef MNLINK_FIT_HPP
#define MNLINK_FIT_HPP

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "mnlink/data.hpp"
#include "mnlink/link.hpp"
#include "mnlink/model.hpp"

namespace mnlink {

struct FitOptions {
  double tol = 1e-8;          // convergence: max-norm of the score
  int max_iter = 100;
  int max_step_halvings = 20;
};

enum class FitMethod { FisherScoring, GridProfile };

struct FitResult {
  ParameterVector delta;
  Eigen::MatrixXd covariance;              // J^{-1} at delta, (p+r) x (p+r)
  Eigen::MatrixXd covariance_alpha_fixed;  // (J_bb)^{-1} at delta, p x p
  double loglik = 0.0;
  double deviance = 0.0;
  double aic = 0.0;
  int iterations = 0;
  bool converged = false;
  FitMethod method = FitMethod::FisherScoring;
  int n_obs = 0;
  int total_units = 0;  // N
  std::vector<double> loglik_trace;
};

// Log-likelihood including the combinatorial constant, so that values are
// comparable across models on the same data.  -inf when theta is not finite.
double loglik(const Dataset& data, const ModelSpec& spec, const MultinomialLink& link,
              const ParameterVector& delta);

// Log-likelihood of the saturated model (cell probabilities = observed
// frequencies, zero cells contributing 0 log 0 = 0).
double saturated_loglik(const Dataset& data);

struct ScoreInfo {
  Eigen::VectorXd score;  // p + r
  Eigen::MatrixXd info;   // (p + r) x (p + r)
};

// Score sum_i n_i (dmu_i/ddelta)' V_i^{-1} (ybar_i - mu_i) and expected
// information sum_i n_i (dmu_i/ddelta)' V_i^{-1} (dmu_i/ddelta), with V the
// single-trial multinomial covariance.  V^{-1} enters through the analytic
// identity V^{-1} = diag(mu)^{-1} + 11'/(1 - sum mu), under which
// (dmu/ddelta)' V^{-1} collapses to (dtheta/ddelta)'; the collapsed form is
// evaluated, which stays finite when the dummy-category probability
// underflows.
ScoreInfo score_and_info(const Dataset& data, const ModelSpec& spec,
                         const MultinomialLink& link, const ParameterVector& delta);

// Default starting point: beta from the identity-link fit (itself started at
// zero), active link parameters at 1.
ParameterVector initial_values(const Dataset& data, const ModelSpec& spec,
                               const MultinomialLink& link, const FitOptions& opts = {});

// Fisher scoring with step halving.  Returns the best iterate flagged
// not-converged when the score tolerance cannot be reached; throws
// SingularInformation when the information cannot be factorized.
FitResult fit_fisher_scoring(const Dataset& data, const ModelSpec& spec,
                             const MultinomialLink& link, const ParameterVector& init,
                             const FitOptions& opts = {});

// Identity-link initialization followed by Fisher scoring.
FitResult fit(const Dataset& data, const ModelSpec& spec, const MultinomialLink& link,
              const FitOptions& opts = {});

// Default profile grid for one link parameter: the multiples of `step`
// strictly inside the open interval (lo, hi).  The endpoints are treated as
// the boundary of the parameter domain and are not visited; with the default
// domain [-3, 3] and step 0.1 the grid is -2.9, -2.8, ..., 2.9.
std::vector<double> default_alpha_grid(double lo = -3.0, double hi = 3.0, double step = 0.1);

// Approximate joint MLE by profiling: for every grid point of the active
// link parameters, beta is fitted with alpha pinned, and the best profiled
// point wins (ties broken toward lexicographically smallest alpha).  The
// returned covariance is the full joint J^{-1} at the optimum and
// covariance_alpha_fixed the beta block inverse.  Throws AllGridFailed when
// no grid point converges.
FitResult fit_grid_profile(const Dataset& data, const ModelSpec& spec,
                           const MultinomialLink& link,
                           const std::vector<std::vector<double>>& grid,
                           const FitOptions& opts = {});

// Per-coefficient ratios SE_joint / SE_fixed; requires fits of the same
// model with alpha estimated (joint) and pinned at the joint alpha-hat.
Eigen::VectorXd variance_inflation(const FitResult& fit_joint,
                                   const FitResult& fit_alpha_fixed);

// Refit with the link parameters pinned at the joint estimate; beta stays at
// the joint solution and the covariance becomes the alpha-fixed (J_bb)^{-1}.
FitResult refit_alpha_fixed(const Dataset& data, const ModelSpec& spec,
                            const MultinomialLink& link, const FitResult& fit_joint,
                            const FitOptions& opts = {});

// Identifies one pinned link parameter: category j, parameter k (0-based).
using AlphaId = std::pair<int, int>;

std::string alpha_name(const AlphaId& id);

struct ScoreTestResult {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
  std::vector<std::string> tested_params;
};

// Rao score test of H0: the tested (currently pinned) link parameters stay
// at their pinned values.  Fits under H0, activates the tested parameters,
// and forms the statistic on the tested block of the score with the Schur
// complement of the information.
ScoreTestResult score_test_link(const Dataset& data, const ModelSpec& spec,
                                const MultinomialLink& link,
                                const std::vector<AlphaId>& tested,
                                const FitOptions& opts = {});

struct SelectionStep {
  std::vector<std::string> activated;
  double aic = 0.0;
  bool accepted = false;
};

struct SelectionResult {
  std::vector<GeneratingFamily> families;  // selected mask
  FitResult fit;                           // fit under the selected mask
  std::vector<SelectionStep> trail;        // every candidate evaluated, in order
};

// Forward selection of link parameters by AIC.  Candidate moves activate a
// single pinned parameter or, for two-sided families, both pinned parameters
// of one category at once; the move with the lowest AIC is taken while it
// improves on the current AIC.  Candidates whose fit does not converge are
// skipped.
SelectionResult stepwise_link_selection(const Dataset& data, const ModelSpec& spec,
                                        FamilyKind kind, StandardizationMode mode,
                                        const FitOptions& opts = {});

}  // namespace mnlink

#endif
