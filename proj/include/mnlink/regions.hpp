#ifndef MNLINK_REGIONS_HPP
#define MNLINK_REGIONS_HPP

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mnlink/data.hpp"
#include "mnlink/fit.hpp"
#include "mnlink/link.hpp"
#include "mnlink/model.hpp"

namespace mnlink {

// Joint percentile request: the target category probabilities, the overall
// confidence level 1 - tau_prime, and the tracing window.
struct PercentileQuery {
  Eigen::VectorXd pi0;
  double tau_prime = 0.05;
  std::vector<std::pair<double, double>> window;  // per-covariate (lo, hi)
  int trace_n1 = 21;
  int trace_n2 = 1000;
};

enum class RegionMethod { Conservative, LikelihoodRatio, ScoreTest };

std::string region_method_name(RegionMethod m);

struct BoundaryRecord {
  double x1 = 0.0;
  double x2_lower = 0.0;
  double x2_upper = 0.0;
  bool empty = true;
};

// A confidence region for the percentile set, represented by a statistic
// over covariate space: x is a member when statistic(x) <= threshold.  The
// statistic returns +inf where it cannot be evaluated (a failed constrained
// fit or singular information); such points are excluded and counted by
// trace_region.
struct ConfidenceRegion {
  RegionMethod method = RegionMethod::Conservative;
  double level = 0.95;
  std::function<double(const Eigen::VectorXd&)> statistic;
  double threshold = 0.0;
  std::vector<BoundaryRecord> boundary;

  // metadata
  Eigen::VectorXd x0;
  Eigen::VectorXd chi2_per_category;           // Conservative: per-category quantiles
  Eigen::VectorXd eta_lower, eta_upper;        // Conservative: the box C(x0)
  Eigen::VectorXd p_lower, p_upper;            // Conservative: P_L, P_U
  long failed_points = 0;                      // filled by trace_region

  bool contains(const Eigen::VectorXd& x) const { return statistic(x) <= threshold; }
};

// Covariate settings at which the fitted category probabilities equal pi0.
// Solves f_j(x) beta_j = g_j(alpha, pi0) for all j; with k = q covariates and
// first-order terms this is a square linear system and the result is the
// singleton solution.  Throws InverseDomainError when pi0 is unreachable,
// Underdetermined when there are more unknowns than equations (or the system
// is rank-deficient), NoSolution when an overdetermined system is
// inconsistent.
std::vector<Eigen::VectorXd> solve_percentile(const FitResult& fit, const ModelSpec& spec,
                                              const MultinomialLink& link,
                                              const Eigen::VectorXd& pi0);

// Method 1: per category j, a Cauchy-Schwarz band for eta_j(x0) at level
// 1 - tau_prime/q, combined across categories into the box C(x0); the region
// accepts x whenever h(alpha_hat, eta_hat(x)) lies between the componentwise
// extrema P_L, P_U of h over the box.  Requires the percentile set to be a
// singleton (NotSingleton otherwise).
ConfidenceRegion conservative_region(const FitResult& fit, const ModelSpec& spec,
                                     const MultinomialLink& link, const PercentileQuery& query);

// MLE under the constraint h(alpha, eta(x)) = pi0, implemented by
// eliminating the intercepts: each beta_j0 is the explicit function of the
// remaining parameters that pins theta_j(x) at log(pi0_j / (1 - sum pi0)),
// and Fisher scoring runs on the reduced vector with the chain rule through
// the elimination (and, in AtIntercepts mode, the standardization's beta0
// dependence).
FitResult constrained_fit(const Dataset& data, const ModelSpec& spec,
                          const MultinomialLink& link, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& pi0, const FitOptions& opts = {},
                          const ParameterVector* init = nullptr);

// Method 2: x is accepted when the deviance gap between the constrained and
// the unconstrained fit stays below the chi-square(q) quantile at 1 - tau'.
ConfidenceRegion lr_region(const Dataset& data, const FitResult& fit, const ModelSpec& spec,
                           const MultinomialLink& link, const PercentileQuery& query);

// Method 3: score statistic u0' Sigma0^{-1} u0 on the intercept block of the
// score at the constrained MLE, with Sigma0 the intercept block of the
// Fisher information there (the estimated variance of u0 with the remaining
// parameters held at their constrained estimates).
ConfidenceRegion score_region(const Dataset& data, const FitResult& fit, const ModelSpec& spec,
                              const MultinomialLink& link, const PercentileQuery& query);

// Boundary tracing for k = 2: n1 equally spaced x1 values over window[0],
// and per x1 the least and greatest member of an n2-point equispaced x2 grid
// over window[1] (an empty marker when the column has no members).  Failed
// statistic evaluations are excluded and counted in region.failed_points.
std::vector<BoundaryRecord> trace_region(ConfidenceRegion& region,
                                         const std::vector<std::pair<double, double>>& window,
                                         int n1, int n2);

}  // namespace mnlink

#endif
