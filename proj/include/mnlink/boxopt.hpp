#ifndef MNLINK_BOXOPT_HPP
#define MNLINK_BOXOPT_HPP

#include <Eigen/Dense>
#include <functional>
#include <utility>
#include <vector>

namespace mnlink {

struct BoxOptions {
  int seeds_per_dim = 32;  // product-grid seeding density
  int refine_seeds = 4;    // best seeds kept for local polish
  double tol = 1e-8;       // coordinate-descent tolerance (relative to width)
  int max_sweeps = 80;
};

struct BoxResult {
  double min = 0.0;
  double max = 0.0;
  Eigen::VectorXd argmin;
  Eigen::VectorXd argmax;
};

// Deterministic min and max of a continuous function over an axis-aligned
// box: a stratified product-grid seeding pass followed by coordinate-descent
// polish (golden-section line searches) from the best seeds.
BoxResult box_optimize(const std::function<double(const Eigen::VectorXd&)>& f,
                       const std::vector<std::pair<double, double>>& box,
                       const BoxOptions& opts = {});

}  // namespace mnlink

#endif
