#ifndef MNLINK_DATA_HPP
#define MNLINK_DATA_HPP

#include <Eigen/Dense>
#include <vector>

namespace mnlink {

// One group: covariates, category counts, and group size.  The dummy
// category count is n - sum(y) and must be nonnegative.
struct Observation {
  Eigen::VectorXd x;  // k covariates
  Eigen::VectorXi y;  // q category counts
  int n = 0;          // group size
};

struct Dataset {
  std::vector<Observation> observations;
  int k = 0;
  int q = 0;

  int size() const { return static_cast<int>(observations.size()); }

  // N, the total number of experimental units.
  int total_units() const;

  // Throws ValidationError on shape mismatches or invalid counts.
  void validate() const;
};

}  // namespace mnlink

#endif
