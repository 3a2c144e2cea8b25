#include "mnlink/data.hpp"

#include <string>

#include "mnlink/errors.hpp"

namespace mnlink {

int Dataset::total_units() const {
  int n = 0;
  for (const auto& o : observations) n += o.n;
  return n;
}

void Dataset::validate() const {
  if (observations.empty()) throw ValidationError("dataset: no observations");
  if (k <= 0 || q <= 0) throw ValidationError("dataset: k and q must be positive");
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const auto& o = observations[i];
    const std::string row = "dataset row " + std::to_string(i + 1);
    if (o.x.size() != k) throw ValidationError(row + ": expected " + std::to_string(k) + " covariates");
    if (o.y.size() != q) throw ValidationError(row + ": expected " + std::to_string(q) + " counts");
    if (o.n <= 0) throw ValidationError(row + ": group size must be positive");
    int sum = 0;
    for (int j = 0; j < q; ++j) {
      if (o.y[j] < 0) throw ValidationError(row + ": negative count");
      sum += o.y[j];
    }
    if (sum > o.n)
      throw ValidationError(row + ": counts sum to " + std::to_string(sum) +
                            " which exceeds the group size " + std::to_string(o.n));
  }
}

}  // namespace mnlink
