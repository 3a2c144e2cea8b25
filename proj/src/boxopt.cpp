#include "mnlink/boxopt.hpp"

#include <algorithm>
#include <cmath>

#include "mnlink/errors.hpp"

namespace mnlink {

namespace {

constexpr double kGolden = 0.6180339887498949;

// Golden-section minimization of a 1-d slice, bracket [lo, hi].
double line_min(const std::function<double(double)>& f, double lo, double hi, double tol,
                double* fbest) {
  double a = lo, b = hi;
  double x1 = b - kGolden * (b - a);
  double x2 = a + kGolden * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGolden * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGolden * (b - a);
      f2 = f(x2);
    }
  }
  const double xm = 0.5 * (a + b);
  const double fm = f(xm);
  // endpoints can win on monotone slices
  const double fl = f(lo), fh = f(hi);
  double best_x = xm;
  *fbest = fm;
  if (fl < *fbest) {
    best_x = lo;
    *fbest = fl;
  }
  if (fh < *fbest) {
    best_x = hi;
    *fbest = fh;
  }
  return best_x;
}

struct Seed {
  Eigen::VectorXd x;
  double value;
};

Eigen::VectorXd coordinate_descent(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const std::vector<std::pair<double, double>>& box,
                                   Eigen::VectorXd x, double* fx, const BoxOptions& opts) {
  const int d = static_cast<int>(box.size());
  double fcur = *fx;
  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    double moved = 0.0;
    for (int c = 0; c < d; ++c) {
      const auto [lo, hi] = box[static_cast<std::size_t>(c)];
      if (hi - lo <= 0.0) continue;
      const double tol = opts.tol * std::max(1.0, hi - lo);
      double fbest = fcur;
      Eigen::VectorXd probe = x;
      const double xc = line_min(
          [&](double t) {
            probe[c] = t;
            return f(probe);
          },
          lo, hi, tol, &fbest);
      moved = std::max(moved, std::abs(xc - x[c]));
      x[c] = xc;
      fcur = fbest;
    }
    if (moved < opts.tol * 10.0) break;
  }
  *fx = fcur;
  return x;
}

Seed optimize_direction(const std::function<double(const Eigen::VectorXd&)>& f,
                        const std::vector<std::pair<double, double>>& box,
                        const BoxOptions& opts) {
  const int d = static_cast<int>(box.size());
  // product-grid seeding; midpoints of a seeds_per_dim stratification
  long total = 1;
  int per_dim = opts.seeds_per_dim;
  for (int c = 0; c < d; ++c) {
    total *= per_dim;
    if (total > 40000) {  // cap the seeding pass for higher dimensions
      per_dim = std::max(2, static_cast<int>(std::pow(40000.0, 1.0 / d)));
      total = 1;
      for (int cc = 0; cc <= c; ++cc) total *= per_dim;
    }
  }
  std::vector<Seed> seeds;
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  while (true) {
    Eigen::VectorXd x(d);
    for (int c = 0; c < d; ++c) {
      const auto [lo, hi] = box[static_cast<std::size_t>(c)];
      x[c] = lo + (hi - lo) * (idx[static_cast<std::size_t>(c)] + 0.5) / per_dim;
    }
    seeds.push_back({x, f(x)});
    int c = d - 1;
    for (; c >= 0; --c) {
      if (++idx[static_cast<std::size_t>(c)] < per_dim) break;
      idx[static_cast<std::size_t>(c)] = 0;
    }
    if (c < 0) break;
  }
  std::sort(seeds.begin(), seeds.end(), [](const Seed& a, const Seed& b) {
    return a.value < b.value;
  });
  Seed best = seeds.front();
  const int keep = std::min<int>(opts.refine_seeds, static_cast<int>(seeds.size()));
  for (int i = 0; i < keep; ++i) {
    double fx = seeds[static_cast<std::size_t>(i)].value;
    const Eigen::VectorXd x =
        coordinate_descent(f, box, seeds[static_cast<std::size_t>(i)].x, &fx, opts);
    if (fx < best.value) best = {x, fx};
  }
  return best;
}

}  // namespace

BoxResult box_optimize(const std::function<double(const Eigen::VectorXd&)>& f,
                       const std::vector<std::pair<double, double>>& box,
                       const BoxOptions& opts) {
  if (box.empty()) throw ValidationError("box_optimize: empty box");
  for (const auto& [lo, hi] : box)
    if (!(hi >= lo)) throw ValidationError("box_optimize: invalid interval");

  BoxResult out;
  const Seed lo = optimize_direction(f, box, opts);
  const Seed hi = optimize_direction([&](const Eigen::VectorXd& x) { return -f(x); }, box, opts);
  out.min = lo.value;
  out.argmin = lo.x;
  out.max = -hi.value;
  out.argmax = hi.x;
  return out;
}

}  // namespace mnlink
