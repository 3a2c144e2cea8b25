#include "mnlink/czado.hpp"

#include <cmath>
#include <sstream>

#include "mnlink/errors.hpp"

namespace mnlink::czado {

double value(double a1, double a2, double eta) {
  if (eta >= 0.0) {
    if (std::abs(a1) < kLogBranchEps) return std::log1p(eta);
    return (std::pow(1.0 + eta, a1) - 1.0) / a1;
  }
  if (std::abs(a2) < kLogBranchEps) return -std::log1p(-eta);
  return -(std::pow(1.0 - eta, a2) - 1.0) / a2;
}

double deriv_eta(double a1, double a2, double eta) {
  if (eta >= 0.0) {
    if (std::abs(a1) < kLogBranchEps) return 1.0 / (1.0 + eta);
    return std::pow(1.0 + eta, a1 - 1.0);
  }
  if (std::abs(a2) < kLogBranchEps) return 1.0 / (1.0 - eta);
  return std::pow(1.0 - eta, a2 - 1.0);
}

namespace {

// d/da [ (e^{a u} - 1)/a ] with u = log(1 + |eta|).  The closed form has a
// 0/0 structure at a = 0, so a short Taylor series in a takes over there.
double branch_deriv(double a, double u) {
  if (std::abs(a) < 1e-4) {
    const double u2 = u * u;
    return u2 / 2.0 + a * u2 * u / 3.0 + a * a * u2 * u2 / 8.0;
  }
  const double e = std::exp(a * u);
  return (e * (a * u - 1.0) + 1.0) / (a * a);
}

}  // namespace

void deriv_alpha(double a1, double a2, double eta, double* d_a1, double* d_a2) {
  if (eta >= 0.0) {
    *d_a1 = branch_deriv(a1, std::log1p(eta));
    *d_a2 = 0.0;
  } else {
    *d_a1 = 0.0;
    *d_a2 = -branch_deriv(a2, std::log1p(-eta));
  }
}

double inverse(double a1, double a2, double t) {
  if (t >= 0.0) {
    if (std::abs(a1) < kLogBranchEps) return std::expm1(t);
    const double s = 1.0 + a1 * t;
    if (s <= 0.0) {
      std::ostringstream msg;
      msg << "two-sided power transform: t = " << t
          << " is unreachable for exponent " << a1;
      throw InverseDomainError(msg.str());
    }
    return std::pow(s, 1.0 / a1) - 1.0;
  }
  if (std::abs(a2) < kLogBranchEps) return -std::expm1(-t);
  const double s = 1.0 - a2 * t;
  if (s <= 0.0) {
    std::ostringstream msg;
    msg << "two-sided power transform: t = " << t
        << " is unreachable for exponent " << a2;
    throw InverseDomainError(msg.str());
  }
  return 1.0 - std::pow(s, 1.0 / a2);
}

}  // namespace mnlink::czado
