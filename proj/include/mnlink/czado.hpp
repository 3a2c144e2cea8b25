#ifndef MNLINK_CZADO_HPP
#define MNLINK_CZADO_HPP

// Scalar two-sided power transform used as the generating family of the
// parametric link.  For eta >= 0 the transform is ((1+eta)^a1 - 1)/a1 and for
// eta < 0 it is -((1-eta)^a2 - 1)/a2; each branch tends to the corresponding
// logarithm as its exponent goes to 0.  The transform is continuous at 0,
// strictly increasing in eta, and equals the identity map when a1 = a2 = 1.

namespace mnlink::czado {

// Below this magnitude an exponent is treated as 0 and the log-limit branch
// is used; the removable singularity is never evaluated directly.
inline constexpr double kLogBranchEps = 1e-6;

double value(double a1, double a2, double eta);

// dG/deta, continuous across eta = 0.
double deriv_eta(double a1, double a2, double eta);

// Partial derivatives with respect to the two exponents.  Only the branch
// containing eta has a nonzero derivative; the other output is set to 0.
void deriv_alpha(double a1, double a2, double eta, double* d_a1, double* d_a2);

// Inverse of value() in eta.  Throws InverseDomainError when the target t is
// outside the range of the transform (1 + a*|t| <= 0 on the active branch).
double inverse(double a1, double a2, double t);

}  // namespace mnlink::czado

#endif
