#ifndef MNLINK_STATS_HPP
#define MNLINK_STATS_HPP

// Chi-square distribution routines built on the regularized incomplete gamma
// function (series + continued fraction, 1e-12 target accuracy).

namespace mnlink::stats {

// P(a, x): regularized lower incomplete gamma.
double gamma_p(double a, double x);

// Q(a, x) = 1 - P(a, x).
double gamma_q(double a, double x);

double chi2_cdf(double x, int df);

// Survival function; exact tail, not 1 - cdf.
double chi2_sf(double x, int df);

// Inverse of chi2_cdf via a bracketed root find, absolute tolerance 1e-9.
double chi2_quantile(int df, double prob);

// Two-sided normal p-value for a Wald z statistic.
double wald_p_value(double z);

}  // namespace mnlink::stats

#endif
