#pragma once

namespace netsurv {

/// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
double regularized_gamma_q(double a, double x);

/// Upper tail of the chi-square distribution with `dof` degrees of freedom.
double chisq_sf(double x, double dof);

double normal_cdf(double x);

/// Standard-normal quantile, accurate to a few ulps on (0, 1).
double normal_quantile(double p);

} // namespace netsurv
