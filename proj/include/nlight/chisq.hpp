#pragma once

namespace nlight {

/// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double regularized_gamma_p(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), evaluated
/// directly in the tail so small values keep their relative accuracy.
double regularized_gamma_q(double a, double x);

double chi_square_cdf(double statistic, double df);

/// Upper-tail probability, the p-value of a chi-square test.
double chi_square_sf(double statistic, double df);

}  // namespace nlight
