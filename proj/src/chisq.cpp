#include "nlight/chisq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nlight/error.hpp"

namespace nlight {

namespace {

constexpr int kMaxIterations = 10000;
constexpr double kEpsilon = 1e-16;
constexpr double kTiny = 1e-300;

// x^a e^-x / Gamma(a), in log space.
double log_prefactor(double a, double x) {
    return a * std::log(x) - x - std::lgamma(a);
}

// P(a, x) by the power series; converges quickly for x < a + 1.
double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < kMaxIterations; ++i) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * kEpsilon) break;
    }
    return sum * std::exp(log_prefactor(a, x));
}

// Q(a, x) by the Legendre continued fraction (modified Lentz); for x >= a + 1.
double gamma_q_fraction(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxIterations; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEpsilon) break;
    }
    return std::exp(log_prefactor(a, x)) * h;
}

void check_arguments(double a, double x) {
    if (!(a > 0.0) || !std::isfinite(a)) throw Error(ErrorCode::InvalidArgument, "gamma shape must be positive");
    if (!(x >= 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma argument must be non-negative");
}

}  // namespace

double regularized_gamma_p(double a, double x) {
    check_arguments(a, x);
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    const double p = x < a + 1.0 ? gamma_p_series(a, x) : 1.0 - gamma_q_fraction(a, x);
    return std::clamp(p, 0.0, 1.0);
}

double regularized_gamma_q(double a, double x) {
    check_arguments(a, x);
    if (x == 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    const double q = x < a + 1.0 ? 1.0 - gamma_p_series(a, x) : gamma_q_fraction(a, x);
    return std::clamp(q, 0.0, 1.0);
}

double chi_square_cdf(double statistic, double df) {
    if (!(df > 0.0)) throw Error(ErrorCode::InvalidArgument, "chi-square df must be positive");
    if (statistic <= 0.0) return 0.0;
    return regularized_gamma_p(0.5 * df, 0.5 * statistic);
}

double chi_square_sf(double statistic, double df) {
    if (!(df > 0.0)) throw Error(ErrorCode::InvalidArgument, "chi-square df must be positive");
    if (statistic <= 0.0) return 1.0;
    return regularized_gamma_q(0.5 * df, 0.5 * statistic);
}

}  // namespace nlight
