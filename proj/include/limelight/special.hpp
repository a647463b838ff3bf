#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "limelight/errors.hpp"

namespace limelight {

// Regularized incomplete gamma functions
//   P(a, x) = gamma(a, x) / Gamma(a)   (lower)
//   Q(a, x) = Gamma(a, x) / Gamma(a)   (upper)
// computed by the classic pair of methods: the power series for P when
// x < a + 1, the Lentz continued fraction for Q otherwise. Both iterate
// until the relative update falls below machine epsilon, which leaves the
// result accurate to ~1e-15 for the a = dof/2 <= 50 range this toolkit
// exercises.

namespace detail {

inline constexpr int gamma_max_iter = 1000;

inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < gamma_max_iter; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * std::numeric_limits<double>::epsilon())
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    throw compute_error("incomplete gamma series did not converge (a=" +
                        std::to_string(a) + ", x=" + std::to_string(x) + ")");
}

inline double gamma_q_continued_fraction(double a, double x) {
    const double eps = std::numeric_limits<double>::epsilon();
    const double fpmin = std::numeric_limits<double>::min() / eps;
    double b = x + 1.0 - a;
    double c = 1.0 / fpmin;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= gamma_max_iter; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = b + an / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps)
            return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
    }
    throw compute_error("incomplete gamma continued fraction did not converge (a=" +
                        std::to_string(a) + ", x=" + std::to_string(x) + ")");
}

} // namespace detail

inline double regularized_gamma_p(double a, double x) {
    if (!(a > 0.0)) throw compute_error("regularized_gamma_p: a must be positive");
    if (x < 0.0) throw compute_error("regularized_gamma_p: x must be non-negative");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return detail::gamma_p_series(a, x);
    return 1.0 - detail::gamma_q_continued_fraction(a, x);
}

inline double regularized_gamma_q(double a, double x) {
    if (!(a > 0.0)) throw compute_error("regularized_gamma_q: a must be positive");
    if (x < 0.0) throw compute_error("regularized_gamma_q: x must be non-negative");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_continued_fraction(a, x);
}

// Survival function of the chi-square distribution with `dof` degrees of
// freedom: the probability mass at or above `x`.
inline double chi2_sf(double x, int dof) {
    if (dof < 1) throw compute_error("chi2_sf: degrees of freedom must be >= 1");
    if (x < 0.0) throw compute_error("chi2_sf: statistic must be non-negative");
    return regularized_gamma_q(0.5 * dof, 0.5 * x);
}

} // namespace limelight
