#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "soundmc/error.hpp"

namespace soundmc {

namespace detail {

// Continued-fraction factor of the regularized incomplete beta function
// (modified Lentz evaluation). Converges for x < (a+1)/(a+b+2); callers
// apply the symmetry switch.
inline double beta_cont_frac(double a, double b, double x) {
    constexpr int max_iter = 400;
    constexpr double eps = 1e-16;
    constexpr double tiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double num = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + num * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        num = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + num * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) return h;
    }
    throw NumericError("incomplete beta continued fraction did not converge");
}

// lgamma(z) - Stirling approximation remainder
inline double stirling_error(double z) {
    if (z < 30.0) return std::lgamma(z) - ((z - 0.5) * std::log(z) - z + 0.9189385332046727);
    const double z2 = z * z;
    return (((-1.0 / 1680.0 / z2 + 1.0 / 1260.0) / z2 - 1.0 / 360.0) / z2 + 1.0 / 12.0) / z;
}

// log( x^a (1-x)^b Gamma(a+b) / (Gamma(a) Gamma(b)) ), in deviance form.
// The naive lgamma sum cancels catastrophically for large shapes; this
// keeps the error near machine epsilon there.
inline double log_inc_beta_front(double a, double b, double x) {
    const double n = a + b;
    const double p0 = a / n;
    const double q0 = b / n;
    const double dev_a = a * std::log1p((x - p0) / p0);
    const double dev_b = b * std::log1p((p0 - x) / q0);  // == b*log((1-x)/q0) without the 1-x rounding
    return dev_a + dev_b + 0.5 * std::log(a * b / n) - 0.9189385332046727 + stirling_error(n) -
           stirling_error(a) - stirling_error(b);
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double reg_inc_beta(double x, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("reg_inc_beta: a, b must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double front = std::exp(detail::log_inc_beta_front(a, b, x));
    if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_cont_frac(a, b, x) / a;
    return 1.0 - front * detail::beta_cont_frac(b, a, 1.0 - x) / b;
}

/// p-quantile of the Beta(a, b) distribution: the x with I_x(a, b) = p,
/// resolved to 1e-12 by bracketed bisection with Newton polish.
inline double beta_quantile(double p, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("beta_quantile: a, b must be positive");
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("beta_quantile: p outside [0, 1]");
    if (p == 0.0) return 0.0;
    if (p == 1.0) return 1.0;
    // closed forms: I_x(1, b) = 1 - (1-x)^b, I_x(a, 1) = x^a
    if (a == 1.0) return -std::expm1(std::log1p(-p) / b);
    if (b == 1.0) return std::pow(p, 1.0 / a);
    // solve on the side where the quantile sits near 0; a quantile close
    // to 1 with strongly asymmetric shapes is ill-conditioned otherwise
    if (a > b) return 1.0 - beta_quantile(1.0 - p, b, a);

    double lo = 0.0, hi = 1.0;
    double x = a / (a + b);
    double f = reg_inc_beta(x, a, b) - p;
    double prev_width = 1.0;
    for (int it = 0; it < 300; ++it) {
        if (f > 0.0) hi = x; else lo = x;
        // stop at the target residual or once the bracket is resolved to
        // machine precision relative to the quantile's own scale
        if (std::fabs(f) <= 1e-14 || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
        const double pdf =
            std::exp(detail::log_inc_beta_front(a, b, x) - std::log(x) - std::log1p(-x));
        // Newton only while it keeps outpacing bisection; this breaks the
        // two-point cycles a plain in-bracket check cannot escape
        double next = x - f / pdf;
        const bool newton_ok = std::isfinite(next) && next > lo && next < hi &&
                               2.0 * std::fabs(f) < pdf * prev_width;
        if (!newton_ok) next = 0.5 * (lo + hi);
        prev_width = hi - lo;
        x = next;
        f = reg_inc_beta(x, a, b) - p;
    }
    if (std::fabs(f) > 1e-12)
        throw NumericError("beta_quantile did not reach tolerance");
    return x;
}

/// Quantile of the standard normal distribution.
///
/// Rational approximation (Acklam) refined by two Halley steps on the
/// erfc relation; accurate to a few ulp.
inline double normal_quantile(double p) {
    if (!(p > 0.0) || !(p < 1.0)) throw std::invalid_argument("normal_quantile: p outside (0, 1)");

    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    constexpr double sqrt_two_pi = 2.5066282746310002;
    for (int i = 0; i < 2; ++i) {
        const double err = 0.5 * std::erfc(-x / 1.4142135623730951) - p;
        const double u = err * sqrt_two_pi * std::exp(0.5 * x * x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

/// Two-sided z value for confidence level gamma: Phi^-1(1 - (1-gamma)/2).
inline double normal_two_sided_z(double gamma) {
    if (!(gamma > 0.0) || !(gamma < 1.0)) throw std::invalid_argument("confidence level outside (0, 1)");
    return normal_quantile(1.0 - 0.5 * (1.0 - gamma));
}

/// Quantile of Student's-t with `dof` degrees of freedom, via the
/// inverse-incomplete-beta relation.
inline double student_t_quantile(double p, double dof) {
    if (!(p > 0.0) || !(p < 1.0)) throw std::invalid_argument("student_t_quantile: p outside (0, 1)");
    if (!(dof > 0.0)) throw std::invalid_argument("student_t_quantile: dof must be positive");
    if (p == 0.5) return 0.0;
    const double tail = p > 0.5 ? 2.0 * (1.0 - p) : 2.0 * p;
    const double x = beta_quantile(tail, 0.5 * dof, 0.5);
    const double t = std::sqrt(dof * (1.0 - x) / x);
    return p > 0.5 ? t : -t;
}

inline double student_t_two_sided(double gamma, double dof) {
    return student_t_quantile(1.0 - 0.5 * (1.0 - gamma), dof);
}

/// log Binomial(trials, p) pmf at `successes`, via log-gamma.
inline double binomial_log_pmf(std::int64_t successes, std::int64_t trials, double p) {
    if (successes < 0 || successes > trials) return -std::numeric_limits<double>::infinity();
    if (p <= 0.0) return successes == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    if (p >= 1.0) return successes == trials ? 0.0 : -std::numeric_limits<double>::infinity();
    const double k = static_cast<double>(trials);
    const double s = static_cast<double>(successes);
    return std::lgamma(k + 1.0) - std::lgamma(s + 1.0) - std::lgamma(k - s + 1.0) +
           s * std::log(p) + (k - s) * std::log1p(-p);
}

inline double binomial_pmf(std::int64_t successes, std::int64_t trials, double p) {
    return std::exp(binomial_log_pmf(successes, trials, p));
}

}  // namespace soundmc
