#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "soundmc/error.hpp"
#include "soundmc/interval.hpp"
#include "soundmc/quantiles.hpp"

namespace soundmc {

struct BinomialObservation {
    std::int64_t successes = 0;
    std::int64_t trials = 0;

    BinomialObservation(std::int64_t succ, std::int64_t total) : successes(succ), trials(total) {
        if (trials < 1) throw std::invalid_argument("binomial observation needs at least one trial");
        if (successes < 0 || successes > trials)
            throw std::invalid_argument("success count outside [0, trials]");
    }

    double proportion() const { return static_cast<double>(successes) / static_cast<double>(trials); }
};

namespace detail {

inline ConfidenceInterval clamp_unit(double lo, double hi, double gamma, Method m) {
    return make_interval(std::clamp(lo, 0.0, 1.0), std::clamp(hi, 0.0, 1.0), gamma, m);
}

}  // namespace detail

/// Textbook Wald interval. Unsound: coverage collapses for p near 0 or 1.
inline ConfidenceInterval wald_interval(const BinomialObservation& obs, double gamma) {
    const double z = normal_two_sided_z(gamma);
    const double p_hat = obs.proportion();
    const double half = z * std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(obs.trials));
    return detail::clamp_unit(p_hat - half, p_hat + half, gamma, Method::wald);
}

/// Wilson score interval with continuity correction. Better than Wald,
/// still below nominal coverage at high confidence levels.
inline ConfidenceInterval wilson_cc_interval(const BinomialObservation& obs, double gamma) {
    const double z = normal_two_sided_z(gamma);
    const double k = static_cast<double>(obs.trials);
    const double p = obs.proportion();
    const double z2 = z * z;
    const double denom = 2.0 * (k + z2);

    double lo = 0.0;
    if (obs.successes > 0) {
        const double root = std::sqrt(z2 - 1.0 / k + 4.0 * k * p * (1.0 - p) + (4.0 * p - 2.0));
        lo = (2.0 * k * p + z2 - (z * root + 1.0)) / denom;
    }
    double hi = 1.0;
    if (obs.successes < obs.trials) {
        const double root = std::sqrt(z2 - 1.0 / k + 4.0 * k * p * (1.0 - p) - (4.0 * p - 2.0));
        hi = (2.0 * k * p + z2 + (z * root + 1.0)) / denom;
    }
    return detail::clamp_unit(lo, hi, gamma, Method::wilson_cc);
}

/// Exact Clopper-Pearson interval via Beta quantiles. Sound for all p.
inline ConfidenceInterval clopper_pearson_interval(const BinomialObservation& obs, double gamma) {
    const double half_delta = 0.5 * (1.0 - gamma);
    const double ks = static_cast<double>(obs.successes);
    const double k = static_cast<double>(obs.trials);
    const double lo = obs.successes == 0 ? 0.0 : beta_quantile(half_delta, ks, k - ks + 1.0);
    const double hi = obs.successes == obs.trials ? 1.0 : beta_quantile(1.0 - half_delta, ks + 1.0, k - ks);
    return make_interval(lo, hi, gamma, Method::clopper_pearson);
}

/// Half-width of the Okamoto bound for k samples at level gamma.
inline double okamoto_half_width(std::int64_t k, double gamma) {
    if (k < 1) throw std::invalid_argument("okamoto_half_width requires k >= 1");
    if (!(gamma > 0.0) || !(gamma < 1.0)) throw std::invalid_argument("confidence level outside (0, 1)");
    return std::sqrt(std::log(2.0 / (1.0 - gamma)) / (2.0 * static_cast<double>(k)));
}

inline ConfidenceInterval okamoto_interval(const BinomialObservation& obs, double gamma) {
    const double eps = okamoto_half_width(obs.trials, gamma);
    const double p_hat = obs.proportion();
    return detail::clamp_unit(p_hat - eps, p_hat + eps, gamma, Method::okamoto);
}

/// Smallest k with sqrt(ln(2/delta) / 2k) <= eps.
inline std::int64_t okamoto_sample_size(double eps, double gamma) {
    if (!(eps > 0.0) || !(eps < 1.0)) throw std::invalid_argument("epsilon outside (0, 1)");
    if (!(gamma > 0.0) || !(gamma < 1.0)) throw std::invalid_argument("confidence level outside (0, 1)");
    const double required = std::log(2.0 / (1.0 - gamma)) / (2.0 * eps * eps);
    return static_cast<std::int64_t>(std::ceil(required));
}

/// Width of the Clopper-Pearson interval at the worst-case outcome
/// (successes = trials/2).
inline double clopper_pearson_worst_width(std::int64_t k, double gamma) {
    return clopper_pearson_interval(BinomialObservation(k / 2, k), gamma).width();
}

/// Smallest k whose worst-case Clopper-Pearson interval has width <= 2*eps.
/// Doubling plus bisection on the (effectively monotone) width, then a
/// short backward scan to absorb parity wobble.
inline std::int64_t cp_worst_case_sample_size(double eps, double gamma) {
    if (!(eps > 0.0) || !(eps < 1.0)) throw std::invalid_argument("epsilon outside (0, 1)");
    if (!(gamma > 0.0) || !(gamma < 1.0)) throw std::invalid_argument("confidence level outside (0, 1)");
    const double target = 2.0 * eps;
    auto fits = [&](std::int64_t k) { return clopper_pearson_worst_width(k, gamma) <= target; };

    std::int64_t hi = 1;
    while (!fits(hi)) {
        if (hi > (std::int64_t{1} << 40)) throw NumericError("Clopper-Pearson plan search did not converge");
        hi *= 2;
    }
    std::int64_t lo = hi / 2;  // lo == 0 when hi == 1
    while (lo + 1 < hi) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        if (fits(mid)) hi = mid; else lo = mid;
    }
    while (hi > 1 && fits(hi - 1)) --hi;
    return hi;
}

}  // namespace soundmc
