#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "soundmc/error.hpp"
#include "soundmc/interval.hpp"
#include "soundmc/quantiles.hpp"
#include "soundmc/simulate.hpp"

namespace soundmc {

/// Known support bounds [a, b] of the sampled distribution.
struct SupportBounds {
    double lo = 0.0;
    double hi = 1.0;

    SupportBounds(double a, double b) : lo(a), hi(b) {
        if (!(a <= b)) throw std::invalid_argument("support bounds require a <= b");
    }

    double range() const { return hi - lo; }
};

namespace detail {

inline void require_within(const SampleBatch& batch, const SupportBounds& support) {
    for (double v : batch.values()) {
        if (v < support.lo || v > support.hi)
            throw std::invalid_argument("sample value " + std::to_string(v) + " outside declared support [" +
                                        std::to_string(support.lo) + ", " + std::to_string(support.hi) + "]");
    }
}

}  // namespace detail

/// Normal interval: mean +- z * s / sqrt(k), s with k-1 divisor. Unsound.
inline ConfidenceInterval normal_interval(const SampleBatch& batch, double gamma) {
    if (batch.count() < 2) throw std::invalid_argument("normal interval needs at least two samples");
    const double z = normal_two_sided_z(gamma);
    const double half = z * std::sqrt(batch.variance() / static_cast<double>(batch.count()));
    return make_interval(batch.mean() - half, batch.mean() + half, gamma, Method::normal);
}

/// Student's-t variant of the normal interval; strictly wider, still unsound.
inline ConfidenceInterval student_t_interval(const SampleBatch& batch, double gamma) {
    if (batch.count() < 2) throw std::invalid_argument("Student's-t interval needs at least two samples");
    const double t = student_t_two_sided(gamma, static_cast<double>(batch.count()) - 1.0);
    const double half = t * std::sqrt(batch.variance() / static_cast<double>(batch.count()));
    return make_interval(batch.mean() - half, batch.mean() + half, gamma, Method::student_t);
}

/// Half-width of the Hoeffding bound for k samples with support range (b-a).
inline double hoeffding_half_width(std::int64_t k, const SupportBounds& support, double gamma) {
    if (k < 1) throw std::invalid_argument("hoeffding_half_width requires k >= 1");
    return support.range() * std::sqrt(std::log(2.0 / (1.0 - gamma)) / (2.0 * static_cast<double>(k)));
}

/// Hoeffding interval, intersected with the support. Sound.
inline ConfidenceInterval hoeffding_interval(const SampleBatch& batch, const SupportBounds& support,
                                             double gamma) {
    if (batch.count() < 1) throw std::invalid_argument("hoeffding interval needs at least one sample");
    detail::require_within(batch, support);
    const double half = hoeffding_half_width(static_cast<std::int64_t>(batch.count()), support, gamma);
    const double m = batch.mean();
    return make_interval(std::max(support.lo, m - half), std::min(support.hi, m + half), gamma,
                         Method::hoeffding);
}

/// Smallest k with (b-a) * sqrt(ln(2/delta) / 2k) <= eps.
inline std::int64_t hoeffding_sample_size(double eps, const SupportBounds& support, double gamma) {
    if (!(eps > 0.0)) throw std::invalid_argument("epsilon must be positive");
    if (!(gamma > 0.0) || !(gamma < 1.0)) throw std::invalid_argument("confidence level outside (0, 1)");
    const double r = support.range();
    if (r == 0.0) return 1;
    const double required = r * r * std::log(2.0 / (1.0 - gamma)) / (2.0 * eps * eps);
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(required)));
}

/// Band half-width around the empirical cdf at level gamma.
inline double dkw_half_width(std::int64_t k, double gamma) {
    if (k < 1) throw std::invalid_argument("dkw_half_width requires k >= 1");
    if (!(gamma > 0.0) || !(gamma < 1.0)) throw std::invalid_argument("confidence level outside (0, 1)");
    return std::sqrt(std::log(2.0 / (1.0 - gamma)) / (2.0 * static_cast<double>(k)));
}

/// Simultaneous confidence band around the empirical cdf. With probability
/// at least gamma the true cdf lies between the two envelopes everywhere.
/// The upper envelope min(1, F+chi) is the expectation-minimising cdf of
/// the band; the lower envelope max(0, F-chi) the maximising one.
class DkwBand {
public:
    DkwBand(std::vector<double> sorted_values, double half_width, double gamma)
        : sorted_(std::move(sorted_values)), half_width_(half_width), gamma_(gamma) {}

    double half_width() const { return half_width_; }
    double gamma() const { return gamma_; }
    const std::vector<double>& sorted_values() const { return sorted_; }
    bool vacuous() const { return half_width_ >= 1.0; }

    double empirical_cdf(double x) const {
        const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
        return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
    }

    double envelope_upper(double x) const { return std::min(1.0, empirical_cdf(x) + half_width_); }
    double envelope_lower(double x) const { return std::max(0.0, empirical_cdf(x) - half_width_); }

private:
    std::vector<double> sorted_;
    double half_width_;
    double gamma_;
};

inline DkwBand dkw_band(const SampleBatch& batch, double gamma) {
    if (batch.count() < 1) throw std::invalid_argument("dkw_band needs at least one sample");
    return DkwBand(batch.sorted(), dkw_half_width(static_cast<std::int64_t>(batch.count()), gamma), gamma);
}

namespace detail {

// Expectation of the band's expectation-minimising cdf: the empirical
// average with the largest chi*k sample mass replaced by `floor_value`.
// The fractional sample at the cut is interpolated, which is what makes
// the 2x width ratio against Hoeffding exact.
inline double dkw_extreme_mean_low(const std::vector<double>& sorted, double chi, double floor_value) {
    const auto k = static_cast<std::int64_t>(sorted.size());
    const double ck = chi * static_cast<double>(k);
    const auto m = static_cast<std::int64_t>(std::floor(ck));
    long double total = 0.0L;
    for (std::int64_t i = 0; i < k - m - 1; ++i) total += sorted[static_cast<std::size_t>(i)];
    total += (static_cast<long double>(m) + 1.0L - ck) * sorted[static_cast<std::size_t>(k - m - 1)];
    total += static_cast<long double>(ck) * floor_value;
    return static_cast<double>(total / static_cast<long double>(k));
}

inline double dkw_extreme_mean_high(const std::vector<double>& sorted, double chi, double ceil_value) {
    const auto k = static_cast<std::int64_t>(sorted.size());
    const double ck = chi * static_cast<double>(k);
    const auto m = static_cast<std::int64_t>(std::floor(ck));
    long double total = static_cast<long double>(ck) * ceil_value;
    total += (static_cast<long double>(m) + 1.0L - ck) * sorted[static_cast<std::size_t>(m)];
    for (std::int64_t i = m + 1; i < k; ++i) total += sorted[static_cast<std::size_t>(i)];
    return static_cast<double>(total / static_cast<long double>(k));
}

}  // namespace detail

/// Mean bounds induced by the DKW band on a distribution with support in
/// [a, b]: always contained in the Hoeffding interval, at most half as
/// wide in the best case. Sound. A vacuous band yields the trivial [a, b].
inline ConfidenceInterval dkw_mean_bounds(const SampleBatch& batch, const SupportBounds& support,
                                          double gamma) {
    if (batch.count() < 1) throw std::invalid_argument("dkw_mean_bounds needs at least one sample");
    detail::require_within(batch, support);
    const double chi = dkw_half_width(static_cast<std::int64_t>(batch.count()), gamma);
    if (chi >= 1.0) return make_interval(support.lo, support.hi, gamma, Method::dkw);
    const auto& sorted = batch.sorted();
    const double lo = detail::dkw_extreme_mean_low(sorted, chi, support.lo);
    const double hi = detail::dkw_extreme_mean_high(sorted, chi, support.hi);
    return make_interval(lo, hi, gamma, Method::dkw);
}

/// Limit-PAC lower bound on the mean of a nonnegative variable: the
/// expectation of the band's minimising cdf with floor 0, i.e. the
/// empirical average with the largest chi_k fraction of sample mass
/// zeroed. Needs no upper support bound.
inline double dkw_e_lower(const SampleBatch& batch, double gamma) {
    if (batch.count() < 1) throw std::invalid_argument("dkw_e_lower needs at least one sample");
    const double chi = dkw_half_width(static_cast<std::int64_t>(batch.count()), gamma);
    if (chi >= 1.0) return 0.0;
    return detail::dkw_extreme_mean_low(batch.sorted(), chi, 0.0);
}

enum class KnownBoundSide { lower, upper };

/// Translate (known lower bound) or reflect (known upper bound) raw
/// samples into the nonnegative orthant so dkw_e_lower applies. The
/// caller maps the result back: E(X) = E(X') + a for the lower side,
/// E(X) = a - E(X') for the upper side (yielding an upper bound there).
inline SampleBatch shift_for_known_bound(std::span<const double> values, double known_bound,
                                         KnownBoundSide side) {
    std::vector<double> shifted;
    shifted.reserve(values.size());
    for (double v : values) {
        if (side == KnownBoundSide::lower) {
            if (v < known_bound)
                throw std::invalid_argument("sample below the declared lower bound");
            shifted.push_back(v - known_bound);
        } else {
            if (v > known_bound)
                throw std::invalid_argument("sample above the declared upper bound");
            shifted.push_back(known_bound - v);
        }
    }
    return SampleBatch(std::move(shifted));
}

}  // namespace soundmc
