#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>

#include "soundmc/binomial_ci.hpp"
#include "soundmc/error.hpp"
#include "soundmc/interval.hpp"
#include "soundmc/quantiles.hpp"

namespace soundmc {

/// Ordered source of sample values; returns nullopt when exhausted.
/// Sequential procedures are single-consumer by contract.
using SampleStream = std::function<std::optional<double>()>;

namespace detail {

inline double draw_or_throw(SampleStream& stream) {
    auto v = stream();
    if (!v) throw StreamExhausted("sample stream exhausted before the sequential procedure stopped");
    return *v;
}

}  // namespace detail

struct ChowRobbinsResult {
    ConfidenceInterval interval;
    std::int64_t samples = 0;
};

/// Chow-Robbins scheme: after each sample (once at least min_k were
/// drawn), build the Wald-style interval and stop when its half-width is
/// at most eps. Coverage approaches gamma only as eps -> 0; unsound for
/// any concrete eps. The variance estimate uses the k divisor, so on
/// Bernoulli streams the stopping rule coincides exactly with the Wald
/// interval's.
inline ChowRobbinsResult chow_robbins_estimate(SampleStream& stream, double eps, double gamma,
                                               std::int64_t min_k = 10) {
    if (!(eps > 0.0)) throw std::invalid_argument("epsilon must be positive");
    if (min_k < 1) throw std::invalid_argument("min_k must be >= 1");
    const double z = normal_two_sided_z(gamma);

    double sum = 0.0, sum_sq = 0.0;
    std::int64_t k = 0;
    for (;;) {
        const double v = detail::draw_or_throw(stream);
        sum += v;
        sum_sq += v * v;
        ++k;
        if (k < min_k) continue;
        const double mean = sum / static_cast<double>(k);
        const double var = std::max(0.0, sum_sq / static_cast<double>(k) - mean * mean);
        const double half = z * std::sqrt(var / static_cast<double>(k));
        if (half <= eps) {
            return {ConfidenceInterval{mean - half, mean + half, gamma, Method::chow_robbins, false}, k};
        }
    }
}

struct SequentialCpResult {
    ConfidenceInterval interval;
    std::int64_t samples = 0;
};

/// Sound sequential procedure for Bernoulli streams: precompute the
/// worst-case Clopper-Pearson sample count for (eps, gamma), draw exactly
/// that many samples, and report the fixed-k interval. The final width is
/// at most 2*eps for every possible success count.
inline SequentialCpResult sequential_cp_plan_and_run(SampleStream& stream, double eps, double gamma) {
    const std::int64_t plan = cp_worst_case_sample_size(eps, gamma);
    std::int64_t successes = 0;
    for (std::int64_t i = 0; i < plan; ++i) {
        const double v = detail::draw_or_throw(stream);
        if (v != 0.0 && v != 1.0)
            throw std::invalid_argument("sequential Clopper-Pearson plan expects a Bernoulli stream");
        successes += v == 1.0 ? 1 : 0;
    }
    return {clopper_pearson_interval(BinomialObservation(successes, plan), gamma), plan};
}

enum class SprtDecision { yes, no };

struct SprtResult {
    SprtDecision decision = SprtDecision::no;
    std::int64_t samples = 0;
};

/// Wald's sequential probability ratio test of H0: p = p_t - eps_i
/// against H1: p = p_t + eps_i, with log-likelihood thresholds
/// log(beta/(1-alpha)) and log((1-beta)/alpha). "yes" answers p >= p_t;
/// inside the indifference region either answer is admissible.
inline SprtResult sprt(SampleStream& stream, double p_threshold, double indifference, double alpha,
                       double beta) {
    const double p0 = p_threshold - indifference;
    const double p1 = p_threshold + indifference;
    if (!(p0 > 0.0) || !(p1 < 1.0) || !(indifference > 0.0))
        throw std::invalid_argument("indifference region must satisfy 0 < p_t - eps_i < p_t + eps_i < 1");
    if (!(alpha > 0.0) || !(alpha < 1.0) || !(beta > 0.0) || !(beta < 1.0))
        throw std::invalid_argument("alpha and beta must lie in (0, 1)");

    const double accept_h0 = std::log(beta / (1.0 - alpha));
    const double accept_h1 = std::log((1.0 - beta) / alpha);
    const double step_success = std::log(p1 / p0);
    const double step_failure = std::log((1.0 - p1) / (1.0 - p0));

    double llr = 0.0;
    std::int64_t k = 0;
    for (;;) {
        const double v = detail::draw_or_throw(stream);
        if (v != 0.0 && v != 1.0) throw std::invalid_argument("SPRT expects a Bernoulli stream");
        llr += v == 1.0 ? step_success : step_failure;
        ++k;
        if (llr >= accept_h1) return {SprtDecision::yes, k};
        if (llr <= accept_h0) return {SprtDecision::no, k};
    }
}

}  // namespace soundmc
