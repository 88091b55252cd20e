#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "soundmc/bounded_mean.hpp"
#include "soundmc/dtmc.hpp"
#include "soundmc/error.hpp"
#include "soundmc/interval.hpp"
#include "soundmc/simulate.hpp"

namespace soundmc {

/// Safe support cap for instantaneous-reward samples: the reward bound.
inline double instantaneous_reward_cap(const StructuralBounds& bounds) { return bounds.rmax_bound; }

/// Safe support cap for step-bounded cumulative samples: a path of c
/// steps enters c+1 states.
inline double cumulative_reward_cap(std::int64_t step_bound, const StructuralBounds& bounds) {
    if (step_bound < 0) throw std::invalid_argument("step bound must be >= 0");
    return static_cast<double>(step_bound + 1) * bounds.rmax_bound;
}

namespace detail {

// log of the episode-tail weight bound for q episodes:
//   S * rmax * (1-u)^q * (q(1-u) + 1) / u     with u = pmin^S.
// Evaluated in the log domain so u^-1 cannot overflow; rmax = 0 gives
// -inf (tail exactly zero). A vanishing u (underflow) makes the bound
// +inf-ish, which the search reports as an infeasible horizon.
inline double log_tail_weight(const StructuralBounds& bounds, double episodes) {
    if (!(episodes >= 1.0)) throw std::invalid_argument("episode count must be >= 1");
    const double log_u = static_cast<double>(bounds.state_bound) * std::log(bounds.pmin_bound);
    const double u = std::exp(log_u);
    const double log_decay = episodes * std::log1p(-u);
    const double log_linear = std::log(episodes * (1.0 - u) + 1.0);
    return std::log(static_cast<double>(bounds.state_bound)) + std::log(bounds.rmax_bound) + log_decay +
           log_linear - log_u;
}

}  // namespace detail

/// Bound on the reward-weighted probability mass of all paths that run
/// for more than q * state_bound steps before the goal.
inline double bounding_set_tail_weight(const StructuralBounds& bounds, double episodes) {
    if (!(bounds.pmin_bound > 0.0) || bounds.pmin_bound > 1.0)
        throw std::invalid_argument("pmin bound must lie in (0, 1]");
    if (bounds.rmax_bound == 0.0) return 0.0;
    return std::exp(detail::log_tail_weight(bounds, episodes));
}

struct BoundingSetResult {
    std::int64_t episodes = 0;         // q
    std::int64_t horizon_steps = 0;    // q * state_bound
    double tail_weight = 0.0;          // bound value at q, strictly below the requested eps'
    double path_reward_cap = 0.0;      // q * state_bound * rmax_bound
};

/// Smallest episode count q whose tail weight is strictly below eps',
/// found by exponential doubling then bisection on the monotone
/// log-domain expression. Exceeding q_max is an error, never a silent cap.
inline BoundingSetResult bounding_set_horizon(const StructuralBounds& bounds, double eps_prime,
                                              std::int64_t q_max = std::numeric_limits<std::int64_t>::max()) {
    if (!(eps_prime > 0.0)) throw std::invalid_argument("eps' must be positive");
    if (!(bounds.pmin_bound > 0.0) || !(bounds.pmin_bound < 1.0))
        throw std::invalid_argument("bounding sets require pmin in (0, 1)");
    if (q_max < 1) throw std::invalid_argument("q_max must be >= 1");

    const double log_target = std::log(eps_prime);
    auto fits = [&](std::int64_t q) {
        if (bounds.rmax_bound == 0.0) return true;
        return detail::log_tail_weight(bounds, static_cast<double>(q)) < log_target;
    };

    std::int64_t hi = 1;
    while (!fits(hi)) {
        if (hi >= q_max)
            throw HorizonError("bounding-set episode count exceeds the configured maximum of " +
                               std::to_string(q_max) + "; the theoretical horizon is infeasible here");
        hi = hi > q_max / 2 ? q_max : hi * 2;
    }
    std::int64_t lo = hi / 2;
    while (lo + 1 < hi) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        if (fits(mid)) hi = mid; else lo = mid;
    }

    BoundingSetResult r;
    r.episodes = hi;
    r.horizon_steps = hi * bounds.state_bound;
    r.tail_weight = bounding_set_tail_weight(bounds, static_cast<double>(hi));
    r.path_reward_cap = static_cast<double>(r.horizon_steps) * bounds.rmax_bound;
    return r;
}

/// One truncated sample of the reach-reward variable: the accumulated
/// path reward if the goal is hit strictly within the horizon, else 0.
/// Zeroing (not clamping) matches the correction term added to the upper
/// bound.
inline double sample_truncated_reach_reward(const Dtmc& model, const PreparedProperty& prop,
                                            std::int64_t horizon_steps, RandomStream& rng) {
    std::int64_t s = model.initial();
    double total = model.reward(s);
    for (std::int64_t step = 0; step < horizon_steps; ++step) {
        if (prop.in_goal(s)) return total;
        if (model.absorbing(s)) return 0.0;
        s = model.step(s, rng.next_unit());
        total += model.reward(s);
    }
    return 0.0;
}

struct TruncatedRewardAnalysis {
    ConfidenceInterval interval;
    BoundingSetResult horizon;
    double sample_mean = 0.0;
    std::size_t samples = 0;
};

/// Sound interval for an unbounded reachability reward, via the
/// theoretical bounding-set horizon: sample the truncated variable, apply
/// the band mean bounds on [0, cap], widen only the upper end by eps'.
inline TruncatedRewardAnalysis truncated_reach_reward_analysis(
    const Dtmc& model, const PropertySpec& prop, const StructuralBounds& bounds, double eps_prime,
    std::size_t k, double gamma, const RunConfig& cfg,
    std::int64_t q_max = std::numeric_limits<std::int64_t>::max()) {
    if (prop.kind != PropertyKind::e_reach)
        throw std::invalid_argument("truncated intervals apply to unbounded reachability rewards only");
    const BoundingSetResult horizon = bounding_set_horizon(bounds, eps_prime, q_max);
    if (static_cast<std::uint64_t>(horizon.horizon_steps) > cfg.max_steps)
        throw SimulationCapError("bounding-set horizon of " + std::to_string(horizon.horizon_steps) +
                                     " steps exceeds the configured step cap",
                                 cfg.max_steps);

    const PreparedProperty prepared(model, prop);
    std::vector<double> values(k);
    detail::parallel_chunks(k, cfg.workers, [&](std::size_t first, std::size_t last) {
        for (std::size_t i = first; i < last; ++i) {
            RandomStream rng = RandomStream::substream(cfg.seed, cfg.run_offset + i);
            values[i] = sample_truncated_reach_reward(model, prepared, horizon.horizon_steps, rng);
        }
    });
    const SampleBatch batch(std::move(values));
    const ConfidenceInterval inner =
        dkw_mean_bounds(batch, SupportBounds(0.0, horizon.path_reward_cap), gamma);

    TruncatedRewardAnalysis out;
    out.interval = make_interval(inner.lower, inner.upper + eps_prime, gamma, Method::dkw_truncated);
    out.horizon = horizon;
    out.sample_mean = batch.mean();
    out.samples = k;
    return out;
}

inline ConfidenceInterval truncated_reach_reward_interval(
    const Dtmc& model, const PropertySpec& prop, const StructuralBounds& bounds, double eps_prime,
    std::size_t k, double gamma, const RunConfig& cfg,
    std::int64_t q_max = std::numeric_limits<std::int64_t>::max()) {
    return truncated_reach_reward_analysis(model, prop, bounds, eps_prime, k, gamma, cfg, q_max).interval;
}

}  // namespace soundmc
