#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "soundmc/dtmc.hpp"
#include "soundmc/error.hpp"
#include "soundmc/rng.hpp"

namespace soundmc {

struct RunConfig {
    std::uint64_t seed = 0;
    std::uint64_t max_steps = 10'000'000;  // exceeding this is an error, never a silent truncation
    std::uint64_t run_offset = 0;          // first substream index, for reproducible blocks
    int workers = 1;
};

/// Immutable collection of nonnegative sample values with cached moments
/// and an on-demand sorted view (built once, safe under concurrent reads).
class SampleBatch {
public:
    explicit SampleBatch(std::vector<double> values) : values_(std::move(values)) {
        for (double v : values_) {
            if (!(v >= 0.0) || !std::isfinite(v))
                throw ValidationError("sample values must be finite and nonnegative");
            sum_ += v;
            sum_squares_ += v * v;
        }
    }

    SampleBatch(const SampleBatch& other) : values_(other.values_), sum_(other.sum_), sum_squares_(other.sum_squares_) {}
    SampleBatch(SampleBatch&& other) noexcept
        : values_(std::move(other.values_)), sum_(other.sum_), sum_squares_(other.sum_squares_) {}
    SampleBatch& operator=(const SampleBatch&) = delete;

    std::size_t count() const { return values_.size(); }
    double sum() const { return sum_; }
    double sum_squares() const { return sum_squares_; }
    const std::vector<double>& values() const { return values_; }

    double mean() const {
        if (values_.empty()) throw std::invalid_argument("mean of empty batch");
        return sum_ / static_cast<double>(values_.size());
    }

    /// Empirical variance with k-1 divisor.
    double variance() const {
        const auto k = static_cast<double>(values_.size());
        if (values_.size() < 2) throw std::invalid_argument("variance needs at least two samples");
        const double m = mean();
        return std::max(0.0, (sum_squares_ - k * m * m) / (k - 1.0));
    }

    /// Population variance (k divisor), the Wald-style estimate.
    double variance_mle() const {
        const auto k = static_cast<double>(values_.size());
        if (values_.empty()) throw std::invalid_argument("variance of empty batch");
        const double m = mean();
        return std::max(0.0, sum_squares_ / k - m * m);
    }

    double max_value() const {
        if (values_.empty()) throw std::invalid_argument("max of empty batch");
        return *std::max_element(values_.begin(), values_.end());
    }

    const std::vector<double>& sorted() const {
        std::call_once(*sorted_once_, [this] {
            sorted_ = values_;
            std::sort(sorted_.begin(), sorted_.end());
        });
        return sorted_;
    }

    static SampleBatch merged(const SampleBatch& a, const SampleBatch& b) {
        std::vector<double> all;
        all.reserve(a.count() + b.count());
        all.insert(all.end(), a.values_.begin(), a.values_.end());
        all.insert(all.end(), b.values_.begin(), b.values_.end());
        return SampleBatch(std::move(all));
    }

private:
    std::vector<double> values_;
    double sum_ = 0.0;
    double sum_squares_ = 0.0;
    mutable std::unique_ptr<std::once_flag> sorted_once_ = std::make_unique<std::once_flag>();
    mutable std::vector<double> sorted_;
};

/// A property bound to a model: goal mask resolved, preconditions checked.
class PreparedProperty {
public:
    PreparedProperty(const Dtmc& model, const PropertySpec& prop) : spec_(prop) {
        spec_.validate();
        if (property_needs_goal(spec_.kind)) goal_mask_ = model.label_mask(spec_.goal);
    }

    PropertyKind kind() const { return spec_.kind; }
    std::int64_t bound() const { return spec_.bound.value_or(0); }
    const PropertySpec& spec() const { return spec_; }
    bool in_goal(std::int64_t s) const { return goal_mask_[static_cast<std::size_t>(s)] != 0; }

private:
    PropertySpec spec_;
    std::vector<std::uint8_t> goal_mask_;
};

namespace detail {

[[noreturn]] inline void throw_step_cap(std::uint64_t steps) {
    throw SimulationCapError(
        "simulation exceeded " + std::to_string(steps) +
            " steps before the property was decided (divergent run or violated model assumption)",
        steps);
}

[[noreturn]] inline void throw_goal_trap(std::int64_t state, std::uint64_t step) {
    throw SimulationCapError("run absorbed in non-goal state " + std::to_string(state) + " after " +
                                 std::to_string(step) +
                                 " steps; the goal is unreachable on this run (violated model assumption)",
                             step);
}

}  // namespace detail

/// One simulation run: walk a pseudo-random path just long enough to
/// evaluate the property's random variable and return its value.
/// State is O(1) in the model size: current state, accumulator, counter.
inline double sample_path_value(const Dtmc& model, const PreparedProperty& prop, RandomStream& rng,
                                std::uint64_t max_steps = 10'000'000) {
    std::int64_t s = model.initial();
    const PropertyKind kind = prop.kind();

    switch (kind) {
        case PropertyKind::p_reach: {
            for (std::uint64_t step = 0;; ++step) {
                if (prop.in_goal(s)) return 1.0;
                if (model.absorbing(s)) return 0.0;
                if (step >= max_steps) detail::throw_step_cap(max_steps);
                s = model.step(s, rng.next_unit());
            }
        }
        case PropertyKind::p_reach_bounded: {
            const std::int64_t c = prop.bound();
            for (std::int64_t i = 0;; ++i) {
                if (prop.in_goal(s)) return 1.0;
                if (i == c) return 0.0;
                if (model.absorbing(s)) return 0.0;
                s = model.step(s, rng.next_unit());
            }
        }
        case PropertyKind::e_cumulative: {
            const std::int64_t c = prop.bound();
            double total = model.reward(s);
            for (std::int64_t i = 0; i < c; ++i) {
                if (model.absorbing(s)) {
                    total += static_cast<double>(c - i) * model.reward(s);
                    break;
                }
                s = model.step(s, rng.next_unit());
                total += model.reward(s);
            }
            return total;
        }
        case PropertyKind::e_reach: {
            double total = model.reward(s);
            for (std::uint64_t step = 0;; ++step) {
                if (prop.in_goal(s)) return total;
                if (model.absorbing(s)) detail::throw_goal_trap(s, step);
                if (step >= max_steps) detail::throw_step_cap(max_steps);
                s = model.step(s, rng.next_unit());
                total += model.reward(s);
            }
        }
        case PropertyKind::e_reach_bounded: {
            const std::int64_t c = prop.bound();
            double total = model.reward(s);
            for (std::int64_t i = 0; i < c; ++i) {
                if (prop.in_goal(s)) return total;
                s = model.step(s, rng.next_unit());
                total += model.reward(s);
            }
            return total;
        }
        case PropertyKind::e_instant: {
            const std::int64_t c = prop.bound();
            for (std::int64_t i = 0; i < c; ++i) {
                if (model.absorbing(s)) break;
                s = model.step(s, rng.next_unit());
            }
            return model.reward(s);
        }
        case PropertyKind::e_reach_instant: {
            for (std::uint64_t step = 0;; ++step) {
                if (prop.in_goal(s)) return model.reward(s);
                if (model.absorbing(s)) detail::throw_goal_trap(s, step);
                if (step >= max_steps) detail::throw_step_cap(max_steps);
                s = model.step(s, rng.next_unit());
            }
        }
    }
    throw std::logic_error("unreachable property kind");
}

namespace detail {

/// Evenly partition [0, total) into `parts` contiguous chunks and run
/// fn(first, last) for each on its own thread. Errors are captured and the
/// first one rethrown after join.
template <typename Fn>
void parallel_chunks(std::size_t total, int parts, Fn&& fn) {
    const int n = std::max(1, parts);
    if (n == 1 || total < 2) {
        fn(std::size_t{0}, total);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
    const std::size_t chunk = (total + static_cast<std::size_t>(n) - 1) / static_cast<std::size_t>(n);
    for (int w = 0; w < n; ++w) {
        const std::size_t first = std::min(total, static_cast<std::size_t>(w) * chunk);
        const std::size_t last = std::min(total, first + chunk);
        if (first >= last) break;
        pool.emplace_back([&, first, last, w] {
            try {
                fn(first, last);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace detail

/// k independent samples. Run i draws from substream (seed, run_offset+i),
/// so the batch is bit-identical for a fixed config regardless of the
/// worker count.
inline SampleBatch run_batch(const Dtmc& model, const PreparedProperty& prop, std::size_t k,
                             const RunConfig& cfg) {
    if (k < 1) throw std::invalid_argument("run_batch requires k >= 1");
    if (property_needs_bound(prop.kind()) &&
        static_cast<std::uint64_t>(prop.bound()) > cfg.max_steps)
        throw std::invalid_argument("step cap of " + std::to_string(cfg.max_steps) +
                                    " is below the property's step bound " +
                                    std::to_string(prop.bound()));
    std::vector<double> values(k);
    detail::parallel_chunks(k, cfg.workers, [&](std::size_t first, std::size_t last) {
        for (std::size_t i = first; i < last; ++i) {
            RandomStream rng = RandomStream::substream(cfg.seed, cfg.run_offset + i);
            try {
                values[i] = sample_path_value(model, prop, rng, cfg.max_steps);
            } catch (const SimulationCapError& e) {
                throw SimulationCapError("run " + std::to_string(cfg.run_offset + i) + ": " + e.what(),
                                         e.steps());
            }
        }
    });
    return SampleBatch(std::move(values));
}

inline SampleBatch run_batch(const Dtmc& model, const PropertySpec& prop, std::size_t k,
                             const RunConfig& cfg) {
    return run_batch(model, PreparedProperty(model, prop), k, cfg);
}

}  // namespace soundmc
