#pragma once

#include <chrono>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "soundmc/binomial_ci.hpp"
#include "soundmc/bounded_mean.hpp"
#include "soundmc/coverage.hpp"
#include "soundmc/dtmc.hpp"
#include "soundmc/error.hpp"
#include "soundmc/interval.hpp"
#include "soundmc/reward_bounds.hpp"
#include "soundmc/sequential.hpp"
#include "soundmc/simulate.hpp"

namespace soundmc {

enum class AnalysisMode { fixed_k, sequential };

constexpr std::string_view analysis_mode_name(AnalysisMode m) {
    return m == AnalysisMode::fixed_k ? "fixed-k" : "sequential";
}

enum class PropertyClass { proportion, bounded_reward, unbounded_reward };

inline PropertyClass classify_property(PropertyKind kind) {
    if (property_is_probability(kind)) return PropertyClass::proportion;
    if (kind == PropertyKind::e_reach) return PropertyClass::unbounded_reward;
    return PropertyClass::bounded_reward;
}

/// Support bounds for the bounded-reward property kinds, from structural
/// information only.
inline SupportBounds reward_support(const PropertySpec& prop, const StructuralBounds& bounds) {
    switch (prop.kind) {
        case PropertyKind::e_instant:
        case PropertyKind::e_reach_instant:
            return SupportBounds(0.0, instantaneous_reward_cap(bounds));
        case PropertyKind::e_cumulative:
        case PropertyKind::e_reach_bounded:
            return SupportBounds(0.0, cumulative_reward_cap(prop.bound.value_or(0), bounds));
        default:
            throw std::invalid_argument("property has no structural support bounds");
    }
}

/// Whether `method` can analyse a property of class `cls` in `mode`.
inline bool method_applicable(Method method, PropertyClass cls, AnalysisMode mode, bool have_eps_prime) {
    const bool seq = mode == AnalysisMode::sequential;
    switch (method) {
        case Method::wald:
        case Method::wilson_cc:
            return cls == PropertyClass::proportion && !seq;
        case Method::clopper_pearson:
        case Method::okamoto:
            return cls == PropertyClass::proportion;  // fixed-k, or precomputed plan
        case Method::normal:
        case Method::student_t:
            return !seq;  // computable on any samples, unsound everywhere
        case Method::hoeffding:
            return cls != PropertyClass::unbounded_reward;
        case Method::dkw:
            return cls != PropertyClass::unbounded_reward && !seq;  // sequential plan coincides with Hoeffding
        case Method::dkw_truncated:
            return cls == PropertyClass::unbounded_reward && !seq && have_eps_prime;
        case Method::dkw_e_lower:
            return cls == PropertyClass::unbounded_reward && !seq;
        case Method::chow_robbins:
            return seq;
    }
    return false;
}

/// Recommended preference order: sound before unsound, efficient before
/// conservative. Probabilities resolve to Clopper-Pearson, bounded
/// rewards to the band mean bounds (Hoeffding when planning from eps),
/// unbounded reach rewards to the limit-PAC lower bound or the truncated
/// interval when an eps' budget is given.
inline std::vector<Method> default_preferences() {
    return {Method::clopper_pearson, Method::dkw, Method::dkw_truncated, Method::dkw_e_lower,
            Method::okamoto, Method::hoeffding};
}

struct CheckRequest {
    PropertySpec prop;
    std::vector<Method> prefs;  // empty means default_preferences()
    AnalysisMode mode = AnalysisMode::fixed_k;
    std::int64_t k = 1000;            // fixed-k mode
    double eps = 0.01;                // sequential mode
    double gamma = 0.95;
    RunConfig cfg;
    std::optional<double> eps_prime;  // enables the truncated reach-reward interval
    std::int64_t min_k = 10;          // Chow-Robbins minimum before stopping is allowed
    std::int64_t seq_draw_cap = 10'000'000;
    std::int64_t q_max = std::numeric_limits<std::int64_t>::max();
};

struct CheckReport {
    std::string model_name;
    std::string property_name;
    Method method = Method::clopper_pearson;
    AnalysisMode mode = AnalysisMode::fixed_k;
    std::int64_t samples = 0;
    double gamma = 0.0;
    double estimate = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool sound = false;
    bool lower_bound_only = false;
    double seconds = 0.0;
};

namespace detail {

inline BinomialObservation to_observation(const SampleBatch& batch) {
    std::int64_t successes = 0;
    for (double v : batch.values()) {
        if (v != 0.0 && v != 1.0)
            throw std::invalid_argument("proportion methods expect Bernoulli samples");
        successes += v == 1.0 ? 1 : 0;
    }
    return BinomialObservation(successes, static_cast<std::int64_t>(batch.count()));
}

inline SampleStream simulation_stream(const Dtmc& model, const PreparedProperty& prop,
                                      const RunConfig& cfg, std::int64_t cap) {
    auto index = std::make_shared<std::int64_t>(0);
    return [&model, &prop, cfg, cap, index]() -> std::optional<double> {
        if (*index >= cap) return std::nullopt;
        RandomStream rng = RandomStream::substream(cfg.seed, cfg.run_offset + static_cast<std::uint64_t>(*index));
        ++*index;
        return sample_path_value(model, prop, rng, cfg.max_steps);
    };
}

}  // namespace detail

/// Select the first applicable method and run the analysis.
inline CheckReport run_check(const Dtmc& model, const CheckRequest& req,
                             const std::string& model_name = "model") {
    const auto t0 = std::chrono::steady_clock::now();
    PropertySpec prop = req.prop;
    prop.validate();
    if (property_needs_goal(prop.kind) && !model.has_label(prop.goal))
        throw ValidationError("goal label '" + prop.goal + "' not present in model");

    const PropertyClass cls = classify_property(prop.kind);
    const std::vector<Method> prefs = req.prefs.empty() ? default_preferences() : req.prefs;

    Method method{};
    bool found = false;
    for (Method m : prefs) {
        if (method_applicable(m, cls, req.mode, req.eps_prime.has_value())) {
            method = m;
            found = true;
            break;
        }
    }
    if (!found) {
        std::string listed;
        for (Method m : prefs) {
            if (!listed.empty()) listed += ", ";
            listed += method_name(m);
        }
        throw NoApplicableMethod("no method in the preference list [" + listed + "] applies to a " +
                                 std::string(property_kind_name(prop.kind)) + " property in " +
                                 std::string(analysis_mode_name(req.mode)) + " mode");
    }

    CheckReport report;
    report.model_name = model_name;
    report.property_name = prop.name();
    report.method = method;
    report.mode = req.mode;
    report.gamma = req.gamma;

    const StructuralBounds bounds = structural_bounds(model);
    const PreparedProperty prepared(model, prop);

    auto finish = [&](const ConfidenceInterval& iv, double estimate, std::int64_t samples) {
        report.estimate = estimate;
        report.lower = iv.lower;
        report.upper = iv.upper;
        report.sound = iv.sound;
        report.samples = samples;
        report.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return report;
    };

    auto fixed_interval = [&](const SampleBatch& batch) -> ConfidenceInterval {
        switch (method) {
            case Method::wald:
            case Method::wilson_cc:
            case Method::clopper_pearson:
            case Method::okamoto:
                return proportion_interval(method, detail::to_observation(batch), req.gamma);
            case Method::normal:
                return normal_interval(batch, req.gamma);
            case Method::student_t:
                return student_t_interval(batch, req.gamma);
            case Method::hoeffding:
                return hoeffding_interval(batch,
                                          cls == PropertyClass::proportion ? SupportBounds(0.0, 1.0)
                                                                           : reward_support(prop, bounds),
                                          req.gamma);
            case Method::dkw:
                return dkw_mean_bounds(batch,
                                       cls == PropertyClass::proportion ? SupportBounds(0.0, 1.0)
                                                                        : reward_support(prop, bounds),
                                       req.gamma);
            default:
                throw std::logic_error("unexpected fixed-k method");
        }
    };

    if (req.mode == AnalysisMode::fixed_k) {
        if (method == Method::dkw_e_lower) {
            const SampleBatch batch = run_batch(model, prepared, static_cast<std::size_t>(req.k), req.cfg);
            const double bound = dkw_e_lower(batch, req.gamma);
            ConfidenceInterval iv = make_interval(bound, std::numeric_limits<double>::infinity(),
                                                  req.gamma, Method::dkw_e_lower);
            report.lower_bound_only = true;
            return finish(iv, batch.mean(), req.k);
        }
        if (method == Method::dkw_truncated) {
            const auto analysis = truncated_reach_reward_analysis(
                model, prop, bounds, *req.eps_prime, static_cast<std::size_t>(req.k), req.gamma, req.cfg,
                req.q_max);
            return finish(analysis.interval, analysis.sample_mean, req.k);
        }
        const SampleBatch batch = run_batch(model, prepared, static_cast<std::size_t>(req.k), req.cfg);
        return finish(fixed_interval(batch), batch.mean(), req.k);
    }

    // sequential mode: precomputed plans, or the Chow-Robbins scheme
    switch (method) {
        case Method::clopper_pearson: {
            const std::int64_t plan = cp_worst_case_sample_size(req.eps, req.gamma);
            const SampleBatch batch = run_batch(model, prepared, static_cast<std::size_t>(plan), req.cfg);
            const auto obs = detail::to_observation(batch);
            return finish(clopper_pearson_interval(obs, req.gamma), obs.proportion(), plan);
        }
        case Method::okamoto: {
            const std::int64_t plan = okamoto_sample_size(req.eps, req.gamma);
            const SampleBatch batch = run_batch(model, prepared, static_cast<std::size_t>(plan), req.cfg);
            const auto obs = detail::to_observation(batch);
            return finish(okamoto_interval(obs, req.gamma), obs.proportion(), plan);
        }
        case Method::hoeffding: {
            const SupportBounds support =
                cls == PropertyClass::proportion ? SupportBounds(0.0, 1.0) : reward_support(prop, bounds);
            const std::int64_t plan = hoeffding_sample_size(req.eps, support, req.gamma);
            const SampleBatch batch = run_batch(model, prepared, static_cast<std::size_t>(plan), req.cfg);
            return finish(hoeffding_interval(batch, support, req.gamma), batch.mean(), plan);
        }
        case Method::chow_robbins: {
            SampleStream stream = detail::simulation_stream(model, prepared, req.cfg, req.seq_draw_cap);
            const auto result = chow_robbins_estimate(stream, req.eps, req.gamma, req.min_k);
            return finish(result.interval, result.interval.midpoint(), result.samples);
        }
        default:
            throw std::logic_error("unexpected sequential method");
    }
}

/// Batch-to-interval closure for a fixed-k method on a given model and
/// property; the empirical coverage harness feeds it one batch per
/// repetition. Lower-bound-only methods return [bound, +inf).
inline IntervalProducer make_interval_producer(const Dtmc& model, const PropertySpec& prop, Method method,
                                               double gamma) {
    const PropertyClass cls = classify_property(prop.kind);
    switch (method) {
        case Method::wald:
        case Method::wilson_cc:
        case Method::clopper_pearson:
        case Method::okamoto:
            if (cls != PropertyClass::proportion)
                throw std::invalid_argument("proportion method on a non-probability property");
            return [method, gamma](const SampleBatch& b) {
                return proportion_interval(method, detail::to_observation(b), gamma);
            };
        case Method::normal:
            return [gamma](const SampleBatch& b) { return normal_interval(b, gamma); };
        case Method::student_t:
            return [gamma](const SampleBatch& b) { return student_t_interval(b, gamma); };
        case Method::hoeffding:
        case Method::dkw: {
            const SupportBounds support = cls == PropertyClass::proportion
                                              ? SupportBounds(0.0, 1.0)
                                              : reward_support(prop, structural_bounds(model));
            if (method == Method::hoeffding)
                return [support, gamma](const SampleBatch& b) {
                    return hoeffding_interval(b, support, gamma);
                };
            return [support, gamma](const SampleBatch& b) { return dkw_mean_bounds(b, support, gamma); };
        }
        case Method::dkw_e_lower:
            return [gamma](const SampleBatch& b) {
                return make_interval(dkw_e_lower(b, gamma), std::numeric_limits<double>::infinity(),
                                     gamma, Method::dkw_e_lower);
            };
        default:
            throw std::invalid_argument("method '" + std::string(method_name(method)) +
                                        "' cannot produce fixed-k intervals from a batch");
    }
}

namespace csv {

inline void write_check_header(std::ostream& os) {
    os << "model,property,method,mode,k,gamma,estimate,lo,hi,sound,seconds\n";
}

inline void write_check_row(std::ostream& os, const CheckReport& r) {
    os << r.model_name << ',' << r.property_name << ',' << method_name(r.method) << ','
       << analysis_mode_name(r.mode) << ',' << r.samples << ',' << fmt(r.gamma) << ','
       << fmt(r.estimate) << ',' << fmt(r.lower) << ',' << fmt(r.upper) << ','
       << (r.sound ? "true" : "false") << ',' << fmt(r.seconds) << '\n';
}

}  // namespace csv

}  // namespace soundmc
