#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "soundmc/binomial_ci.hpp"
#include "soundmc/bounded_mean.hpp"
#include "soundmc/dtmc.hpp"
#include "soundmc/error.hpp"
#include "soundmc/interval.hpp"
#include "soundmc/quantiles.hpp"
#include "soundmc/simulate.hpp"

namespace soundmc {

/// Fixed-k proportion interval for a given method tag.
inline ConfidenceInterval proportion_interval(Method method, const BinomialObservation& obs, double gamma) {
    switch (method) {
        case Method::wald: return wald_interval(obs, gamma);
        case Method::wilson_cc: return wilson_cc_interval(obs, gamma);
        case Method::clopper_pearson: return clopper_pearson_interval(obs, gamma);
        case Method::okamoto: return okamoto_interval(obs, gamma);
        default:
            throw std::invalid_argument(std::string("'") + std::string(method_name(method)) +
                                        "' is not a fixed-k proportion method");
    }
}

namespace detail {

struct KahanSum {
    double total = 0.0;
    double carry = 0.0;
    void add(double v) {
        const double y = v - carry;
        const double t = total + y;
        carry = (t - total) - y;
        total = t;
    }
};

inline std::vector<ConfidenceInterval> proportion_interval_table(Method method, std::int64_t k,
                                                                 double gamma) {
    std::vector<ConfidenceInterval> table;
    table.reserve(static_cast<std::size_t>(k) + 1);
    for (std::int64_t ks = 0; ks <= k; ++ks)
        table.push_back(proportion_interval(method, BinomialObservation(ks, k), gamma));
    return table;
}

}  // namespace detail

/// Exact coverage probability of a fixed-k proportion method at success
/// probability p: total Binomial(k, p) mass of the outcomes whose
/// interval contains p.
inline double exact_coverage_fixed(Method method, std::int64_t k, double gamma, double p) {
    if (!(p > 0.0) || !(p < 1.0)) throw std::invalid_argument("p must lie in (0, 1)");
    const auto table = detail::proportion_interval_table(method, k, gamma);
    detail::KahanSum cov;
    for (std::int64_t ks = 0; ks <= k; ++ks)
        if (table[static_cast<std::size_t>(ks)].contains(p)) cov.add(binomial_pmf(ks, k, p));
    return cov.total;
}

/// Expected width of the (clamped) interval a fixed-k method produces at
/// success probability p.
inline double expected_width_fixed(Method method, std::int64_t k, double gamma, double p) {
    if (!(p > 0.0) || !(p < 1.0)) throw std::invalid_argument("p must lie in (0, 1)");
    const auto table = detail::proportion_interval_table(method, k, gamma);
    detail::KahanSum w;
    for (std::int64_t ks = 0; ks <= k; ++ks)
        w.add(binomial_pmf(ks, k, p) * table[static_cast<std::size_t>(ks)].width());
    return w.total;
}

struct CoverageCurve {
    Method method = Method::wald;
    std::int64_t k = 0;          // fixed sample count (fixed-k curves)
    double eps = 0.0;            // half-width target (sequential curves)
    double gamma = 0.0;
    std::vector<double> grid;
    std::vector<double> coverage;
    std::vector<double> expected_width;    // fixed-k curves, optional
    std::vector<double> expected_samples;  // sequential curves
    std::vector<double> residual;          // sequential curves

    double min_coverage() const {
        double mn = 2.0;
        for (double c : coverage) mn = std::min(mn, c);
        return mn;
    }
    double mean_coverage() const {
        detail::KahanSum s;
        for (double c : coverage) s.add(c);
        return s.total / static_cast<double>(coverage.size());
    }
};

/// Evenly spaced interior grid: i/(n+1) for i = 1..n.
inline std::vector<double> interior_grid(std::int64_t points) {
    if (points < 1) throw std::invalid_argument("grid needs at least one point");
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(points));
    for (std::int64_t i = 1; i <= points; ++i)
        grid.push_back(static_cast<double>(i) / static_cast<double>(points + 1));
    return grid;
}

/// Exact coverage (and optionally expected width) of a fixed-k method
/// over a probability grid. Grid points are independent; `workers`
/// threads split them.
inline CoverageCurve fixed_coverage_curve(Method method, std::int64_t k, double gamma,
                                          std::int64_t grid_points = 999, bool with_width = false,
                                          int workers = 1) {
    CoverageCurve curve;
    curve.method = method;
    curve.k = k;
    curve.gamma = gamma;
    curve.grid = interior_grid(grid_points);
    curve.coverage.assign(curve.grid.size(), 0.0);
    if (with_width) curve.expected_width.assign(curve.grid.size(), 0.0);

    const auto table = detail::proportion_interval_table(method, k, gamma);
    detail::parallel_chunks(curve.grid.size(), workers, [&](std::size_t first, std::size_t last) {
        for (std::size_t g = first; g < last; ++g) {
            const double p = curve.grid[g];
            detail::KahanSum cov, w;
            for (std::int64_t ks = 0; ks <= k; ++ks) {
                const double pmf = binomial_pmf(ks, k, p);
                const auto& iv = table[static_cast<std::size_t>(ks)];
                if (iv.contains(p)) cov.add(pmf);
                if (with_width) w.add(pmf * iv.width());
            }
            curve.coverage[g] = cov.total;
            if (with_width) curve.expected_width[g] = w.total;
        }
    });
    return curve;
}

/// Interval constructor over a sample batch; binds method and parameters.
using IntervalProducer = std::function<ConfidenceInterval(const SampleBatch&)>;

/// Exact coverage of a batch-interval method on a two-point distribution
/// taking `high` with probability p and 0 otherwise: enumerate success
/// counts, weight by the binomial pmf, check whether each outcome's
/// interval covers the reference.
inline double exact_coverage_two_point(const IntervalProducer& producer, std::int64_t k, double p,
                                       double high, double reference) {
    if (!(p > 0.0) || !(p < 1.0)) throw std::invalid_argument("p must lie in (0, 1)");
    detail::KahanSum cov;
    for (std::int64_t s = 0; s <= k; ++s) {
        std::vector<double> values(static_cast<std::size_t>(k), 0.0);
        for (std::int64_t i = 0; i < s; ++i) values[static_cast<std::size_t>(k - s + i)] = high;
        const SampleBatch batch(std::move(values));
        if (producer(batch).contains(reference)) cov.add(binomial_pmf(s, k, p));
    }
    return cov.total;
}

enum class SequentialMethod { chow_robbins, clopper_pearson_plan };

constexpr std::string_view sequential_method_name(SequentialMethod m) {
    switch (m) {
        case SequentialMethod::chow_robbins: return "chow_robbins";
        case SequentialMethod::clopper_pearson_plan: return "clopper_pearson";
    }
    return "unknown";
}

struct StoppingPoint {
    std::int64_t successes = 0;
    std::int64_t trials = 0;
    double reach_prob = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

struct StoppingBoundary {
    std::vector<StoppingPoint> points;
    std::int64_t k_max = 0;
    double residual = 0.0;       // probability mass not yet stopped at k_max
    bool truncated = false;      // residual above the reporting threshold

    static constexpr double residual_warning_threshold = 1e-9;
};

/// All (successes, trials) pairs at which a sequential method stops, with
/// their reach probabilities under success probability p. Dynamic program
/// over the trial lattice with first-stop absorption; mass still live at
/// k_max is reported as the residual, never folded into coverage.
inline StoppingBoundary stopping_boundary(SequentialMethod method, double eps, double gamma, double p,
                                          std::int64_t k_max, std::int64_t min_k = 10) {
    if (!(p > 0.0) || !(p < 1.0)) throw std::invalid_argument("p must lie in (0, 1)");
    if (!(eps > 0.0)) throw std::invalid_argument("epsilon must be positive");
    if (k_max < min_k) throw std::invalid_argument("k_max must be at least min_k");

    const double z = normal_two_sided_z(gamma);
    const double z2 = z * z;
    std::int64_t plan = 0;
    if (method == SequentialMethod::clopper_pearson_plan) {
        plan = cp_worst_case_sample_size(eps, gamma);
        if (plan > k_max)
            throw std::invalid_argument("k_max of " + std::to_string(k_max) +
                                        " is below the Clopper-Pearson plan size " + std::to_string(plan));
    }

    // stop rule at (ks, k); the Chow-Robbins one is the Wald half-width
    // condition z * sqrt(ks(k-ks)/k^3) <= eps, rearranged multiplicatively
    auto stops = [&](std::int64_t ks, std::int64_t k) {
        if (method == SequentialMethod::clopper_pearson_plan) return k == plan;
        if (k < min_k) return false;
        const double kd = static_cast<double>(k);
        return z2 * static_cast<double>(ks) * static_cast<double>(k - ks) <= eps * eps * kd * kd * kd;
    };

    StoppingBoundary out;
    out.k_max = k_max;

    std::vector<long double> live(static_cast<std::size_t>(k_max) + 2, 0.0L);
    std::vector<long double> next(static_cast<std::size_t>(k_max) + 2, 0.0L);
    live[0] = 1.0L;
    const long double lp = static_cast<long double>(p);

    for (std::int64_t k = 1; k <= k_max; ++k) {
        std::fill(next.begin(), next.begin() + static_cast<std::ptrdiff_t>(k) + 1, 0.0L);
        for (std::int64_t ks = 0; ks < k; ++ks) {
            const long double w = live[static_cast<std::size_t>(ks)];
            if (w == 0.0L) continue;
            next[static_cast<std::size_t>(ks) + 1] += w * lp;
            next[static_cast<std::size_t>(ks)] += w * (1.0L - lp);
        }
        std::swap(live, next);
        bool any_live = false;
        for (std::int64_t ks = 0; ks <= k; ++ks) {
            const long double w = live[static_cast<std::size_t>(ks)];
            if (w == 0.0L) continue;
            if (!stops(ks, k)) {
                any_live = true;
                continue;
            }
            ConfidenceInterval iv;
            if (method == SequentialMethod::clopper_pearson_plan)
                iv = clopper_pearson_interval(BinomialObservation(ks, k), gamma);
            else
                iv = wald_interval(BinomialObservation(ks, k), gamma);
            out.points.push_back({ks, k, static_cast<double>(w), iv.lower, iv.upper});
            live[static_cast<std::size_t>(ks)] = 0.0L;
        }
        if (!any_live) break;
    }

    long double residual = 0.0L;
    for (std::int64_t ks = 0; ks <= k_max; ++ks) residual += live[static_cast<std::size_t>(ks)];
    out.residual = static_cast<double>(residual);
    out.truncated = out.residual > StoppingBoundary::residual_warning_threshold;
    return out;
}

struct SequentialCoverageResult {
    double coverage = 0.0;
    double expected_samples = 0.0;
    double residual = 0.0;
    bool truncated = false;
};

/// Coverage and expected sample count of a sequential method at p, both
/// over the stopped mass only; the residual is the explicit error band.
inline SequentialCoverageResult sequential_coverage_and_cost(SequentialMethod method, double eps,
                                                             double gamma, double p, std::int64_t k_max,
                                                             std::int64_t min_k = 10) {
    const StoppingBoundary boundary = stopping_boundary(method, eps, gamma, p, k_max, min_k);
    detail::KahanSum cov, samples;
    for (const StoppingPoint& pt : boundary.points) {
        if (pt.lower <= p && p <= pt.upper) cov.add(pt.reach_prob);
        samples.add(pt.reach_prob * static_cast<double>(pt.trials));
    }
    return {cov.total, samples.total, boundary.residual, boundary.truncated};
}

/// Coverage and expected samples of a sequential method over a grid.
inline CoverageCurve sequential_coverage_curve(SequentialMethod method, double eps, double gamma,
                                               std::int64_t grid_points = 99, std::int64_t k_max = 5000,
                                               std::int64_t min_k = 10, int workers = 1) {
    CoverageCurve curve;
    curve.method = method == SequentialMethod::chow_robbins ? Method::chow_robbins
                                                            : Method::clopper_pearson;
    curve.eps = eps;
    curve.gamma = gamma;
    curve.grid = interior_grid(grid_points);
    curve.coverage.assign(curve.grid.size(), 0.0);
    curve.expected_samples.assign(curve.grid.size(), 0.0);
    curve.residual.assign(curve.grid.size(), 0.0);
    detail::parallel_chunks(curve.grid.size(), workers, [&](std::size_t first, std::size_t last) {
        for (std::size_t g = first; g < last; ++g) {
            const auto r = sequential_coverage_and_cost(method, eps, gamma, curve.grid[g], k_max, min_k);
            curve.coverage[g] = r.coverage;
            curve.expected_samples[g] = r.expected_samples;
            curve.residual[g] = r.residual;
        }
    });
    return curve;
}

struct EmpiricalCoverageResult {
    double estimate = 0.0;        // fraction of repetitions whose interval covered the reference
    std::int64_t misses = 0;
    std::int64_t repetitions = 0;
    ConfidenceInterval meta;      // Clopper-Pearson interval around the estimate
};

/// Empirical coverage test: run m independent fixed-k analyses, count how
/// often the produced interval misses the caller-supplied reference, and
/// wrap the estimate in a Clopper-Pearson meta-interval. Repetition j
/// draws from substream block run_offset + j*k.
inline EmpiricalCoverageResult empirical_coverage(const Dtmc& model, const PropertySpec& prop,
                                                  const IntervalProducer& producer, double gamma,
                                                  std::size_t k, std::size_t m, double reference,
                                                  const RunConfig& cfg) {
    if (m < 1) throw std::invalid_argument("empirical coverage needs m >= 1");
    const PreparedProperty prepared(model, prop);
    std::vector<std::uint8_t> covered(m, 0);
    detail::parallel_chunks(m, cfg.workers, [&](std::size_t first, std::size_t last) {
        for (std::size_t rep = first; rep < last; ++rep) {
            RunConfig rep_cfg = cfg;
            rep_cfg.workers = 1;
            rep_cfg.run_offset = cfg.run_offset + rep * k;
            const SampleBatch batch = run_batch(model, prepared, k, rep_cfg);
            covered[rep] = producer(batch).contains(reference) ? 1 : 0;
        }
    });
    EmpiricalCoverageResult out;
    out.repetitions = static_cast<std::int64_t>(m);
    std::int64_t hits = 0;
    for (std::uint8_t c : covered) hits += c;
    out.misses = out.repetitions - hits;
    out.estimate = static_cast<double>(hits) / static_cast<double>(m);
    out.meta = clopper_pearson_interval(BinomialObservation(hits, out.repetitions), gamma);
    return out;
}

// ---- CSV emission ----------------------------------------------------

namespace csv {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline void write_fixed_curve(std::ostream& os, const CoverageCurve& curve) {
    const bool with_width = !curve.expected_width.empty();
    os << (with_width ? "p,coverage,expected_width\n" : "p,coverage\n");
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
        os << fmt(curve.grid[i]) << ',' << fmt(curve.coverage[i]);
        if (with_width) os << ',' << fmt(curve.expected_width[i]);
        os << '\n';
    }
}

inline void write_sequential_curve(std::ostream& os, const CoverageCurve& curve) {
    os << "p,coverage,expected_samples,residual\n";
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
        os << fmt(curve.grid[i]) << ',' << fmt(curve.coverage[i]) << ','
           << fmt(curve.expected_samples[i]) << ',' << fmt(curve.residual[i]) << '\n';
    }
}

inline void write_empirical_header(std::ostream& os) {
    os << "model,property,method,k,m,estimate,meta_lo,meta_hi\n";
}

inline void write_empirical_row(std::ostream& os, const std::string& model, const std::string& property,
                                const std::string& method, std::size_t k,
                                const EmpiricalCoverageResult& r) {
    os << model << ',' << property << ',' << method << ',' << k << ',' << r.repetitions << ','
       << fmt(r.estimate) << ',' << fmt(r.meta.lower) << ',' << fmt(r.meta.upper) << '\n';
}

}  // namespace csv

}  // namespace soundmc
