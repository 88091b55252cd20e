#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdint>
#include <memory>
#include <vector>

#include "soundmc/rng.hpp"
#include "soundmc/sequential.hpp"

using namespace soundmc;
using Catch::Approx;

namespace {

SampleStream constant_stream(double v) {
    return [v]() -> std::optional<double> { return v; };
}

SampleStream bernoulli_stream(double p, std::uint64_t seed) {
    auto rng = std::make_shared<RandomStream>(RandomStream::substream(seed, 0));
    return [p, rng]() -> std::optional<double> { return rng->next_unit() < p ? 1.0 : 0.0; };
}

SampleStream vector_stream(std::vector<double> values) {
    auto at = std::make_shared<std::size_t>(0);
    auto data = std::make_shared<std::vector<double>>(std::move(values));
    return [at, data]() -> std::optional<double> {
        if (*at >= data->size()) return std::nullopt;
        return (*data)[(*at)++];
    };
}

// counts how many values were handed out
SampleStream counting_stream(SampleStream inner, std::shared_ptr<std::int64_t> count) {
    return [inner = std::move(inner), count]() mutable {
        auto v = inner();
        if (v) ++*count;
        return v;
    };
}

}  // namespace

TEST_CASE("chow-robbins stops at min_k on a zero-variance stream") {
    auto stream = constant_stream(0.0);
    const auto r = chow_robbins_estimate(stream, 0.01, 0.9, 2);
    CHECK(r.samples == 2);
    CHECK(r.interval.lower == 0.0);
    CHECK(r.interval.upper == 0.0);
    CHECK_FALSE(r.interval.sound);
}

TEST_CASE("chow-robbins stops immediately once the target exceeds any possible width") {
    auto stream = bernoulli_stream(0.5, 7);
    const auto r = chow_robbins_estimate(stream, 0.5, 0.9, 10);
    CHECK(r.samples == 10);
}

TEST_CASE("chow-robbins median stopping point on a fair coin") {
    // asymptotically z^2 p(1-p)/eps^2 = 1.6449^2 * 0.25 / 0.0025, about 271
    std::vector<std::int64_t> stops;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        auto stream = bernoulli_stream(0.5, seed);
        stops.push_back(chow_robbins_estimate(stream, 0.05, 0.9, 10).samples);
    }
    std::sort(stops.begin(), stops.end());
    const double median = static_cast<double>(stops[500]);
    CHECK(median > 271.0 * 0.85);
    CHECK(median < 271.0 * 1.15);
}

TEST_CASE("chow-robbins sample count is nondecreasing as eps shrinks") {
    std::vector<double> prefix;
    auto gen = bernoulli_stream(0.37, 123);
    for (int i = 0; i < 20000; ++i) prefix.push_back(*gen());
    std::int64_t last = 0;
    for (double eps : {0.1, 0.05, 0.02, 0.01}) {
        auto stream = vector_stream(prefix);
        const auto r = chow_robbins_estimate(stream, eps, 0.9, 10);
        CHECK(r.samples >= last);
        last = r.samples;
    }
}

TEST_CASE("chow-robbins reports stream exhaustion") {
    auto stream = vector_stream({1.0, 0.0, 1.0});
    CHECK_THROWS_AS(chow_robbins_estimate(stream, 0.001, 0.99, 10), StreamExhausted);
}

TEST_CASE("sequential clopper-pearson draws exactly the planned count") {
    auto drawn = std::make_shared<std::int64_t>(0);
    auto stream = counting_stream(bernoulli_stream(0.3, 3), drawn);
    const auto r = sequential_cp_plan_and_run(stream, 0.05, 0.9);
    CHECK(r.samples == 289);
    CHECK(*drawn == 289);
    CHECK(r.interval.sound);
    CHECK(r.interval.width() <= 0.1);
}

TEST_CASE("sequential clopper-pearson width holds at the boundary") {
    auto zeros = constant_stream(0.0);
    const auto r = sequential_cp_plan_and_run(zeros, 0.05, 0.9);
    CHECK(r.interval.lower == 0.0);
    CHECK(r.interval.upper <= 0.1);

    // the planned count is safe for every possible success count
    const std::int64_t plan = cp_worst_case_sample_size(0.05, 0.9);
    for (std::int64_t ks = 0; ks <= plan; ++ks)
        CHECK(clopper_pearson_interval(BinomialObservation(ks, plan), 0.9).width() <= 0.1 + 1e-12);
}

TEST_CASE("sequential clopper-pearson rejects non-bernoulli streams") {
    auto stream = constant_stream(0.5);
    CHECK_THROWS_AS(sequential_cp_plan_and_run(stream, 0.1, 0.9), std::invalid_argument);
}

TEST_CASE("sprt decides quickly on extreme streams") {
    // all successes: per-sample log-ratio log(0.6/0.4), threshold log(19)
    auto yes_stream = constant_stream(1.0);
    const auto yes = sprt(yes_stream, 0.5, 0.1, 0.05, 0.05);
    CHECK(yes.decision == SprtDecision::yes);
    CHECK(yes.samples <= 8);

    auto no_stream = constant_stream(0.0);
    const auto no = sprt(no_stream, 0.5, 0.1, 0.05, 0.05);
    CHECK(no.decision == SprtDecision::no);
    CHECK(no.samples == yes.samples);  // symmetric thresholds and steps
}

TEST_CASE("sprt never reads past its stopping point") {
    auto drawn = std::make_shared<std::int64_t>(0);
    auto stream = counting_stream(bernoulli_stream(0.8, 17), drawn);
    const auto r = sprt(stream, 0.5, 0.1, 0.05, 0.05);
    CHECK(*drawn == r.samples);
}

TEST_CASE("sprt error rate at the indifference boundary stays within beta") {
    // true p at the upper hypothesis: answering "no" is the error
    std::int64_t wrong = 0;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        auto stream = bernoulli_stream(0.6, 1000 + seed);
        if (sprt(stream, 0.5, 0.1, 0.05, 0.05).decision == SprtDecision::no) ++wrong;
    }
    CHECK(static_cast<double>(wrong) / 10000.0 <= 0.05);
}

TEST_CASE("sprt parameter validation") {
    auto stream = constant_stream(1.0);
    CHECK_THROWS_AS(sprt(stream, 0.05, 0.1, 0.05, 0.05), std::invalid_argument);
    CHECK_THROWS_AS(sprt(stream, 0.95, 0.1, 0.05, 0.05), std::invalid_argument);
    CHECK_THROWS_AS(sprt(stream, 0.5, 0.1, 0.0, 0.05), std::invalid_argument);
}
