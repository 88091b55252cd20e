#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <thread>

#include "soundmc/dtmc.hpp"
#include "soundmc/simulate.hpp"

using namespace soundmc;
using Catch::Approx;

namespace {

PropertySpec prop(PropertyKind kind, std::string goal = "", std::optional<std::int64_t> bound = {}) {
    return PropertySpec{kind, std::move(goal), bound};
}

}  // namespace

TEST_CASE("reaching a certain goal always yields 1") {
    const Dtmc m = generate_builtin("fig2", std::vector<double>{1000, 1});
    RunConfig cfg;
    cfg.seed = 3;
    const SampleBatch b = run_batch(m, prop(PropertyKind::p_reach, "goal"), 200, cfg);
    for (double v : b.values()) CHECK(v == 1.0);
}

TEST_CASE("loop-or-advance reach rewards have geometric support and mean near 2") {
    const Dtmc m = generate_builtin("fig3", {});
    RunConfig cfg;
    cfg.seed = 17;
    cfg.workers = 4;
    const SampleBatch b = run_batch(m, prop(PropertyKind::e_reach, "goal"), 100000, cfg);
    std::set<double> support;
    for (double v : b.values()) {
        CHECK(v >= 1.0);
        CHECK(v == std::floor(v));
        support.insert(v);
    }
    CHECK(support.count(1.0) == 1);
    CHECK(support.count(2.0) == 1);
    CHECK(b.mean() == Approx(2.0).margin(0.05));
}

TEST_CASE("deterministic chain cumulative rewards count entered states") {
    // two transient states entered plus the zero-reward goal
    const Dtmc two = generate_builtin("chain", std::vector<double>{2, 1.0});
    RunConfig cfg;
    const SampleBatch b = run_batch(two, prop(PropertyKind::e_cumulative, "", 2), 16, cfg);
    for (double v : b.values()) CHECK(v == 2.0);

    // one more transient state in the line adds one more unit of reward
    const Dtmc three = generate_builtin("chain", std::vector<double>{3, 1.0});
    const SampleBatch b3 = run_batch(three, prop(PropertyKind::e_cumulative, "", 2), 16, cfg);
    for (double v : b3.values()) CHECK(v == 3.0);

    // absorbing state rewards keep accumulating up to the step bound
    const Dtmc late = generate_builtin("chain", std::vector<double>{1, 1.0});
    const SampleBatch bl = run_batch(late, prop(PropertyKind::e_cumulative, "", 5), 4, cfg);
    for (double v : bl.values()) CHECK(v == 1.0);
}

TEST_CASE("identical configs give identical batches, independent of workers") {
    const Dtmc m = generate_builtin("fig3", {});
    RunConfig one;
    one.seed = 99;
    one.workers = 1;
    RunConfig eight = one;
    eight.workers = 8;
    const SampleBatch a = run_batch(m, prop(PropertyKind::e_reach, "goal"), 5000, one);
    const SampleBatch b = run_batch(m, prop(PropertyKind::e_reach, "goal"), 5000, eight);
    const SampleBatch c = run_batch(m, prop(PropertyKind::e_reach, "goal"), 5000, one);
    REQUIRE(a.values() == b.values());
    REQUIRE(a.values() == c.values());

    RunConfig other = one;
    other.seed = 100;
    const SampleBatch d = run_batch(m, prop(PropertyKind::e_reach, "goal"), 5000, other);
    CHECK(a.values() != d.values());
}

TEST_CASE("a batch of one") {
    const Dtmc m = generate_builtin("fig3", {});
    RunConfig cfg;
    const SampleBatch b = run_batch(m, prop(PropertyKind::p_reach, "goal"), 1, cfg);
    CHECK(b.count() == 1);
    CHECK(b.values()[0] == 1.0);
}

TEST_CASE("probability samples are indicators") {
    const Dtmc m = generate_builtin("chain", std::vector<double>{2, 0.4});
    RunConfig cfg;
    cfg.seed = 5;
    const SampleBatch b = run_batch(m, prop(PropertyKind::p_reach_bounded, "goal", 3), 2000, cfg);
    int ones = 0;
    for (double v : b.values()) {
        REQUIRE((v == 0.0 || v == 1.0));
        ones += v == 1.0;
    }
    CHECK(ones > 0);
    CHECK(ones < 2000);
}

TEST_CASE("bounded cumulative samples never exceed (c+1) * rmax") {
    RandomStream rng(21);
    for (int rep = 0; rep < 20; ++rep) {
        const auto len = static_cast<std::int64_t>(2 + rng.next_u64() % 5);
        const double p = 0.2 + 0.6 * rng.next_unit();
        const Dtmc m = generate_builtin("chain", std::vector<double>{static_cast<double>(len), p});
        const std::int64_t c = static_cast<std::int64_t>(rng.next_u64() % 50);
        RunConfig cfg;
        cfg.seed = rep;
        const SampleBatch b = run_batch(m, prop(PropertyKind::e_cumulative, "", c), 500, cfg);
        const double cap = static_cast<double>(c + 1) * structural_bounds(m).rmax_bound;
        for (double v : b.values()) CHECK(v <= cap);
    }
}

TEST_CASE("instantaneous kinds read a single state reward") {
    const Dtmc m = generate_builtin("fig2", std::vector<double>{4, 2.5});
    RunConfig cfg;
    cfg.seed = 8;
    const SampleBatch at0 = run_batch(m, prop(PropertyKind::e_instant, "", 0), 32, cfg);
    for (double v : at0.values()) CHECK(v == 0.0);  // initial state reward

    const SampleBatch at1 = run_batch(m, prop(PropertyKind::e_instant, "", 1), 4096, cfg);
    const SampleBatch reach = run_batch(m, prop(PropertyKind::e_reach_instant, "goal"), 4096, cfg);
    for (const SampleBatch* b : {&at1, &reach})
        for (double v : b->values()) REQUIRE((v == 0.0 || v == 10.0));
    CHECK(at1.values() == reach.values());  // same walk, same stream
    // the expected instantaneous reach reward is c: (1/n) * c*n
    CHECK(reach.mean() == Approx(2.5).margin(0.5));
}

TEST_CASE("a non-goal trap surfaces as a simulation error with the run index") {
    // branch to a goal or to a non-goal sink; reach rewards require the
    // goal to be hit with probability 1, so the sink must raise an error
    Dtmc m(3, 0, {{0, 1, 0.5}, {0, 2, 0.5}, {1, 1, 1.0}, {2, 2, 1.0}}, {0.0, 0.0, 0.0},
           {{"left", {1}}});
    RunConfig cfg;
    cfg.seed = 1;

    // unbounded reachability probability handles the same sink fine: the
    // run ends on any absorbing state and reports goal membership
    const SampleBatch reach = run_batch(m, prop(PropertyKind::p_reach, "left"), 4096, cfg);
    for (double v : reach.values()) REQUIRE((v == 0.0 || v == 1.0));
    CHECK(reach.mean() == Approx(0.5).margin(0.05));
    try {
        run_batch(m, prop(PropertyKind::e_reach, "left"), 64, cfg);
        FAIL("expected a simulation error");
    } catch (const SimulationCapError& e) {
        CHECK(std::string(e.what()).find("run ") != std::string::npos);
        CHECK(std::string(e.what()).find("absorbed in non-goal state") != std::string::npos);
    }
}

TEST_CASE("step cap on a model that never absorbs") {
    // two states cycling forever; no BSCC is a singleton, violating the
    // stopping assumption for unbounded reachability
    Dtmc m(2, 0, {{0, 1, 1.0}, {1, 0, 1.0}}, {0.0, 0.0}, {{"goal", {}}});
    PreparedProperty p(m, prop(PropertyKind::p_reach, "goal"));
    RandomStream rng = RandomStream::substream(0, 0);
    CHECK_THROWS_AS(sample_path_value(m, p, rng, 1000), SimulationCapError);
}

TEST_CASE("missing goal label fails before any sampling") {
    const Dtmc m = generate_builtin("fig3", {});
    RunConfig cfg;
    CHECK_THROWS_AS(run_batch(m, prop(PropertyKind::p_reach, "nope"), 8, cfg), ValidationError);
}

TEST_CASE("a step cap below the property bound is rejected up front") {
    const Dtmc m = generate_builtin("chain", std::vector<double>{2, 0.5});
    RunConfig cfg;
    cfg.max_steps = 10;
    CHECK_THROWS_AS(run_batch(m, prop(PropertyKind::e_cumulative, "", 11), 4, cfg),
                    std::invalid_argument);
    CHECK_NOTHROW(run_batch(m, prop(PropertyKind::e_cumulative, "", 10), 4, cfg));
}

TEST_CASE("batch statistics and merge order-insensitivity") {
    const SampleBatch a(std::vector<double>{1.0, 2.0, 3.0});
    const SampleBatch b(std::vector<double>{0.0, 10.0});
    CHECK(a.sum() == Approx(6.0).epsilon(1e-12));
    CHECK(a.sum_squares() == Approx(14.0).epsilon(1e-12));
    CHECK(a.mean() == Approx(2.0));
    CHECK(a.variance() == Approx(1.0));
    CHECK(a.sorted() == std::vector<double>{1.0, 2.0, 3.0});

    const SampleBatch ab = SampleBatch::merged(a, b);
    const SampleBatch ba = SampleBatch::merged(b, a);
    CHECK(ab.count() == 5);
    CHECK(ab.count() == ba.count());
    CHECK(ab.sum() == Approx(ba.sum()).epsilon(1e-12));
    CHECK(ab.sum_squares() == Approx(ba.sum_squares()).epsilon(1e-12));
    CHECK(ab.sorted() == ba.sorted());

    CHECK_THROWS_AS(SampleBatch(std::vector<double>{-0.5}), ValidationError);
}

TEST_CASE("the sorted view is built once and is safe under concurrent readers") {
    std::vector<double> v(20000);
    RandomStream rng(3);
    for (double& x : v) x = 100.0 * rng.next_unit();
    const SampleBatch b(std::move(v));
    std::vector<std::thread> readers;
    std::atomic<int> mismatches{0};
    for (int t = 0; t < 8; ++t) {
        readers.emplace_back([&] {
            const auto& s = b.sorted();
            if (!std::is_sorted(s.begin(), s.end()) || s.size() != b.count()) ++mismatches;
        });
    }
    for (auto& t : readers) t.join();
    CHECK(mismatches.load() == 0);
}

TEST_CASE("cached moments stay consistent with the raw values") {
    const Dtmc m = generate_builtin("fig3", {});
    RunConfig cfg;
    cfg.seed = 12;
    const SampleBatch b = run_batch(m, prop(PropertyKind::e_reach, "goal"), 10000, cfg);
    double sum = 0.0, sumsq = 0.0;
    for (double v : b.values()) {
        sum += v;
        sumsq += v * v;
    }
    CHECK(b.sum() == Approx(sum).epsilon(1e-9));
    CHECK(b.sum_squares() == Approx(sumsq).epsilon(1e-9));
}
