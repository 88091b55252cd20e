#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "soundmc/binomial_ci.hpp"
#include "soundmc/bounded_mean.hpp"
#include "soundmc/rng.hpp"

using namespace soundmc;
using Catch::Approx;

namespace {

SampleBatch batch(std::vector<double> v) { return SampleBatch(std::move(v)); }

SampleBatch random_batch(RandomStream& rng, std::size_t k, double lo, double hi) {
    std::vector<double> v(k);
    for (double& x : v) x = lo + (hi - lo) * rng.next_unit();
    return SampleBatch(std::move(v));
}

}  // namespace

TEST_CASE("normal interval") {
    const auto flat = normal_interval(batch({3.0, 3.0, 3.0}), 0.95);
    CHECK(flat.lower == 3.0);
    CHECK(flat.upper == 3.0);
    CHECK_FALSE(flat.sound);

    const auto iv = normal_interval(batch({0.0, 1.0, 0.0, 1.0}), 0.9);
    CHECK(iv.lower == Approx(0.02517165785101766).epsilon(1e-9));
    CHECK(iv.upper == Approx(0.9748283421489823).epsilon(1e-9));

    CHECK_THROWS_AS(normal_interval(batch({1.0}), 0.9), std::invalid_argument);
}

TEST_CASE("student-t interval is strictly wider than the normal one") {
    const auto t = student_t_interval(batch({0.0, 1.0, 0.0, 1.0}), 0.9);
    CHECK(t.upper - t.midpoint() == Approx(0.6793575062919284).epsilon(1e-9));

    RandomStream rng(5);
    for (int rep = 0; rep < 50; ++rep) {
        const auto b = random_batch(rng, 2 + rng.next_u64() % 40, 0.0, 7.0);
        const double gamma = 0.5 + 0.49 * rng.next_unit();
        const auto n = normal_interval(b, gamma);
        const auto t2 = student_t_interval(b, gamma);
        if (b.variance() == 0.0) continue;
        CHECK(t2.lower < n.lower);
        CHECK(t2.upper > n.upper);
    }
    CHECK(student_t_interval(batch({2.0, 2.0}), 0.9).width() == 0.0);
}

TEST_CASE("hoeffding on [0,1] reduces to the okamoto interval") {
    RandomStream rng(9);
    for (int rep = 0; rep < 50; ++rep) {
        const auto k = static_cast<std::int64_t>(1 + rng.next_u64() % 100);
        std::vector<double> v(static_cast<std::size_t>(k));
        std::int64_t ones = 0;
        for (double& x : v) {
            x = rng.next_unit() < 0.4 ? 1.0 : 0.0;
            ones += x == 1.0;
        }
        const auto h = hoeffding_interval(SampleBatch(std::move(v)), SupportBounds(0.0, 1.0), 0.9);
        const auto o = okamoto_interval(BinomialObservation(ones, k), 0.9);
        CHECK(h.lower == Approx(o.lower).margin(1e-12));
        CHECK(h.upper == Approx(o.upper).margin(1e-12));
    }
}

TEST_CASE("hoeffding width scales with the support and sample count") {
    // ln(2/delta)/(2k) = 0.01 at k=100, delta = 2*exp(-2)
    const double gamma = 1.0 - 2.0 * std::exp(-2.0);
    const auto iv = hoeffding_interval(batch(std::vector<double>(100, 5.0)), SupportBounds(0.0, 10.0), gamma);
    CHECK(iv.lower == Approx(4.0).epsilon(1e-12));
    CHECK(iv.upper == Approx(6.0).epsilon(1e-12));
    CHECK(iv.sound);

    CHECK(hoeffding_half_width(400, SupportBounds(0.0, 1.0), 0.9) ==
          Approx(hoeffding_half_width(100, SupportBounds(0.0, 1.0), 0.9) / 2.0).epsilon(1e-14));

    CHECK_THROWS_AS(hoeffding_interval(batch({2.0}), SupportBounds(0.0, 1.0), 0.9),
                    std::invalid_argument);
}

TEST_CASE("hoeffding sample sizes") {
    CHECK(hoeffding_sample_size(0.05, SupportBounds(0.0, 1.0), 0.9) == 600);
    CHECK(hoeffding_sample_size(0.01, SupportBounds(0.0, 1.0), 0.95) == 18445);
    // doubling the support range quadruples the requirement, up to the ceiling
    const std::int64_t narrow = hoeffding_sample_size(0.05, SupportBounds(0.0, 1.0), 0.9);
    const std::int64_t wide = hoeffding_sample_size(0.05, SupportBounds(0.0, 2.0), 0.9);
    CHECK(wide <= 4 * narrow);
    CHECK(wide >= 4 * narrow - 4);
}

TEST_CASE("dkw band geometry") {
    CHECK(dkw_half_width(500, 0.95) == Approx(0.060736146190830516).epsilon(1e-12));

    const auto band = dkw_band(batch({1.0, 3.0, 2.0}), 0.9);
    CHECK(band.empirical_cdf(0.5) == 0.0);
    CHECK(band.empirical_cdf(1.0) == Approx(1.0 / 3.0));
    CHECK(band.empirical_cdf(2.5) == Approx(2.0 / 3.0));
    CHECK(band.empirical_cdf(3.0) == 1.0);
    CHECK(band.envelope_upper(2.5) == Approx(std::min(1.0, 2.0 / 3.0 + band.half_width())));
    CHECK(band.envelope_lower(2.5) == Approx(std::max(0.0, 2.0 / 3.0 - band.half_width())));

    // single sample: the empirical cdf steps from 0 to 1 at the value
    const auto single = dkw_band(batch({4.0}), 0.95);
    CHECK(single.empirical_cdf(3.999) == 0.0);
    CHECK(single.empirical_cdf(4.0) == 1.0);
    CHECK(single.vacuous());  // chi_1 > 1 at gamma = 0.95
    CHECK(single.envelope_upper(0.0) == 1.0);
    CHECK(single.envelope_lower(100.0) == 0.0);
}

TEST_CASE("band envelopes are monotone step functions bracketing the empirical cdf") {
    RandomStream rng(13);
    const auto b = random_batch(rng, 60, 0.0, 5.0);
    const auto band = dkw_band(b, 0.9);
    double prev_hi = 0.0, prev_lo = 0.0;
    for (double x = -0.5; x <= 5.5; x += 0.05) {
        const double hi = band.envelope_upper(x);
        const double lo = band.envelope_lower(x);
        CHECK(hi >= prev_hi - 1e-15);
        CHECK(lo >= prev_lo - 1e-15);
        CHECK(lo <= band.empirical_cdf(x));
        CHECK(band.empirical_cdf(x) <= hi);
        prev_hi = hi;
        prev_lo = lo;
    }
}

TEST_CASE("dkw mean bounds: all-equal closed form") {
    // with every sample at x the bounds are x - chi(x-a) and x + chi(b-x)
    const double gamma = 0.9;
    const SupportBounds support(0.0, 10.0);
    const auto b = batch(std::vector<double>(50, 4.0));
    const double chi = dkw_half_width(50, gamma);
    const auto iv = dkw_mean_bounds(b, support, gamma);
    CHECK(iv.lower == Approx(4.0 - chi * 4.0).epsilon(1e-12));
    CHECK(iv.upper == Approx(4.0 + chi * 6.0).epsilon(1e-12));
    CHECK(iv.sound);

    // exactly half the hoeffding width
    const auto h = hoeffding_interval(b, support, gamma);
    CHECK((h.width() / iv.width()) == Approx(2.0).epsilon(1e-12));
}

TEST_CASE("dkw mean bounds: boundary-only samples coincide with hoeffding") {
    const double gamma = 0.9;
    const SupportBounds support(0.0, 1.0);
    std::vector<double> v(40, 0.0);
    for (std::size_t i = 0; i < 15; ++i) v[i] = 1.0;
    const SampleBatch b(std::move(v));
    const auto d = dkw_mean_bounds(b, support, gamma);
    const auto h = hoeffding_interval(b, support, gamma);
    CHECK(d.lower == Approx(h.lower).margin(1e-12));
    CHECK(d.upper == Approx(h.upper).margin(1e-12));
}

TEST_CASE("dkw interval is always contained in the hoeffding interval") {
    RandomStream rng(17);
    for (int rep = 0; rep < 500; ++rep) {
        const double a = 10.0 * rng.next_unit();
        const double b_hi = a + 0.5 + 10.0 * rng.next_unit();
        const auto k = 1 + rng.next_u64() % 200;
        const double gamma = 0.5 + 0.499 * rng.next_unit();
        const SupportBounds support(a, b_hi);
        const auto s = random_batch(rng, k, a, b_hi);
        const auto d = dkw_mean_bounds(s, support, gamma);
        const auto h = hoeffding_interval(s, support, gamma);
        CHECK(h.lower <= d.lower + 1e-12);
        CHECK(d.upper <= h.upper + 1e-12);
        CHECK(d.lower < d.upper);
        CHECK((h.width() / d.width()) <= 2.0 + 1e-12);
        CHECK(d.lower <= s.mean() + 1e-12);
        CHECK(s.mean() <= d.upper + 1e-12);
    }
}

TEST_CASE("order-statistics bounds equal envelope tail integrals") {
    // independent route: E = integral of (1 - cdf) over [0, b] for the
    // band's extreme cdfs, evaluated exactly on the step structure
    auto integrate_tail = [](const DkwBand& band, double hi, bool upper_envelope) {
        std::vector<double> cuts{0.0};
        for (double v : band.sorted_values())
            if (v < hi) cuts.push_back(v);
        cuts.push_back(hi);
        double total = 0.0;
        for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
            const double cdf =
                upper_envelope ? band.envelope_upper(cuts[j]) : band.envelope_lower(cuts[j]);
            total += (cuts[j + 1] - cuts[j]) * (1.0 - cdf);
        }
        return total;
    };

    RandomStream rng(29);
    for (int rep = 0; rep < 200; ++rep) {
        const double b_hi = 1.0 + 20.0 * rng.next_unit();
        const auto k = 1 + rng.next_u64() % 120;
        const double gamma = 0.5 + 0.45 * rng.next_unit();
        const auto s = random_batch(rng, k, 0.0, b_hi);
        const auto band = dkw_band(s, gamma);
        if (band.vacuous()) continue;
        const auto iv = dkw_mean_bounds(s, SupportBounds(0.0, b_hi), gamma);
        CHECK(iv.lower == Approx(integrate_tail(band, s.max_value(), true)).margin(1e-9));
        CHECK(iv.upper == Approx(integrate_tail(band, b_hi, false)).margin(1e-9));
    }
}

TEST_CASE("dkw lower bound ignores b; upper bound ignores a") {
    RandomStream rng(19);
    const auto s = random_batch(rng, 80, 2.0, 6.0);
    const auto base = dkw_mean_bounds(s, SupportBounds(1.0, 7.0), 0.9);
    const auto wider_b = dkw_mean_bounds(s, SupportBounds(1.0, 70.0), 0.9);
    const auto wider_a = dkw_mean_bounds(s, SupportBounds(-10.0, 7.0), 0.9);
    CHECK(base.lower == wider_b.lower);
    CHECK(base.upper == wider_a.upper);
}

TEST_CASE("vacuous band returns the trivial support interval") {
    const auto iv = dkw_mean_bounds(batch({5.0}), SupportBounds(0.0, 8.0), 0.95);
    CHECK(iv.lower == 0.0);
    CHECK(iv.upper == 8.0);
    CHECK(dkw_e_lower(batch({10.0}), 0.95) == 0.0);
}

TEST_CASE("dkw-e-lower equals the dkw lower bound with floor zero") {
    CHECK(dkw_e_lower(batch(std::vector<double>(20, 0.0)), 0.9) == 0.0);

    RandomStream rng(23);
    for (int rep = 0; rep < 100; ++rep) {
        const auto s = random_batch(rng, 5 + rng.next_u64() % 100, 0.0, 30.0);
        const double gamma = 0.5 + 0.45 * rng.next_unit();
        if (dkw_half_width(static_cast<std::int64_t>(s.count()), gamma) >= 1.0) continue;
        const double lb = dkw_e_lower(s, gamma);
        const auto iv = dkw_mean_bounds(s, SupportBounds(0.0, s.max_value()), gamma);
        CHECK(lb == Approx(iv.lower).margin(1e-12));
        CHECK(lb <= s.mean());
        CHECK(lb >= 0.0);
    }
    CHECK_THROWS_AS(dkw_e_lower(batch({}), 0.9), std::invalid_argument);
}

TEST_CASE("shifting samples onto the nonnegative orthant") {
    const std::vector<double> identity{0.5, 2.0};
    CHECK(shift_for_known_bound(identity, 0.0, KnownBoundSide::lower).values() == identity);

    const std::vector<double> translated{3.0, 5.0};
    CHECK(shift_for_known_bound(translated, 3.0, KnownBoundSide::lower).values() ==
          std::vector<double>{0.0, 2.0});

    const std::vector<double> reflected{-1.0, -4.0};
    CHECK(shift_for_known_bound(reflected, 0.0, KnownBoundSide::upper).values() ==
          std::vector<double>{1.0, 4.0});

    CHECK_THROWS_AS(shift_for_known_bound(std::vector<double>{1.0}, 2.0, KnownBoundSide::lower),
                    std::invalid_argument);
    CHECK_THROWS_AS(shift_for_known_bound(std::vector<double>{3.0}, 2.0, KnownBoundSide::upper),
                    std::invalid_argument);
}
