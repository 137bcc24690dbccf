#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "qdsps/correlator.hpp"
#include "qdsps/error.hpp"

using namespace qdsps;

namespace {

std::vector<std::int64_t> random_times(std::mt19937_64& rng, std::size_t n, std::int64_t horizon,
                                       std::int64_t parity)
{
    std::uniform_int_distribution<std::int64_t> pick(0, horizon / 2);
    std::vector<std::int64_t> t(n);
    for (auto& x : t) x = 2 * pick(rng) + parity;
    std::sort(t.begin(), t.end());
    return t;
}

std::vector<std::int64_t> poisson_times(std::mt19937_64& rng, double rate_per_ps,
                                        std::int64_t duration)
{
    std::exponential_distribution<double> gap(rate_per_ps);
    std::vector<std::int64_t> t;
    double now = gap(rng);
    while (now < static_cast<double>(duration)) {
        t.push_back(static_cast<std::int64_t>(now));
        now += gap(rng);
    }
    return t;
}

// Histogram with the given centre area and equal side peaks, each peak
// spread over the bins inside its window.
CorrelationHistogram synthetic_hist(std::uint64_t centre, std::uint64_t side)
{
    CorrelationHistogram h;
    h.bin_width_ps = 40;
    h.span_ps = 100000;
    h.counts.assign(5000, 0);
    const std::int64_t rep = 12480;
    for (int peak = -8; peak <= 8; ++peak) {
        const std::uint64_t n = peak == 0 ? centre : side;
        const std::int64_t pos = peak * rep;
        const auto k = static_cast<std::size_t>((pos + h.span_ps) / h.bin_width_ps);
        h.counts[k] += n;
    }
    return h;
}

} // namespace

TEST_CASE("sliding-window correlation equals the brute-force double loop")
{
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> size(0, 500);
    std::uniform_int_distribution<int> bins(1, 60);
    std::uniform_int_distribution<int> width(1, 50);
    for (int trial = 0; trial < 150; ++trial) {
        const std::int64_t bw = width(rng);
        const std::int64_t span = bw * bins(rng);
        const std::int64_t horizon = 20 * span + 100;
        const auto a = random_times(rng, size(rng), horizon, trial % 2);
        const auto b = random_times(rng, size(rng), horizon, (trial / 2) % 2);
        const CorrelationHistogram h = correlate(a, b, bw, span);
        const auto ref = oracle::brute_correlate(a, b, bw, span);
        REQUIRE(h.counts.size() == ref.size());
        CHECK(h.counts == ref);
        std::uint64_t total = 0;
        for (auto c : ref) total += c;
        CHECK(h.total_pairs == total);
    }
}

TEST_CASE("duplicate timestamps are counted like the brute force")
{
    const std::vector<std::int64_t> a{0, 0, 10, 10, 10, 50};
    const std::vector<std::int64_t> b{0, 10, 10, 45, 50, 50};
    CHECK(correlate(a, b, 5, 60).counts == oracle::brute_correlate(a, b, 5, 60));
}

TEST_CASE("swapping the streams mirrors the histogram")
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        // Even start times and odd stop times keep every delay off the bin edges.
        const auto a = random_times(rng, 800, 400000, 0);
        const auto b = random_times(rng, 800, 400000, 1);
        const auto ab = correlate(a, b, 20, 4000);
        const auto ba = correlate(b, a, 20, 4000);
        const std::size_t n = ab.size();
        for (std::size_t k = 0; k < n; ++k) CHECK(ab.counts[k] == ba.counts[n - 1 - k]);
    }
}

TEST_CASE("chunked correlation does not depend on the chunk count")
{
    std::mt19937_64 rng(77);
    const auto a = random_times(rng, 20000, 50000000, 0);
    const auto b = random_times(rng, 20000, 50000000, 1);
    const auto ref = correlate(a, b, 40, 100000);
    for (unsigned chunks : {1u, 2u, 3u, 7u, 16u, 50000u}) {
        const auto h = correlate_chunked(a, b, 40, 100000, chunks);
        CHECK(h.counts == ref.counts);
        CHECK(h.total_pairs == ref.total_pairs);
    }
    CHECK_THROWS_AS(correlate_chunked(a, b, 40, 100000, 0), ValidationError);
}

TEST_CASE("periodic combs correlate only at multiples of the period")
{
    const std::int64_t rep = 12480;
    std::vector<std::int64_t> comb;
    for (int k = 0; k < 2000; ++k) comb.push_back(rep + k * rep);
    const auto h = correlate(comb, comb, 40, 100000);
    for (std::size_t k = 0; k < h.size(); ++k) {
        const auto lo = static_cast<std::int64_t>(-h.span_ps + static_cast<std::int64_t>(k) * 40);
        bool holds_multiple = false;
        for (int m = -8; m <= 8; ++m) {
            const std::int64_t d = m * rep;
            if (d >= lo && d < lo + 40) holds_multiple = true;
        }
        if (holds_multiple) {
            CHECK(h.counts[k] > 0);
        } else {
            CHECK(h.counts[k] == 0);
        }
    }
}

TEST_CASE("independent Poisson streams give a flat histogram")
{
    std::mt19937_64 rng(31337);
    const std::int64_t duration = 2'000'000'000; // 2 ms
    const auto a = poisson_times(rng, 1e-6, duration);
    const auto b = poisson_times(rng, 1.5e-6, duration);
    const std::int64_t bw = 1000;
    const std::int64_t span = 100000;
    const auto h = correlate(a, b, bw, span);
    const double expected = static_cast<double>(a.size()) * static_cast<double>(b.size()) *
                            static_cast<double>(bw) / static_cast<double>(duration);
    for (auto c : h.counts) {
        CHECK(std::abs(static_cast<double>(c) - expected) < 5.0 * std::sqrt(expected));
    }
}

TEST_CASE("invalid correlation requests are rejected")
{
    const std::vector<std::int64_t> sorted{1, 2, 3};
    const std::vector<std::int64_t> unsorted{3, 1, 2};
    CHECK_THROWS_AS(correlate(unsorted, sorted, 1, 10), ValidationError);
    CHECK_THROWS_AS(correlate(sorted, unsorted, 1, 10), ValidationError);
    CHECK_THROWS_AS(correlate(sorted, sorted, 0, 10), ValidationError);
    CHECK_THROWS_AS(correlate(sorted, sorted, 3, 10), ValidationError);
}

TEST_CASE("correlation throughput")
{
    // 10^7 tags over a 200 ns span, single thread.
    std::mt19937_64 rng(1);
    std::bernoulli_distribution click(0.4);
    std::normal_distribution<double> jitter(0.0, 50.0);
    std::vector<std::int64_t> a, b;
    a.reserve(5'100'000);
    b.reserve(5'100'000);
    for (std::int64_t pulse = 1; a.size() + b.size() < 10'000'000; ++pulse) {
        const std::int64_t t = pulse * 12480;
        if (click(rng)) a.push_back(t + static_cast<std::int64_t>(std::abs(jitter(rng))));
        if (click(rng)) b.push_back(t + static_cast<std::int64_t>(std::abs(jitter(rng))));
    }
    const auto start = std::chrono::steady_clock::now();
    const auto h = correlate(a, b, 40, 200000);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    MESSAGE("correlated " << a.size() + b.size() << " tags in " << seconds << " s");
    CHECK(h.total_pairs > 0);
    CHECK(seconds < 10.0);
}

TEST_CASE("g2 estimator")
{
    SUBCASE("empty centre peak")
    {
        const Estimate g = g2_zero(synthetic_hist(0, 1000), PeakWindows::for_period(12480));
        CHECK(g.value == 0.0);
        CHECK(g.error > 0.0);
    }
    SUBCASE("Poisson error propagation")
    {
        const Estimate g = g2_zero(synthetic_hist(100, 1000), PeakWindows::for_period(12480));
        CHECK(g.value == doctest::Approx(0.1));
        CHECK(g.error == doctest::Approx(0.1 * std::sqrt(1.0 / 100.0 + 1.0 / 10000.0)));
    }
    SUBCASE("empty side peaks")
    {
        CHECK_THROWS_AS(g2_zero(synthetic_hist(10, 0), PeakWindows::for_period(12480)),
                        EstimationError);
    }
    SUBCASE("span too short for the outer side peaks")
    {
        CorrelationHistogram h = synthetic_hist(10, 10);
        h.span_ps = 50000;
        h.counts.resize(2500);
        CHECK_THROWS_AS(g2_zero(h, PeakWindows::for_period(12480)), ValidationError);
    }
    SUBCASE("invariant under a common time shift")
    {
        std::mt19937_64 rng(9);
        std::vector<std::int64_t> a, b;
        std::bernoulli_distribution click(0.3);
        for (std::int64_t p = 1; p < 200000; ++p) {
            if (click(rng)) a.push_back(p * 12480 + 20);
            if (click(rng)) b.push_back(p * 12480 + 35);
        }
        const PeakWindows w = PeakWindows::for_period(12480);
        const Estimate g0 = g2_zero(correlate(a, b, 40, 100000), w);
        for (auto& t : a) t += 987654321;
        for (auto& t : b) t += 987654321;
        const Estimate g1 = g2_zero(correlate(a, b, 40, 100000), w);
        CHECK(g0.value == g1.value);
        CHECK(g0.error == g1.error);
    }
    SUBCASE("window validation")
    {
        PeakWindows w = PeakWindows::for_period(12480);
        w.half_window_ps = 7000;
        CHECK_THROWS_AS(w.validate(), ValidationError);
    }
}

TEST_CASE("raw HOM visibility")
{
    const Estimate spatial = hom_visibility(Estimate{0.0822, 0.0002}, Estimate{0.5312, 0.0012});
    CHECK(std::abs(spatial.value - 0.845) < 0.002);
    CHECK(spatial.error < 0.002);
    CHECK(std::abs(hom_visibility(0.1518, 0.5641).value - 0.731) < 0.004);
    CHECK(hom_visibility(0.0, 0.5).value == 1.0);
    for (double x : {0.01, 0.5, 3.0}) CHECK(hom_visibility(x, x).value == 0.0);
    CHECK_THROWS_AS(hom_visibility(0.1, 0.0), EstimationError);
}

TEST_CASE("corrected visibility")
{
    CHECK(corrected_visibility(0.845, 0.0, 0.5).m == doctest::Approx(0.845));
    const CorrectedVisibility spatial = corrected_visibility(0.845, 0.0472, 0.5);
    CHECK(spatial.m == doctest::Approx(0.939).epsilon(0.001));
    // The quoted corrected value (0.966) is not reached by this correction.
    CHECK(std::abs(spatial.m - 0.966) > 0.02);
    CHECK(corrected_visibility(0.0, 0.0, 0.5).m == 0.0);

    const CorrectedVisibility over = corrected_visibility(0.98, 0.05, 0.4);
    CHECK(over.clamped);
    CHECK(over.m == 1.0);
    CHECK(over.unclamped > 1.0);

    const double r = 0.43;
    const double a = (r * r + (1 - r) * (1 - r)) / (2 * r * (1 - r));
    CHECK(corrected_visibility(0.8, 0.04, r).m == doctest::Approx(a * 0.8 + 0.04 * (1 + a)));
    CHECK(corrected_visibility(0.8, 0.04, r, visibility_correction("none")).m == 0.8);

    CHECK_THROWS_AS(corrected_visibility(0.8, 0.04, 0.0), ValidationError);
    CHECK_THROWS_AS(corrected_visibility(0.8, 0.04, 1.0), ValidationError);
    CHECK_THROWS_AS(visibility_correction("bogus"), ValidationError);
}
