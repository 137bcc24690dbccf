#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qdsps/correlator.hpp"
#include "qdsps/error.hpp"
#include "qdsps/photon_stream.hpp"
#include "qdsps/tagfile.hpp"

using namespace qdsps;

namespace {

StreamConfig base(std::uint64_t pulses, std::uint64_t seed = 7)
{
    StreamConfig c;
    c.n_pulses = pulses;
    c.seed = seed;
    c.dead_time_ps = 0.0;
    c.jitter_fwhm_ps = 50.0;
    return c;
}

// Zero-delay peak over far side peaks, channel 0 as start and channel 1 as stop.
Estimate zero_peak_ratio(const TimeTagStream& s, const StreamConfig& c)
{
    const auto a = channel_times(s, 0);
    const auto b = channel_times(s, 1);
    const auto hist = correlate(a, b, 40, 100000);
    return g2_zero(hist, PeakWindows::for_period(c.rep_period_ps()));
}

bool within_sigma(const Estimate& e, double expected, double n_sigma)
{
    return std::abs(e.value - expected) <= n_sigma * e.error;
}

} // namespace

TEST_CASE("stream configuration is validated")
{
    StreamConfig c = base(10);
    c.p_emit = 0.8;
    c.p_reexc = 0.3;
    CHECK_THROWS_AS(generate_hbt_stream(c), ValidationError);
    c = base(10);
    c.leak_mean = -0.1;
    CHECK_THROWS_AS(generate_hbt_stream(c), ValidationError);
    c = base(10);
    c.rep_period_ns = 0.0;
    CHECK_THROWS_AS(generate_hbt_stream(c), ValidationError);
    c = base(10);
    c.det_eff[1] = 1.5;
    CHECK_THROWS_AS(generate_hbt_stream(c), ValidationError);
    HomConfig h;
    h.bs_reflectance = 1.0;
    CHECK_THROWS_AS(generate_hom_stream(base(10), h), ValidationError);
    h = {};
    h.overlap = 1.2;
    CHECK_THROWS_AS(generate_hom_stream(base(10), h), ValidationError);
}

TEST_CASE("zero pulses give an empty stream")
{
    CHECK(generate_hbt_stream(base(0)).empty());
    CHECK(generate_hom_stream(base(0), {}).empty());
}

TEST_CASE("streams are sorted, non-negative and deterministic")
{
    StreamConfig c = base(200000, 99);
    c.p_emit = 0.6;
    c.p_reexc = 0.01;
    c.leak_mean = 0.05;
    c.dead_time_ps = 30000.0;
    c.threads = 1;
    const TimeTagStream one = generate_hbt_stream(c);
    c.threads = 5;
    const TimeTagStream five = generate_hbt_stream(c);
    CHECK(one == five);
    CHECK(one == generate_hbt_stream(c));
    REQUIRE(!one.empty());
    CHECK(std::is_sorted(one.begin(), one.end(),
                         [](const TimeTag& x, const TimeTag& y) { return x.t_ps < y.t_ps; }));
    for (const TimeTag& t : one) {
        CHECK(t.t_ps >= 0);
        CHECK(t.channel <= 1);
    }
    c.seed = 100;
    CHECK(!(generate_hbt_stream(c) == one));

    HomConfig h;
    h.overlap = 0.9;
    c.seed = 99;
    c.threads = 1;
    const TimeTagStream hom1 = generate_hom_stream(c, h);
    c.threads = 3;
    CHECK(hom1 == generate_hom_stream(c, h));
}

TEST_CASE("dead time separates same-channel detections")
{
    StreamConfig c = base(200000);
    c.p_emit = 0.5;
    c.p_reexc = 0.2;
    c.leak_mean = 0.5;
    c.rep_period_ns = 12.48;
    c.dead_time_ps = 30000.0;
    const TimeTagStream s = generate_hbt_stream(c);
    for (std::uint8_t ch : {std::uint8_t{0}, std::uint8_t{1}}) {
        const auto t = channel_times(s, ch);
        for (std::size_t k = 1; k < t.size(); ++k) CHECK(t[k] - t[k - 1] >= 30000);
    }
}

TEST_CASE("mean detected rate follows the photon budget")
{
    StreamConfig c = base(1000000, 3);
    c.p_emit = 0.7;
    c.p_reexc = 0.02;
    c.leak_mean = 0.1;
    c.det_eff = {0.6, 0.8};
    const TimeTagStream s = generate_hbt_stream(c);
    const double expected_per_pulse = c.signal_mean() + c.leak_mean;
    // Each photon goes to either detector with probability 1/2.
    const double mean_eff = 0.5 * (c.det_eff[0] + c.det_eff[1]);
    const double measured = static_cast<double>(s.size()) / static_cast<double>(c.n_pulses);
    CHECK(measured == doctest::Approx(expected_per_pulse * mean_eff).epsilon(0.01));
}

TEST_CASE("g2 oracle limiting cases")
{
    StreamConfig c = base(1);
    c.p_emit = 0.9;
    CHECK(analytic_g2_oracle(c) == 0.0);
    c.p_emit = 0.0;
    c.leak_mean = 0.3;
    CHECK(analytic_g2_oracle(c) == doctest::Approx(1.0));
    c.leak_mean = 0.0;
    CHECK_THROWS_AS(analytic_g2_oracle(c), EstimationError);
}

TEST_CASE("HBT streams reproduce the photon statistics they were built from")
{
    SUBCASE("perfect single photons never coincide")
    {
        StreamConfig c = base(2000000, 21);
        const Estimate g = zero_peak_ratio(generate_hbt_stream(c), c);
        CHECK(g.value == 0.0);
    }
    SUBCASE("Poissonian light")
    {
        StreamConfig c = base(3000000, 22);
        c.p_emit = 0.0;
        c.leak_mean = 0.1;
        const Estimate g = zero_peak_ratio(generate_hbt_stream(c), c);
        CHECK(within_sigma(g, 1.0, 3.0));
    }
    SUBCASE("leak calibrated to a target g2")
    {
        StreamConfig c = base(5000000, 23);
        c.leak_mean = leak_for_target_g2(1.0, 0.0, 0.0472);
        CHECK(analytic_g2_oracle(c) == doctest::Approx(0.0472).epsilon(1e-10));
        const Estimate g = zero_peak_ratio(generate_hbt_stream(c), c);
        CHECK(within_sigma(g, 0.0472, 3.0));
    }
    SUBCASE("mixed noise channels")
    {
        StreamConfig c = base(4000000, 24);
        c.p_emit = 0.55;
        c.p_reexc = 0.03;
        c.leak_mean = 0.04;
        c.det_eff = {0.7, 0.9};
        const Estimate g = zero_peak_ratio(generate_hbt_stream(c), c);
        CHECK(within_sigma(g, analytic_g2_oracle(c), 3.0));
    }
}

TEST_CASE("HOM streams reproduce the interference model")
{
    SUBCASE("identical photons on a balanced splitter bunch completely")
    {
        StreamConfig c = base(2000000, 31);
        HomConfig h;
        h.overlap = 1.0;
        const Estimate g = zero_peak_ratio(generate_hom_stream(c, h), c);
        CHECK(g.value == 0.0);
    }
    SUBCASE("distinguishable photons give R^2 + T^2")
    {
        StreamConfig c = base(2000000, 32);
        HomConfig h;
        h.polarization = HomPolarization::orthogonal;
        h.overlap = 1.0;
        CHECK(h.effective_overlap() == 0.0);
        const Estimate g = zero_peak_ratio(generate_hom_stream(c, h), c);
        CHECK(within_sigma(g, 0.5, 3.0));
    }
    SUBCASE("noisy source on an unbalanced splitter")
    {
        StreamConfig c = base(4000000, 33);
        c.p_emit = 0.6;
        c.p_reexc = 0.001;
        c.leak_mean = 0.013;
        HomConfig h;
        h.bs_reflectance = 0.43;
        h.overlap = 0.963;
        const HomPrediction expected = analytic_hom_oracle(c, h);
        const Estimate g_par = zero_peak_ratio(generate_hom_stream(c, h), c);
        h.polarization = HomPolarization::orthogonal;
        c.seed = 34;
        const Estimate g_perp = zero_peak_ratio(generate_hom_stream(c, h), c);
        CHECK(within_sigma(g_par, expected.g_par, 3.0));
        CHECK(within_sigma(g_perp, expected.g_perp, 3.0));
        CHECK(expected.v_raw == doctest::Approx(1.0 - expected.g_par / expected.g_perp));
    }
}

TEST_CASE("calibration helpers invert their oracles")
{
    const double leak = leak_for_target_g2(0.6, 0.0008, 0.0472);
    StreamConfig c = base(1);
    c.p_emit = 0.6;
    c.p_reexc = 0.0008;
    c.leak_mean = leak;
    CHECK(analytic_g2_oracle(c) == doctest::Approx(0.0472).epsilon(1e-10));
    CHECK_THROWS_AS(leak_for_target_g2(0.5, 0.2, 0.001), ValidationError);

    const double overlap = overlap_from_dephasing(1000.0 / 53.0, 0.36);
    CHECK(overlap == doctest::Approx(0.963).epsilon(0.001));
    CHECK(dephasing_from_overlap(1000.0 / 53.0, overlap) == doctest::Approx(0.36).epsilon(1e-12));
    CHECK(overlap_from_dephasing(1.0, 0.0) == 1.0);

    const double r = reflectance_for_target_visibility(c, overlap, 0.845);
    CHECK(r > 0.0);
    CHECK(r <= 0.5);
    HomConfig h;
    h.bs_reflectance = r;
    h.overlap = overlap;
    CHECK(analytic_hom_oracle(c, h).v_raw == doctest::Approx(0.845).epsilon(1e-8));
}

TEST_CASE("time-tag files round-trip")
{
    StreamConfig c = base(20000, 41);
    c.p_emit = 0.8;
    c.leak_mean = 0.05;
    const TimeTagStream tags = generate_hbt_stream(c);

    std::stringstream bin;
    write_tags_binary(bin, tags);
    CHECK(bin.str().size() == 16 + 12 * tags.size());
    CHECK(bin.str().substr(0, 8) == "PSLTAG01");
    CHECK(read_tags_binary(bin) == tags);

    std::stringstream csv;
    write_tags_csv(csv, tags);
    CHECK(read_tags_csv(csv) == tags);

    const auto dir = std::filesystem::temp_directory_path() / "qdsps_tagfile_test";
    std::filesystem::create_directories(dir);
    save_tags(dir / "tags.bin", tags);
    save_tags(dir / "tags.csv", tags);
    CHECK(load_tags(dir / "tags.bin") == tags);
    CHECK(load_tags(dir / "tags.csv") == tags);
    std::filesystem::remove_all(dir);
}

TEST_CASE("corrupt time-tag files are rejected")
{
    const TimeTagStream tags{{0, 5}, {1, 17}};
    std::stringstream bin;
    write_tags_binary(bin, tags);
    std::string bytes = bin.str();

    std::string reserved = bytes;
    reserved[16 + 1] = 1;
    std::istringstream r1(reserved);
    CHECK_THROWS_AS(read_tags_binary(r1), ValidationError);

    std::string magic = bytes;
    magic[0] = 'X';
    std::istringstream r2(magic);
    CHECK_THROWS_AS(read_tags_binary(r2), ValidationError);

    std::istringstream r3(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(read_tags_binary(r3), ValidationError);

    std::istringstream r4("time,channel\n1,2\n");
    CHECK_THROWS_AS(read_tags_csv(r4), ValidationError);
}
