// End-to-end acceptance run. Prints one "Criterion N: PASS|FAIL - details"
// line per criterion and exits non-zero when any of them fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qdsps/cavity.hpp"
#include "qdsps/config.hpp"
#include "qdsps/correlator.hpp"
#include "qdsps/dbr.hpp"
#include "qdsps/efficiency.hpp"
#include "qdsps/error.hpp"
#include "qdsps/fitting.hpp"
#include "qdsps/photon_stream.hpp"
#include "qdsps/rng.hpp"
#include "qdsps/scenario.hpp"
#include "qdsps/spectrum.hpp"
#include "qdsps/tls.hpp"

using namespace qdsps;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

// Collects individual checks of one criterion. Every failed check is kept
// with its measured value so that the FAIL line says what went wrong.
class Criterion {
public:
    void check(bool ok, const std::string& what)
    {
        if (!ok) failures_.push_back(what);
    }
    void note(const std::string& text) { notes_.push_back(text); }
    bool passed() const { return failures_.empty(); }
    std::string details() const
    {
        std::ostringstream s;
        const auto& items = passed() ? notes_ : failures_;
        for (std::size_t i = 0; i < items.size(); ++i) s << (i ? "; " : "") << items[i];
        return s.str();
    }

private:
    std::vector<std::string> failures_;
    std::vector<std::string> notes_;
};

std::string fmt(double x, int digits = 4)
{
    std::ostringstream s;
    s << std::setprecision(digits) << x;
    return s.str();
}

std::string pm(const Estimate& e) { return fmt(e.value) + "+-" + fmt(e.error, 2); }

const Config& device_config()
{
    static const Config cfg =
        Config::load(std::filesystem::path(QDSPS_SOURCE_DIR) / "configs" / "device.toml");
    return cfg;
}

ScenarioOutput scenario(const std::string& name)
{
    const Config& cfg = device_config();
    return run_scenario(cfg, name, static_cast<std::uint64_t>(cfg.root().get_int("seed")));
}

const CavityMode kModeAH{932.125, 0.098, Polarization::H};
const CavityMode kModeAV{932.157, 0.102, Polarization::V};
const CavityMode kModeBH{913.945, 0.111, Polarization::H};
const CavityMode kModeBV{913.704, 0.108, Polarization::V};

// ----------------------------------------------------------------------

void arithmetic(Criterion& c)
{
    const double qa = q_factor(kModeAH);
    const double qb = q_factor(kModeBH);
    c.check(std::abs(qa - 9511.0) <= 1.0, "Q_A=" + fmt(qa, 6));
    c.check(std::abs(qb - 8234.0) <= 1.0, "Q_B=" + fmt(qb, 6));
    c.note("Q " + fmt(qa, 6) + "/" + fmt(qb, 6));

    const double expected[] = {33.84, 35.22, 39.84, 38.78};
    const CavityMode modes[] = {kModeAH, kModeAV, kModeBH, kModeBV};
    std::string widths;
    for (int i = 0; i < 4; ++i) {
        const double w = linewidth_ghz(modes[i]);
        c.check(std::abs(w - expected[i]) <= 0.1, "linewidth " + fmt(w) + " vs " + fmt(expected[i]));
        widths += (i ? "/" : "") + fmt(w);
    }
    c.note("linewidths " + widths + " GHz");

    const double fa = purcell_from_lifetimes(134.0, 1007.0);
    const double fb = purcell_from_lifetimes(53.0, 1007.0);
    c.check(std::abs(fa - 7.5) <= 0.1, "F_A=" + fmt(fa));
    c.check(std::abs(fb - 19.0) <= 0.1, "F_B=" + fmt(fb));
    c.note("Purcell " + fmt(fa, 3) + "/" + fmt(fb, 3));

    const double b = beta_h(19.0, 0.910);
    c.check(std::abs(b - 0.865) <= 0.002, "beta_H=" + fmt(b));
    c.note("beta_H " + fmt(b));

    const Estimate v_spatial = hom_visibility(Estimate{0.0822, 0.0002}, Estimate{0.5312, 0.0012});
    const Estimate v_temporal = hom_visibility(Estimate{0.1518, 0.0004}, Estimate{0.5641, 0.0013});
    c.check(std::abs(v_spatial.value - 0.845) <= 0.002, "V=" + fmt(v_spatial.value));
    c.check(std::abs(v_temporal.value - 0.731) <= 0.004, "V=" + fmt(v_temporal.value));
    c.note("V_raw " + pm(v_spatial) + " and " + pm(v_temporal));
}

void zeta_model(Criterion& c)
{
    const double za = zeta_h(BirefringentCavity::from_modes(kModeAH, kModeAV, 7.5), 0.0);
    const double zb = zeta_h(BirefringentCavity::from_modes(kModeBH, kModeBV, 19.0), 0.0);
    c.check(std::abs(za - 0.578) <= 0.01, "zeta_A=" + fmt(za));
    // Cavity B: the documented model value, not the quoted 0.910.
    c.check(std::abs(zb - 0.954) <= 0.005, "zeta_B=" + fmt(zb));
    c.check(std::abs(zb - 0.910) > 0.03, "zeta_B unexpectedly close to 0.910");
    c.note("zeta_H A=" + fmt(za, 3) + " (quoted 0.578), B=" + fmt(zb, 3) +
           " (quoted 0.910, not reproduced by the two-Lorentzian model)");
}

void tls_dynamics(Criterion& c)
{
    const TlsParams lossless{1e-9, 0.0, 0.0};
    DrivePulse pulse;
    pulse.fwhm_ps = 1.0;
    pulse.area = kPi;
    const double inverted = evolve_pulsed(lossless, pulse, pulse.support_end_ps(), 0.5).states.back().rho_ee;
    pulse.area = 2.0 * kPi;
    const double restored = evolve_pulsed(lossless, pulse, pulse.support_end_ps(), 0.5).states.back().rho_ee;
    c.check(std::abs(inverted - 1.0) <= 1e-6, "pi pulse rho_ee=" + fmt(inverted, 10));
    c.check(std::abs(restored) <= 1e-6, "2pi pulse rho_ee=" + fmt(restored, 10));

    double worst_trace = 0.0;
    double worst_pos = 0.0;
    for (double gamma_phi : {0.0, 0.36, 20.0}) {
        for (double area : {0.5 * kPi, kPi, 4.0 * kPi}) {
            DrivePulse p;
            p.fwhm_ps = 20.0;
            p.area = area;
            for (const auto& s : evolve_pulsed(TlsParams::from_lifetime_ps(53.0, gamma_phi), p, 400.0, 1.0).states) {
                worst_trace = std::max(worst_trace, std::abs(s.trace() - 1.0));
                worst_pos = std::max(worst_pos, s.positivity_violation());
            }
        }
    }
    c.check(worst_trace <= 1e-9, "trace error " + fmt(worst_trace));
    c.check(worst_pos <= 1e-9, "positivity violation " + fmt(worst_pos));

    const ScenarioOutput life = scenario("lifetimes");
    const auto& fits = life.summary["fits"];
    const double injected[] = {134.0, 53.0, 1007.0};
    std::string taus;
    for (std::size_t i = 0; i < 3; ++i) {
        const double tau = fits[i]["fitted_tau_ps"].get<double>();
        c.check(std::abs(tau / injected[i] - 1.0) <= 0.01, "tau " + fmt(tau) + " vs " + fmt(injected[i]));
        taus += (i ? "/" : "") + fmt(tau, 5);
    }
    c.note("pi/2pi rho_ee " + fmt(inverted, 8) + "/" + fmt(restored, 2) + ", trace err " + fmt(worst_trace, 2) +
           ", fitted tau " + taus + " ps");
}

void rabi(Criterion& c)
{
    const ScenarioOutput out = scenario("rabi_b");
    const double first_max = out.summary["first_max_power_uw"].get<double>();
    const double p_pi = out.summary["pi_power_uw"].get<double>();
    c.check(std::abs(first_max / p_pi - 1.0) <= 0.02, "first maximum at " + fmt(first_max) + " uW");

    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        RabiParams p;
        p.emitter.lifetime_ps = 53.0;
        p.emitter.pulse.fwhm_ps = 2.0;
        p.pi_power_uw = 36.0;
        p.max_power_uw = 100.0;
        p.n_points = 101;
        p.noise_fraction = 0.05;
        p.seed = seed;
        const double fitted = run_rabi(p).fit.value("P_pi");
        worst = std::max(worst, std::abs(fitted / 36.0 - 1.0));
    }
    c.check(worst <= 0.05, "noisy fit off by " + fmt(100 * worst) + "%");
    c.note("first maximum " + fmt(first_max) + " uW for P_pi " + fmt(p_pi) + " uW; worst noisy-fit error " +
           fmt(100 * worst, 2) + "% over 5 seeds");
}

void correlation_engine(Criterion& c)
{
    std::mt19937_64 rng(2025);
    auto random_times = [&](std::size_t n, std::int64_t horizon) {
        std::uniform_int_distribution<std::int64_t> pick(0, horizon);
        std::vector<std::int64_t> t(n);
        for (auto& x : t) x = pick(rng);
        std::sort(t.begin(), t.end());
        return t;
    };
    int matched = 0;
    const int instances = 120;
    for (int trial = 0; trial < instances; ++trial) {
        const std::int64_t bw = 1 + static_cast<std::int64_t>(rng() % 50);
        const std::int64_t span = bw * (1 + static_cast<std::int64_t>(rng() % 60));
        const auto a = random_times(rng() % 1001, 20 * span);
        const auto b = random_times(rng() % 1001, 20 * span);
        if (correlate(a, b, bw, span).counts == oracle::brute_correlate(a, b, bw, span)) ++matched;
    }
    c.check(matched == instances, std::to_string(instances - matched) + " brute-force mismatches");

    // Independent Poisson streams over 2 ms.
    auto poisson = [&](double rate) {
        std::exponential_distribution<double> gap(rate);
        std::vector<std::int64_t> t;
        for (double now = gap(rng); now < 2e9; now += gap(rng)) t.push_back(static_cast<std::int64_t>(now));
        return t;
    };
    const auto pa = poisson(1e-6);
    const auto pb = poisson(1.5e-6);
    const auto flat = correlate(pa, pb, 1000, 100000);
    const double expected = static_cast<double>(pa.size()) * static_cast<double>(pb.size()) * 1000.0 / 2e9;
    double worst_sigma = 0.0;
    for (auto n : flat.counts) {
        worst_sigma = std::max(worst_sigma, std::abs(static_cast<double>(n) - expected) / std::sqrt(expected));
    }
    c.check(worst_sigma < 5.0, "Poisson bin deviates by " + fmt(worst_sigma) + " sigma");

    const auto ca = random_times(20000, 50000000);
    const auto cb = random_times(20000, 50000000);
    const auto ref = correlate(ca, cb, 40, 100000);
    bool chunks_agree = true;
    for (unsigned chunks : {2u, 3u, 8u, 64u}) chunks_agree &= correlate_chunked(ca, cb, 40, 100000, chunks).counts == ref.counts;
    c.check(chunks_agree, "chunked result depends on the chunk count");

    std::bernoulli_distribution click(0.4);
    std::vector<std::int64_t> ta, tb;
    for (std::int64_t pulse = 1; ta.size() + tb.size() < 10'000'000; ++pulse) {
        if (click(rng)) ta.push_back(pulse * 12480 + static_cast<std::int64_t>(rng() % 100));
        if (click(rng)) tb.push_back(pulse * 12480 + static_cast<std::int64_t>(rng() % 100));
    }
    const auto start = std::chrono::steady_clock::now();
    const auto big = correlate(ta, tb, 40, 200000);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    c.check(big.total_pairs > 0 && seconds < 10.0, "throughput " + fmt(seconds) + " s");
    c.note(std::to_string(matched) + "/" + std::to_string(instances) + " brute-force matches, Poisson max " +
           fmt(worst_sigma, 3) + " sigma, chunk invariant, 1e7 tags in " + fmt(seconds, 3) + " s");
}

void photon_statistics(Criterion& c)
{
    // pi-pulse HBT with the leak calibrated to the reported purity.
    const Config& cfg = device_config();
    const std::uint64_t seed = static_cast<std::uint64_t>(cfg.root().get_int("seed"));
    const ScenarioOutput pi = scenario("hbt_pi");
    const Estimate g_pi{pi.summary["g2_zero"].get<double>(), pi.summary["g2_err"].get<double>()};
    c.check(std::abs(g_pi.value - 0.0955) <= 3.0 * g_pi.error, "g2(pi)=" + pm(g_pi));

    // Same source at 0.2 I_sat; the leak follows the laser power.
    HbtParams low;
    low.from_emitter = true;
    low.emitter.lifetime_ps = 53.0;
    low.emitter.pulse.fwhm_ps = 2.0;
    low.intensity_ratio = 0.2;
    low.stream.n_pulses = 10'000'000;
    low.stream.jitter_fwhm_ps = 50.0;
    low.stream.dead_time_ps = 0.0;
    low.stream.seed = derive_seed(seed, hash_name("acceptance_low_power"));
    const double power_ratio = source_at_intensity(low.emitter, 0.2).power_over_pi;
    low.stream.leak_mean = pi.summary["stream"]["leak_mean"].get<double>() * power_ratio;
    const HbtResult r_low = run_hbt(low);
    c.check(r_low.g2.value < g_pi.value, "g2(0.2 I_sat)=" + pm(r_low.g2) + " not below g2(pi)");

    const ScenarioOutput hom = scenario("hom_06");
    const double v_raw = hom.summary["v_raw"].get<double>();
    const double v_err = hom.summary["v_err"].get<double>();
    const double r = hom.summary["bs_reflectance"].get<double>();
    const double rt = r * r + (1.0 - r) * (1.0 - r);
    const Estimate g_perp{hom.summary["g_perp"]["value"].get<double>(), hom.summary["g_perp"]["error"].get<double>()};
    const double oracle_perp = hom.summary["oracle"]["g_perp"].get<double>();
    c.check(std::abs(v_raw - 0.845) <= 0.01, "V_raw=" + fmt(v_raw));
    c.check(std::abs(g_perp.value - oracle_perp) <= 3.0 * g_perp.error,
            "g_perp=" + pm(g_perp) + " vs oracle " + fmt(oracle_perp));

    // With the noise switched off the orthogonal reference is exactly R^2 + T^2.
    HomParams clean;
    clean.stream.n_pulses = 4'000'000;
    clean.stream.p_emit = 0.6;
    clean.stream.dead_time_ps = 0.0;
    clean.stream.seed = derive_seed(seed, hash_name("acceptance_clean_hom"));
    clean.bs_reflectance = r;
    clean.overlap = hom.summary["overlap"].get<double>();
    const HomResult rc = run_hom(clean);
    c.check(std::abs(rc.g_perp.value - rt) <= 3.0 * rc.g_perp.error,
            "noise-free g_perp=" + pm(rc.g_perp) + " vs R^2+T^2=" + fmt(rt));

    c.note("g2(pi)=" + pm(g_pi) + " (purity " + fmt(1.0 - g_pi.value) + "); g2(0.2 I_sat)=" + pm(r_low.g2) +
           " (reported 0.0322); V_raw=" + fmt(v_raw) + "+-" + fmt(v_err, 2) + " at R=" + fmt(r) + "; g_perp=" +
           pm(g_perp) + " (oracle " + fmt(oracle_perp) + "), noise-free " + pm(rc.g_perp) + " vs R^2+T^2=" +
           fmt(rt));
}

void sweeps(Criterion& c)
{
    auto spread = [](const std::vector<double>& v) {
        return *std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end());
    };
    auto column = [](const ScenarioOutput& out, const char* key) {
        std::vector<double> v;
        for (const auto& pt : out.summary["points"]) v.push_back(pt[key].get<double>());
        return v;
    };

    const ScenarioOutput temp = scenario("temperature");
    const auto tv = column(temp, "v_raw");
    const auto tg = column(temp, "g2");
    bool decreasing = true;
    for (std::size_t i = 1; i < tv.size(); ++i) decreasing &= tv[i] < tv[i - 1];
    c.check(decreasing, "V_raw not monotonically decreasing with detuning");
    c.check(spread(tg) <= 0.02, "g2 spread " + fmt(spread(tg)) + " across the detuning sweep");

    const ScenarioOutput power = scenario("power");
    const auto pv = column(power, "v_raw");
    const auto pg = column(power, "g2");
    bool increasing = true;
    for (std::size_t i = 1; i < pg.size(); ++i) increasing &= pg[i] > pg[i - 1];
    c.check(increasing, "g2 not monotonically increasing with power");
    c.check(spread(pv) <= 0.04, "V_raw spread " + fmt(spread(pv)) + " across the power sweep");

    c.note("detuning sweep V_raw " + fmt(tv.front()) + " -> " + fmt(tv.back()) + ", g2 spread " + fmt(spread(tg), 2) +
           "; power sweep g2 " + fmt(pg.front()) + " -> " + fmt(pg.back()) + ", V_raw spread " + fmt(spread(pv), 2));
}

void mollow(Criterion& c)
{
    const double gamma = 1000.0 / 53.0;
    const TripletFit top = fit_triplet(
        emission_spectrum({gamma, 0.36, 0.0}, kTwoPi * 21.4, frequency_grid(-80.0, 80.0, 3201)));
    c.check(std::abs(top.rabi_split_ghz / 21.4 - 1.0) <= 0.01, "sideband at " + fmt(top.rabi_split_ghz) + " GHz");

    const MollowParams params;
    const MollowResult series = run_mollow(params);
    c.check(series.scaling.r2_split > 0.999, "R^2=" + fmt(series.scaling.r2_split, 6));
    c.check(std::abs(series.scaling.k / 10.57 - 1.0) <= 0.01, "slope " + fmt(series.scaling.k));
    c.check(std::abs(series.recovered.gamma0 / params.eid.gamma0 - 1.0) <= 0.05,
            "gamma0 " + fmt(series.recovered.gamma0));
    c.check(std::abs(series.recovered.c / params.eid.c - 1.0) <= 0.05, "c " + fmt(series.recovered.c));

    const TripletFit clean =
        fit_triplet(emission_spectrum({gamma, 0.0, 0.0}, kTwoPi * 20.0, frequency_grid(-80.0, 80.0, 6401)));
    const double g_ghz = gamma / kTwoPi;
    const double side = clean.sideband_width_ghz / g_ghz;
    const double centre = clean.center_width_ghz / g_ghz;
    c.check(std::abs(side / 1.5 - 1.0) <= 0.02, "sideband width " + fmt(side) + " Gamma");
    c.check(std::abs(centre - 1.0) <= 0.02, "centre width " + fmt(centre) + " Gamma");

    c.note("sidebands at +-" + fmt(top.rabi_split_ghz) + " GHz; slope " + fmt(series.scaling.k) +
           " GHz/sqrt(mW), R^2=" + fmt(series.scaling.r2_split, 7) + "; gamma0 " + fmt(series.recovered.gamma0) +
           "/" + fmt(params.eid.gamma0) + ", c " + fmt(series.recovered.c) + "/" + fmt(params.eid.c) +
           "; widths " + fmt(side) + ":" + fmt(centre) + " Gamma");
}

void dbr(Criterion& c)
{
    const LayerStack cavity = planar_microcavity({});
    double worst_sum = 0.0;
    for (const auto& p : reflectance_spectrum(cavity, wavelength_grid(850.0, 980.0, 4001))) {
        worst_sum = std::max(worst_sum, std::abs(p.reflectance + p.transmittance - 1.0));
    }
    c.check(worst_sum <= 1e-10, "R+T-1=" + fmt(worst_sum));

    LayerStack interface;
    interface.n_in = 1.0;
    interface.n_out = 3.5;
    const double fresnel = stack_response<double>(interface, 900.0).reflectance;
    c.check(std::abs(fresnel - 0.3086) <= 1e-4, "Fresnel " + fmt(fresnel, 6));

    double worst_qw = 0.0;
    for (int pairs : {1, 5, 20, 46}) {
        const double r =
            stack_response<double>(quarter_wave_mirror(3.54, 2.98, pairs, 913.945, 1.0, 3.54), 913.945).reflectance;
        worst_qw = std::max(worst_qw, std::abs(r - oracle::quarter_wave_reflectance(3.54, 2.98, pairs, 1.0, 3.54)));
    }
    c.check(worst_qw <= 1e-6, "quarter-wave error " + fmt(worst_qw));

    const ResonanceSearch window{911.945, 915.945, 20001};
    std::string qs;
    double previous = 0.0;
    for (int top = 5; top <= 7; ++top) {
        MicrocavityDesign d;
        d.top_pairs = top;
        const double q = cavity_resonance(planar_microcavity(d), window).q;
        c.check(q > previous, "Q did not increase at " + std::to_string(top) + " pairs");
        previous = q;
        qs += (top > 5 ? "/" : "") + fmt(q, 5);
    }

    const double s1 = birefringent_splitting(cavity, 2e-4, window);
    const double s2 = birefringent_splitting(cavity, 4e-4, window);
    c.check(std::abs(s2 / (2.0 * s1) - 1.0) <= 0.02, "splitting ratio " + fmt(s2 / s1));
    const double dn = anisotropy_for_splitting(cavity, 86.50, window);
    const double hit = birefringent_splitting(cavity, dn, window);
    c.check(std::abs(hit - 86.50) <= 0.5, "inverted splitting " + fmt(hit));

    c.note("|R+T-1| " + fmt(worst_sum, 2) + ", Fresnel " + fmt(fresnel, 5) + ", quarter-wave err " + fmt(worst_qw, 2) +
           ", Q " + qs + ", splitting ratio " + fmt(s2 / s1, 5) + ", dn " + fmt(dn, 3) + " -> " + fmt(hit) + " GHz");
}

void declared_limits(Criterion& c)
{
    // Absolute count rates enter as inputs; only their ratios are derived.
    const ScenarioOutput eff = scenario("efficiency");
    double eta_a = 0.0;
    double eta_b = 0.0;
    for (const auto& row : eff.summary["cases"]) {
        if (row["name"] == "cavity_a") eta_a = row["eta_e"].get<double>();
        if (row["name"] == "cavity_b") eta_b = row["eta_e"].get<double>();
    }
    c.check(std::abs(eta_b - 0.87) <= 0.01, "eta_B=" + fmt(eta_b));
    c.check(std::abs(eta_a / eta_b - 4.93 / 6.23) <= 1e-9, "eta ratio differs from the rate ratio");

    // The quoted corrected visibility is out of reach of the standard correction.
    const CorrectedVisibility m = corrected_visibility(0.845, 0.0472, 0.5);
    c.check(std::abs(m.m - 0.939) <= 0.002, "corrected=" + fmt(m.m));

    c.note("declared non-reproducible: absolute rates 4.93/6.23 MHz are inputs (eta_A=" + fmt(eta_a, 3) +
           " vs quoted 0.63, eta_B=" + fmt(eta_b, 3) + "); corrected visibility " + fmt(m.m, 3) +
           " vs quoted 0.966, gap " + fmt(0.966 - m.m, 2) + " (correction formula not recoverable)");
}

} // namespace

int main()
{
    const std::vector<std::pair<int, std::function<void(Criterion&)>>> criteria{
        {1, arithmetic}, {2, zeta_model},         {3, tls_dynamics}, {4, rabi},  {5, correlation_engine},
        {6, photon_statistics}, {7, sweeps}, {8, mollow},       {9, dbr}, {10, declared_limits}};

    int failed = 0;
    for (const auto& [number, run] : criteria) {
        Criterion c;
        try {
            run(c);
        } catch (const std::exception& e) {
            c.check(false, std::string("exception: ") + e.what());
        }
        if (!c.passed()) ++failed;
        std::cout << "Criterion " << number << ": " << (c.passed() ? "PASS" : "FAIL") << " - " << c.details()
                  << std::endl;
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
