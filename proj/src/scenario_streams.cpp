#include <cmath>
#include <utility>

#include "qdsps/cavity.hpp"
#include "qdsps/error.hpp"
#include "qdsps/log.hpp"
#include "qdsps/rng.hpp"
#include "qdsps/scenario.hpp"
#include "qdsps/units.hpp"

namespace qdsps {

namespace {

struct HbtMeasurement {
    CorrelationHistogram hist;
    PeakAreas areas;
    Estimate g2;
    std::size_t n_tags = 0;
};

struct HomMeasurement {
    CorrelationHistogram hist_par;
    CorrelationHistogram hist_perp;
    Estimate g_par;
    Estimate g_perp;
    Estimate v_raw;
};

PeakWindows windows_for(const StreamConfig& cfg) { return PeakWindows::for_period(cfg.rep_period_ps()); }

CorrelationHistogram cross_channels(const TimeTagStream& tags, const Binning& b)
{
    const auto a = channel_times(tags, 0);
    const auto c = channel_times(tags, 1);
    return correlate(a, c, b.bin_ps, b.span_ps);
}

HbtMeasurement measure_hbt(const StreamConfig& cfg, const Binning& binning,
                           TimeTagStream* keep = nullptr)
{
    TimeTagStream tags = generate_hbt_stream(cfg);
    HbtMeasurement m;
    m.n_tags = tags.size();
    m.hist = cross_channels(tags, binning);
    m.areas = peak_areas(m.hist, windows_for(cfg));
    m.g2 = g2_zero(m.areas);
    if (keep != nullptr) *keep = std::move(tags);
    return m;
}

HomMeasurement measure_hom(const StreamConfig& cfg, double reflectance, double overlap,
                           const Binning& binning)
{
    HomMeasurement m;
    StreamConfig par = cfg;
    StreamConfig perp = cfg;
    par.seed = derive_seed(cfg.seed, 1);
    perp.seed = derive_seed(cfg.seed, 2);
    m.hist_par = cross_channels(
        generate_hom_stream(par, {reflectance, overlap, HomPolarization::parallel}), binning);
    m.hist_perp = cross_channels(
        generate_hom_stream(perp, {reflectance, overlap, HomPolarization::orthogonal}), binning);
    m.g_par = g2_zero(m.hist_par, windows_for(cfg));
    m.g_perp = g2_zero(m.hist_perp, windows_for(cfg));
    m.v_raw = hom_visibility(m.g_par, m.g_perp);
    return m;
}

// Applies the emitter-derived photon statistics and the leak calibration.
StreamConfig resolve_stream(StreamConfig cfg, bool from_emitter, const EmitterModel& emitter,
                            double intensity_ratio, double target_g2)
{
    if (from_emitter) {
        const SourceStatistics s = source_at_intensity(emitter, intensity_ratio);
        cfg.p_emit = s.p_emit;
        cfg.p_reexc = s.p_reexc;
        cfg.lifetime_ps = emitter.lifetime_ps;
        cfg.pulse_fwhm_ps = emitter.pulse.fwhm_ps;
        log::debug("source at " + std::to_string(intensity_ratio) + " I_sat: p_emit=" +
                   std::to_string(s.p_emit) + " p_reexc=" + std::to_string(s.p_reexc));
    }
    if (target_g2 >= 0.0) {
        cfg.leak_mean = leak_for_target_g2(cfg.p_emit, cfg.p_reexc, target_g2);
        log::debug("calibrated leak_mean=" + std::to_string(cfg.leak_mean));
    }
    cfg.validate();
    return cfg;
}

} // namespace

HbtResult run_hbt(const HbtParams& p)
{
    HbtResult r;
    r.stream = resolve_stream(p.stream, p.from_emitter, p.emitter, p.intensity_ratio, p.target_g2);
    HbtMeasurement m = measure_hbt(r.stream, p.binning, p.keep_tags ? &r.tags : nullptr);
    r.hist = std::move(m.hist);
    r.areas = std::move(m.areas);
    r.g2 = m.g2;
    r.n_tags = m.n_tags;
    r.oracle_g2 = analytic_g2_oracle(r.stream);
    return r;
}

HomResult run_hom(const HomParams& p)
{
    HomResult r;
    r.stream = resolve_stream(p.stream, p.from_emitter, p.emitter, p.intensity_ratio, p.target_g2);
    const double overlap = p.overlap >= 0.0
                               ? p.overlap
                               : overlap_from_dephasing(p.emitter.tls().gamma_rad, p.emitter.gamma_phi);
    double reflectance = p.bs_reflectance;
    if (p.target_v_raw >= 0.0) {
        reflectance = reflectance_for_target_visibility(r.stream, overlap, p.target_v_raw);
        log::debug("calibrated bs_reflectance=" + std::to_string(reflectance));
    }
    r.hom = {reflectance, overlap, HomPolarization::parallel};
    r.hom.validate();

    HomMeasurement m = measure_hom(r.stream, reflectance, overlap, p.binning);
    r.hist_par = std::move(m.hist_par);
    r.hist_perp = std::move(m.hist_perp);
    r.g_par = m.g_par;
    r.g_perp = m.g_perp;
    r.v_raw = m.v_raw;
    r.oracle = analytic_hom_oracle(r.stream, r.hom);

    // The purity entering the correction is the HBT value of the same source.
    const double g2 = analytic_g2_oracle(r.stream);
    r.corrected = corrected_visibility(r.v_raw.value, g2, reflectance,
                                       visibility_correction(p.correction));
    if (r.corrected.clamped) log::warn("hom: corrected visibility exceeded 1 and was clamped");
    return r;
}

std::vector<SweepPoint> run_temperature_sweep(const TemperatureSweepParams& p)
{
    require(!p.detunings_ghz.empty(), "temperature_sweep: detunings_ghz must not be empty");
    require(p.peak_purcell >= 1.0, "temperature_sweep: peak_purcell must be >= 1");
    std::vector<SweepPoint> out;
    for (std::size_t i = 0; i < p.detunings_ghz.size(); ++i) {
        const double delta = p.detunings_ghz[i];
        SweepPoint pt;
        pt.x = delta;
        // Only the cavity-enhanced part of the decay follows the Lorentzian.
        const double f = 1.0 + purcell_vs_detuning(p.peak_purcell - 1.0, p.kappa_ghz, delta);
        pt.lifetime_ps = p.bulk_lifetime_ps / f;
        const double gamma = units::ps_per_ns / pt.lifetime_ps;
        pt.overlap = overlap_from_dephasing(gamma, p.gamma_phi);

        pt.stream = p.stream;
        pt.stream.lifetime_ps = pt.lifetime_ps;
        pt.stream.seed = derive_seed(p.stream.seed, 2 * i);
        pt.stream.validate();
        pt.g2 = measure_hbt(pt.stream, p.binning).g2;
        StreamConfig hom_cfg = pt.stream;
        hom_cfg.seed = derive_seed(p.stream.seed, 2 * i + 1);
        pt.v_raw = measure_hom(hom_cfg, p.bs_reflectance, pt.overlap, p.binning).v_raw;
        pt.oracle_g2 = analytic_g2_oracle(pt.stream);
        pt.oracle_v_raw =
            analytic_hom_oracle(pt.stream, {p.bs_reflectance, pt.overlap, HomPolarization::parallel}).v_raw;
        log::info("temperature_sweep: delta=" + std::to_string(delta) + " GHz g2=" +
                  std::to_string(pt.g2.value) + " v_raw=" + std::to_string(pt.v_raw.value));
        out.push_back(pt);
    }
    return out;
}

double calibrate_leak_at_pi(const PowerSweepParams& p)
{
    if (p.leak_at_pi >= 0.0) return p.leak_at_pi;
    const SourceStatistics s = source_at_intensity(p.emitter, p.anchor_ratio);
    const double leak = leak_for_target_g2(s.p_emit, s.p_reexc, p.anchor_g2);
    return leak / s.power_over_pi;
}

std::vector<SweepPoint> run_power_sweep(const PowerSweepParams& p)
{
    require(!p.intensity_ratios.empty(), "power_sweep: intensity_ratios must not be empty");
    const double leak_pi = calibrate_leak_at_pi(p);
    const double overlap =
        p.overlap >= 0.0 ? p.overlap : overlap_from_dephasing(p.emitter.tls().gamma_rad, p.emitter.gamma_phi);
    std::vector<SweepPoint> out;
    for (std::size_t i = 0; i < p.intensity_ratios.size(); ++i) {
        const SourceStatistics s = source_at_intensity(p.emitter, p.intensity_ratios[i]);
        SweepPoint pt;
        pt.x = p.intensity_ratios[i];
        pt.lifetime_ps = p.emitter.lifetime_ps;
        pt.overlap = overlap;
        pt.stream = p.stream;
        pt.stream.p_emit = s.p_emit;
        pt.stream.p_reexc = s.p_reexc;
        pt.stream.leak_mean = leak_pi * s.power_over_pi;
        pt.stream.lifetime_ps = p.emitter.lifetime_ps;
        pt.stream.pulse_fwhm_ps = p.emitter.pulse.fwhm_ps;
        pt.stream.seed = derive_seed(p.stream.seed, 2 * i);
        pt.stream.validate();
        pt.g2 = measure_hbt(pt.stream, p.binning).g2;
        StreamConfig hom_cfg = pt.stream;
        hom_cfg.seed = derive_seed(p.stream.seed, 2 * i + 1);
        pt.v_raw = measure_hom(hom_cfg, p.bs_reflectance, overlap, p.binning).v_raw;
        pt.oracle_g2 = analytic_g2_oracle(pt.stream);
        pt.oracle_v_raw =
            analytic_hom_oracle(pt.stream, {p.bs_reflectance, overlap, HomPolarization::parallel}).v_raw;
        log::info("power_sweep: I/I_sat=" + std::to_string(pt.x) + " g2=" +
                  std::to_string(pt.g2.value) + " v_raw=" + std::to_string(pt.v_raw.value));
        out.push_back(pt);
    }
    return out;
}

} // namespace qdsps
