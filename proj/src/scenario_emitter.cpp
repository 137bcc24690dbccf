#include <algorithm>
#include <cmath>

#include "qdsps/cavity.hpp"
#include "qdsps/error.hpp"
#include "qdsps/rng.hpp"
#include "qdsps/scenario.hpp"
#include "qdsps/units.hpp"

namespace qdsps {

SourceStatistics source_statistics(const EmitterModel& model, double area)
{
    DrivePulse pulse = model.pulse;
    pulse.area = area;
    const EmissionYield y = emission_probability(model.tls(), pulse);
    SourceStatistics s;
    s.p_emit = std::clamp(y.p_single(), 0.0, 1.0);
    s.p_reexc = std::clamp(y.p_multi, 0.0, 1.0 - s.p_emit);
    s.pulse_area = area;
    s.power_over_pi = (area / units::pi) * (area / units::pi);
    return s;
}

SourceStatistics source_at_intensity(const EmitterModel& model, double ratio)
{
    require(ratio > 0.0 && ratio <= 1.0, "source_at_intensity: ratio must lie in (0, 1]");
    auto yield = [&](double area) {
        DrivePulse pulse = model.pulse;
        pulse.area = area;
        return emission_probability(model.tls(), pulse).p_at_least_one;
    };
    const double saturation = yield(units::pi);
    // The fluorescence rises monotonically on [0, pi].
    double lo = 0.0, hi = units::pi;
    for (int i = 0; i < 60 && hi - lo > 1e-12; ++i) {
        const double mid = 0.5 * (lo + hi);
        (yield(mid) < ratio * saturation ? lo : hi) = mid;
    }
    return source_statistics(model, 0.5 * (lo + hi));
}

RabiResult run_rabi(const RabiParams& p)
{
    require(p.pi_power_uw > 0.0, "rabi_curve: pi_power_uw must be > 0");
    require(p.peak_count_mhz > 0.0, "rabi_curve: peak_count_mhz must be > 0");
    require(p.noise_fraction >= 0.0, "rabi_curve: noise_fraction must be >= 0");
    RabiResult r;
    r.powers_uw = p.powers_uw;
    if (r.powers_uw.empty()) {
        require(p.n_points >= 5 && p.max_power_uw > 0.0, "rabi_curve: need n_points >= 5");
        for (int i = 0; i < p.n_points; ++i) {
            r.powers_uw.push_back(p.max_power_uw * i / (p.n_points - 1));
        }
    }
    require(std::is_sorted(r.powers_uw.begin(), r.powers_uw.end()),
            "rabi_curve: powers must be increasing");

    const TlsParams tls = p.emitter.tls();
    for (double power : r.powers_uw) {
        DrivePulse pulse = p.emitter.pulse;
        pulse.area = pulse_area_for_power(power, p.pi_power_uw);
        r.p_detect.push_back(emission_probability(tls, pulse).p_at_least_one);
    }

    // First local maximum, refined by a parabola through its neighbours.
    std::size_t imax = 0;
    for (std::size_t i = 1; i + 1 < r.p_detect.size(); ++i) {
        if (r.p_detect[i] >= r.p_detect[i - 1] && r.p_detect[i] > r.p_detect[i + 1]) {
            imax = i;
            break;
        }
    }
    if (imax == 0) throw SearchError("rabi_curve: no interior maximum in the power range");
    {
        const double x0 = r.powers_uw[imax - 1], x1 = r.powers_uw[imax], x2 = r.powers_uw[imax + 1];
        const double y0 = r.p_detect[imax - 1], y1 = r.p_detect[imax], y2 = r.p_detect[imax + 1];
        const double denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
        const double a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
        const double b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
        r.first_max_power_uw = a < 0.0 ? -b / (2.0 * a) : x1;
    }

    const double scale = p.peak_count_mhz / r.p_detect[imax];
    Rng rng(p.seed);
    for (double pd : r.p_detect) {
        double c = scale * pd;
        if (p.noise_fraction > 0.0) c *= 1.0 + p.noise_fraction * rng.normal();
        r.counts_mhz.push_back(c);
    }
    r.fit = fit_rabi_curve(r.powers_uw, r.counts_mhz);
    return r;
}

LifetimeResult run_lifetime(const LifetimeParams& p)
{
    require(!p.lifetimes_ps.empty(), "lifetime: lifetimes_ps must not be empty");
    require(p.events > 0.0, "lifetime: events must be > 0");
    LifetimeResult r;
    const double fit_start = p.fit_start_ps > 0.0 ? p.fit_start_ps : p.pulse.support_end_ps();
    Rng rng(p.seed);
    for (double tau : p.lifetimes_ps) {
        require(tau > 0.0, "lifetime: lifetimes must be > 0");
        const DecayHistogram h =
            decay_histogram(TlsParams::from_lifetime_ps(tau), p.pulse, p.bin_ps, p.span_ps);
        if (r.t_ps.empty()) {
            for (double t0 : h.bin_start_ps) r.t_ps.push_back(t0 + 0.5 * p.bin_ps);
        }
        const double norm = p.events / h.total();
        std::vector<double> counts;
        counts.reserve(h.probability.size());
        for (double prob : h.probability) {
            counts.push_back(static_cast<double>(rng.poisson(std::max(0.0, prob) * norm)));
        }
        r.fits.push_back(fit_lifetime(r.t_ps, counts, fit_start));
        r.purcell.push_back(purcell_from_lifetimes(r.fits.back().value("tau_ps"), p.bulk_lifetime_ps));
        r.counts.push_back(std::move(counts));
    }
    return r;
}

MollowResult run_mollow(const MollowParams& p)
{
    require(p.k_ghz_per_sqrt_mw > 0.0, "mollow_series: k must be > 0");
    require(p.powers_mw.size() >= 3, "mollow_series: need at least 3 powers");
    MollowResult r;
    r.freqs_ghz = frequency_grid(-p.half_range_ghz, p.half_range_ghz, p.grid_points);
    SpectrumOptions opts;
    opts.resolution_fwhm_ghz = p.resolution_fwhm_ghz;

    auto spectrum_at = [&](double power) {
        const double rabi_ghz = p.k_ghz_per_sqrt_mw * std::sqrt(power);
        const double omega = units::ghz_to_angular(rabi_ghz);
        TlsParams tls = TlsParams::from_lifetime_ps(p.lifetime_ps, p.eid.dephasing(omega));
        return std::pair{rabi_ghz, emission_spectrum(tls, omega, r.freqs_ghz, opts)};
    };

    std::vector<std::pair<double, TripletFit>> series;
    for (double power : p.powers_mw) {
        require(power > 0.0, "mollow_series: powers must be > 0");
        const auto [rabi, spec] = spectrum_at(power);
        MollowPoint pt{power, rabi, fit_triplet(spec)};
        series.emplace_back(power, pt.fit);
        r.points.push_back(pt);
    }
    for (double power : p.spectra_powers_mw) {
        r.spectra.push_back(spectrum_at(power).second.intensity);
    }
    r.scaling = scaling_fits(series);
    r.recovered = eid_from_scaling(r.scaling, TlsParams::from_lifetime_ps(p.lifetime_ps).gamma_rad);
    return r;
}

DbrResult run_dbr(const DbrParams& p)
{
    DbrResult r;
    const LayerStack stack = planar_microcavity(p.design);
    r.spectrum = reflectance_spectrum(stack, wavelength_grid(p.lambda_min_nm, p.lambda_max_nm, p.n_points));
    const ResonanceSearch search{p.design.design_nm - p.search_half_window_nm,
                                 p.design.design_nm + p.search_half_window_nm, 20001};
    r.resonance = cavity_resonance(stack, search);
    if (p.target_splitting_ghz > 0.0) {
        r.delta_n = anisotropy_for_splitting(stack, p.target_splitting_ghz, search);
        r.splitting_ghz = birefringent_splitting(stack, r.delta_n, search);
    }
    return r;
}

std::vector<EfficiencyRow> run_efficiency(const EfficiencyParams& p)
{
    std::vector<EfficiencyRow> rows;
    for (const EfficiencyCase& c : p.cases) {
        rows.push_back({c.name, c.rates.detected_mhz, chain_transmission(c.budget),
                        extraction_efficiency(c.rates, c.budget)});
    }
    return rows;
}

} // namespace qdsps
