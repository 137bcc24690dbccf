#include "qdsps/scenario.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "qdsps/error.hpp"
#include "qdsps/log.hpp"
#include "qdsps/rng.hpp"
#include "qdsps/tagfile.hpp"
#include "qdsps/units.hpp"

namespace qdsps {

using nlohmann::json;

// ---------------------------------------------------------------- output

namespace {

std::string format_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

} // namespace

std::string Table::to_csv() const
{
    std::ostringstream os;
    for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
    os << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_number(row[i]);
        os << '\n';
    }
    return os.str();
}

json Table::to_json() const
{
    json j;
    j["columns"] = columns;
    j["rows"] = rows;
    return j;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content)
{
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw Error("cannot write " + tmp.string());
        os << content;
        os.flush();
        if (!os) throw Error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::vector<std::filesystem::path> write_output(const ScenarioOutput& out,
                                                const std::filesystem::path& dir,
                                                OutputFormat format)
{
    const std::filesystem::path sub = dir / out.name;
    std::filesystem::create_directories(sub);
    std::vector<std::filesystem::path> written;
    if (format == OutputFormat::csv) {
        for (const Table& t : out.tables) {
            written.push_back(sub / (t.name + ".csv"));
            write_file_atomic(written.back(), t.to_csv());
        }
        written.push_back(sub / "summary.json");
        write_file_atomic(written.back(), out.summary.dump(2) + "\n");
    } else {
        json j;
        j["summary"] = out.summary;
        for (const Table& t : out.tables) j["tables"][t.name] = t.to_json();
        written.push_back(sub / (out.name + ".json"));
        write_file_atomic(written.back(), j.dump(2) + "\n");
    }
    for (const auto& [stem, tags] : out.tag_files) {
        std::ostringstream bytes;
        write_tags_binary(bytes, tags);
        written.push_back(sub / (stem + ".bin"));
        write_file_atomic(written.back(), bytes.str());
    }
    return written;
}

// ------------------------------------------------------- config reading

namespace {

double positive(const ConfigTable& t, const std::string& key, double fallback)
{
    const double v = t.get_double(key, fallback);
    if (!(std::isfinite(v) && v > 0.0)) t.fail(key, "must be > 0");
    return v;
}

double non_negative(const ConfigTable& t, const std::string& key, double fallback)
{
    const double v = t.get_double(key, fallback);
    if (!(std::isfinite(v) && v >= 0.0)) t.fail(key, "must be >= 0");
    return v;
}

double probability(const ConfigTable& t, const std::string& key, double fallback)
{
    const double v = t.get_double(key, fallback);
    if (!(std::isfinite(v) && v >= 0.0 && v <= 1.0)) t.fail(key, "must lie in [0, 1]");
    return v;
}

// Optional calibration targets use a negative sentinel when absent.
double optional_target(const ConfigTable& t, const std::string& key)
{
    if (!t.has(key)) return -1.0;
    const double v = t.get_double(key);
    if (!(std::isfinite(v) && v >= 0.0 && v < 1.0)) t.fail(key, "must lie in [0, 1)");
    return v;
}

std::vector<double> positive_list(const ConfigTable& t, const std::string& key,
                                  std::vector<double> fallback)
{
    std::vector<double> v = t.get_doubles(key, std::move(fallback));
    if (v.empty()) t.fail(key, "must not be empty");
    for (double x : v) {
        if (!(std::isfinite(x) && x > 0.0)) t.fail(key, "all entries must be > 0");
    }
    return v;
}

const std::vector<std::string> kEmitterKeys{"lifetime_ps", "gamma_phi_per_ns", "pulse_fwhm_ps",
                                            "pulse_shape", "rep_period_ns"};
const std::vector<std::string> kStreamKeys{"rep_period_ns", "n_pulses",      "p_emit",
                                           "p_reexc",       "leak_mean",     "lifetime_ps",
                                           "pulse_fwhm_ps", "jitter_fwhm_ps", "dead_time_ps",
                                           "det_eff",       "threads"};
const std::vector<std::string> kBinningKeys{"bin_ps", "span_ns"};

std::vector<std::string> join(std::initializer_list<std::vector<std::string>> parts)
{
    std::vector<std::string> out{"kind"};
    for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

DrivePulse read_pulse(const ConfigTable& t)
{
    DrivePulse pulse;
    pulse.fwhm_ps = positive(t, "pulse_fwhm_ps", pulse.fwhm_ps);
    pulse.rep_period_ns = positive(t, "rep_period_ns", pulse.rep_period_ns);
    const std::string shape = t.get_string("pulse_shape", "gaussian");
    if (shape == "gaussian") {
        pulse.shape = PulseShape::gaussian;
    } else if (shape == "square") {
        pulse.shape = PulseShape::square;
    } else {
        t.fail("pulse_shape", "expected \"gaussian\" or \"square\"");
    }
    return pulse;
}

EmitterModel read_emitter(const ConfigTable& t)
{
    EmitterModel m;
    m.lifetime_ps = positive(t, "lifetime_ps", m.lifetime_ps);
    m.gamma_phi = non_negative(t, "gamma_phi_per_ns", m.gamma_phi);
    m.pulse = read_pulse(t);
    return m;
}

StreamConfig read_stream(const ConfigTable& t, std::uint64_t seed, unsigned threads)
{
    StreamConfig c;
    c.rep_period_ns = positive(t, "rep_period_ns", c.rep_period_ns);
    const std::int64_t n = t.get_int("n_pulses", 1000000);
    if (n < 0) t.fail("n_pulses", "must be >= 0");
    c.n_pulses = static_cast<std::uint64_t>(n);
    c.p_emit = probability(t, "p_emit", c.p_emit);
    c.p_reexc = probability(t, "p_reexc", c.p_reexc);
    if (c.p_emit + c.p_reexc > 1.0 + 1e-12) t.fail("p_reexc", "p_emit + p_reexc must be <= 1");
    c.leak_mean = non_negative(t, "leak_mean", c.leak_mean);
    c.lifetime_ps = positive(t, "lifetime_ps", c.lifetime_ps);
    c.pulse_fwhm_ps = non_negative(t, "pulse_fwhm_ps", c.pulse_fwhm_ps);
    c.jitter_fwhm_ps = non_negative(t, "jitter_fwhm_ps", c.jitter_fwhm_ps);
    c.dead_time_ps = non_negative(t, "dead_time_ps", c.dead_time_ps);
    if (t.has("det_eff")) {
        const std::vector<double> eff = t.get_doubles("det_eff");
        if (eff.size() != 2) t.fail("det_eff", "expected two entries (channel 0, channel 1)");
        for (double e : eff) {
            if (!(e >= 0.0 && e <= 1.0)) t.fail("det_eff", "entries must lie in [0, 1]");
        }
        c.det_eff = {eff[0], eff[1]};
    }
    const std::int64_t th = t.get_int("threads", threads);
    if (th < 0) t.fail("threads", "must be >= 0");
    c.threads = static_cast<unsigned>(th);
    c.seed = seed;
    return c;
}

Binning read_binning(const ConfigTable& t, const StreamConfig& stream)
{
    Binning b;
    const std::int64_t bin = t.get_int("bin_ps", b.bin_ps);
    if (bin <= 0) t.fail("bin_ps", "must be > 0");
    const double span_ns = positive(t, "span_ns", 100.0);
    const auto span = static_cast<std::int64_t>(std::llround(span_ns * units::ps_per_ns));
    if (span % bin != 0) t.fail("span_ns", "must be a multiple of bin_ps");
    const std::int64_t reach = 6 * stream.rep_period_ps() + stream.rep_period_ps() / 4;
    if (span < reach) {
        t.fail("span_ns", "must reach the sixth side peak plus its window (" +
                              std::to_string(reach) + " ps)");
    }
    b.bin_ps = bin;
    b.span_ps = span;
    return b;
}

json estimate_json(const Estimate& e) { return {{"value", e.value}, {"error", e.error}}; }

json stream_json(const StreamConfig& c)
{
    return {{"rep_period_ns", c.rep_period_ns}, {"n_pulses", c.n_pulses},
            {"p_emit", c.p_emit},               {"p_reexc", c.p_reexc},
            {"leak_mean", c.leak_mean},         {"lifetime_ps", c.lifetime_ps},
            {"pulse_fwhm_ps", c.pulse_fwhm_ps}, {"jitter_fwhm_ps", c.jitter_fwhm_ps},
            {"dead_time_ps", c.dead_time_ps},   {"det_eff", c.det_eff},
            {"seed", c.seed}};
}

json windows_json(const StreamConfig& c, const Binning& b)
{
    const PeakWindows w = PeakWindows::for_period(c.rep_period_ps());
    return {{"bin_ps", b.bin_ps},
            {"span_ps", b.span_ps},
            {"center_half_window_ps", w.half_window_ps},
            {"side_peaks", {w.first_side_peak, w.last_side_peak}}};
}

Table histogram_table(const std::string& name, const std::vector<std::string>& columns,
                      const std::vector<const CorrelationHistogram*>& hists)
{
    Table t{name, columns, {}};
    const CorrelationHistogram& h0 = *hists.front();
    for (std::size_t k = 0; k < h0.size(); ++k) {
        std::vector<double> row{h0.bin_center_ps(k) / units::ps_per_ns};
        for (const auto* h : hists) row.push_back(static_cast<double>(h->counts[k]));
        t.rows.push_back(std::move(row));
    }
    return t;
}

// ------------------------------------------------------------ per kind

ScenarioOutput rabi_scenario(const ConfigTable& t, std::uint64_t seed)
{
    t.reject_unknown(join({kEmitterKeys, {"pi_power_uw", "powers_uw", "max_power_uw", "n_points",
                                          "peak_count_mhz", "noise_fraction"}}));
    RabiParams p;
    p.emitter = read_emitter(t);
    p.pi_power_uw = positive(t, "pi_power_uw", p.pi_power_uw);
    if (t.has("powers_uw")) p.powers_uw = t.get_doubles("powers_uw");
    p.max_power_uw = positive(t, "max_power_uw", p.max_power_uw);
    p.n_points = static_cast<int>(t.get_int("n_points", p.n_points));
    if (p.n_points < 5) t.fail("n_points", "must be >= 5");
    p.peak_count_mhz = positive(t, "peak_count_mhz", p.peak_count_mhz);
    p.noise_fraction = non_negative(t, "noise_fraction", p.noise_fraction);
    p.seed = seed;
    const RabiResult r = run_rabi(p);

    ScenarioOutput out;
    Table fig{"fig2d", {"power_uw", "p_detect", "counts_mhz", "fit_counts_mhz"}, {}};
    const double a = r.fit.value("A"), ppi = r.fit.value("P_pi"), b = r.fit.value("B");
    for (std::size_t i = 0; i < r.powers_uw.size(); ++i) {
        const double s = std::sin(0.5 * units::pi * std::sqrt(r.powers_uw[i] / ppi));
        fig.rows.push_back({r.powers_uw[i], r.p_detect[i], r.counts_mhz[i], a * s * s + b});
    }
    out.tables.push_back(std::move(fig));
    out.summary = {{"pi_power_uw", p.pi_power_uw},
                   {"first_max_power_uw", r.first_max_power_uw},
                   {"fit_p_pi_uw", ppi},
                   {"fit_p_pi_err_uw", r.fit.error("P_pi")},
                   {"fit_amplitude_mhz", a},
                   {"fit_background_mhz", b},
                   {"fit_r_squared", r.fit.r_squared},
                   {"lifetime_ps", p.emitter.lifetime_ps},
                   {"pulse_fwhm_ps", p.emitter.pulse.fwhm_ps}};
    return out;
}

ScenarioOutput lifetime_scenario(const ConfigTable& t, std::uint64_t seed)
{
    t.reject_unknown(join({{"lifetimes_ps", "pulse_fwhm_ps", "pulse_shape", "rep_period_ns", "events",
                            "bin_ps", "span_ps", "fit_start_ps", "bulk_lifetime_ps"}}));
    LifetimeParams p;
    p.lifetimes_ps = positive_list(t, "lifetimes_ps", p.lifetimes_ps);
    p.pulse = read_pulse(t);
    p.events = positive(t, "events", p.events);
    p.bin_ps = positive(t, "bin_ps", p.bin_ps);
    p.span_ps = positive(t, "span_ps", p.span_ps);
    if (p.span_ps > p.pulse.rep_period_ns * units::ps_per_ns) t.fail("span_ps", "must not exceed the period");
    p.fit_start_ps = non_negative(t, "fit_start_ps", p.fit_start_ps);
    p.bulk_lifetime_ps = positive(t, "bulk_lifetime_ps", p.bulk_lifetime_ps);
    p.seed = seed;
    const LifetimeResult r = run_lifetime(p);

    ScenarioOutput out;
    Table fig{"fig2c", {"t_ps"}, {}};
    for (double tau : p.lifetimes_ps) fig.columns.push_back("counts_tau_" + format_number(tau) + "ps");
    for (std::size_t k = 0; k < r.t_ps.size(); ++k) {
        std::vector<double> row{r.t_ps[k]};
        for (const auto& c : r.counts) row.push_back(c[k]);
        fig.rows.push_back(std::move(row));
    }
    out.tables.push_back(std::move(fig));
    json fits = json::array();
    for (std::size_t i = 0; i < p.lifetimes_ps.size(); ++i) {
        fits.push_back({{"injected_tau_ps", p.lifetimes_ps[i]},
                        {"fitted_tau_ps", r.fits[i].value("tau_ps")},
                        {"fitted_tau_err_ps", r.fits[i].error("tau_ps")},
                        {"purcell_vs_bulk", r.purcell[i]}});
    }
    out.summary = {{"fits", fits}, {"events", p.events}, {"bulk_lifetime_ps", p.bulk_lifetime_ps}};
    return out;
}

ScenarioOutput hbt_scenario(const ConfigTable& t, std::uint64_t seed, unsigned threads)
{
    t.reject_unknown(join({kStreamKeys, kBinningKeys,
                           {"from_emitter", "gamma_phi_per_ns", "pulse_shape", "intensity_ratio",
                            "target_g2", "save_tags"}}));
    HbtParams p;
    p.stream = read_stream(t, seed, threads);
    p.from_emitter = t.get_bool("from_emitter", false);
    p.emitter = read_emitter(t);
    p.intensity_ratio = positive(t, "intensity_ratio", 1.0);
    if (p.intensity_ratio > 1.0) t.fail("intensity_ratio", "must lie in (0, 1]");
    p.target_g2 = optional_target(t, "target_g2");
    p.binning = read_binning(t, p.stream);
    p.keep_tags = t.get_bool("save_tags", false);
    HbtResult r = run_hbt(p);

    ScenarioOutput out;
    out.tables.push_back(histogram_table("fig3c", {"delay_ns", "counts"}, {&r.hist}));
    out.summary = {{"g2_zero", r.g2.value},
                   {"g2_err", r.g2.error},
                   {"purity", 1.0 - r.g2.value},
                   {"oracle_g2", r.oracle_g2},
                   {"center_area", r.areas.center_area},
                   {"side_area_mean", r.areas.side_mean()},
                   {"n_tags", r.n_tags},
                   {"windows", windows_json(r.stream, p.binning)},
                   {"stream", stream_json(r.stream)}};
    if (p.keep_tags) out.tag_files.emplace_back("tags", std::move(r.tags));
    return out;
}

ScenarioOutput hom_scenario(const ConfigTable& t, std::uint64_t seed, unsigned threads)
{
    t.reject_unknown(join({kStreamKeys, kBinningKeys,
                           {"from_emitter", "gamma_phi_per_ns", "pulse_shape", "intensity_ratio",
                            "target_g2", "bs_reflectance", "target_v_raw", "overlap", "correction"}}));
    HomParams p;
    p.stream = read_stream(t, seed, threads);
    p.from_emitter = t.get_bool("from_emitter", false);
    p.emitter = read_emitter(t);
    p.intensity_ratio = positive(t, "intensity_ratio", 1.0);
    if (p.intensity_ratio > 1.0) t.fail("intensity_ratio", "must lie in (0, 1]");
    p.target_g2 = optional_target(t, "target_g2");
    p.bs_reflectance = probability(t, "bs_reflectance", p.bs_reflectance);
    if (p.bs_reflectance <= 0.0 || p.bs_reflectance >= 1.0) t.fail("bs_reflectance", "must lie in (0, 1)");
    p.target_v_raw = optional_target(t, "target_v_raw");
    p.overlap = t.has("overlap") ? probability(t, "overlap", 1.0) : -1.0;
    p.correction = t.get_string("correction", p.correction);
    try {
        (void)visibility_correction(p.correction);
    } catch (const ValidationError& e) {
        t.fail("correction", e.what());
    }
    p.binning = read_binning(t, p.stream);
    const HomResult r = run_hom(p);

    ScenarioOutput out;
    out.tables.push_back(histogram_table("fig3d", {"delay_ns", "counts_parallel", "counts_orthogonal"},
                                         {&r.hist_par, &r.hist_perp}));
    out.summary = {{"g_par", estimate_json(r.g_par)},
                   {"g_perp", estimate_json(r.g_perp)},
                   {"v_raw", r.v_raw.value},
                   {"v_err", r.v_raw.error},
                   {"g2_zero", analytic_g2_oracle(r.stream)},
                   {"m_corrected", r.corrected.m},
                   {"m_unclamped", r.corrected.unclamped},
                   {"m_clamped", r.corrected.clamped},
                   {"correction", p.correction},
                   {"bs_reflectance", r.hom.bs_reflectance},
                   {"overlap", r.hom.overlap},
                   {"oracle", {{"g_par", r.oracle.g_par}, {"g_perp", r.oracle.g_perp},
                               {"v_raw", r.oracle.v_raw}}},
                   {"windows", windows_json(r.stream, p.binning)},
                   {"stream", stream_json(r.stream)}};
    return out;
}

json sweep_json(const std::vector<SweepPoint>& pts)
{
    json arr = json::array();
    for (const SweepPoint& pt : pts) {
        arr.push_back({{"x", pt.x}, {"g2", pt.g2.value}, {"g2_err", pt.g2.error},
                       {"v_raw", pt.v_raw.value}, {"v_err", pt.v_raw.error},
                       {"oracle_g2", pt.oracle_g2}, {"oracle_v_raw", pt.oracle_v_raw}});
    }
    return arr;
}

ScenarioOutput temperature_scenario(const ConfigTable& t, std::uint64_t seed, unsigned threads)
{
    t.reject_unknown(join({kStreamKeys, kBinningKeys,
                           {"bulk_lifetime_ps", "peak_purcell", "kappa_ghz", "gamma_phi_per_ns",
                            "detunings_ghz", "bs_reflectance"}}));
    TemperatureSweepParams p;
    p.stream = read_stream(t, seed, threads);
    p.bulk_lifetime_ps = positive(t, "bulk_lifetime_ps", p.bulk_lifetime_ps);
    p.peak_purcell = positive(t, "peak_purcell", p.peak_purcell);
    if (p.peak_purcell < 1.0) t.fail("peak_purcell", "must be >= 1");
    p.kappa_ghz = positive(t, "kappa_ghz", p.kappa_ghz);
    p.gamma_phi = non_negative(t, "gamma_phi_per_ns", p.gamma_phi);
    p.detunings_ghz = t.get_doubles("detunings_ghz", p.detunings_ghz);
    if (p.detunings_ghz.empty()) t.fail("detunings_ghz", "must not be empty");
    p.bs_reflectance = probability(t, "bs_reflectance", p.bs_reflectance);
    if (p.bs_reflectance <= 0.0 || p.bs_reflectance >= 1.0) t.fail("bs_reflectance", "must lie in (0, 1)");
    p.binning = read_binning(t, p.stream);
    const auto pts = run_temperature_sweep(p);

    ScenarioOutput out;
    Table fig{"fig3e",
              {"detuning_ghz", "lifetime_ps", "overlap", "g2", "g2_err", "purity", "v_raw", "v_err",
               "oracle_g2", "oracle_v_raw"},
              {}};
    for (const SweepPoint& pt : pts) {
        fig.rows.push_back({pt.x, pt.lifetime_ps, pt.overlap, pt.g2.value, pt.g2.error,
                            1.0 - pt.g2.value, pt.v_raw.value, pt.v_raw.error, pt.oracle_g2,
                            pt.oracle_v_raw});
    }
    out.tables.push_back(std::move(fig));
    out.summary = {{"points", sweep_json(pts)}, {"stream", stream_json(p.stream)}};
    return out;
}

ScenarioOutput power_scenario(const ConfigTable& t, std::uint64_t seed, unsigned threads)
{
    t.reject_unknown(join({kStreamKeys, kBinningKeys,
                           {"gamma_phi_per_ns", "pulse_shape", "intensity_ratios", "leak_at_pi",
                            "anchor_ratio", "anchor_g2", "bs_reflectance", "overlap"}}));
    PowerSweepParams p;
    p.stream = read_stream(t, seed, threads);
    p.emitter = read_emitter(t);
    p.intensity_ratios = positive_list(t, "intensity_ratios", p.intensity_ratios);
    for (double x : p.intensity_ratios) {
        if (x > 1.0) t.fail("intensity_ratios", "entries must lie in (0, 1]");
    }
    p.leak_at_pi = t.has("leak_at_pi") ? non_negative(t, "leak_at_pi", 0.0) : -1.0;
    p.anchor_ratio = probability(t, "anchor_ratio", p.anchor_ratio);
    if (p.anchor_ratio <= 0.0) t.fail("anchor_ratio", "must be > 0");
    p.anchor_g2 = probability(t, "anchor_g2", p.anchor_g2);
    p.bs_reflectance = probability(t, "bs_reflectance", p.bs_reflectance);
    if (p.bs_reflectance <= 0.0 || p.bs_reflectance >= 1.0) t.fail("bs_reflectance", "must lie in (0, 1)");
    p.overlap = t.has("overlap") ? probability(t, "overlap", 1.0) : -1.0;
    p.binning = read_binning(t, p.stream);
    const auto pts = run_power_sweep(p);

    ScenarioOutput out;
    Table fig{"fig3f",
              {"intensity_ratio", "power_over_pi", "p_emit", "p_reexc", "leak_mean", "g2", "g2_err",
               "purity", "v_raw", "v_err", "oracle_g2", "oracle_v_raw"},
              {}};
    for (const SweepPoint& pt : pts) {
        const double power = pt.stream.leak_mean / calibrate_leak_at_pi(p);
        fig.rows.push_back({pt.x, power, pt.stream.p_emit, pt.stream.p_reexc, pt.stream.leak_mean,
                            pt.g2.value, pt.g2.error, 1.0 - pt.g2.value, pt.v_raw.value,
                            pt.v_raw.error, pt.oracle_g2, pt.oracle_v_raw});
    }
    out.tables.push_back(std::move(fig));
    out.summary = {{"points", sweep_json(pts)},
                   {"leak_at_pi", calibrate_leak_at_pi(p)},
                   {"bs_reflectance", p.bs_reflectance}};
    return out;
}

ScenarioOutput mollow_scenario(const ConfigTable& t)
{
    t.reject_unknown(join({{"lifetime_ps", "eid_gamma0_per_ns", "eid_c_ns", "k_ghz_per_sqrt_mw",
                            "powers_mw", "spectra_powers_mw", "half_range_ghz", "grid_points",
                            "resolution_fwhm_ghz"}}));
    MollowParams p;
    p.lifetime_ps = positive(t, "lifetime_ps", p.lifetime_ps);
    p.eid.gamma0 = non_negative(t, "eid_gamma0_per_ns", p.eid.gamma0);
    p.eid.c = non_negative(t, "eid_c_ns", p.eid.c);
    p.k_ghz_per_sqrt_mw = positive(t, "k_ghz_per_sqrt_mw", p.k_ghz_per_sqrt_mw);
    p.powers_mw = positive_list(t, "powers_mw", p.powers_mw);
    if (p.powers_mw.size() < 3) t.fail("powers_mw", "need at least 3 powers");
    p.spectra_powers_mw = positive_list(t, "spectra_powers_mw", p.spectra_powers_mw);
    p.half_range_ghz = positive(t, "half_range_ghz", p.half_range_ghz);
    const double max_split = p.k_ghz_per_sqrt_mw *
                             std::sqrt(*std::max_element(p.powers_mw.begin(), p.powers_mw.end()));
    if (p.half_range_ghz < 3.0 * max_split) t.fail("half_range_ghz", "must cover 3x the largest splitting");
    const std::int64_t n = t.get_int("grid_points", static_cast<std::int64_t>(p.grid_points));
    if (n < 101) t.fail("grid_points", "must be >= 101");
    p.grid_points = static_cast<std::size_t>(n);
    p.resolution_fwhm_ghz = non_negative(t, "resolution_fwhm_ghz", p.resolution_fwhm_ghz);
    const MollowResult r = run_mollow(p);

    ScenarioOutput out;
    Table spectra{"fig4a", {"freq_ghz"}, {}};
    for (double pw : p.spectra_powers_mw) spectra.columns.push_back("intensity_" + format_number(pw) + "mW");
    for (std::size_t k = 0; k < r.freqs_ghz.size(); ++k) {
        std::vector<double> row{r.freqs_ghz[k]};
        for (const auto& s : r.spectra) row.push_back(s[k]);
        spectra.rows.push_back(std::move(row));
    }
    Table split{"fig4b", {"power_mw", "sqrt_power", "rabi_ghz", "split_ghz", "split_err_ghz"}, {}};
    Table width{"fig4c", {"split_sq_ghz2", "sideband_fwhm_ghz", "sideband_fwhm_err_ghz", "center_fwhm_ghz"}, {}};
    for (const MollowPoint& pt : r.points) {
        split.rows.push_back({pt.power_mw, std::sqrt(pt.power_mw), pt.rabi_ghz, pt.fit.rabi_split_ghz,
                              pt.fit.rabi_split_err});
        width.rows.push_back({pt.fit.rabi_split_ghz * pt.fit.rabi_split_ghz, pt.fit.sideband_width_ghz,
                              pt.fit.sideband_width_err, pt.fit.center_width_ghz});
    }
    out.tables.push_back(std::move(spectra));
    out.tables.push_back(std::move(split));
    out.tables.push_back(std::move(width));
    const MollowPoint& last = r.points.back();
    out.summary = {{"k_ghz_per_sqrt_mw", r.scaling.k},
                   {"k_err", r.scaling.k_err},
                   {"r2_split", r.scaling.r2_split},
                   {"width_intercept_ghz", r.scaling.gamma0_ghz},
                   {"width_slope_per_ghz", r.scaling.c_per_ghz},
                   {"r2_width", r.scaling.r2_width},
                   {"eid_injected", {{"gamma0_per_ns", p.eid.gamma0}, {"c_ns", p.eid.c}}},
                   {"eid_recovered", {{"gamma0_per_ns", r.recovered.gamma0}, {"c_ns", r.recovered.c}}},
                   {"last_power_mw", last.power_mw},
                   {"last_split_ghz", last.fit.rabi_split_ghz}};
    return out;
}

ScenarioOutput dbr_scenario(const ConfigTable& t)
{
    t.reject_unknown(join({{"design_nm", "top_pairs", "bottom_pairs", "spacer_wavelengths", "n_gaas",
                            "n_algaas", "n_sio2", "n_tio2", "lambda_min_nm", "lambda_max_nm",
                            "n_points", "search_half_window_nm", "target_splitting_ghz"}}));
    DbrParams p;
    MicrocavityDesign& d = p.design;
    d.design_nm = positive(t, "design_nm", d.design_nm);
    d.top_pairs = static_cast<int>(t.get_int("top_pairs", d.top_pairs));
    if (d.top_pairs < 0) t.fail("top_pairs", "must be >= 0");
    d.bottom_pairs = static_cast<int>(t.get_int("bottom_pairs", d.bottom_pairs));
    if (d.bottom_pairs < 0) t.fail("bottom_pairs", "must be >= 0");
    d.spacer_wavelengths = positive(t, "spacer_wavelengths", d.spacer_wavelengths);
    for (auto [key, ref] : {std::pair{"n_gaas", &d.indices.gaas}, std::pair{"n_algaas", &d.indices.algaas},
                            std::pair{"n_sio2", &d.indices.sio2}, std::pair{"n_tio2", &d.indices.tio2}}) {
        *ref = t.get_double(key, *ref);
        if (!(*ref >= 1.0)) t.fail(key, "refractive index must be >= 1");
    }
    p.lambda_min_nm = positive(t, "lambda_min_nm", p.lambda_min_nm);
    p.lambda_max_nm = positive(t, "lambda_max_nm", p.lambda_max_nm);
    if (p.lambda_max_nm <= p.lambda_min_nm) t.fail("lambda_max_nm", "must exceed lambda_min_nm");
    const std::int64_t n = t.get_int("n_points", static_cast<std::int64_t>(p.n_points));
    if (n < 2) t.fail("n_points", "must be >= 2");
    p.n_points = static_cast<std::size_t>(n);
    p.search_half_window_nm = positive(t, "search_half_window_nm", p.search_half_window_nm);
    p.target_splitting_ghz = non_negative(t, "target_splitting_ghz", p.target_splitting_ghz);
    const DbrResult r = run_dbr(p);

    ScenarioOutput out;
    Table spec{"dbr_spectrum", {"lambda_nm", "reflectance", "transmittance"}, {}};
    for (const SpectrumPoint& s : r.spectrum) spec.rows.push_back({s.lambda_nm, s.reflectance, s.transmittance});
    out.tables.push_back(std::move(spec));
    out.summary = {{"resonance_nm", r.resonance.lambda_nm},
                   {"fwhm_nm", r.resonance.fwhm_nm},
                   {"q_factor", r.resonance.q},
                   {"peak_transmittance", r.resonance.peak_transmittance},
                   {"target_splitting_ghz", p.target_splitting_ghz},
                   {"anisotropy_delta_n", r.delta_n},
                   {"splitting_ghz", r.splitting_ghz}};
    return out;
}

ScenarioOutput efficiency_scenario(const Config& cfg, const ConfigTable& t)
{
    t.reject_unknown({"kind", "cases"});
    EfficiencyParams p;
    for (const std::string& name : t.get_strings("cases")) {
        const std::string sub = t.name() + "." + name;
        if (!cfg.has_table(sub)) t.fail("cases", "no table [" + sub + "] for case '" + name + "'");
        const ConfigTable& c = cfg.table(sub);
        c.reject_unknown({"detected_mhz", "rep_mhz", "stage_names", "stage_transmissions", "apd_correction"});
        EfficiencyCase ec;
        ec.name = name;
        ec.rates.detected_mhz = non_negative(c, "detected_mhz", 0.0);
        ec.rates.rep_mhz = positive(c, "rep_mhz", 80.1);
        const auto names = c.has("stage_names") ? c.get_strings("stage_names") : std::vector<std::string>{};
        const auto trans = c.get_doubles("stage_transmissions", {});
        if (names.size() != trans.size()) c.fail("stage_transmissions", "length must match stage_names");
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (!(trans[i] > 0.0 && trans[i] <= 1.0)) c.fail("stage_transmissions", "entries must lie in (0, 1]");
            ec.budget.stages.push_back({names[i], trans[i]});
        }
        ec.budget.apd_correction = c.get_double("apd_correction", 1.0);
        if (!(ec.budget.apd_correction >= 1.0)) c.fail("apd_correction", "must be >= 1");
        p.cases.push_back(std::move(ec));
    }
    const auto rows = run_efficiency(p);

    ScenarioOutput out;
    Table tab{"efficiency", {"case_index", "detected_mhz", "rep_mhz", "chain_transmission", "apd_correction", "eta_e"}, {}};
    json cases = json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        tab.rows.push_back({static_cast<double>(i), rows[i].detected_mhz, p.cases[i].rates.rep_mhz, rows[i].chain,
                            p.cases[i].budget.apd_correction, rows[i].eta_e});
        cases.push_back({{"name", rows[i].name},
                         {"detected_mhz", rows[i].detected_mhz},
                         {"chain_transmission", rows[i].chain},
                         {"eta_e", rows[i].eta_e}});
    }
    out.tables.push_back(std::move(tab));
    out.summary = {{"cases", cases}};
    return out;
}

} // namespace

std::vector<std::string> scenario_names(const Config& config)
{
    std::vector<std::string> names;
    for (const ConfigTable* t : config.tables_under("scenario")) {
        const std::string rest = t->name().substr(std::string("scenario.").size());
        if (rest.find('.') == std::string::npos) names.push_back(rest);
    }
    return names;
}

ScenarioOutput run_scenario(const Config& config, const std::string& name, std::uint64_t global_seed)
{
    const std::string table_name = "scenario." + name;
    if (!config.has_table(table_name)) {
        throw ConfigError(config.source() + ": no scenario named '" + name + "' (expected table [" +
                          table_name + "])");
    }
    const ConfigTable& t = config.table(table_name);
    const std::string kind = t.get_string("kind");
    const std::uint64_t seed = derive_seed(global_seed, hash_name(name));
    const std::int64_t threads = config.root().get_int("threads", 0);
    if (threads < 0) config.root().fail("threads", "must be >= 0");
    const auto th = static_cast<unsigned>(threads);
    log::info("running scenario '" + name + "' (" + kind + ")");

    ScenarioOutput out;
    try {
        if (kind == "rabi_curve") out = rabi_scenario(t, seed);
        else if (kind == "lifetime") out = lifetime_scenario(t, seed);
        else if (kind == "hbt") out = hbt_scenario(t, seed, th);
        else if (kind == "hom") out = hom_scenario(t, seed, th);
        else if (kind == "temperature_sweep") out = temperature_scenario(t, seed, th);
        else if (kind == "power_sweep") out = power_scenario(t, seed, th);
        else if (kind == "mollow_series") out = mollow_scenario(t);
        else if (kind == "dbr_spectrum") out = dbr_scenario(t);
        else if (kind == "efficiency_report") out = efficiency_scenario(config, t);
        else {
            std::string expected;
            for (const auto& k : scenario_kinds()) expected += (expected.empty() ? "" : ", ") + k;
            t.fail("kind", "unknown scenario kind '" + kind + "' (expected one of: " + expected + ")");
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        // Keep the module's error class; add the scenario context.
        const std::string msg = "scenario '" + name + "': " + e.what();
        if (dynamic_cast<const ValidationError*>(&e)) throw ValidationError(msg);
        if (dynamic_cast<const FitError*>(&e)) throw FitError(msg);
        if (dynamic_cast<const SearchError*>(&e)) throw SearchError(msg);
        if (dynamic_cast<const IntegrationError*>(&e)) throw IntegrationError(msg);
        if (dynamic_cast<const EstimationError*>(&e)) throw EstimationError(msg);
        throw Error(msg);
    }
    out.name = name;
    out.kind = kind;
    out.summary["scenario"] = name;
    out.summary["kind"] = kind;
    out.summary["seed"] = seed;
    return out;
}

} // namespace qdsps
