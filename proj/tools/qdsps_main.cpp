// Command-line front end: scenario runner, tag-file correlator and fitters.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "qdsps/config.hpp"
#include "qdsps/correlator.hpp"
#include "qdsps/error.hpp"
#include "qdsps/fitting.hpp"
#include "qdsps/log.hpp"
#include "qdsps/scenario.hpp"
#include "qdsps/tagfile.hpp"
#include "qdsps/units.hpp"

namespace {

using nlohmann::json;
using namespace qdsps;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitCompute = 3;

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
    std::string format = "csv";
};

OutputFormat parse_format(const std::string& f) { return f == "json" ? OutputFormat::json : OutputFormat::csv; }

std::uint64_t resolve_seed(const Config& cfg, const Common& c)
{
    if (c.seed) return *c.seed;
    const std::int64_t s = cfg.root().get_int("seed", 1);
    if (s < 0) cfg.root().fail("seed", "must be >= 0");
    return static_cast<std::uint64_t>(s);
}

void check_root(const Config& cfg)
{
    cfg.root().reject_unknown({"seed", "threads", "output_dir"});
    for (const ConfigTable& t : cfg.tables()) {
        if (t.name().empty()) continue;
        if (t.name().rfind("scenario.", 0) != 0) {
            throw ConfigError(cfg.source() + ":" + std::to_string(t.line()) + ": unknown table [" +
                              t.name() + "] (scenarios live under [scenario.<name>])");
        }
    }
}

std::string output_dir(const Config& cfg, const Common& c, bool out_given)
{
    if (out_given) return c.out;
    return cfg.root().get_string("output_dir", c.out);
}

json run_and_write(const Config& cfg, const std::vector<std::string>& names, const Common& c, bool out_given)
{
    const std::uint64_t seed = resolve_seed(cfg, c);
    const std::string dir = output_dir(cfg, c, out_given);
    json report = json::object();
    for (const std::string& name : names) {
        const ScenarioOutput out = run_scenario(cfg, name, seed);
        for (const auto& path : write_output(out, dir, parse_format(c.format))) {
            log::info("wrote " + path.string());
        }
        report[name] = out.summary;
    }
    return report;
}

int cmd_simulate(const std::string& scenario, const Common& c, bool out_given)
{
    if (c.config.empty()) throw ConfigError("simulate: --config <path> is required");
    const Config cfg = Config::load(c.config);
    check_root(cfg);
    std::vector<std::string> names;
    if (scenario == "all") {
        names = scenario_names(cfg);
    } else {
        names.push_back(scenario);
    }
    const json report = run_and_write(cfg, names, c, out_given);
    std::cout << report.dump(2) << '\n';
    return kExitOk;
}

int cmd_report(const std::string& config_path, const Common& c, bool out_given)
{
    const Config cfg = Config::load(config_path);
    check_root(cfg);
    const std::vector<std::string> names = scenario_names(cfg);
    if (names.empty()) throw ConfigError(config_path + ": no [scenario.<name>] tables");
    const json report = run_and_write(cfg, names, c, out_given);
    const std::string dir = output_dir(cfg, c, out_given);
    std::filesystem::create_directories(dir);
    write_file_atomic(std::filesystem::path(dir) / "report.json", report.dump(2) + "\n");
    std::cout << report.dump(2) << '\n';
    return kExitOk;
}

struct CorrelateOptions {
    std::int64_t bin_ps = 40;
    double span_ns = 100.0;
    double rep_ns = 12.48;
    int channel_a = -1;
    int channel_b = -1;
    unsigned chunks = 1;
    std::vector<std::string> perp;
    double g2 = 0.0;
    double reflectance = 0.5;
    std::string correction = "standard";
};

std::vector<std::int64_t> load_times(const std::string& path, int channel)
{
    const TimeTagStream tags = load_tags(path);
    if (channel >= 0) return channel_times(tags, static_cast<std::uint8_t>(channel));
    std::vector<std::int64_t> t;
    t.reserve(tags.size());
    for (const TimeTag& tag : tags) t.push_back(tag.t_ps);
    return t;
}

CorrelationHistogram correlate_files(const std::string& a, const std::string& b, const CorrelateOptions& o)
{
    const auto ta = load_times(a, o.channel_a);
    const auto tb = load_times(b, o.channel_b);
    const auto span = static_cast<std::int64_t>(std::llround(o.span_ns * units::ps_per_ns));
    return correlate_chunked(ta, tb, o.bin_ps, span, o.chunks);
}

int cmd_correlate(const std::string& a, const std::string& b, const CorrelateOptions& o, const Common& c)
{
    const CorrelationHistogram hist = correlate_files(a, b, o);
    const PeakWindows w = PeakWindows::for_period(std::llround(o.rep_ns * units::ps_per_ns));
    const Estimate g = g2_zero(hist, w);

    json summary;
    summary["g2_zero"] = g.value;
    summary["g2_err"] = g.error;
    summary["total_pairs"] = hist.total_pairs;
    summary["windows"] = {{"bin_ps", hist.bin_width_ps},
                          {"span_ps", hist.span_ps},
                          {"center_half_window_ps", w.half_window_ps},
                          {"side_peaks", {w.first_side_peak, w.last_side_peak}}};

    Table table{"correlation", {"delay_ns", "counts"}, {}};
    std::optional<CorrelationHistogram> perp;
    if (o.perp.size() == 2) {
        perp = correlate_files(o.perp[0], o.perp[1], o);
        table.columns.push_back("counts_reference");
        const Estimate g_perp = g2_zero(*perp, w);
        const Estimate v = hom_visibility(g, g_perp);
        const CorrectedVisibility m =
            corrected_visibility(v.value, o.g2, o.reflectance, visibility_correction(o.correction));
        summary["g_perp"] = g_perp.value;
        summary["g_perp_err"] = g_perp.error;
        summary["v_raw"] = v.value;
        summary["v_err"] = v.error;
        summary["m_corrected"] = m.m;
        summary["m_clamped"] = m.clamped;
        summary["correction"] = o.correction;
    }
    for (std::size_t k = 0; k < hist.size(); ++k) {
        std::vector<double> row{hist.bin_center_ps(k) / units::ps_per_ns, static_cast<double>(hist.counts[k])};
        if (perp) row.push_back(static_cast<double>(perp->counts[k]));
        table.rows.push_back(std::move(row));
    }

    ScenarioOutput out{"correlate", "correlate", {table}, summary};
    write_output(out, c.out, parse_format(c.format));
    std::cout << summary.dump(2) << '\n';
    return kExitOk;
}

std::pair<std::vector<double>, std::vector<double>> read_two_columns(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ValidationError("fit: cannot open " + path);
    std::vector<double> x, y;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        double a = 0.0, b = 0.0;
        if (!(ss >> a >> b)) {
            if (x.empty() && lineno == 1) continue; // header
            throw ValidationError("fit: " + path + ":" + std::to_string(lineno) + ": expected two numbers");
        }
        x.push_back(a);
        y.push_back(b);
    }
    return {x, y};
}

int cmd_fit(const std::string& kind, const std::string& csv, double fit_start_ps, const Common& c,
            bool out_given)
{
    const auto [x, y] = read_two_columns(csv);
    FitResult fit;
    if (kind == "rabi") {
        fit = fit_rabi_curve(x, y);
    } else if (kind == "lifetime") {
        fit = fit_lifetime(x, y, fit_start_ps);
    } else {
        throw ConfigError("fit: unknown kind '" + kind + "' (expected rabi or lifetime)");
    }
    json j;
    for (std::size_t i = 0; i < fit.names.size(); ++i) {
        j["parameters"][fit.names[i]] = {{"value", fit.values[i]}, {"error", fit.errors[i]}};
    }
    j["r_squared"] = fit.r_squared;
    j["residual_rms"] = fit.residual_rms;
    j["kind"] = kind;
    if (out_given) {
        Table t{"fit_" + kind, {"index", "value", "error"}, {}};
        for (std::size_t i = 0; i < fit.names.size(); ++i) {
            t.rows.push_back({static_cast<double>(i), fit.values[i], fit.errors[i]});
        }
        write_output({"fit_" + kind, "fit", {t}, j}, c.out, parse_format(c.format));
    }
    std::cout << j.dump(2) << '\n';
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"qdsps: quantum-dot single-photon source simulator"};
    app.require_subcommand(1);

    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "Config file (TOML subset)");
        sub->add_option("--seed", common.seed, "Global RNG seed (overrides the config)");
        sub->add_option("--out", common.out, "Output directory");
        sub->add_option("--format", common.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    };

    std::string scenario;
    auto* simulate = app.add_subcommand("simulate", "Run one scenario from --config ('all' runs every scenario)");
    simulate->add_option("scenario", scenario, "Scenario name")->required();
    add_common(simulate);

    std::string report_config;
    auto* report = app.add_subcommand("report", "Run every scenario in a config and write report.json");
    report->add_option("config_file", report_config, "Config file")->required();
    add_common(report);

    std::string tag_a, tag_b;
    CorrelateOptions copt;
    auto* corr = app.add_subcommand("correlate", "Correlate two time-tag files (binary or CSV)");
    corr->add_option("tagfile_a", tag_a, "Start stream")->required();
    corr->add_option("tagfile_b", tag_b, "Stop stream")->required();
    corr->add_option("--bin-ps", copt.bin_ps, "Histogram bin width (ps)");
    corr->add_option("--span-ns", copt.span_ns, "Histogram half range (ns)");
    corr->add_option("--rep-ns", copt.rep_ns, "Repetition period (ns)");
    corr->add_option("--channel-a", copt.channel_a, "Use only this channel of file a");
    corr->add_option("--channel-b", copt.channel_b, "Use only this channel of file b");
    corr->add_option("--chunks", copt.chunks, "Parallel chunks");
    corr->add_option("--perp", copt.perp, "Orthogonal-polarisation reference files a b (enables V_raw)")
        ->expected(2);
    corr->add_option("--g2", copt.g2, "Measured g2(0) for the visibility correction");
    corr->add_option("--reflectance", copt.reflectance, "Beam-splitter reflectance");
    corr->add_option("--correction", copt.correction, "Visibility correction (standard, none)");
    add_common(corr);

    std::string fit_kind, fit_csv;
    double fit_start_ps = 0.0;
    auto* fit = app.add_subcommand("fit", "Fit a two-column CSV (rabi: power,counts; lifetime: t_ps,counts)");
    fit->add_option("kind", fit_kind, "rabi or lifetime")->required();
    fit->add_option("csv", fit_csv, "Input table")->required();
    fit->add_option("--fit-start-ps", fit_start_ps, "Start of the lifetime fit window");
    add_common(fit);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        auto out_given = [&](CLI::App* sub) { return sub->count("--out") > 0; };
        if (*simulate) return cmd_simulate(scenario, common, out_given(simulate));
        if (*report) return cmd_report(report_config, common, out_given(report));
        if (*corr) return cmd_correlate(tag_a, tag_b, copt, common);
        if (*fit) return cmd_fit(fit_kind, fit_csv, fit_start_ps, common, out_given(fit));
    } catch (const ConfigError& e) {
        log::error(std::string("config error: ") + e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        log::error(std::string("computation error: ") + e.what());
        return kExitCompute;
    }
    return kExitOk;
}
