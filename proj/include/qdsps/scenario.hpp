#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qdsps/config.hpp"
#include "qdsps/correlator.hpp"
#include "qdsps/dbr.hpp"
#include "qdsps/efficiency.hpp"
#include "qdsps/fitting.hpp"
#include "qdsps/photon_stream.hpp"
#include "qdsps/spectrum.hpp"
#include "qdsps/tls.hpp"

// Figure-reproduction scenarios. Each kind has a typed parameter block that
// can be filled from a config table, a runner returning typed results, and
// a conversion to CSV tables plus a JSON summary.
namespace qdsps {

// ---------------------------------------------------------------- output

struct Table {
    std::string name; ///< file stem, e.g. "fig3c"
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::string to_csv() const;
    nlohmann::json to_json() const;
};

struct ScenarioOutput {
    std::string name;
    std::string kind;
    std::vector<Table> tables;
    nlohmann::json summary;
    /// Raw streams to store next to the tables, as binary tag files (<stem>.bin).
    std::vector<std::pair<std::string, TimeTagStream>> tag_files;
};

enum class OutputFormat { csv, json };

/// Writes via a temporary file in the same directory and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// csv: one CSV per table plus summary.json; json: a single <name>.json.
/// Files land in `dir`/<scenario name>/. Returns the written paths.
std::vector<std::filesystem::path> write_output(const ScenarioOutput& out,
                                                const std::filesystem::path& dir,
                                                OutputFormat format);

// ------------------------------------------------------------- emitter

struct EmitterModel {
    double lifetime_ps = 53.0;
    double gamma_phi = 0.0; ///< 1/ns
    DrivePulse pulse;       ///< area is set per operating point

    TlsParams tls() const { return TlsParams::from_lifetime_ps(lifetime_ps, gamma_phi); }
};

struct SourceStatistics {
    double p_emit = 0.0;  ///< exactly one photon
    double p_reexc = 0.0; ///< two or more photons
    double pulse_area = 0.0;
    double power_over_pi = 0.0;
};

/// Photon-number split for a pulse of area theta.
SourceStatistics source_statistics(const EmitterModel& model, double area);

/// Operating point at fluorescence intensity `ratio` * I_sat, where I_sat is
/// the emission probability at the pi-pulse power.
SourceStatistics source_at_intensity(const EmitterModel& model, double ratio);

// ---------------------------------------------------------------- kinds

struct RabiParams {
    EmitterModel emitter;
    double pi_power_uw = 36.0;
    std::vector<double> powers_uw; ///< empty: 0 .. max_power_uw in n_points
    double max_power_uw = 150.0;
    int n_points = 151;
    double peak_count_mhz = 6.23; ///< detected rate at the first maximum
    double noise_fraction = 0.0;  ///< multiplicative Gaussian noise
    std::uint64_t seed = 1;
};

struct RabiResult {
    std::vector<double> powers_uw;
    std::vector<double> p_detect; ///< probability of >= 1 photon per pulse
    std::vector<double> counts_mhz;
    double first_max_power_uw = 0.0;
    FitResult fit;
};

RabiResult run_rabi(const RabiParams& p);

struct LifetimeParams {
    std::vector<double> lifetimes_ps{134.0, 53.0, 1007.0};
    DrivePulse pulse;
    double events = 1e6;
    double bin_ps = 4.0;
    double span_ps = 12000.0;
    double fit_start_ps = 0.0; ///< 0: end of the pulse
    double bulk_lifetime_ps = 1007.0;
    std::uint64_t seed = 1;
};

struct LifetimeResult {
    std::vector<double> t_ps;
    std::vector<std::vector<double>> counts; ///< per lifetime
    std::vector<FitResult> fits;
    std::vector<double> purcell; ///< bulk / fitted lifetime
};

LifetimeResult run_lifetime(const LifetimeParams& p);

struct Binning {
    std::int64_t bin_ps = 40;
    std::int64_t span_ps = 100000;
};

struct HbtParams {
    StreamConfig stream;
    bool from_emitter = false; ///< derive p_emit / p_reexc from the emitter model
    EmitterModel emitter;
    double intensity_ratio = 1.0; ///< operating point when from_emitter
    double target_g2 = -1.0;      ///< >= 0: calibrate leak_mean to this oracle value
    Binning binning;
    bool keep_tags = false;       ///< return the simulated stream in the result
};

struct HbtResult {
    StreamConfig stream; ///< as simulated (after calibration)
    CorrelationHistogram hist;
    PeakAreas areas;
    Estimate g2;
    double oracle_g2 = 0.0;
    std::size_t n_tags = 0;
    TimeTagStream tags; ///< filled only with keep_tags
};

HbtResult run_hbt(const HbtParams& p);

struct HomParams {
    StreamConfig stream;
    bool from_emitter = false;
    EmitterModel emitter;
    double intensity_ratio = 1.0;
    double target_g2 = -1.0;
    double bs_reflectance = 0.5;
    double target_v_raw = -1.0; ///< >= 0: calibrate bs_reflectance to this oracle value
    double overlap = -1.0;      ///< < 0: from the emitter's gamma_phi
    std::string correction = "standard";
    Binning binning;
};

struct HomResult {
    StreamConfig stream;
    HomConfig hom;
    CorrelationHistogram hist_par;
    CorrelationHistogram hist_perp;
    Estimate g_par;
    Estimate g_perp;
    Estimate v_raw;
    HomPrediction oracle;
    CorrectedVisibility corrected;
};

HomResult run_hom(const HomParams& p);

struct TemperatureSweepParams {
    StreamConfig stream; ///< p_emit, p_reexc, leak as configured
    double bulk_lifetime_ps = 1007.0;
    double peak_purcell = 19.0;
    double kappa_ghz = 39.84;
    double gamma_phi = 0.36;
    std::vector<double> detunings_ghz{0.0, 10.0, 20.0, 30.0, 40.0};
    double bs_reflectance = 0.5;
    Binning binning;
};

struct SweepPoint {
    double x = 0.0; ///< detuning (GHz) or intensity ratio
    double lifetime_ps = 0.0;
    double overlap = 0.0;
    StreamConfig stream;
    Estimate g2;
    Estimate v_raw;
    double oracle_g2 = 0.0;
    double oracle_v_raw = 0.0;
};

std::vector<SweepPoint> run_temperature_sweep(const TemperatureSweepParams& p);

struct PowerSweepParams {
    StreamConfig stream;
    EmitterModel emitter;
    std::vector<double> intensity_ratios{0.2, 0.3, 0.4, 0.5, 0.6};
    /// Leak per pulse at the pi-pulse power; leak scales linearly with power.
    /// < 0: calibrated so that the oracle g2 at `anchor_ratio` equals `anchor_g2`.
    double leak_at_pi = -1.0;
    double anchor_ratio = 0.6;
    double anchor_g2 = 0.0472;
    double bs_reflectance = 0.5;
    double overlap = -1.0;
    Binning binning;
};

std::vector<SweepPoint> run_power_sweep(const PowerSweepParams& p);

/// Leak at the pi power implied by the power-sweep anchor.
double calibrate_leak_at_pi(const PowerSweepParams& p);

struct MollowParams {
    double lifetime_ps = 53.0;
    EidModel eid{0.36, 2.0e-4};
    double k_ghz_per_sqrt_mw = 10.57;
    std::vector<double> powers_mw{1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.1};
    std::vector<double> spectra_powers_mw{1.0, 2.5, 4.1}; ///< columns of the spectra table
    double half_range_ghz = 80.0;
    std::size_t grid_points = 3201;
    double resolution_fwhm_ghz = 0.0;
};

struct MollowPoint {
    double power_mw = 0.0;
    double rabi_ghz = 0.0; ///< drive Rabi frequency / 2 pi
    TripletFit fit;
};

struct MollowResult {
    std::vector<double> freqs_ghz;
    std::vector<std::vector<double>> spectra; ///< per spectra_powers_mw
    std::vector<MollowPoint> points;
    ScalingFit scaling;
    EidModel recovered;
};

MollowResult run_mollow(const MollowParams& p);

struct DbrParams {
    MicrocavityDesign design;
    double lambda_min_nm = 880.0;
    double lambda_max_nm = 950.0;
    std::size_t n_points = 7001;
    double search_half_window_nm = 2.0;
    double target_splitting_ghz = 86.50;
};

struct DbrResult {
    std::vector<SpectrumPoint> spectrum;
    Resonance resonance;
    double delta_n = 0.0;
    double splitting_ghz = 0.0;
};

DbrResult run_dbr(const DbrParams& p);

struct EfficiencyCase {
    std::string name;
    SourceRates rates;
    EfficiencyBudget budget;
};

struct EfficiencyParams {
    std::vector<EfficiencyCase> cases;
};

struct EfficiencyRow {
    std::string name;
    double detected_mhz = 0.0;
    double chain = 0.0;
    double eta_e = 0.0;
};

std::vector<EfficiencyRow> run_efficiency(const EfficiencyParams& p);

// ------------------------------------------------------------- dispatch

inline const std::vector<std::string>& scenario_kinds()
{
    static const std::vector<std::string> kinds{
        "rabi_curve",   "lifetime",       "hbt",          "hom",              "temperature_sweep",
        "power_sweep",  "mollow_series",  "dbr_spectrum", "efficiency_report"};
    return kinds;
}

/// Names of the [scenario.<name>] tables, in file order.
std::vector<std::string> scenario_names(const Config& config);

/// Validates and runs one scenario. The scenario seed is derived from the
/// global seed and the scenario name, so scenario order never matters.
ScenarioOutput run_scenario(const Config& config, const std::string& name,
                            std::uint64_t global_seed);

} // namespace qdsps
