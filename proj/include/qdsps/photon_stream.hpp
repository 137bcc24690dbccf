#pragma once

#include <array>
#include <cstdint>
#include <vector>

// Monte Carlo time-tag streams for HBT and HOM measurements of a pulsed
// single-photon source with laser leakage, re-excitation, imperfect
// wavepacket overlap and detector jitter / efficiency / dead time.
namespace qdsps {

struct TimeTag {
    std::uint8_t channel = 0;
    std::int64_t t_ps = 0;

    friend bool operator==(const TimeTag&, const TimeTag&) = default;
};

using TimeTagStream = std::vector<TimeTag>;

struct StreamConfig {
    double rep_period_ns = 12.48;
    std::uint64_t n_pulses = 0;
    double p_emit = 1.0;         ///< probability of exactly one source photon per pulse
    double p_reexc = 0.0;        ///< probability of two source photons per pulse
    double leak_mean = 0.0;      ///< mean leaked laser photons per pulse (Poisson)
    double lifetime_ps = 53.0;   ///< emission time constant
    double pulse_fwhm_ps = 10.0; ///< temporal width of leaked laser photons
    double jitter_fwhm_ps = 0.0; ///< Gaussian detector jitter
    double dead_time_ps = 30000.0;
    std::array<double, 2> det_eff{1.0, 1.0};
    std::uint64_t seed = 1;
    unsigned threads = 0; ///< 0 = hardware concurrency; output is thread-count independent

    void validate() const;
    std::int64_t rep_period_ps() const;
    /// Mean source photons per pulse, p_emit + 2 p_reexc.
    double signal_mean() const { return p_emit + 2.0 * p_reexc; }
};

enum class HomPolarization { parallel, orthogonal };

struct HomConfig {
    double bs_reflectance = 0.5;
    double overlap = 1.0; ///< mean two-photon wavepacket overlap
    HomPolarization polarization = HomPolarization::parallel;

    void validate() const;
    double effective_overlap() const
    {
        return polarization == HomPolarization::parallel ? overlap : 0.0;
    }
};

/// Pulse k is centred at (k + 1) * rep_period so that all tags are positive.
TimeTagStream generate_hbt_stream(const StreamConfig& cfg);

/// Unbalanced Mach-Zehnder HOM: every photon takes the short or the long arm
/// (delay = one period) with probability 1/2, so photons from consecutive
/// pulses meet at the final beam splitter. Exactly one source photon in each
/// input interferes with overlap V_eff; everything else (leak, multi-photon
/// inputs) is routed classically. Channel 0 = reflected port of input a.
TimeTagStream generate_hom_stream(const StreamConfig& cfg, const HomConfig& hom);

/// Expected g2(0) of the peak-area estimator for an HBT stream:
///   g2 = (2 p_reexc + 2 s l + l^2) / (s + l)^2,  s = p_emit + 2 p_reexc, l = leak_mean,
/// i.e. E[N(N-1)] / E[N]^2 for the per-pulse photon number N. Exact when
/// dead time does not act within one pulse.
double analytic_g2_oracle(const StreamConfig& cfg);

struct HomPrediction {
    double g_perp = 0.0;
    double g_par = 0.0;
    double v_raw = 0.0;
};

/// Expected zero-delay peak ratios (normalised to far side peaks) of the HOM
/// stream model: g = R^2 + T^2 + 2RT g2 - 2RT V_eff (p_emit + p_reexc)^2 / (s + l)^2.
HomPrediction analytic_hom_oracle(const StreamConfig& cfg, const HomConfig& hom);

/// Leak level that makes the HBT oracle equal `target_g2`.
double leak_for_target_g2(double p_emit, double p_reexc, double target_g2);

/// Beam-splitter reflectance R <= 1/2 for which the HOM oracle gives `target_v_raw`.
double reflectance_for_target_visibility(const StreamConfig& cfg, double overlap,
                                         double target_v_raw);

/// Wavepacket overlap of exponential wavepackets with pure dephasing,
/// Gamma / (Gamma + 2 gamma*).
double overlap_from_dephasing(double gamma_rad, double gamma_phi);
double dephasing_from_overlap(double gamma_rad, double overlap);

} // namespace qdsps
