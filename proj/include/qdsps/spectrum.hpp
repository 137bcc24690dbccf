#pragma once

#include <utility>
#include <vector>

#include "qdsps/tls.hpp"

// CW resonance fluorescence: steady state, Mollow spectrum via the two-time
// dipole correlator, triplet fitting and the power / linewidth scaling laws.
namespace qdsps {

struct MollowSpectrum {
    std::vector<double> freqs_ghz; ///< detuning from the drive, ordinary GHz
    std::vector<double> intensity; ///< incoherent spectral density, photons / ns / GHz
    double coherent_weight = 0.0;  ///< elastic (delta at 0) rate Gamma |<sigma>|^2, photons / ns

    /// Trapezoidal integral of the incoherent part plus the coherent weight.
    double total_weight() const;
};

struct SpectrumOptions {
    /// Correlator time step as a fraction of 1 / |fastest eigenvalue|.
    double step_fraction = 0.05;
    /// Correlator window ends when the slowest mode has decayed by this factor.
    double decay_floor = 1e-6;
    /// Gaussian spectrometer resolution (FWHM, GHz). 0 disables it.
    double resolution_fwhm_ghz = 0.0;
    /// Require the grid to cover +-3 Omega.
    bool check_grid = true;
};

struct TripletFit {
    double rabi_split_ghz = 0.0; ///< sideband-to-centre detuning
    double center_ghz = 0.0;
    double center_width_ghz = 0.0;
    double sideband_width_ghz = 0.0;
    double amp_center = 0.0;
    double amp_lower = 0.0;
    double amp_upper = 0.0;
    double amp_dispersive = 0.0; ///< antisymmetric sideband component
    double rabi_split_err = 0.0;
    double sideband_width_err = 0.0;
    double residual_rms = 0.0; ///< relative to the spectrum maximum
};

/// Excitation-induced dephasing gamma*(Omega) = gamma0 + c Omega^2,
/// Omega angular (rad/ns), gamma0 in 1/ns, c in ns.
struct EidModel {
    double gamma0 = 0.0;
    double c = 0.0;

    double dephasing(double omega) const { return gamma0 + c * omega * omega; }
};

struct ScalingFit {
    double k = 0.0;            ///< GHz / sqrt(mW), Omega = k sqrt(P)
    double k_err = 0.0;
    double r2_split = 0.0;
    double gamma0_ghz = 0.0;   ///< intercept of sideband FWHM vs split^2
    double c_per_ghz = 0.0;    ///< slope of sideband FWHM vs split^2 (1/GHz)
    double gamma0_err = 0.0;
    double c_err = 0.0;
    double r2_width = 0.0;
};

/// Analytic steady state from the Bloch equations. `omega` is the angular
/// Rabi frequency (rad/ns).
DensityMatrix steady_state(const TlsParams& params, double omega);

MollowSpectrum emission_spectrum(const TlsParams& params, double omega,
                                 const std::vector<double>& grid_ghz,
                                 const SpectrumOptions& options = {});

/// Gaussian convolution on a uniform grid.
std::vector<double> apply_resolution(const std::vector<double>& freqs_ghz,
                                     const std::vector<double>& intensity, double fwhm_ghz);

TripletFit fit_triplet(const MollowSpectrum& spectrum);

ScalingFit scaling_fits(const std::vector<std::pair<double, TripletFit>>& power_series);

/// Inverts the strong-drive sideband law FWHM = (3 Gamma / 2 + gamma*) / 2 pi
/// for the EID parameters behind a linewidth regression.
EidModel eid_from_scaling(const ScalingFit& fit, double gamma_rad);

/// Uniform grid of n points on [lo, hi].
std::vector<double> frequency_grid(double lo_ghz, double hi_ghz, std::size_t n);

} // namespace qdsps
