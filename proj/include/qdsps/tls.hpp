#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "qdsps/units.hpp"

// Pulsed and CW dynamics of a resonantly driven two-level emitter with
// radiative decay and pure dephasing (rotating-wave approximation).
namespace qdsps {

/// Emitter rates. All angular, in 1/ns.
struct TlsParams {
    double gamma_rad = 1.0 / 0.053; ///< radiative decay rate Gamma
    double gamma_phi = 0.0;         ///< pure dephasing rate gamma*
    double detuning = 0.0;          ///< emitter minus drive frequency (rad/ns)

    void validate() const;
    double lifetime_ns() const { return 1.0 / gamma_rad; }
    /// Coherence decay rate Gamma/2 + gamma*.
    double gamma2() const { return 0.5 * gamma_rad + gamma_phi; }

    static TlsParams from_lifetime_ps(double tau_ps, double gamma_phi = 0.0)
    {
        return {units::ps_per_ns / tau_ps, gamma_phi, 0.0};
    }
};

enum class PulseShape { gaussian, square };

/// Excitation pulse. The FWHM refers to the Rabi-frequency (field) envelope;
/// the envelope integrates to `area`.
struct DrivePulse {
    PulseShape shape = PulseShape::gaussian;
    double fwhm_ps = 10.0;
    double area = units::pi;         ///< pulse area theta (rad)
    double rep_period_ns = 12.48;    ///< 1 / 80.1 MHz

    void validate() const;

    /// Pulse centre in ps, measured from the start of the period. Gaussian
    /// pulses are centred at 3 FWHM so the leading tail is below 1e-10.
    double center_ps() const;
    /// End of the region in which the drive is non-negligible (ps).
    double support_end_ps() const;
    /// Instantaneous Rabi frequency (rad/ns) at time t (ps).
    double rabi_frequency(double t_ps) const;
    /// Pulse area accumulated up to time t (ps).
    double accumulated_area(double t_ps) const;
};

struct DensityMatrix {
    double rho_ee = 0.0;
    std::complex<double> rho_ge{0.0, 0.0}; ///< <g|rho|e> = <sigma_+>
    double rho_gg = 1.0;

    double trace() const { return rho_ee + rho_gg; }
    /// |rho_ge|^2 - rho_ee rho_gg; non-positive for a valid state.
    double positivity_violation() const { return std::norm(rho_ge) - rho_ee * rho_gg; }
};

struct Trajectory {
    std::vector<double> times_ps;
    std::vector<DensityMatrix> states;
};

/// Photon yield of one excitation period.
struct EmissionYield {
    double mean_photons = 0.0;   ///< integral of Gamma rho_ee over the period; may exceed 1
    double p_at_least_one = 0.0; ///< probability that >= 1 photon is emitted
    double p_multi = 0.0;        ///< probability that >= 2 photons are emitted (re-excitation)

    double p_single() const { return p_at_least_one - p_multi; }
};

struct DecayHistogram {
    double bin_width_ps = 0.0;
    std::vector<double> bin_start_ps;
    std::vector<double> probability; ///< emission probability per bin

    double total() const;
};

/// Integrator controls. The pulse region is integrated with fixed-step RK4;
/// the step is halved until the final state changes by less than
/// `tolerance`. Drive-free stretches are propagated with the exact matrix
/// exponential of the constant generator.
struct IntegratorOptions {
    double initial_step_ps = 0.0; ///< 0 = automatic (pulse fwhm / 40)
    double tolerance = 1e-9;
    int max_halvings = 10;
};

Trajectory evolve_pulsed(const TlsParams& params, const DrivePulse& pulse, double t_end_ps,
                         double dt_ps, const IntegratorOptions& options = {});

EmissionYield emission_probability(const TlsParams& params, const DrivePulse& pulse,
                                   const IntegratorOptions& options = {});

/// Multi-photon probability per period (>= 2 photons).
double reexcitation_probability(const TlsParams& params, const DrivePulse& pulse,
                                const IntegratorOptions& options = {});

/// Pulse area for a drive power under theta = pi sqrt(P / P_pi).
double pulse_area_for_power(double power, double pi_power);

/// Mean photon number per pulse versus drive power.
std::vector<std::pair<double, double>> rabi_curve(const TlsParams& params,
                                                  const DrivePulse& pulse_template,
                                                  const std::vector<double>& powers,
                                                  double pi_power,
                                                  const IntegratorOptions& options = {});

DecayHistogram decay_histogram(const TlsParams& params, const DrivePulse& pulse, double bin_ps,
                               double span_ps, const IntegratorOptions& options = {});

} // namespace qdsps
