#pragma once

// Birefringent Fabry-Perot cavity as two polarised Lorentzian modes.
//
// Frequency convention: kappa (linewidth), mode splitting and QD-mode
// detuning are ordinary-frequency FWHM values in GHz, as quoted for
// measured cavity spectra. Wavelengths are in nm, lifetimes in ps.
namespace qdsps {

enum class Polarization { H, V };

struct CavityMode {
    double lambda0_nm = 0.0;
    double delta_lambda_nm = 0.0; ///< FWHM linewidth
    Polarization polarization = Polarization::H;

    void validate() const;
    /// Optical frequency c / lambda0 in GHz.
    double frequency_ghz() const;
};

struct BirefringentCavity {
    CavityMode mode_h;
    CavityMode mode_v;
    double peak_purcell_h = 1.0;
    double peak_purcell_v = 1.0;

    void validate() const;
    /// |nu_H - nu_V| in GHz.
    double splitting_ghz() const;

    /// Peak Purcell factors set equal (`f_peak` each) or, with `scale_by_q`,
    /// the V peak scaled by Q_V / Q_H.
    static BirefringentCavity from_modes(const CavityMode& h, const CavityMode& v, double f_peak,
                                         bool scale_by_q = false);
};

struct CouplingResult {
    double purcell = 0.0;
    double zeta_h = 0.0;
    double beta_h = 0.0;
    double tau_on_ps = 0.0;
};

double q_factor(const CavityMode& mode);

/// kappa = c * delta_lambda / lambda0^2, in GHz.
double linewidth_ghz(const CavityMode& mode);

/// Lifetime-ratio Purcell factor tau_bulk / tau_on.
double purcell_from_lifetimes(double tau_on_ps, double tau_bulk_ps);

/// Lorentzian detuning dependence f_peak / (1 + (2 delta / kappa)^2).
double purcell_vs_detuning(double f_peak, double kappa_ghz, double delta_ghz);

/// Fraction of emission routed into the H mode. `qd_offset_ghz` is the QD
/// frequency measured from the H-mode frequency; the V mode sits at
/// nu_V - nu_H on the same axis.
double zeta_h(const BirefringentCavity& cavity, double qd_offset_ghz);

/// Same weight ratio for the V mode; zeta_h + zeta_v = 1.
double zeta_v(const BirefringentCavity& cavity, double qd_offset_ghz);

double beta_h(double f_p, double zeta_h);

/// Couples a QD at `qd_offset_ghz` to the cavity with bulk lifetime
/// `tau_bulk_ps`; the H-mode Purcell factor sets the enhanced lifetime.
CouplingResult couple(const BirefringentCavity& cavity, double qd_offset_ghz, double tau_bulk_ps);

} // namespace qdsps
