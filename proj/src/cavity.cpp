#include "qdsps/cavity.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "qdsps/error.hpp"
#include "qdsps/units.hpp"

namespace qdsps {

namespace {

// Speed of light in nm * GHz.
constexpr double kSpeedOfLightNmGhz = units::speed_of_light;

double lorentz_weight(double f_peak, double kappa_ghz, double delta_ghz)
{
    const double x = 2.0 * delta_ghz / kappa_ghz;
    return f_peak / (1.0 + x * x);
}

} // namespace

void CavityMode::validate() const
{
    require(std::isfinite(lambda0_nm) && lambda0_nm > 0.0, "CavityMode: lambda0 must be > 0");
    require(std::isfinite(delta_lambda_nm) && delta_lambda_nm >= 0.0 &&
                delta_lambda_nm < lambda0_nm,
            "CavityMode: linewidth must satisfy 0 <= delta_lambda < lambda0");
}

double CavityMode::frequency_ghz() const { return kSpeedOfLightNmGhz / lambda0_nm; }

void BirefringentCavity::validate() const
{
    mode_h.validate();
    mode_v.validate();
    require(mode_h.polarization != mode_v.polarization,
            "BirefringentCavity: modes must carry distinct polarisations");
    require(mode_h.delta_lambda_nm > 0.0 && mode_v.delta_lambda_nm > 0.0,
            "BirefringentCavity: mode linewidths must be > 0");
    require(peak_purcell_h >= 0.0 && peak_purcell_v >= 0.0,
            "BirefringentCavity: peak Purcell factors must be >= 0");
}

double BirefringentCavity::splitting_ghz() const
{
    return std::abs(mode_h.frequency_ghz() - mode_v.frequency_ghz());
}

BirefringentCavity BirefringentCavity::from_modes(const CavityMode& h, const CavityMode& v,
                                                  double f_peak, bool scale_by_q)
{
    BirefringentCavity c{h, v, f_peak, f_peak};
    c.mode_h.polarization = Polarization::H;
    c.mode_v.polarization = Polarization::V;
    if (scale_by_q) c.peak_purcell_v = f_peak * q_factor(v) / q_factor(h);
    return c;
}

double q_factor(const CavityMode& mode)
{
    mode.validate();
    require(mode.delta_lambda_nm > 0.0, "q_factor: linewidth must be > 0");
    return mode.lambda0_nm / mode.delta_lambda_nm;
}

double linewidth_ghz(const CavityMode& mode)
{
    mode.validate();
    return kSpeedOfLightNmGhz * mode.delta_lambda_nm / (mode.lambda0_nm * mode.lambda0_nm);
}

double purcell_from_lifetimes(double tau_on_ps, double tau_bulk_ps)
{
    require(tau_on_ps > 0.0 && tau_bulk_ps > 0.0,
            "purcell_from_lifetimes: lifetimes must be > 0");
    return tau_bulk_ps / tau_on_ps;
}

double purcell_vs_detuning(double f_peak, double kappa_ghz, double delta_ghz)
{
    require(f_peak >= 0.0, "purcell_vs_detuning: f_peak must be >= 0");
    require(kappa_ghz > 0.0, "purcell_vs_detuning: kappa must be > 0");
    return lorentz_weight(f_peak, kappa_ghz, delta_ghz);
}

static std::pair<double, double> mode_weights(const BirefringentCavity& cavity,
                                              double qd_offset_ghz)
{
    cavity.validate();
    const double v_offset = cavity.mode_v.frequency_ghz() - cavity.mode_h.frequency_ghz();
    const double w_h =
        lorentz_weight(cavity.peak_purcell_h, linewidth_ghz(cavity.mode_h), qd_offset_ghz);
    const double w_v = lorentz_weight(cavity.peak_purcell_v, linewidth_ghz(cavity.mode_v),
                                      qd_offset_ghz - v_offset);
    if (!(w_h + w_v > 0.0)) throw ValidationError("zeta_h: both mode weights are zero");
    return {w_h, w_v};
}

double zeta_h(const BirefringentCavity& cavity, double qd_offset_ghz)
{
    const auto [w_h, w_v] = mode_weights(cavity, qd_offset_ghz);
    return w_h / (w_h + w_v);
}

double zeta_v(const BirefringentCavity& cavity, double qd_offset_ghz)
{
    const auto [w_h, w_v] = mode_weights(cavity, qd_offset_ghz);
    return w_v / (w_h + w_v);
}

double beta_h(double f_p, double zeta)
{
    require(f_p >= 0.0, "beta_h: Purcell factor must be >= 0");
    require(zeta >= 0.0 && zeta <= 1.0, "beta_h: zeta_h must lie in [0, 1]");
    if (std::isinf(f_p)) return zeta;
    return f_p / (f_p + 1.0) * zeta;
}

CouplingResult couple(const BirefringentCavity& cavity, double qd_offset_ghz, double tau_bulk_ps)
{
    require(tau_bulk_ps > 0.0, "couple: bulk lifetime must be > 0");
    CouplingResult r;
    r.purcell = purcell_vs_detuning(cavity.peak_purcell_h, linewidth_ghz(cavity.mode_h),
                                    qd_offset_ghz);
    r.zeta_h = zeta_h(cavity, qd_offset_ghz);
    r.beta_h = beta_h(r.purcell, r.zeta_h);
    r.tau_on_ps = tau_bulk_ps / std::max(r.purcell, 1e-300);
    return r;
}

} // namespace qdsps
