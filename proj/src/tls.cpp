#include "qdsps/tls.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "qdsps/bloch.hpp"
#include "qdsps/error.hpp"

namespace qdsps {

namespace {

// Photon-number resolved state: unconditional density matrix, the part with
// no emission so far, the part with exactly one emission, and the running
// integral of the emission flux.
constexpr int kStateSize = 13;
using CountingState = Eigen::Matrix<double, kStateSize, 1>;
using CountingGenerator = Eigen::Matrix<double, kStateSize, kStateSize>;

CountingState ground_state()
{
    CountingState x = CountingState::Zero();
    x(1) = 1.0;
    x(5) = 1.0;
    return x;
}

CountingGenerator counting_generator(const TlsParams& p, double omega)
{
    const BlochGenerator<double> m0 =
        no_emission_generator(p.gamma_rad, p.gamma_phi, p.detuning, omega);
    const BlochGenerator<double> jump = emission_jump(p.gamma_rad);
    CountingGenerator a = CountingGenerator::Zero();
    a.block<4, 4>(0, 0) = m0 + jump;
    a.block<4, 4>(4, 4) = m0;
    a.block<4, 4>(8, 8) = m0;
    a.block<4, 4>(8, 4) = jump;
    a(12, 0) = p.gamma_rad;
    return a;
}

class Propagator {
public:
    Propagator(const TlsParams& params, const DrivePulse& pulse)
        : params_(params), pulse_(pulse), pulse_end_ns_(pulse.support_end_ps() / units::ps_per_ns),
          free_generator_(counting_generator(params, 0.0))
    {
    }

    double pulse_end_ns() const { return pulse_end_ns_; }

    CountingState derivative(double t_ns, const CountingState& x) const
    {
        const double omega = pulse_.rabi_frequency(t_ns * units::ps_per_ns);
        const BlochGenerator<double> m0 =
            no_emission_generator(params_.gamma_rad, params_.gamma_phi, params_.detuning, omega);
        const BlochVector<double> full = x.segment<4>(0);
        const BlochVector<double> zero = x.segment<4>(4);
        const BlochVector<double> one = x.segment<4>(8);
        CountingState dx;
        dx.segment<4>(0) = m0 * full;
        dx(1) += params_.gamma_rad * full(0);
        dx.segment<4>(4) = m0 * zero;
        dx.segment<4>(8) = m0 * one;
        dx(9) += params_.gamma_rad * zero(0);
        dx(12) = params_.gamma_rad * full(0);
        return dx;
    }

    CountingState rk4(CountingState x, double t0, double t1, double max_step) const
    {
        if (t1 <= t0) return x;
        const auto n = static_cast<long>(std::ceil((t1 - t0) / max_step - 1e-9));
        const double h = (t1 - t0) / static_cast<double>(std::max(1L, n));
        double t = t0;
        for (long i = 0; i < std::max(1L, n); ++i) {
            const CountingState k1 = derivative(t, x);
            const CountingState k2 = derivative(t + 0.5 * h, x + 0.5 * h * k1);
            const CountingState k3 = derivative(t + 0.5 * h, x + 0.5 * h * k2);
            const CountingState k4 = derivative(t + h, x + h * k3);
            x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t = t0 + static_cast<double>(i + 1) * h;
        }
        return x;
    }

    // Drive-free propagation with the exact exponential of the constant generator.
    CountingState free(const CountingState& x, double duration_ns)
    {
        if (duration_ns <= 0.0) return x;
        if (duration_ns != cached_duration_) {
            cached_duration_ = duration_ns;
            cached_exp_ = (free_generator_ * duration_ns).exp();
        }
        return cached_exp_ * x;
    }

    CountingState advance(const CountingState& x, double t0, double t1, double max_step)
    {
        CountingState y = x;
        if (t0 < pulse_end_ns_) {
            const double mid = std::min(t1, pulse_end_ns_);
            y = rk4(y, t0, mid, max_step);
            t0 = mid;
        }
        if (t1 > t0) y = free(y, t1 - t0);
        return y;
    }

private:
    TlsParams params_;
    DrivePulse pulse_;
    double pulse_end_ns_;
    CountingGenerator free_generator_;
    double cached_duration_ = -1.0;
    CountingGenerator cached_exp_;
};

// Largest RK4 step for which halving changes the end-of-pulse state by less
// than the tolerance.
double converged_step_ns(const Propagator& prop, const DrivePulse& pulse,
                         const IntegratorOptions& options)
{
    double h = (options.initial_step_ps > 0.0 ? options.initial_step_ps : pulse.fwhm_ps / 40.0) /
               units::ps_per_ns;
    const double end = prop.pulse_end_ns();
    CountingState coarse = prop.rk4(ground_state(), 0.0, end, h);
    for (int i = 0; i < options.max_halvings; ++i) {
        const CountingState fine = prop.rk4(ground_state(), 0.0, end, h / 2.0);
        if ((fine - coarse).cwiseAbs().maxCoeff() < options.tolerance) return h / 2.0;
        h /= 2.0;
        coarse = fine;
    }
    throw IntegrationError("RK4 did not converge within " + std::to_string(options.max_halvings) +
                           " step halvings (pulse fwhm " + std::to_string(pulse.fwhm_ps) + " ps)");
}

DensityMatrix to_density_matrix(const CountingState& x)
{
    DensityMatrix d;
    d.rho_ee = x(0);
    d.rho_gg = x(1);
    d.rho_ge = std::complex<double>(x(2), -x(3));
    return d;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

} // namespace

void TlsParams::validate() const
{
    require(std::isfinite(gamma_rad) && gamma_rad > 0.0, "TlsParams: gamma_rad must be > 0");
    require(std::isfinite(gamma_phi) && gamma_phi >= 0.0, "TlsParams: gamma_phi must be >= 0");
    require(std::isfinite(detuning), "TlsParams: detuning must be finite");
}

void DrivePulse::validate() const
{
    require(std::isfinite(fwhm_ps) && fwhm_ps > 0.0, "DrivePulse: fwhm_ps must be > 0");
    require(std::isfinite(area) && area >= 0.0, "DrivePulse: area must be >= 0");
    require(std::isfinite(rep_period_ns) && rep_period_ns > 0.0,
            "DrivePulse: rep_period_ns must be > 0");
    require(support_end_ps() < rep_period_ns * units::ps_per_ns,
            "DrivePulse: pulse does not fit inside one repetition period");
}

double DrivePulse::center_ps() const
{
    return shape == PulseShape::gaussian ? 3.0 * fwhm_ps : 0.5 * fwhm_ps;
}

double DrivePulse::support_end_ps() const
{
    return shape == PulseShape::gaussian ? 6.0 * fwhm_ps : fwhm_ps;
}

double DrivePulse::rabi_frequency(double t_ps) const
{
    if (shape == PulseShape::square) {
        return (t_ps >= 0.0 && t_ps < fwhm_ps) ? area / (fwhm_ps / units::ps_per_ns) : 0.0;
    }
    const double sigma_ns = fwhm_ps / units::gaussian_fwhm_per_sigma / units::ps_per_ns;
    const double z = (t_ps - center_ps()) / units::ps_per_ns / sigma_ns;
    return area / (sigma_ns * std::sqrt(units::two_pi)) * std::exp(-0.5 * z * z);
}

double DrivePulse::accumulated_area(double t_ps) const
{
    if (shape == PulseShape::square) return area * std::clamp(t_ps / fwhm_ps, 0.0, 1.0);
    const double sigma = fwhm_ps / units::gaussian_fwhm_per_sigma;
    // The gaussian is normalised over the whole line; the part before t = 0
    // is below 1e-10 of the area.
    return area * (normal_cdf((t_ps - center_ps()) / sigma) - normal_cdf(-center_ps() / sigma));
}

double DecayHistogram::total() const
{
    return std::accumulate(probability.begin(), probability.end(), 0.0);
}

Trajectory evolve_pulsed(const TlsParams& params, const DrivePulse& pulse, double t_end_ps,
                         double dt_ps, const IntegratorOptions& options)
{
    params.validate();
    pulse.validate();
    require(dt_ps > 0.0 && std::isfinite(dt_ps), "evolve_pulsed: dt must be > 0");
    require(t_end_ps > 0.0 && std::isfinite(t_end_ps), "evolve_pulsed: t_end must be > 0");

    Propagator prop(params, pulse);
    const double h = converged_step_ns(prop, pulse, options);

    const auto n = static_cast<std::size_t>(std::ceil(t_end_ps / dt_ps - 1e-9));
    Trajectory traj;
    traj.times_ps.reserve(n + 1);
    traj.states.reserve(n + 1);
    CountingState x = ground_state();
    traj.times_ps.push_back(0.0);
    traj.states.push_back(to_density_matrix(x));
    for (std::size_t k = 1; k <= n; ++k) {
        const double t0 = static_cast<double>(k - 1) * dt_ps;
        const double t1 = std::min(static_cast<double>(k) * dt_ps, t_end_ps);
        x = prop.advance(x, t0 / units::ps_per_ns, t1 / units::ps_per_ns, h);
        traj.times_ps.push_back(t1);
        traj.states.push_back(to_density_matrix(x));
    }
    return traj;
}

EmissionYield emission_probability(const TlsParams& params, const DrivePulse& pulse,
                                   const IntegratorOptions& options)
{
    params.validate();
    pulse.validate();
    Propagator prop(params, pulse);
    const double h = converged_step_ns(prop, pulse, options);
    const CountingState x = prop.advance(ground_state(), 0.0, pulse.rep_period_ns, h);

    EmissionYield yield;
    const double p_zero = x(4) + x(5);
    const double p_one = x(8) + x(9);
    yield.mean_photons = x(12);
    yield.p_at_least_one = std::clamp(1.0 - p_zero, 0.0, 1.0);
    yield.p_multi = std::clamp(1.0 - p_zero - p_one, 0.0, 1.0);
    return yield;
}

double reexcitation_probability(const TlsParams& params, const DrivePulse& pulse,
                                const IntegratorOptions& options)
{
    return emission_probability(params, pulse, options).p_multi;
}

double pulse_area_for_power(double power, double pi_power)
{
    require(pi_power > 0.0, "pulse_area_for_power: pi_power must be > 0");
    require(power >= 0.0, "pulse_area_for_power: power must be >= 0");
    return units::pi * std::sqrt(power / pi_power);
}

std::vector<std::pair<double, double>> rabi_curve(const TlsParams& params,
                                                  const DrivePulse& pulse_template,
                                                  const std::vector<double>& powers,
                                                  double pi_power, const IntegratorOptions& options)
{
    require(!powers.empty(), "rabi_curve: power list is empty");
    require(pi_power > 0.0, "rabi_curve: pi_power must be > 0");
    std::vector<std::pair<double, double>> curve;
    curve.reserve(powers.size());
    for (double power : powers) {
        DrivePulse pulse = pulse_template;
        pulse.area = pulse_area_for_power(power, pi_power);
        const double photons = pulse.area == 0.0
                                   ? 0.0
                                   : emission_probability(params, pulse, options).mean_photons;
        curve.emplace_back(power, photons);
    }
    return curve;
}

DecayHistogram decay_histogram(const TlsParams& params, const DrivePulse& pulse, double bin_ps,
                               double span_ps, const IntegratorOptions& options)
{
    params.validate();
    pulse.validate();
    require(bin_ps > 0.0, "decay_histogram: bin width must be > 0");
    require(span_ps <= pulse.rep_period_ns * units::ps_per_ns + 1e-9,
            "decay_histogram: span exceeds the repetition period");
    require(span_ps >= pulse.support_end_ps(),
            "decay_histogram: span is shorter than the pulse duration");

    Propagator prop(params, pulse);
    const double h = converged_step_ns(prop, pulse, options);
    const auto n = static_cast<std::size_t>(std::floor(span_ps / bin_ps + 1e-9));

    DecayHistogram hist;
    hist.bin_width_ps = bin_ps;
    hist.bin_start_ps.reserve(n);
    hist.probability.reserve(n);
    CountingState x = ground_state();
    for (std::size_t k = 0; k < n; ++k) {
        const double t0 = static_cast<double>(k) * bin_ps;
        const double t1 = t0 + bin_ps;
        const double before = x(12);
        x = prop.advance(x, t0 / units::ps_per_ns, t1 / units::ps_per_ns, h);
        hist.bin_start_ps.push_back(t0);
        hist.probability.push_back(x(12) - before);
    }
    return hist;
}

} // namespace qdsps
