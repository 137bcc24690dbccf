#include "qdsps/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "qdsps/bloch.hpp"
#include "qdsps/error.hpp"
#include "qdsps/lm.hpp"
#include "qdsps/regression.hpp"
#include "qdsps/units.hpp"

namespace qdsps {

namespace {

using cd = std::complex<double>;
using Liouvillian = Eigen::Matrix4cd;
using OperatorVector = Eigen::Vector4cd; // (rho_ee, rho_gg, rho_eg, rho_ge)

// Lindblad generator acting on arbitrary (not necessarily Hermitian) 2x2
// operators, needed to propagate rho * sigma_+ in the regression theorem.
Liouvillian liouvillian(const TlsParams& p, double omega)
{
    const cd i(0.0, 1.0);
    const cd half = 0.5 * i * omega;
    const double g2 = p.gamma2();
    Liouvillian l;
    l << -p.gamma_rad, 0.0, half, -half,
         p.gamma_rad, 0.0, -half, half,
         half, -half, -(g2 + i * p.detuning), 0.0,
         -half, half, 0.0, -(g2 - i * p.detuning);
    return l;
}

double lorentzian(double x, double x0, double fwhm)
{
    const double u = 2.0 * (x - x0) / fwhm;
    return 1.0 / (1.0 + u * u);
}

// Dispersive partner of `lorentzian` (same pole, imaginary residue).
double dispersive(double x, double x0, double fwhm)
{
    const double u = 2.0 * (x - x0) / fwhm;
    return u / (1.0 + u * u);
}

// Filon-type weights for the integral of the piecewise-linear interpolant of
// samples g_k against exp(i theta k): endpoint weight of the first sample,
// interior weight, endpoint weight of the last sample (to be multiplied by
// exp(-i theta) exp(i theta N)).
struct FilonWeights {
    cd first;
    double interior;
    cd last;
};

FilonWeights filon_weights(double theta)
{
    const cd i(0.0, 1.0);
    if (std::abs(theta) < 1e-3) {
        const double t2 = theta * theta;
        return {cd(0.5 - t2 / 24.0, theta / 6.0), 1.0 - t2 / 12.0,
                cd(0.5 - t2 / 8.0, theta / 3.0)};
    }
    const cd e = std::exp(i * theta);
    const double t2 = theta * theta;
    const double s = std::sin(0.5 * theta) / (0.5 * theta);
    return {i / theta - (e - 1.0) / t2, s * s, -i * e / theta + (e - 1.0) / t2};
}

} // namespace

double MollowSpectrum::total_weight() const
{
    double sum = 0.0;
    for (std::size_t k = 1; k < freqs_ghz.size(); ++k) {
        sum += 0.5 * (intensity[k] + intensity[k - 1]) * (freqs_ghz[k] - freqs_ghz[k - 1]);
    }
    return sum + coherent_weight;
}

DensityMatrix steady_state(const TlsParams& params, double omega)
{
    params.validate();
    require(std::isfinite(omega) && omega >= 0.0, "steady_state: omega must be >= 0");
    Eigen::Matrix4d a = lindblad_generator(params.gamma_rad, params.gamma_phi, params.detuning,
                                           omega);
    Eigen::Vector4d b = Eigen::Vector4d::Zero();
    // Replace the (redundant) ground-population equation by the trace condition.
    a.row(1) << 1.0, 1.0, 0.0, 0.0;
    b(1) = 1.0;
    const Eigen::Vector4d x = a.fullPivLu().solve(b);
    DensityMatrix d;
    d.rho_ee = x(0);
    d.rho_gg = x(1);
    d.rho_ge = cd(x(2), -x(3));
    return d;
}

MollowSpectrum emission_spectrum(const TlsParams& params, double omega,
                                 const std::vector<double>& grid_ghz,
                                 const SpectrumOptions& options)
{
    params.validate();
    require(std::isfinite(omega) && omega >= 0.0, "emission_spectrum: omega must be >= 0");
    require(grid_ghz.size() >= 3, "emission_spectrum: grid needs at least 3 points");
    require(std::is_sorted(grid_ghz.begin(), grid_ghz.end()),
            "emission_spectrum: grid must be sorted");
    if (options.check_grid) {
        const double reach = 3.0 * units::angular_to_ghz(omega);
        require(grid_ghz.front() <= -reach * (1.0 - 1e-9) && grid_ghz.back() >= reach * (1.0 - 1e-9),
                "emission_spectrum: grid must span at least +-3 Omega");
    }

    const DensityMatrix ss = steady_state(params, omega);
    const cd rho_eg = std::conj(ss.rho_ge);
    const OperatorVector rho_ss(ss.rho_ee, ss.rho_gg, rho_eg, ss.rho_ge);

    // <sigma_+(0) sigma_-(tau)> = [e^{L tau}(rho_ss sigma_+)]_eg; subtracting the
    // stationary part leaves the decaying (incoherent) correlator.
    OperatorVector x0(0.0, ss.rho_ge, ss.rho_ee, 0.0);
    const OperatorVector dx0 = x0 - rho_ss * ss.rho_ge;

    const Liouvillian l = liouvillian(params, omega);
    const Eigen::ComplexEigenSolver<Liouvillian> eig(l, false);
    double slowest = std::numeric_limits<double>::infinity();
    double fastest = 0.0;
    const double scale = params.gamma_rad + params.gamma_phi + omega;
    for (Eigen::Index k = 0; k < 4; ++k) {
        const cd lam = eig.eigenvalues()(k);
        if (std::abs(lam) < 1e-9 * scale) continue; // stationary mode
        slowest = std::min(slowest, -lam.real());
        fastest = std::max(fastest, std::abs(lam));
    }

    MollowSpectrum out;
    out.freqs_ghz = grid_ghz;
    out.intensity.assign(grid_ghz.size(), 0.0);
    out.coherent_weight = params.gamma_rad * std::norm(rho_eg);

    if (dx0.cwiseAbs().maxCoeff() > 0.0 && std::isfinite(slowest) && slowest > 0.0) {
        const double dt = options.step_fraction / fastest;
        const double tau_max = std::log(1.0 / options.decay_floor) / slowest;
        const auto n = static_cast<std::size_t>(std::ceil(tau_max / dt));
        const Liouvillian step = (l * dt).exp();
        std::vector<cd> g(n + 1);
        OperatorVector x = dx0;
        for (std::size_t k = 0; k <= n; ++k) {
            g[k] = x(2);
            x = step * x;
        }

        const double norm = params.gamma_rad / units::pi * units::two_pi * dt;
        for (std::size_t j = 0; j < grid_ghz.size(); ++j) {
            const double w = units::ghz_to_angular(grid_ghz[j]);
            const double theta = w * dt;
            const FilonWeights fw = filon_weights(theta);
            const cd rot = std::polar(1.0, theta);
            cd phase = rot;
            cd interior = 0.0;
            for (std::size_t k = 1; k < n; ++k) {
                interior += g[k] * phase;
                phase *= rot;
            }
            // phase == exp(i theta n) here
            const cd sum = fw.first * g[0] + fw.interior * interior +
                           fw.last * std::polar(1.0, -theta) * phase * g[n];
            out.intensity[j] = std::max(0.0, norm * sum.real());
        }
    }

    if (options.resolution_fwhm_ghz > 0.0) {
        out.intensity = apply_resolution(out.freqs_ghz, out.intensity, options.resolution_fwhm_ghz);
    }
    return out;
}

std::vector<double> apply_resolution(const std::vector<double>& freqs_ghz,
                                     const std::vector<double>& intensity, double fwhm_ghz)
{
    require(freqs_ghz.size() == intensity.size() && freqs_ghz.size() >= 2,
            "apply_resolution: size mismatch");
    require(fwhm_ghz > 0.0, "apply_resolution: fwhm must be > 0");
    const double step = freqs_ghz[1] - freqs_ghz[0];
    const double sigma = fwhm_ghz / units::gaussian_fwhm_per_sigma;
    const auto half = static_cast<long>(std::ceil(5.0 * sigma / step));
    std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
    double ksum = 0.0;
    for (long k = -half; k <= half; ++k) {
        const double z = static_cast<double>(k) * step / sigma;
        kernel[static_cast<std::size_t>(k + half)] = std::exp(-0.5 * z * z);
        ksum += kernel[static_cast<std::size_t>(k + half)];
    }
    const auto n = static_cast<long>(intensity.size());
    std::vector<double> out(intensity.size(), 0.0);
    for (long i = 0; i < n; ++i) {
        double acc = 0.0;
        for (long k = -half; k <= half; ++k) {
            const long j = i + k;
            if (j < 0 || j >= n) continue;
            acc += kernel[static_cast<std::size_t>(k + half)] * intensity[static_cast<std::size_t>(j)];
        }
        out[static_cast<std::size_t>(i)] = acc / ksum;
    }
    return out;
}

TripletFit fit_triplet(const MollowSpectrum& spectrum)
{
    const std::vector<double>& x = spectrum.freqs_ghz;
    const std::vector<double>& y = spectrum.intensity;
    require(x.size() == y.size() && x.size() >= 10, "fit_triplet: spectrum too short");

    const auto imax = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
    const double ymax = y[imax];
    if (!(ymax > 0.0)) throw FitError("fit_triplet: empty spectrum");

    // Valley-bounded extent of the peak at index i.
    auto valley = [&](std::size_t i, int dir) {
        std::size_t j = i;
        while (true) {
            const long next = static_cast<long>(j) + dir;
            if (next < 0 || next >= static_cast<long>(y.size())) break;
            if (y[static_cast<std::size_t>(next)] > y[j]) break;
            j = static_cast<std::size_t>(next);
        }
        return j;
    };
    const double floor = 0.02 * ymax;
    std::size_t left = 0, right = 0;
    double best_left = 0.0, best_right = 0.0;
    const std::size_t center_lo = valley(imax, -1);
    const std::size_t center_hi = valley(imax, +1);
    for (std::size_t i = 1; i + 1 < y.size(); ++i) {
        if (!(y[i] > y[i - 1] && y[i] >= y[i + 1]) || y[i] < floor) continue;
        if (i < center_lo && y[i] > best_left) {
            best_left = y[i];
            left = i;
        }
        if (i > center_hi && y[i] > best_right) {
            best_right = y[i];
            right = i;
        }
    }
    if (best_left == 0.0 || best_right == 0.0) {
        throw FitError("fit_triplet: sidebands not resolved above the noise floor");
    }

    auto half_width = [&](std::size_t i) {
        const double half = 0.5 * y[i];
        std::size_t l = i, r = i;
        while (l > 0 && y[l] > half && y[l - 1] <= y[l]) --l;
        while (r + 1 < y.size() && y[r] > half && y[r + 1] <= y[r]) ++r;
        return std::max(x[r] - x[l], 2.0 * (x[1] - x[0]));
    };

    // Each sideband is the real part of a complex pole, i.e. a Lorentzian plus
    // a dispersive term of opposite sign on the two sides. Dropping the
    // dispersive part biases the splitting towards the centre by ~Gamma / Omega.
    Eigen::VectorXd p0(8);
    p0 << x[imax], 1.0, half_width(imax), 0.5 * (x[right] - x[left]), best_left / ymax,
        best_right / ymax, 0.5 * (half_width(left) + half_width(right)), 0.0;

    auto residual = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(static_cast<Eigen::Index>(x.size()));
        for (std::size_t k = 0; k < x.size(); ++k) {
            const double model = p(1) * lorentzian(x[k], p(0), p(2)) +
                                 p(4) * lorentzian(x[k], p(0) - p(3), p(6)) +
                                 p(5) * lorentzian(x[k], p(0) + p(3), p(6)) +
                                 p(7) * (dispersive(x[k], p(0) + p(3), p(6)) -
                                         dispersive(x[k], p(0) - p(3), p(6)));
            r(static_cast<Eigen::Index>(k)) = model - y[k] / ymax;
        }
        return r;
    };
    LmOptions lm_opts;
    lm_opts.max_iterations = 500;
    lm_opts.tolerance = 1e-15;
    const LmResult fit = levenberg_marquardt(residual, p0, lm_opts);
    const Eigen::VectorXd& p = fit.params;
    if (!(p(3) > 0.0 && p(2) > 0.0 && p(6) > 0.0) || !p.allFinite()) {
        throw FitError("fit_triplet: fit did not converge to three positive-width peaks");
    }

    TripletFit t;
    t.center_ghz = p(0);
    t.amp_center = p(1) * ymax;
    t.center_width_ghz = std::abs(p(2));
    t.rabi_split_ghz = p(3);
    t.amp_lower = p(4) * ymax;
    t.amp_upper = p(5) * ymax;
    t.amp_dispersive = p(7) * ymax;
    t.sideband_width_ghz = std::abs(p(6));
    t.rabi_split_err = fit.errors(3);
    t.sideband_width_err = fit.errors(6);
    t.residual_rms = std::sqrt(fit.cost / static_cast<double>(x.size()));
    return t;
}

ScalingFit scaling_fits(const std::vector<std::pair<double, TripletFit>>& power_series)
{
    require(power_series.size() >= 3, "scaling_fits: need at least 3 points");
    std::vector<double> sqrt_p, split, split2, width;
    for (const auto& [power, fit] : power_series) {
        require(power > 0.0 && std::isfinite(power), "scaling_fits: powers must be > 0");
        sqrt_p.push_back(std::sqrt(power));
        split.push_back(fit.rabi_split_ghz);
        split2.push_back(fit.rabi_split_ghz * fit.rabi_split_ghz);
        width.push_back(fit.sideband_width_ghz);
    }
    const auto [lo, hi] = std::minmax_element(sqrt_p.begin(), sqrt_p.end());
    require(*hi > *lo, "scaling_fits: powers are all equal");

    ScalingFit out;
    const LinearFit ks = proportional_fit(sqrt_p, split);
    out.k = ks.slope;
    out.k_err = ks.slope_err;
    out.r2_split = ks.r_squared;
    const LinearFit ws = linear_fit(split2, width);
    out.gamma0_ghz = ws.intercept;
    out.gamma0_err = ws.intercept_err;
    out.c_per_ghz = ws.slope;
    out.c_err = ws.slope_err;
    out.r2_width = ws.r_squared;
    return out;
}

EidModel eid_from_scaling(const ScalingFit& fit, double gamma_rad)
{
    return {units::two_pi * fit.gamma0_ghz - 1.5 * gamma_rad, fit.c_per_ghz / units::two_pi};
}

std::vector<double> frequency_grid(double lo_ghz, double hi_ghz, std::size_t n)
{
    require(n >= 2 && hi_ghz > lo_ghz, "frequency_grid: invalid range");
    std::vector<double> grid(n);
    const double step = (hi_ghz - lo_ghz) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) grid[i] = lo_ghz + step * static_cast<double>(i);
    return grid;
}

} // namespace qdsps
