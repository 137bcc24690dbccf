#include "qdsps/fitting.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "qdsps/error.hpp"
#include "qdsps/lm.hpp"
#include "qdsps/units.hpp"

namespace qdsps {

namespace {

std::size_t index_of(const std::vector<std::string>& names, const std::string& name)
{
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw ValidationError("FitResult: no parameter '" + name + "'");
    return static_cast<std::size_t>(it - names.begin());
}

double rabi_model(double p, double a, double p_pi, double b)
{
    const double theta = units::pi * std::sqrt(std::max(0.0, p) / p_pi);
    const double s = std::sin(0.5 * theta);
    return a * s * s + b;
}

void fill_goodness(FitResult& fit, std::span<const double> y, const Eigen::VectorXd& residual)
{
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double ss_tot = 0.0;
    for (double v : y) ss_tot += (v - mean) * (v - mean);
    const double ss_res = residual.squaredNorm();
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
    fit.residual_rms = std::sqrt(ss_res / static_cast<double>(y.size()));
}

} // namespace

double FitResult::value(const std::string& name) const { return values[index_of(names, name)]; }
double FitResult::error(const std::string& name) const { return errors[index_of(names, name)]; }

FitResult fit_rabi_curve(std::span<const double> power, std::span<const double> counts)
{
    if (power.size() != counts.size()) throw FitError("fit_rabi_curve: size mismatch");
    if (power.size() < 5) throw FitError("fit_rabi_curve: need at least 5 points");
    for (std::size_t i = 0; i < power.size(); ++i) {
        if (!std::isfinite(power[i]) || !std::isfinite(counts[i]) || power[i] < 0.0) {
            throw FitError("fit_rabi_curve: non-finite or negative input at row " + std::to_string(i));
        }
        if (i > 0 && !(power[i] > power[i - 1])) {
            throw FitError("fit_rabi_curve: powers must be strictly increasing");
        }
    }
    const auto imax = static_cast<std::size_t>(
        std::max_element(counts.begin(), counts.end()) - counts.begin());
    if (imax == 0 || imax + 1 == counts.size()) {
        throw FitError("fit_rabi_curve: data has no interior maximum (first Rabi peak not spanned)");
    }
    const double cmin = *std::min_element(counts.begin(), counts.end());

    const auto n = static_cast<Eigen::Index>(power.size());
    auto residual = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto k = static_cast<std::size_t>(i);
            r(i) = rabi_model(power[k], p(0), std::abs(p(1)), p(2)) - counts[k];
        }
        return r;
    };
    Eigen::VectorXd p0(3);
    p0 << counts[imax] - cmin, power[imax], std::max(0.0, counts.front());
    const LmResult lm = levenberg_marquardt(residual, p0);
    if (!lm.params.allFinite() || !(std::abs(lm.params(1)) > 0.0)) {
        throw FitError("fit_rabi_curve: optimisation diverged");
    }

    FitResult fit;
    fit.names = {"A", "P_pi", "B"};
    fit.values = {lm.params(0), std::abs(lm.params(1)), lm.params(2)};
    fit.errors = {lm.errors(0), lm.errors(1), lm.errors(2)};
    fill_goodness(fit, counts, residual(lm.params));
    return fit;
}

FitResult fit_lifetime(std::span<const double> t_ps, std::span<const double> counts,
                       double fit_start_ps)
{
    if (t_ps.size() != counts.size()) throw FitError("fit_lifetime: size mismatch");
    std::vector<double> t, y;
    for (std::size_t i = 0; i < t_ps.size(); ++i) {
        if (t_ps[i] >= fit_start_ps) {
            if (!std::isfinite(counts[i]) || counts[i] < 0.0) {
                throw FitError("fit_lifetime: invalid count at bin " + std::to_string(i));
            }
            t.push_back(t_ps[i] - fit_start_ps);
            y.push_back(counts[i]);
        }
    }
    const auto nonzero = std::count_if(y.begin(), y.end(), [](double v) { return v > 0.0; });
    if (nonzero < 20) throw FitError("fit_lifetime: fewer than 20 populated tail bins");

    // Weighted log-linear seed: weight = counts (Poisson variance of log n ~ 1/n).
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (y[i] <= 0.0) continue;
        const double w = y[i];
        const double ly = std::log(y[i]);
        sw += w;
        sx += w * t[i];
        sy += w * ly;
        sxx += w * t[i] * t[i];
        sxy += w * t[i] * ly;
    }
    const double det = sw * sxx - sx * sx;
    const double slope = (sw * sxy - sx * sy) / det;
    const double slope_err = std::sqrt(sw / det);
    if (!(slope < 0.0) || !(-slope > 3.0 * slope_err)) {
        throw FitError("fit_lifetime: no significant decay in the selected window");
    }
    const double intercept = (sy - slope * sx) / sw;

    // Poisson deviance residuals make least squares equal to the likelihood fit.
    const auto n = static_cast<Eigen::Index>(t.size());
    auto residual = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(n);
        const double a = std::exp(p(0));
        const double tau = std::abs(p(1));
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto k = static_cast<std::size_t>(i);
            const double mu = a * std::exp(-t[k] / tau);
            const double yi = y[k];
            double dev = mu - yi;
            if (yi > 0.0) dev += yi * std::log(yi / mu);
            r(i) = std::copysign(std::sqrt(2.0 * std::max(0.0, dev)), mu - yi);
        }
        return r;
    };
    Eigen::VectorXd p0(2);
    p0 << intercept, -1.0 / slope;
    const LmResult lm = levenberg_marquardt(residual, p0);
    if (!lm.params.allFinite()) throw FitError("fit_lifetime: optimisation diverged");

    // The deviance has unit scale, so the LM covariance is the likelihood one.
    const double a = std::exp(lm.params(0));
    FitResult fit;
    fit.names = {"A", "tau_ps"};
    fit.values = {a, std::abs(lm.params(1))};
    fit.errors = {a * lm.errors(0), lm.errors(1)};

    Eigen::VectorXd model_res(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        model_res(i) = a * std::exp(-t[k] / fit.values[1]) - y[k];
    }
    fill_goodness(fit, y, model_res);
    return fit;
}

} // namespace qdsps
