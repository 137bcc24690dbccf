#include "qdsps/regression.hpp"

#include <cmath>

#include "qdsps/error.hpp"

namespace qdsps {

namespace {

double mean(std::span<const double> v)
{
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double r_squared(std::span<const double> y, double ss_res)
{
    const double ybar = mean(y);
    double ss_tot = 0.0;
    for (double v : y) ss_tot += (v - ybar) * (v - ybar);
    return ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
}

} // namespace

LinearFit linear_fit(std::span<const double> x, std::span<const double> y)
{
    require(x.size() == y.size() && x.size() >= 2, "linear_fit: need >= 2 paired points");
    const double n = static_cast<double>(x.size());
    const double xbar = mean(x);
    const double ybar = mean(y);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - xbar) * (x[i] - xbar);
        sxy += (x[i] - xbar) * (y[i] - ybar);
    }
    require(sxx > 0.0, "linear_fit: x values are all equal");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = ybar - f.slope * xbar;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        ss_res += r * r;
    }
    const double s2 = x.size() > 2 ? ss_res / (n - 2.0) : 0.0;
    f.slope_err = std::sqrt(s2 / sxx);
    f.intercept_err = std::sqrt(s2 * (1.0 / n + xbar * xbar / sxx));
    f.r_squared = r_squared(y, ss_res);
    return f;
}

LinearFit proportional_fit(std::span<const double> x, std::span<const double> y)
{
    require(x.size() == y.size() && !x.empty(), "proportional_fit: need paired points");
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    require(sxx > 0.0, "proportional_fit: x values are all zero");
    LinearFit f;
    f.slope = sxy / sxx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - f.slope * x[i];
        ss_res += r * r;
    }
    const double dof = static_cast<double>(x.size()) - 1.0;
    f.slope_err = dof > 0.0 ? std::sqrt(ss_res / dof / sxx) : 0.0;
    f.r_squared = r_squared(y, ss_res);
    return f;
}

} // namespace qdsps
