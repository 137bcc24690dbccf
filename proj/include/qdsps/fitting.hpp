#pragma once

#include <span>
#include <string>
#include <vector>

namespace qdsps {

struct FitResult {
    std::vector<std::string> names;
    std::vector<double> values;
    std::vector<double> errors; ///< 1 sigma
    double r_squared = 0.0;
    double residual_rms = 0.0;

    double value(const std::string& name) const;
    double error(const std::string& name) const;
};

/// Fits counts = A sin^2(theta / 2) + B, theta = pi sqrt(P / P_pi).
/// Parameters: "A", "P_pi", "B". Needs >= 5 points with the largest count at
/// an interior point, otherwise FitError.
FitResult fit_rabi_curve(std::span<const double> power, std::span<const double> counts);

/// Single-exponential decay N(t) = A exp(-(t - t_start) / tau) fitted to the
/// bins with t >= fit_start_ps by Poisson maximum likelihood, seeded from a
/// weighted log-linear fit. Parameters: "A", "tau_ps". Needs >= 20 non-empty
/// bins in the tail and a significant decay, otherwise FitError.
FitResult fit_lifetime(std::span<const double> t_ps, std::span<const double> counts,
                       double fit_start_ps);

} // namespace qdsps
