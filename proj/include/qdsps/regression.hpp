#pragma once

#include <span>

namespace qdsps {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_err = 0.0;
    double intercept_err = 0.0;
    double r_squared = 0.0;
};

/// Ordinary least squares y = intercept + slope * x.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

/// Least squares through the origin, y = slope * x. R^2 uses the
/// mean-centred total sum of squares so it is comparable with linear_fit.
LinearFit proportional_fit(std::span<const double> x, std::span<const double> y);

} // namespace qdsps
