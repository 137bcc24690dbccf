#include "qdsps/dbr.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "qdsps/error.hpp"
#include "qdsps/units.hpp"

namespace qdsps {

namespace {

double transmittance(const LayerStack& stack, double lambda, double delta_n)
{
    return stack_response<double>(stack, lambda, delta_n).transmittance;
}

// Golden-section maximisation of T on [a, b].
double refine_peak(const LayerStack& stack, double a, double b, double delta_n)
{
    constexpr double inv_phi = 0.6180339887498949;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = transmittance(stack, c, delta_n);
    double fd = transmittance(stack, d, delta_n);
    for (int i = 0; i < 200 && (b - a) > 1e-12 * b; ++i) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = transmittance(stack, c, delta_n);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = transmittance(stack, d, delta_n);
        }
    }
    return 0.5 * (a + b);
}

// Half-maximum crossing between `inside` (T > half) and `outside` (T < half).
double bisect_half(const LayerStack& stack, double inside, double outside, double half,
                   double delta_n)
{
    for (int i = 0; i < 200 && std::abs(outside - inside) > 1e-13 * inside; ++i) {
        const double mid = 0.5 * (inside + outside);
        if (transmittance(stack, mid, delta_n) > half) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    return 0.5 * (inside + outside);
}

struct Candidate {
    std::size_t index;
    std::size_t left;
    std::size_t right;
};

} // namespace

void LayerStack::validate() const
{
    require(std::isfinite(n_in) && n_in >= 1.0, "LayerStack: n_in must be >= 1");
    require(std::isfinite(n_out) && n_out >= 1.0, "LayerStack: n_out must be >= 1");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Layer& l = layers[i];
        require(std::isfinite(l.n) && l.n >= 1.0,
                "LayerStack: layer " + std::to_string(i) + " index must be >= 1");
        require(std::isfinite(l.d_nm) && l.d_nm > 0.0,
                "LayerStack: layer " + std::to_string(i) + " thickness must be > 0");
    }
}

LayerStack LayerStack::reversed() const
{
    LayerStack r;
    r.layers.assign(layers.rbegin(), layers.rend());
    r.n_in = n_out;
    r.n_out = n_in;
    return r;
}

std::vector<SpectrumPoint> reflectance_spectrum(const LayerStack& stack,
                                                const std::vector<double>& lambdas_nm,
                                                double delta_n)
{
    stack.validate();
    std::vector<SpectrumPoint> out;
    out.reserve(lambdas_nm.size());
    for (double lambda : lambdas_nm) {
        require(std::isfinite(lambda) && lambda > 0.0,
                "reflectance_spectrum: wavelengths must be > 0");
        const auto resp = stack_response<double>(stack, lambda, delta_n);
        out.push_back({lambda, resp.reflectance, resp.transmittance});
    }
    return out;
}

std::vector<double> wavelength_grid(double lo_nm, double hi_nm, std::size_t n)
{
    require(n >= 2 && hi_nm > lo_nm && lo_nm > 0.0, "wavelength_grid: invalid range");
    std::vector<double> grid(n);
    const double step = (hi_nm - lo_nm) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) grid[i] = lo_nm + step * static_cast<double>(i);
    return grid;
}

Resonance cavity_resonance(const LayerStack& stack, const ResonanceSearch& search,
                           double delta_n)
{
    stack.validate();
    const std::vector<double> grid =
        wavelength_grid(search.lambda_min_nm, search.lambda_max_nm, search.grid_points);
    std::vector<double> t(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) t[i] = transmittance(stack, grid[i], delta_n);

    std::optional<Candidate> best;
    std::size_t best_width = grid.size();
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
        if (!(t[i] > t[i - 1] && t[i] >= t[i + 1])) continue;
        const double half = 0.5 * t[i];
        std::size_t l = i;
        while (l > 0 && t[l] > half) --l;
        std::size_t r = i;
        while (r + 1 < grid.size() && t[r] > half) ++r;
        if (t[l] > half || t[r] > half) continue; // no crossing inside the window
        if (r - l < best_width) {
            best_width = r - l;
            best = Candidate{i, l, r};
        }
    }
    if (!best) {
        throw SearchError("cavity_resonance: no transmission resonance between " +
                          std::to_string(search.lambda_min_nm) + " and " +
                          std::to_string(search.lambda_max_nm) + " nm");
    }

    const std::size_t i = best->index;
    const double peak = refine_peak(stack, grid[i - 1], grid[i + 1], delta_n);
    const double t_peak = transmittance(stack, peak, delta_n);
    const double half = 0.5 * t_peak;
    const double left = bisect_half(stack, peak, grid[best->left], half, delta_n);
    const double right = bisect_half(stack, peak, grid[best->right], half, delta_n);

    Resonance res;
    res.lambda_nm = peak;
    res.fwhm_nm = right - left;
    res.q = peak / res.fwhm_nm;
    res.peak_transmittance = t_peak;
    return res;
}

double birefringent_splitting(const LayerStack& stack, double delta_n,
                              const ResonanceSearch& search)
{
    if (delta_n == 0.0) return 0.0;
    const Resonance base = cavity_resonance(stack, search, 0.0);
    const Resonance shifted = cavity_resonance(stack, search, delta_n);
    return std::abs(units::speed_of_light / base.lambda_nm -
                    units::speed_of_light / shifted.lambda_nm);
}

double anisotropy_for_splitting(const LayerStack& stack, double target_ghz,
                                const ResonanceSearch& search)
{
    require(target_ghz > 0.0, "anisotropy_for_splitting: target must be > 0");
    double x0 = 1e-4;
    double f0 = birefringent_splitting(stack, x0, search) - target_ghz;
    double x1 = x0 * target_ghz / (f0 + target_ghz);
    double f1 = birefringent_splitting(stack, x1, search) - target_ghz;
    for (int i = 0; i < 20 && std::abs(f1) > 1e-6 * target_ghz; ++i) {
        const double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = birefringent_splitting(stack, x1, search) - target_ghz;
    }
    if (std::abs(f1) > 1e-3 * target_ghz) {
        throw SearchError("anisotropy_for_splitting: secant iteration did not converge");
    }
    return x1;
}

LayerStack quarter_wave_mirror(double n_high, double n_low, int pairs, double design_nm,
                               double n_in, double n_out)
{
    require(pairs >= 0, "quarter_wave_mirror: pairs must be >= 0");
    LayerStack stack;
    stack.n_in = n_in;
    stack.n_out = n_out;
    for (int p = 0; p < pairs; ++p) {
        stack.layers.push_back({n_high, design_nm / (4.0 * n_high), false, "high"});
        stack.layers.push_back({n_low, design_nm / (4.0 * n_low), false, "low"});
    }
    return stack;
}

LayerStack planar_microcavity(const MicrocavityDesign& design)
{
    require(design.design_nm > 0.0, "planar_microcavity: design wavelength must be > 0");
    require(design.top_pairs >= 0 && design.bottom_pairs >= 0,
            "planar_microcavity: mirror pair counts must be >= 0");
    require(design.spacer_wavelengths > 0.0, "planar_microcavity: spacer must be > 0");
    const MaterialIndices& n = design.indices;
    const double lambda = design.design_nm;
    auto quarter = [lambda](double index, bool aniso, const char* name) {
        return Layer{index, lambda / (4.0 * index), aniso, name};
    };

    LayerStack stack;
    stack.n_in = 1.0;
    stack.n_out = n.gaas;
    // Low-index layers face the spacer on both sides so that both mirrors
    // reflect in phase at the design wavelength.
    for (int p = 0; p < design.top_pairs; ++p) {
        stack.layers.push_back(quarter(n.tio2, false, "TiO2"));
        stack.layers.push_back(quarter(n.sio2, false, "SiO2"));
    }
    stack.layers.push_back(
        Layer{n.gaas, design.spacer_wavelengths * lambda / n.gaas, true, "GaAs spacer"});
    for (int p = 0; p < design.bottom_pairs; ++p) {
        stack.layers.push_back(quarter(n.algaas, true, "AlGaAs"));
        stack.layers.push_back(quarter(n.gaas, true, "GaAs"));
    }
    return stack;
}

} // namespace qdsps
