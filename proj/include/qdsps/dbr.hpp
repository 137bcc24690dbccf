#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

// Normal-incidence 2x2 characteristic-matrix model of planar layer stacks:
// Bragg mirrors and the lambda-spacer microcavity between them.
namespace qdsps {

struct Layer {
    double n = 1.0;
    double d_nm = 0.0;
    /// Receives the in-plane index anisotropy (semiconductor layers).
    bool anisotropic = false;
    std::string material;
};

/// Layers ordered from the incidence side (n_in) to the exit side (n_out).
struct LayerStack {
    std::vector<Layer> layers;
    double n_in = 1.0;
    double n_out = 1.0;

    void validate() const;
    LayerStack reversed() const;
};

template <typename Scalar>
using CharacteristicMatrix = Eigen::Matrix<std::complex<Scalar>, 2, 2>;

template <typename Scalar>
struct StackResponse {
    std::complex<Scalar> r;
    std::complex<Scalar> t;
    Scalar reflectance;
    Scalar transmittance;
};

/// Product of per-layer characteristic matrices
///   [[cos d, i sin d / n], [i n sin d, cos d]],  d = 2 pi n t / lambda.
/// `delta_n` is added to the index of every anisotropic layer.
template <typename Scalar>
CharacteristicMatrix<Scalar> characteristic_matrix(const LayerStack& stack, Scalar lambda_nm,
                                                   Scalar delta_n = Scalar(0))
{
    using C = std::complex<Scalar>;
    const C i(Scalar(0), Scalar(1));
    CharacteristicMatrix<Scalar> m = CharacteristicMatrix<Scalar>::Identity();
    for (const Layer& layer : stack.layers) {
        const Scalar n = Scalar(layer.n) + (layer.anisotropic ? delta_n : Scalar(0));
        const Scalar phase =
            Scalar(2) * Scalar(3.14159265358979323846264338327950288L) * n * Scalar(layer.d_nm) /
            lambda_nm;
        const Scalar c = std::cos(phase);
        const Scalar s = std::sin(phase);
        CharacteristicMatrix<Scalar> layer_matrix;
        layer_matrix << C(c), i * s / n, i * n * s, C(c);
        m = m * layer_matrix;
    }
    return m;
}

template <typename Scalar>
StackResponse<Scalar> stack_response(const LayerStack& stack, Scalar lambda_nm,
                                     Scalar delta_n = Scalar(0))
{
    const CharacteristicMatrix<Scalar> m = characteristic_matrix(stack, lambda_nm, delta_n);
    const Scalar n0 = Scalar(stack.n_in);
    const Scalar ns = Scalar(stack.n_out);
    const std::complex<Scalar> b = m(0, 0) + ns * m(0, 1);
    const std::complex<Scalar> c = m(1, 0) + ns * m(1, 1);
    const std::complex<Scalar> denom = n0 * b + c;
    StackResponse<Scalar> out;
    out.r = (n0 * b - c) / denom;
    out.t = Scalar(2) * n0 / denom;
    out.reflectance = std::norm(out.r);
    out.transmittance = ns / n0 * std::norm(out.t);
    return out;
}

struct SpectrumPoint {
    double lambda_nm = 0.0;
    double reflectance = 0.0;
    double transmittance = 0.0;
};

std::vector<SpectrumPoint> reflectance_spectrum(const LayerStack& stack,
                                                const std::vector<double>& lambdas_nm,
                                                double delta_n = 0.0);

/// Evenly spaced grid of `n` points on [lo, hi].
std::vector<double> wavelength_grid(double lo_nm, double hi_nm, std::size_t n);

struct Resonance {
    double lambda_nm = 0.0;
    double fwhm_nm = 0.0;
    double q = 0.0;
    double peak_transmittance = 0.0;
};

struct ResonanceSearch {
    double lambda_min_nm = 0.0;
    double lambda_max_nm = 0.0;
    std::size_t grid_points = 20001;
};

/// Locates the cavity mode as the narrowest transmission peak on the grid,
/// then refines its centre (golden section) and half-maximum points
/// (bisection). Throws SearchError if no peak with two half-maximum
/// crossings exists in the window.
Resonance cavity_resonance(const LayerStack& stack, const ResonanceSearch& search,
                           double delta_n = 0.0);

/// Mode splitting |nu(n) - nu(n + delta_n)| in GHz.
double birefringent_splitting(const LayerStack& stack, double delta_n,
                              const ResonanceSearch& search);

/// Anisotropy delta_n that produces `target_ghz` of splitting (secant
/// iteration starting from the linear estimate).
double anisotropy_for_splitting(const LayerStack& stack, double target_ghz,
                                const ResonanceSearch& search);

struct MaterialIndices {
    double gaas = 3.54;
    double algaas = 2.98; ///< Al0.95Ga0.05As
    double sio2 = 1.45;
    double tio2 = 2.30;
};

struct MicrocavityDesign {
    double design_nm = 913.945;
    int top_pairs = 7;
    int bottom_pairs = 46;
    double spacer_wavelengths = 2.0;
    MaterialIndices indices;
};

/// Air / (TiO2, SiO2) x top / GaAs spacer / (AlGaAs, GaAs) x bottom / GaAs substrate,
/// all layers quarter-wave at the design wavelength.
LayerStack planar_microcavity(const MicrocavityDesign& design);

/// (high, low) x pairs quarter-wave mirror between ambient n_in and substrate n_out.
LayerStack quarter_wave_mirror(double n_high, double n_low, int pairs, double design_nm,
                               double n_in, double n_out);

} // namespace qdsps
