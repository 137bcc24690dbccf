#pragma once

#include <Eigen/Dense>

// Optical Bloch generators for a driven two-level system in the rotating
// frame of the drive (RWA). State vector layout:
//   x = (rho_ee, rho_gg, Re rho_eg, Im rho_eg)
// Rates are angular (1/ns); detuning = emitter minus drive frequency.
namespace qdsps {

template <typename Scalar>
using BlochVector = Eigen::Matrix<Scalar, 4, 1>;

template <typename Scalar>
using BlochGenerator = Eigen::Matrix<Scalar, 4, 4>;

// Generator of the conditional (no photon emitted) evolution: radiative decay
// drains rho_ee without refilling rho_gg. Pure dephasing is photon-free and is
// kept in full.
template <typename Scalar>
BlochGenerator<Scalar> no_emission_generator(Scalar gamma, Scalar gamma_phi, Scalar detuning,
                                             Scalar omega)
{
    const Scalar gamma2 = gamma / Scalar(2) + gamma_phi;
    BlochGenerator<Scalar> m = BlochGenerator<Scalar>::Zero();
    m(0, 0) = -gamma;
    m(0, 3) = -omega;
    m(1, 3) = omega;
    m(2, 2) = -gamma2;
    m(2, 3) = detuning;
    m(3, 0) = omega / Scalar(2);
    m(3, 1) = -omega / Scalar(2);
    m(3, 2) = -detuning;
    m(3, 3) = -gamma2;
    return m;
}

// Photon-emission (jump) superoperator: moves Gamma * rho_ee into rho_gg.
template <typename Scalar>
BlochGenerator<Scalar> emission_jump(Scalar gamma)
{
    BlochGenerator<Scalar> j = BlochGenerator<Scalar>::Zero();
    j(1, 0) = gamma;
    return j;
}

// Full Lindblad generator = conditional part + jump part.
template <typename Scalar>
BlochGenerator<Scalar> lindblad_generator(Scalar gamma, Scalar gamma_phi, Scalar detuning,
                                          Scalar omega)
{
    return no_emission_generator(gamma, gamma_phi, detuning, omega) + emission_jump(gamma);
}

} // namespace qdsps
