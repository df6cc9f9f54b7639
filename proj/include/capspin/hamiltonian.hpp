#pragma once

#include <Eigen/Dense>

#include "capspin/spin_ops.hpp"
#include "capspin/spin_system.hpp"

namespace capspin {

// Proper rotation applied to the molecule's internuclear vectors (lab frame,
// and the field axis, stay fixed).
struct Orientation {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    void validate() const;  // orthogonality within 1e-12, det +1
};

// H0 = w0 sum_k I_kz + 2 pi sum_{j<k} J_jk I_j.I_k, rad/s, with
// w0 = -gamma (1 - sigma_bar) B. Per-site isotropic shifts are folded in only
// when per_site_isotropic_shifts is set (default keeps a uniform shift).
SpMat build_coherent_hamiltonian(const SpinSystem& sys,
                                 bool per_site_isotropic_shifts = false);

// Intramolecular dipole-dipole coupling at a molecular orientation, rad/s:
// H_DD = -sum_{j<k} (mu0 gamma^2 hbar)/(4 pi r^3) [I_j.I_k - 3 (I_j.r)(I_k.r)].
SpMat build_dipolar_hamiltonian(const SpinSystem& sys, const Orientation& orient);

// Anisotropic-shielding Zeeman term at a molecular orientation, rad/s:
// H_CSA = gamma B sum_k sum_a [R Delta_k R^T]_{az} I_{k,a}, Delta_k the
// traceless symmetric part of the site shielding tensor. Zero for isotropic
// tensors or B = 0.
SpMat build_csa_hamiltonian(const SpinSystem& sys, const Orientation& orient);

// Dipolar coupling strength mu0 gamma^2 hbar / (4 pi r^3) for separation r in
// meters, rad/s.
double dipolar_coupling_rad_s(double gamma_rad_s_t, double r_m);

}  // namespace capspin
