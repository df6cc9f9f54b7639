#include "capspin/hamiltonian.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "capspin/constants.hpp"

namespace capspin {

void Orientation::validate() const {
    const Eigen::Matrix3d should_be_id = rotation * rotation.transpose();
    if ((should_be_id - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("orientation matrix is not orthogonal within 1e-12");
    if (std::abs(rotation.determinant() - 1.0) > 1e-12)
        throw std::invalid_argument("orientation matrix must be a proper rotation (det +1)");
}

double dipolar_coupling_rad_s(double gamma_rad_s_t, double r_m) {
    return constants::mu0 * gamma_rad_s_t * gamma_rad_s_t * constants::hbar /
           (4.0 * constants::pi * r_m * r_m * r_m);
}

SpMat build_coherent_hamiltonian(const SpinSystem& sys, bool per_site_isotropic_shifts) {
    sys.validate();
    const int n = sys.n_spins;
    const Eigen::Index dim = Eigen::Index(1) << n;
    SpMat h(dim, dim);
    if (sys.b_field_t > 0.0) {
        if (per_site_isotropic_shifts && sys.has_shielding()) {
            for (int k = 0; k < n; ++k) {
                const double sigma_k = sys.shielding[k].trace() / 3.0;
                const double w_k = -sys.gamma_rad_s_t * (1.0 - sigma_k) * sys.b_field_t;
                h = h + SpMat(w_k * pauli_site_op(n, k, Axis::z));
            }
        } else {
            const double w0 = sys.larmor_rad_s();
            for (int k = 0; k < n; ++k)
                h = h + SpMat(w0 * pauli_site_op(n, k, Axis::z));
        }
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (sys.j_hz(i, j) != 0.0)
                h = h + SpMat(2.0 * constants::pi * sys.j_hz(i, j) * dot_coupling_op(n, i, j));
    return h;
}

SpMat build_dipolar_hamiltonian(const SpinSystem& sys, const Orientation& orient) {
    sys.validate();
    orient.validate();
    if (!sys.has_positions())
        throw std::invalid_argument("dipolar Hamiltonian requires positions");
    const int n = sys.n_spins;
    const Eigen::Index dim = Eigen::Index(1) << n;
    SpMat h(dim, dim);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const Eigen::Vector3d r_vec =
                orient.rotation * (sys.positions[j] - sys.positions[i]);
            const double r = r_vec.norm();
            if (r <= 0.0) throw std::invalid_argument("coincident nuclei in dipolar builder");
            const Eigen::Vector3d u = r_vec / r;
            const double b = dipolar_coupling_rad_s(sys.gamma_rad_s_t, r);
            // I_i.u and I_j.u
            SpMat proj_i(dim, dim), proj_j(dim, dim);
            for (int a = 0; a < 3; ++a) {
                if (u[a] == 0.0) continue;
                proj_i = proj_i + SpMat(u[a] * pauli_site_op(n, i, static_cast<Axis>(a)));
                proj_j = proj_j + SpMat(u[a] * pauli_site_op(n, j, static_cast<Axis>(a)));
            }
            SpMat term = dot_coupling_op(n, i, j);
            term = term - SpMat(3.0 * (proj_i * proj_j));
            h = h - SpMat(b * term);
        }
    }
    return h;
}

SpMat build_csa_hamiltonian(const SpinSystem& sys, const Orientation& orient) {
    sys.validate();
    orient.validate();
    if (!sys.has_shielding())
        throw std::invalid_argument("CSA Hamiltonian requires shielding tensors");
    if (!(sys.b_field_t > 0.0))
        throw std::invalid_argument("CSA Hamiltonian requires a nonzero field");
    const int n = sys.n_spins;
    const Eigen::Index dim = Eigen::Index(1) << n;
    SpMat h(dim, dim);
    for (int k = 0; k < n; ++k) {
        // traceless symmetric part; antisymmetric part discarded
        Eigen::Matrix3d sym = 0.5 * (sys.shielding[k] + sys.shielding[k].transpose());
        sym -= (sym.trace() / 3.0) * Eigen::Matrix3d::Identity();
        const Eigen::Matrix3d rotated = orient.rotation * sym * orient.rotation.transpose();
        for (int a = 0; a < 3; ++a) {
            const double coeff = sys.gamma_rad_s_t * sys.b_field_t * rotated(a, 2);
            if (coeff == 0.0) continue;
            h = h + SpMat(coeff * pauli_site_op(n, k, static_cast<Axis>(a)));
        }
    }
    return h;
}

}  // namespace capspin
