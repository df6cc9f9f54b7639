#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "capspin/constants.hpp"

namespace capspin {

// One molecule's spin description. All spins are spin-1/2 (31P).
// Units: positions in meters, J couplings in Hz, tau_c in seconds, field in
// Tesla, gamma in rad s^-1 T^-1. Shielding tensors are dimensionless absolute
// fractions (1 ppm = 1e-6).
struct SpinSystem {
    int n_spins = 0;
    std::vector<Eigen::Vector3d> positions;        // empty: no geometry
    Eigen::MatrixXd j_hz;                          // symmetric, zero diagonal
    std::vector<Eigen::Matrix3d> shielding;        // empty: no shielding data
    double tau_c_s = constants::default_tau_c_s;
    double b_field_t = constants::default_b_field_t;
    double gamma_rad_s_t = constants::gamma_p31;
    std::string label;
    std::string symmetry_label;

    bool has_positions() const { return !positions.empty(); }
    bool has_shielding() const { return !shielding.empty(); }

    // Mean isotropic shielding over sites (0 when no tensors given).
    double mean_isotropic_shielding() const;

    // Uniform Larmor frequency -gamma (1 - sigma_bar) B, rad/s.
    double larmor_rad_s() const;

    // Throws std::invalid_argument with a field-pinpointing message on any
    // violated invariant (J symmetry/diagonal, position count, distances,
    // tau_c/b ranges, shielding count).
    void validate() const;
};

}  // namespace capspin
