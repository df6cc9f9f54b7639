#include "capspin/spin_system.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace capspin {

double SpinSystem::mean_isotropic_shielding() const {
    if (shielding.empty()) return 0.0;
    double s = 0.0;
    for (const auto& t : shielding) s += t.trace() / 3.0;
    return s / static_cast<double>(shielding.size());
}

double SpinSystem::larmor_rad_s() const {
    return -gamma_rad_s_t * (1.0 - mean_isotropic_shielding()) * b_field_t;
}

void SpinSystem::validate() const {
    std::ostringstream err;
    if (n_spins < 2) {
        err << "n_spins must be >= 2, got " << n_spins;
        throw std::invalid_argument(err.str());
    }
    if (j_hz.rows() != n_spins || j_hz.cols() != n_spins) {
        err << "j_hz must be " << n_spins << "x" << n_spins << ", got " << j_hz.rows()
            << "x" << j_hz.cols();
        throw std::invalid_argument(err.str());
    }
    for (int i = 0; i < n_spins; ++i) {
        if (j_hz(i, i) != 0.0) {
            err << "j_hz diagonal must be zero, j(" << i << "," << i << ") = " << j_hz(i, i);
            throw std::invalid_argument(err.str());
        }
        for (int j = i + 1; j < n_spins; ++j) {
            if (std::abs(j_hz(i, j) - j_hz(j, i)) > 1e-12) {
                err << "j_hz must be symmetric, j(" << i << "," << j << ") = " << j_hz(i, j)
                    << " but j(" << j << "," << i << ") = " << j_hz(j, i);
                throw std::invalid_argument(err.str());
            }
        }
    }
    if (!positions.empty()) {
        if (static_cast<int>(positions.size()) != n_spins) {
            err << "positions must have " << n_spins << " entries, got " << positions.size();
            throw std::invalid_argument(err.str());
        }
        for (std::size_t i = 0; i < positions.size(); ++i) {
            for (std::size_t j = i + 1; j < positions.size(); ++j) {
                if ((positions[i] - positions[j]).norm() <= 0.0) {
                    err << "coincident nuclei at sites " << i << " and " << j;
                    throw std::invalid_argument(err.str());
                }
            }
        }
    }
    if (!shielding.empty() && static_cast<int>(shielding.size()) != n_spins) {
        err << "shielding must have " << n_spins << " tensors, got " << shielding.size();
        throw std::invalid_argument(err.str());
    }
    if (!(tau_c_s > 0.0)) {
        err << "tau_c_s must be positive, got " << tau_c_s;
        throw std::invalid_argument(err.str());
    }
    if (b_field_t < 0.0) {
        err << "b_field_t must be nonnegative, got " << b_field_t;
        throw std::invalid_argument(err.str());
    }
}

}  // namespace capspin
