#include "capspin/relaxation.hpp"

#include <stdexcept>

namespace capspin {

OrientationGrid default_relaxation_grid() {
    return orientation_grid(GridKind::spherical_design, default_orientation_count);
}

SuperOp relaxation_superop(const SpinSystem& sys, MechanismSet mechanisms,
                           const OrientationGrid& grid) {
    sys.validate();
    if (mechanisms.empty())
        throw std::invalid_argument("relaxation_superop requires at least one mechanism");
    if (mechanisms.has(Mechanism::dipolar) && !sys.has_positions())
        throw std::invalid_argument("dipolar relaxation requires positions");
    if (mechanisms.has(Mechanism::csa)) {
        if (!sys.has_shielding())
            throw std::invalid_argument("CSA relaxation requires shielding tensors");
        if (!(sys.b_field_t > 0.0))
            throw std::invalid_argument("CSA relaxation requires a nonzero field");
    }
    if (grid.rotations.empty())
        throw std::invalid_argument("orientation grid is empty");

    const Eigen::Index dim = Eigen::Index(1) << sys.n_spins;
    const Eigen::Index sdim = dim * dim;
    Mat acc = Mat::Zero(sdim, sdim);
    // sequential accumulation in grid order keeps results bit-reproducible
    for (const auto& r : grid.rotations) {
        Orientation orient{r};
        SpMat h1(dim, dim);
        if (mechanisms.has(Mechanism::dipolar))
            h1 = h1 + build_dipolar_hamiltonian(sys, orient);
        if (mechanisms.has(Mechanism::csa))
            h1 = h1 + build_csa_hamiltonian(sys, orient);
        const SpMat c = commutator_superop(h1).sparse;
        acc += Mat(SpMat(c * c));
    }
    const double w = 1.0 / static_cast<double>(grid.rotations.size());
    SuperOp out;
    out.dense = (-sys.tau_c_s * w) * acc;
    out.dense_storage = true;
    out.hermiticity_preserving = true;
    out.trace_annihilating = true;
    return out;
}

}  // namespace capspin
