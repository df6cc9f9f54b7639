#pragma once

#include "capspin/hamiltonian.hpp"
#include "capspin/orientation_grid.hpp"
#include "capspin/spin_ops.hpp"
#include "capspin/spin_system.hpp"

namespace capspin {

enum class Mechanism : unsigned { dipolar = 1u, csa = 2u };

struct MechanismSet {
    unsigned bits = 0;
    bool has(Mechanism m) const { return bits & static_cast<unsigned>(m); }
    MechanismSet& add(Mechanism m) { bits |= static_cast<unsigned>(m); return *this; }
    bool empty() const { return bits == 0; }
    static MechanismSet dipolar_only() { return MechanismSet{}.add(Mechanism::dipolar); }
    static MechanismSet all() { return MechanismSet{}.add(Mechanism::dipolar).add(Mechanism::csa); }
};

// Extreme-narrowing relaxation superoperator
//   Gamma = -tau_c * avg_R [ C(H1(R)) C(H1(R)) ],
// H1(R) the sum of the selected mechanism Hamiltonians at orientation R.
// Mechanisms are summed before squaring, so cross correlations (pair-pair and
// dipolar-CSA) are included. Dense storage; hermiticity-preserving and
// trace-annihilating flags set.
SuperOp relaxation_superop(const SpinSystem& sys, MechanismSet mechanisms,
                           const OrientationGrid& grid);

// Default grid for relaxation averages.
OrientationGrid default_relaxation_grid();

}  // namespace capspin
