#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "capspin/relaxation.hpp"
#include "capspin/spin_ops.hpp"
#include "capspin/spin_system.hpp"
#include "capspin/time_grid.hpp"

namespace capspin {

// L = C(H0) + i Gamma; density-operator evolution is drho/dt = -i L rho.
struct Liouvillian {
    Eigen::Index dim = 0;
    SpMat coherent;   // C(H0)
    SuperOp gamma;    // empty when coherent-only
    bool has_gamma = false;

    Vec apply(const Vec& v) const;
    Mat to_dense() const;
};

Liouvillian build_liouvillian(const SpMat& h0, const SuperOp* gamma = nullptr);

enum class PropagationMethod { eigendecomposition, krylov_expm };

struct PropagationResult {
    std::vector<Mat> trajectory;
    PropagationMethod method_used = PropagationMethod::eigendecomposition;
    std::string warning;  // set when the eigendecomposition path fell back
};

// x(t) = exp(-i L t) x0 sampled on the grid. The eigendecomposition path
// diagonalizes once and reuses the factorization for all samples; it falls
// back to krylov-expm (per-step tolerance 1e-10) when the eigenvector matrix
// condition estimate exceeds 1e12.
PropagationResult propagate(const Liouvillian& L, const Mat& x0, const TimeGrid& grid,
                            PropagationMethod method = PropagationMethod::eigendecomposition);

// Time series of the 3x3 spin-transfer tensor
//   m_ab(t) = 2^-n Tr[sigma_b^(probe) exp(-iLt) sigma_a^(source)].
struct CorrelationTensor {
    std::vector<double> times;
    std::vector<Eigen::Matrix3d> m;
    int source_spin = 0;
    int probe_spin = 0;
    double max_imag = 0.0;  // largest imaginary part seen before discarding
};

struct DynamicsOptions {
    bool with_relaxation = false;
    MechanismSet mechanisms = MechanismSet::dipolar_only();
    OrientationGrid orientation;  // empty -> default relaxation grid
    bool per_site_isotropic_shifts = false;
};

// Spectral propagator for one molecule; build once, evaluate correlation
// tensors for any (source, probe) pair. Coherent systems use total-Sz
// sector-blocked Hilbert eigendecompositions; relaxed systems use
// coherence-order-blocked Liouville eigendecompositions when the orientation
// average permits (always true for the design grid), else a dense solve. The
// uniform Zeeman term is applied as an exact per-term phase so results are
// field-invariant to machine precision where the physics says they must be.
class MoleculePropagator {
  public:
    MoleculePropagator(const SpinSystem& sys, const DynamicsOptions& opts);
    ~MoleculePropagator();
    MoleculePropagator(MoleculePropagator&&) noexcept;

    CorrelationTensor correlation_tensor(int source, int probe, const TimeGrid& grid) const;
    int n_spins() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// One-shot convenience wrapper around MoleculePropagator.
CorrelationTensor correlation_tensor(const SpinSystem& sys, int source, int probe,
                                     const TimeGrid& grid, const DynamicsOptions& opts = {});

// p(t) = 1/4 + 1/4 sum_ab m^A_ab(t) m^B_ab(t); grids must match exactly.
std::vector<double> singlet_probability_factorized(const CorrelationTensor& mA,
                                                   const CorrelationTensor& mB);

// Brute-force two-molecule evolution: rho(0) = P/Tr(P) with the singlet
// projector on (pairA in A, pairB in B), evolved under L_A (+) L_B with no
// cross terms. Returns Tr[rho(t) P], the reduced pair density by direct
// partial trace, and evolution sanity diagnostics.
struct JointDirectResult {
    std::vector<double> times;
    std::vector<double> p;
    std::vector<Eigen::Matrix4cd> rho_pair;
    double max_trace_error = 0.0;
    double max_herm_error = 0.0;
};

JointDirectResult joint_evolution_direct(const SpinSystem& sysA, const SpinSystem& sysB,
                                         int pairA, int pairB, const TimeGrid& grid,
                                         const DynamicsOptions& opts = {},
                                         int oracle_cap_spins = 6);

std::vector<double> joint_singlet_probability_direct(const SpinSystem& sysA,
                                                     const SpinSystem& sysB, int pairA,
                                                     int pairB, const TimeGrid& grid,
                                                     const DynamicsOptions& opts = {},
                                                     int oracle_cap_spins = 6);

}  // namespace capspin
