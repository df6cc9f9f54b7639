#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <complex>
#include <vector>

namespace capspin {

using cplx = std::complex<double>;
using SpMat = Eigen::SparseMatrix<cplx>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

enum class Axis { x = 0, y = 1, z = 2 };

// Superoperator on the 4^n Liouville space (column-major vec convention:
// vec(A X B) = (B^T kron A) vec(X)). Flags record structural properties of the
// map noted at construction time.
struct SuperOp {
    SpMat sparse;
    Mat dense;
    bool dense_storage = false;
    bool hermiticity_preserving = false;
    bool trace_annihilating = false;

    Eigen::Index dim() const { return dense_storage ? dense.rows() : sparse.rows(); }
    Vec apply(const Vec& v) const { return dense_storage ? Vec(dense * v) : Vec(sparse * v); }
    Mat to_dense() const { return dense_storage ? dense : Mat(sparse); }
};

// Spin operator I_axis = sigma_axis / 2 at `site`, identity elsewhere.
// Site 0 is the slowest-varying tensor factor; the basis index bit for site k
// is bit (n-1-k), with |alpha> (up) = bit 0.
SpMat pauli_site_op(int n_spins, int site, Axis axis);

// Bare Pauli matrix sigma_axis at `site` (twice pauli_site_op).
SpMat sigma_site_op(int n_spins, int site, Axis axis);

// Scalar-coupling operator I_i . I_j.
SpMat dot_coupling_op(int n_spins, int i, int j);

// Trace out all sites not in `keep`; result dimension 2^|keep|, ordered by the
// sorted keep indices. Trace is preserved.
Mat partial_trace(const Mat& op, int n_spins, const std::vector<int>& keep);

// Commutator superoperator C(H): vec(X) -> vec(HX - XH).
SuperOp commutator_superop(const SpMat& op);

// vec / unvec helpers (column-major).
Vec vec_op(const Mat& m);
Mat unvec_op(const Vec& v);

}  // namespace capspin
