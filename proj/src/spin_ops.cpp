#include "capspin/spin_ops.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace capspin {

namespace {

void check_site(int n_spins, int site) {
    if (n_spins < 1) throw std::invalid_argument("n_spins must be >= 1");
    if (site < 0 || site >= n_spins)
        throw std::invalid_argument("site " + std::to_string(site) + " out of range for " +
                                    std::to_string(n_spins) + " spins");
}

// Bit of the basis index carrying `site` (site 0 is the slowest factor,
// bit value 0 = |alpha> = up).
inline Eigen::Index site_bit(int n_spins, int site) {
    return Eigen::Index(1) << (n_spins - 1 - site);
}

}  // namespace

SpMat sigma_site_op(int n_spins, int site, Axis axis) {
    check_site(n_spins, site);
    const Eigen::Index dim = Eigen::Index(1) << n_spins;
    const Eigen::Index bit = site_bit(n_spins, site);
    std::vector<Eigen::Triplet<cplx>> trip;
    trip.reserve(dim);
    for (Eigen::Index r = 0; r < dim; ++r) {
        const bool down = (r & bit) != 0;
        switch (axis) {
            case Axis::x:
                trip.emplace_back(r ^ bit, r, cplx(1.0, 0.0));
                break;
            case Axis::y:
                // sigma_y |up> = i|down>, sigma_y |down> = -i|up>
                trip.emplace_back(r ^ bit, r, down ? cplx(0.0, -1.0) : cplx(0.0, 1.0));
                break;
            case Axis::z:
                trip.emplace_back(r, r, cplx(down ? -1.0 : 1.0, 0.0));
                break;
        }
    }
    SpMat out(dim, dim);
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

SpMat pauli_site_op(int n_spins, int site, Axis axis) {
    return SpMat(0.5 * sigma_site_op(n_spins, site, axis));
}

SpMat dot_coupling_op(int n_spins, int i, int j) {
    check_site(n_spins, i);
    check_site(n_spins, j);
    if (i == j) throw std::invalid_argument("dot_coupling_op requires distinct sites");
    const Eigen::Index dim = Eigen::Index(1) << n_spins;
    const Eigen::Index bi = site_bit(n_spins, i);
    const Eigen::Index bj = site_bit(n_spins, j);
    std::vector<Eigen::Triplet<cplx>> trip;
    trip.reserve(2 * dim);
    for (Eigen::Index r = 0; r < dim; ++r) {
        const double si = (r & bi) ? -1.0 : 1.0;
        const double sj = (r & bj) ? -1.0 : 1.0;
        trip.emplace_back(r, r, cplx(0.25 * si * sj, 0.0));
        // flip-flop (I+I- + I-I+)/2 acts when the two spins are antiparallel
        if (si * sj < 0.0) trip.emplace_back(r ^ bi ^ bj, r, cplx(0.5, 0.0));
    }
    SpMat out(dim, dim);
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

Mat partial_trace(const Mat& op, int n_spins, const std::vector<int>& keep) {
    if (keep.empty()) throw std::invalid_argument("partial_trace requires a nonempty keep set");
    const Eigen::Index dim = Eigen::Index(1) << n_spins;
    if (op.rows() != dim || op.cols() != dim)
        throw std::invalid_argument("operator dimension does not match n_spins");
    std::vector<int> ks = keep;
    std::sort(ks.begin(), ks.end());
    if (std::adjacent_find(ks.begin(), ks.end()) != ks.end())
        throw std::invalid_argument("keep set has duplicate sites");
    for (int k : ks) check_site(n_spins, k);

    const int n_keep = static_cast<int>(ks.size());
    const int n_env = n_spins - n_keep;
    std::vector<int> env;
    for (int s = 0; s < n_spins; ++s)
        if (!std::binary_search(ks.begin(), ks.end(), s)) env.push_back(s);

    // scatter keep-index bits and env-index bits into full basis indices
    auto scatter = [&](Eigen::Index sub, const std::vector<int>& sites) {
        Eigen::Index full = 0;
        for (std::size_t b = 0; b < sites.size(); ++b) {
            const Eigen::Index bit = (sub >> (sites.size() - 1 - b)) & 1;
            if (bit) full |= site_bit(n_spins, sites[b]);
        }
        return full;
    };

    const Eigen::Index dk = Eigen::Index(1) << n_keep;
    const Eigen::Index de = Eigen::Index(1) << n_env;
    std::vector<Eigen::Index> keep_idx(dk), env_idx(de);
    for (Eigen::Index a = 0; a < dk; ++a) keep_idx[a] = scatter(a, ks);
    for (Eigen::Index e = 0; e < de; ++e) env_idx[e] = scatter(e, env);

    Mat out = Mat::Zero(dk, dk);
    for (Eigen::Index r = 0; r < dk; ++r)
        for (Eigen::Index c = 0; c < dk; ++c) {
            cplx acc(0.0, 0.0);
            for (Eigen::Index e = 0; e < de; ++e)
                acc += op(keep_idx[r] | env_idx[e], keep_idx[c] | env_idx[e]);
            out(r, c) = acc;
        }
    return out;
}

SuperOp commutator_superop(const SpMat& op) {
    if (op.rows() != op.cols()) throw std::invalid_argument("commutator_superop requires a square operator");
    const Eigen::Index d = op.rows();
    SpMat id(d, d);
    id.setIdentity();
    SpMat left = Eigen::kroneckerProduct(id, op).eval();
    SpMat right = Eigen::kroneckerProduct(SpMat(op.transpose()), id).eval();
    SuperOp out;
    out.sparse = left - right;
    out.dense_storage = false;
    out.hermiticity_preserving = false;  // maps Hermitian to i*(anti-Hermitian-consistent)
    out.trace_annihilating = true;
    return out;
}

Vec vec_op(const Mat& m) {
    return Eigen::Map<const Vec>(m.data(), m.size());
}

Mat unvec_op(const Vec& v) {
    const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(double(v.size()))));
    if (d * d != v.size()) throw std::invalid_argument("unvec_op requires a square-size vector");
    return Eigen::Map<const Mat>(v.data(), d, d);
}

}  // namespace capspin
