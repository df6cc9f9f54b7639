#include "capspin/dynamics.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "capspin/hamiltonian.hpp"
#include "capspin/observables.hpp"
#include "capspin/threading.hpp"

namespace capspin {

namespace {

constexpr std::size_t kEvalChunk = 2048;
constexpr std::size_t kPhaseAnchor = 64;

inline cplx expi(const cplx& lambda, double t) {
    // exp(-i lambda t) for complex lambda
    return std::exp(cplx(lambda.imag() * t, -lambda.real() * t));
}

// One spectral contribution: amp * exp(-i lambda t) * u0(t)^dm, where u0 is
// the shared uniform-Zeeman phase. kind selects the amp layout.
enum class TermKind { zz, xy4, dense9 };

struct TermBlock {
    TermKind kind = TermKind::zz;
    int dm = 0;  // -1, 0, +1
    std::vector<cplx> lambda;
    std::vector<cplx> amp;  // n_amp entries per term, term-major

    int n_amp() const {
        switch (kind) {
            case TermKind::zz: return 1;
            case TermKind::xy4: return 4;
            default: return 9;
        }
    }
    std::size_t n_terms() const { return lambda.size(); }
};

struct SpectralModel {
    std::vector<TermBlock> blocks;
    double omega_bar = 0.0;
    bool blocked = true;  // false: dense route, Zeeman folded into lambda
};

void evaluate_model(const SpectralModel& model, const TimeGrid& grid, int threads,
                    std::vector<Eigen::Matrix3d>& m_out, double& max_imag_out) {
    const std::size_t nt = grid.points.size();
    m_out.assign(nt, Eigen::Matrix3d::Zero());
    const std::size_t n_chunks = (nt + kEvalChunk - 1) / kEvalChunk;
    std::vector<double> chunk_imag(n_chunks, 0.0);

    parallel_for(n_chunks, threads, [&](std::size_t ci) {
        const std::size_t lo = ci * kEvalChunk;
        const std::size_t hi = std::min(nt, lo + kEvalChunk);
        const std::size_t span = hi - lo;
        const auto& ts = grid.points;

        std::vector<cplx> u0(span);
        for (std::size_t i = 0; i < span; ++i)
            u0[i] = std::polar(1.0, -model.omega_bar * ts[lo + i]);

        std::vector<cplx> acc0(span, cplx(0, 0));          // zz
        std::vector<cplx> accP(4 * span, cplx(0, 0));      // dm = +1, xx xy yx yy
        std::vector<cplx> accM(4 * span, cplx(0, 0));      // dm = -1
        std::vector<cplx> accD(model.blocked ? 0 : 9 * span, cplx(0, 0));
        std::vector<cplx> phase(span);

        for (const auto& block : model.blocks) {
            const int na = block.n_amp();
            for (std::size_t f = 0; f < block.n_terms(); ++f) {
                const cplx lam = block.lambda[f];
                // phase recurrence with exact re-anchoring
                cplx step(1.0, 0.0);
                double last_dt = -1.0;
                for (std::size_t i = 0; i < span; ++i) {
                    const std::size_t gi = lo + i;
                    if (i % kPhaseAnchor == 0) {
                        phase[i] = expi(lam, ts[gi]);
                    } else {
                        const double dt = ts[gi] - ts[gi - 1];
                        if (std::abs(dt - last_dt) > 1e-9 * dt) {
                            step = expi(lam, dt);
                            last_dt = dt;
                        }
                        phase[i] = phase[i - 1] * step;
                    }
                }
                const cplx* amp = &block.amp[f * na];
                switch (block.kind) {
                    case TermKind::zz:
                        for (std::size_t i = 0; i < span; ++i) acc0[i] += amp[0] * phase[i];
                        break;
                    case TermKind::xy4: {
                        auto* acc = (block.dm > 0) ? accP.data() : accM.data();
                        for (std::size_t i = 0; i < span; ++i) {
                            const cplx p = phase[i];
                            acc[4 * i + 0] += amp[0] * p;
                            acc[4 * i + 1] += amp[1] * p;
                            acc[4 * i + 2] += amp[2] * p;
                            acc[4 * i + 3] += amp[3] * p;
                        }
                        break;
                    }
                    case TermKind::dense9:
                        for (std::size_t i = 0; i < span; ++i) {
                            const cplx p = phase[i];
                            for (int a = 0; a < 9; ++a) accD[9 * i + a] += amp[a] * p;
                        }
                        break;
                }
            }
        }

        double mi = 0.0;
        for (std::size_t i = 0; i < span; ++i) {
            Eigen::Matrix3d& m = m_out[lo + i];
            if (model.blocked) {
                const cplx u = u0[i], uc = std::conj(u0[i]);
                const cplx mxx = accP[4 * i + 0] * u + accM[4 * i + 0] * uc;
                const cplx mxy = accP[4 * i + 1] * u + accM[4 * i + 1] * uc;
                const cplx myx = accP[4 * i + 2] * u + accM[4 * i + 2] * uc;
                const cplx myy = accP[4 * i + 3] * u + accM[4 * i + 3] * uc;
                const cplx mzz = acc0[i];
                m(0, 0) = mxx.real();
                m(0, 1) = mxy.real();
                m(1, 0) = myx.real();
                m(1, 1) = myy.real();
                m(2, 2) = mzz.real();
                for (const cplx& v : {mxx, mxy, myx, myy, mzz})
                    mi = std::max(mi, std::abs(v.imag()));
            } else {
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b) {
                        const cplx v = accD[9 * i + 3 * a + b];
                        m(a, b) = v.real();
                        mi = std::max(mi, std::abs(v.imag()));
                    }
            }
        }
        chunk_imag[ci] = mi;
    });

    max_imag_out = 0.0;
    for (double v : chunk_imag) max_imag_out = std::max(max_imag_out, v);
}

struct Sector {
    int M = 0;  // n_up - n_down
    std::vector<Eigen::Index> states;
    Eigen::MatrixXd Q;
    Eigen::VectorXd eps;
};

struct LiouvilleBlock {
    int q = 0;
    std::vector<Eigen::Index> vecs;  // global vec indices r + dim*c
    Mat V;
    Mat Vinv;
    Vec lambda;
};

}  // namespace

// ---------------------------------------------------------------------------
// Liouvillian

Vec Liouvillian::apply(const Vec& v) const {
    Vec out = coherent * v;
    if (has_gamma) out += cplx(0.0, 1.0) * gamma.apply(v);
    return out;
}

Mat Liouvillian::to_dense() const {
    Mat out = Mat(coherent);
    if (has_gamma) out += cplx(0.0, 1.0) * gamma.to_dense();
    return out;
}

Liouvillian build_liouvillian(const SpMat& h0, const SuperOp* gamma) {
    Liouvillian L;
    L.coherent = commutator_superop(h0).sparse;
    L.dim = L.coherent.rows();
    if (gamma != nullptr && gamma->dim() > 0) {
        if (gamma->dim() != L.dim)
            throw std::invalid_argument("Liouvillian dimension mismatch between H0 and Gamma");
        L.gamma = *gamma;
        L.has_gamma = true;
    }
    return L;
}

// ---------------------------------------------------------------------------
// Generic propagation

namespace {

double norm1(const Mat& m) {
    double best = 0.0;
    for (Eigen::Index c = 0; c < m.cols(); ++c) best = std::max(best, m.col(c).cwiseAbs().sum());
    return best;
}

// exp(A tau) v with A = -iL, basic restarted Arnoldi with local error control.
Vec krylov_expm_apply(const Liouvillian& L, Vec v, double tau_total, double tol) {
    const Eigen::Index dim = v.size();
    const int m_max = static_cast<int>(std::min<Eigen::Index>(30, dim));
    double remaining = tau_total;
    double tau = tau_total;
    const int max_rounds = 10000;
    int rounds = 0;
    while (remaining > 0.0 && rounds++ < max_rounds) {
        tau = std::min(tau, remaining);
        const double beta = v.norm();
        if (beta == 0.0) return v;
        Mat Vm(dim, m_max + 1);
        Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(m_max + 1, m_max);
        Vm.col(0) = v / beta;
        int m = m_max;
        bool happy = false;
        for (int j = 0; j < m_max; ++j) {
            Vec w = cplx(0.0, -1.0) * L.apply(Vm.col(j));
            for (int i = 0; i <= j; ++i) {
                H(i, j) = Vm.col(i).dot(w);
                w -= H(i, j) * Vm.col(i);
            }
            // one re-orthogonalization pass for stability
            for (int i = 0; i <= j; ++i) {
                const cplx c = Vm.col(i).dot(w);
                H(i, j) += c;
                w -= c * Vm.col(i);
            }
            const double h = w.norm();
            H(j + 1, j) = h;
            if (h < 1e-14) {
                m = j + 1;
                happy = true;
                break;
            }
            Vm.col(j + 1) = w / h;
        }
        const Eigen::MatrixXcd Hm = H.topLeftCorner(m, m);
        const Eigen::MatrixXcd F = (tau * Hm).exp();
        double err = 0.0;
        if (!happy) err = beta * std::abs(H(m, m - 1)) * std::abs(F(m - 1, 0)) * tau;
        if (happy || err <= tol * std::max(1.0, beta) || tau <= 1e-15 * tau_total) {
            v = beta * (Vm.leftCols(m) * F.col(0));
            remaining -= tau;
            if (!happy && err > 0.0) {
                const double growth =
                    0.9 * std::pow(tol * std::max(1.0, beta) / err, 1.0 / static_cast<double>(m));
                tau *= std::clamp(growth, 0.2, 2.0);
            } else {
                tau *= 2.0;
            }
        } else {
            tau *= 0.5;
        }
    }
    if (remaining > 0.0) throw std::runtime_error("krylov-expm failed to converge");
    return v;
}

}  // namespace

PropagationResult propagate(const Liouvillian& L, const Mat& x0, const TimeGrid& grid,
                            PropagationMethod method) {
    grid.validate();
    if (x0.rows() * x0.cols() != L.dim)
        throw std::invalid_argument("propagate: operator size does not match Liouvillian");
    PropagationResult res;
    res.method_used = method;
    const Vec v0 = vec_op(x0);

    if (method == PropagationMethod::eigendecomposition) {
        const Mat Ld = L.to_dense();
        Eigen::ComplexEigenSolver<Mat> es(Ld);
        bool ok = es.info() == Eigen::Success;
        Mat V, Vinv;
        if (ok) {
            V = es.eigenvectors();
            Eigen::PartialPivLU<Mat> lu(V);
            Vinv = lu.inverse();
            const double cond1 = norm1(V) * norm1(Vinv);
            if (!std::isfinite(cond1) || cond1 > 1e12) {
                ok = false;
                std::ostringstream os;
                os << "eigendecomposition ill-conditioned (cond estimate " << cond1
                   << "); falling back to krylov-expm";
                res.warning = os.str();
            }
        } else {
            res.warning = "eigendecomposition failed; falling back to krylov-expm";
        }
        if (ok) {
            const Vec c = Vinv * v0;
            res.trajectory.reserve(grid.points.size());
            for (double t : grid.points) {
                Vec phases(c.size());
                for (Eigen::Index i = 0; i < c.size(); ++i)
                    phases[i] = expi(es.eigenvalues()[i], t) * c[i];
                res.trajectory.push_back(unvec_op(V * phases));
            }
            return res;
        }
        res.method_used = PropagationMethod::krylov_expm;
    }

    // krylov path: step between grid points
    res.trajectory.reserve(grid.points.size());
    Vec v = v0;
    double t_prev = 0.0;
    res.trajectory.push_back(unvec_op(v));
    for (std::size_t i = 1; i < grid.points.size(); ++i) {
        const double dt = grid.points[i] - t_prev;
        v = krylov_expm_apply(L, v, dt, 1e-10);
        t_prev = grid.points[i];
        res.trajectory.push_back(unvec_op(v));
    }
    return res;
}

// ---------------------------------------------------------------------------
// MoleculePropagator

struct MoleculePropagator::Impl {
    SpinSystem sys;
    DynamicsOptions opts;
    int n = 0;
    Eigen::Index dim = 0;
    double omega_bar = 0.0;
    int threads = 0;

    // coherent route
    bool coherent_route = false;
    std::vector<Sector> sectors;                 // ordered by decreasing M
    std::vector<int> sector_of_state;            // state -> sector index
    std::vector<int> pos_in_sector;

    // relaxed blocked route
    bool blocked_liouville = false;
    std::vector<LiouvilleBlock> lblocks;         // q = 0, +1, -1
    std::vector<int> lblock_of_vec;              // vec index -> block (or -1)
    std::vector<int> lpos_of_vec;

    // relaxed dense route
    Mat dense_V, dense_Vinv;
    Vec dense_lambda;

    Impl(const SpinSystem& system, const DynamicsOptions& options);

    Eigen::Index site_bit(int site) const { return Eigen::Index(1) << (n - 1 - site); }
    int magnetization(Eigen::Index state) const {
        return n - 2 * std::popcount(static_cast<unsigned long long>(state));
    }
    void build_sectors();
    Eigen::MatrixXd sector_hamiltonian(const Sector& sec) const;
    SpMat internal_hamiltonian() const;  // coupling part, uniform Zeeman removed
    void build_coherent();
    void build_relaxed();
    SpectralModel model_for(int source, int probe) const;
    SpectralModel coherent_model(int source, int probe) const;
    SpectralModel blocked_model(int source, int probe) const;
    SpectralModel dense_model(int source, int probe) const;
};

MoleculePropagator::Impl::Impl(const SpinSystem& system, const DynamicsOptions& options)
    : sys(system), opts(options) {
    sys.validate();
    n = sys.n_spins;
    dim = Eigen::Index(1) << n;
    omega_bar = sys.larmor_rad_s();
    threads = resolve_thread_count(0);
    build_sectors();
    if (!opts.with_relaxation) {
        coherent_route = true;
        build_coherent();
    } else {
        build_relaxed();
    }
}

void MoleculePropagator::Impl::build_sectors() {
    sector_of_state.assign(static_cast<std::size_t>(dim), -1);
    pos_in_sector.assign(static_cast<std::size_t>(dim), -1);
    for (int M = n; M >= -n; M -= 2) {
        Sector sec;
        sec.M = M;
        for (Eigen::Index s = 0; s < dim; ++s)
            if (magnetization(s) == M) sec.states.push_back(s);
        if (sec.states.empty()) continue;
        for (std::size_t p = 0; p < sec.states.size(); ++p) {
            sector_of_state[sec.states[p]] = static_cast<int>(sectors.size());
            pos_in_sector[sec.states[p]] = static_cast<int>(p);
        }
        sectors.push_back(std::move(sec));
    }
}

Eigen::MatrixXd MoleculePropagator::Impl::sector_hamiltonian(const Sector& sec) const {
    const auto bs = static_cast<Eigen::Index>(sec.states.size());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(bs, bs);
    // per-site isotropic deviations from the mean shift, q-preserving
    std::vector<double> dev(n, 0.0);
    if (opts.per_site_isotropic_shifts && sys.has_shielding() && sys.b_field_t > 0.0) {
        for (int k = 0; k < n; ++k) {
            const double sigma_k = sys.shielding[k].trace() / 3.0;
            dev[k] = -sys.gamma_rad_s_t * (1.0 - sigma_k) * sys.b_field_t - omega_bar;
        }
    }
    for (Eigen::Index p = 0; p < bs; ++p) {
        const Eigen::Index r = sec.states[p];
        double diag = 0.0;
        for (int i = 0; i < n; ++i) {
            const double si = (r & site_bit(i)) ? -1.0 : 1.0;
            diag += dev[i] * 0.5 * si;
            for (int j = i + 1; j < n; ++j) {
                const double sj = (r & site_bit(j)) ? -1.0 : 1.0;
                diag += 2.0 * constants::pi * sys.j_hz(i, j) * 0.25 * si * sj;
                if (si * sj < 0.0) {
                    const Eigen::Index rp = r ^ site_bit(i) ^ site_bit(j);
                    h(pos_in_sector[rp], p) += 2.0 * constants::pi * sys.j_hz(i, j) * 0.5;
                }
            }
        }
        h(p, p) += diag;
    }
    return h;
}

void MoleculePropagator::Impl::build_coherent() {
    for (auto& sec : sectors) {
        const Eigen::MatrixXd h = sector_hamiltonian(sec);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("sector eigendecomposition failed");
        sec.Q = es.eigenvectors();
        sec.eps = es.eigenvalues();
    }
}

SpMat MoleculePropagator::Impl::internal_hamiltonian() const {
    SpinSystem internal = sys;
    internal.b_field_t = 0.0;
    SpMat h = build_coherent_hamiltonian(internal);
    if (opts.per_site_isotropic_shifts && sys.has_shielding() && sys.b_field_t > 0.0) {
        for (int k = 0; k < n; ++k) {
            const double sigma_k = sys.shielding[k].trace() / 3.0;
            const double dev = -sys.gamma_rad_s_t * (1.0 - sigma_k) * sys.b_field_t - omega_bar;
            if (dev != 0.0) h = h + SpMat(dev * pauli_site_op(n, k, Axis::z));
        }
    }
    return h;
}

void MoleculePropagator::Impl::build_relaxed() {
    OrientationGrid grid = opts.orientation;
    if (grid.rotations.empty()) grid = default_relaxation_grid();
    const SuperOp gamma = relaxation_superop(sys, opts.mechanisms, grid);
    const Eigen::Index sdim = dim * dim;

    // coherence order of each vec index
    std::vector<int> q_of_vec(static_cast<std::size_t>(sdim));
    for (Eigen::Index c = 0; c < dim; ++c)
        for (Eigen::Index r = 0; r < dim; ++r)
            q_of_vec[r + dim * c] = (magnetization(r) - magnetization(c)) / 2;

    // The blocked route needs the generator to leave the q in {0,+1,-1}
    // subspaces invariant; true exactly for design grids (left-translation
    // invariance), only approximately for random ones.
    const Mat& G = gamma.dense;
    const double gmax = G.cwiseAbs().maxCoeff();
    double resid = 0.0;
    for (Eigen::Index col = 0; col < sdim; ++col) {
        const int qc = q_of_vec[col];
        if (qc < -1 || qc > 1) continue;
        for (Eigen::Index row = 0; row < sdim; ++row)
            if (q_of_vec[row] != qc) resid = std::max(resid, std::abs(G(row, col)));
    }
    blocked_liouville = (gmax == 0.0) || (resid <= 1e-10 * gmax);

    const SpMat cH = commutator_superop(internal_hamiltonian()).sparse;

    if (blocked_liouville) {
        lblock_of_vec.assign(static_cast<std::size_t>(sdim), -1);
        lpos_of_vec.assign(static_cast<std::size_t>(sdim), -1);
        for (int q : {0, 1, -1}) {
            LiouvilleBlock blk;
            blk.q = q;
            for (Eigen::Index v = 0; v < sdim; ++v)
                if (q_of_vec[v] == q) blk.vecs.push_back(v);
            for (std::size_t p = 0; p < blk.vecs.size(); ++p) {
                lblock_of_vec[blk.vecs[p]] = static_cast<int>(lblocks.size());
                lpos_of_vec[blk.vecs[p]] = static_cast<int>(p);
            }
            const auto bs = static_cast<Eigen::Index>(blk.vecs.size());
            Mat Lb = Mat::Zero(bs, bs);
            for (Eigen::Index p2 = 0; p2 < bs; ++p2)
                for (Eigen::Index p1 = 0; p1 < bs; ++p1)
                    Lb(p1, p2) = cplx(0.0, 1.0) * G(blk.vecs[p1], blk.vecs[p2]);
            for (Eigen::Index p2 = 0; p2 < bs; ++p2) {
                const Eigen::Index col = blk.vecs[p2];
                for (SpMat::InnerIterator it(cH, col); it; ++it) {
                    if (lblock_of_vec[it.row()] == static_cast<int>(lblocks.size()) &&
                        q_of_vec[it.row()] == q)
                        Lb(lpos_of_vec[it.row()], p2) += it.value();
                }
            }
            Eigen::ComplexEigenSolver<Mat> es(Lb);
            if (es.info() != Eigen::Success)
                throw std::runtime_error("Liouville block eigendecomposition failed");
            blk.V = es.eigenvectors();
            blk.lambda = es.eigenvalues();
            Eigen::PartialPivLU<Mat> lu(blk.V);
            blk.Vinv = lu.inverse();
            lblocks.push_back(std::move(blk));
        }
    } else {
        // dense route with the physical field folded in
        SpMat h_full = build_coherent_hamiltonian(sys, opts.per_site_isotropic_shifts);
        Mat L = Mat(commutator_superop(h_full).sparse) + cplx(0.0, 1.0) * G;
        Eigen::ComplexEigenSolver<Mat> es(L);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("Liouvillian eigendecomposition failed");
        dense_V = es.eigenvectors();
        dense_lambda = es.eigenvalues();
        Eigen::PartialPivLU<Mat> lu(dense_V);
        dense_Vinv = lu.inverse();
    }
}

SpectralModel MoleculePropagator::Impl::coherent_model(int source, int probe) const {
    SpectralModel model;
    model.omega_bar = omega_bar;
    model.blocked = true;
    const double inv_dim = 1.0 / static_cast<double>(dim);
    const Eigen::Index bs_bit = site_bit(source);
    const Eigen::Index bp_bit = site_bit(probe);

    TermBlock zzb;
    zzb.kind = TermKind::zz;
    zzb.dm = 0;
    TermBlock xyP, xyM;
    xyP.kind = xyM.kind = TermKind::xy4;
    xyP.dm = 1;
    xyM.dm = -1;

    for (std::size_t si = 0; si < sectors.size(); ++si) {
        const Sector& sec = sectors[si];
        const auto bs = static_cast<Eigen::Index>(sec.states.size());

        // z-z terms within the sector
        Eigen::VectorXd dz_s(bs), dz_p(bs);
        for (Eigen::Index p = 0; p < bs; ++p) {
            dz_s[p] = (sec.states[p] & bs_bit) ? -1.0 : 1.0;
            dz_p[p] = (sec.states[p] & bp_bit) ? -1.0 : 1.0;
        }
        const Eigen::MatrixXd Az = sec.Q.transpose() * dz_s.asDiagonal() * sec.Q;
        const Eigen::MatrixXd Bz = (source == probe)
                                       ? Az
                                       : Eigen::MatrixXd(sec.Q.transpose() * dz_p.asDiagonal() * sec.Q);
        for (Eigen::Index j = 0; j < bs; ++j)
            for (Eigen::Index k = 0; k < bs; ++k) {
                const double w = Az(j, k) * Bz(k, j) * inv_dim;
                if (w == 0.0) continue;
                zzb.lambda.push_back(cplx(sec.eps[j] - sec.eps[k], 0.0));
                zzb.amp.push_back(cplx(w, 0.0));
            }

        // x/y terms to the sector one magnetization step up (M + 2)
        if (si == 0) continue;
        const Sector& up = sectors[si - 1];
        const auto us = static_cast<Eigen::Index>(up.states.size());
        Eigen::MatrixXd Ts = Eigen::MatrixXd::Zero(us, bs);
        Eigen::MatrixXd Tp = Eigen::MatrixXd::Zero(us, bs);
        for (Eigen::Index p = 0; p < bs; ++p) {
            const Eigen::Index r = sec.states[p];
            if (r & bs_bit) Ts(pos_in_sector[r ^ bs_bit], p) = 1.0;
            if (r & bp_bit) Tp(pos_in_sector[r ^ bp_bit], p) = 1.0;
        }
        const Eigen::MatrixXd R = up.Q.transpose() * Ts * sec.Q;
        const Eigen::MatrixXd Rp = (source == probe)
                                       ? R
                                       : Eigen::MatrixXd(up.Q.transpose() * Tp * sec.Q);
        for (Eigen::Index j = 0; j < us; ++j)
            for (Eigen::Index k = 0; k < bs; ++k) {
                const double w = R(j, k) * Rp(j, k) * inv_dim;
                if (w == 0.0) continue;
                // amps ordered (xx, xy, yx, yy)
                xyP.lambda.push_back(cplx(up.eps[j] - sec.eps[k], 0.0));
                xyP.amp.insert(xyP.amp.end(),
                               {cplx(w, 0), cplx(0, w), cplx(0, -w), cplx(w, 0)});
                xyM.lambda.push_back(cplx(sec.eps[k] - up.eps[j], 0.0));
                xyM.amp.insert(xyM.amp.end(),
                               {cplx(w, 0), cplx(0, -w), cplx(0, w), cplx(w, 0)});
            }
    }
    model.blocks.push_back(std::move(zzb));
    model.blocks.push_back(std::move(xyP));
    model.blocks.push_back(std::move(xyM));
    return model;
}

namespace {

// sparse entries (vec index, value) of sigma_axis at a site
std::vector<std::pair<Eigen::Index, cplx>> sigma_vec_entries(int n, Eigen::Index dim, int site,
                                                             int axis) {
    const Eigen::Index bit = Eigen::Index(1) << (n - 1 - site);
    std::vector<std::pair<Eigen::Index, cplx>> out;
    out.reserve(static_cast<std::size_t>(dim));
    for (Eigen::Index c = 0; c < dim; ++c) {
        const bool down = (c & bit) != 0;
        switch (axis) {
            case 0:
                out.emplace_back((c ^ bit) + dim * c, cplx(1.0, 0.0));
                break;
            case 1:
                out.emplace_back((c ^ bit) + dim * c, down ? cplx(0.0, -1.0) : cplx(0.0, 1.0));
                break;
            default:
                out.emplace_back(c + dim * c, cplx(down ? -1.0 : 1.0, 0.0));
                break;
        }
    }
    return out;
}

}  // namespace

SpectralModel MoleculePropagator::Impl::blocked_model(int source, int probe) const {
    SpectralModel model;
    model.omega_bar = omega_bar;
    model.blocked = true;
    const double inv_dim = 1.0 / static_cast<double>(dim);

    std::array<std::vector<std::pair<Eigen::Index, cplx>>, 3> src, prb;
    for (int a = 0; a < 3; ++a) {
        src[a] = sigma_vec_entries(n, dim, source, a);
        prb[a] = sigma_vec_entries(n, dim, probe, a);
    }

    for (const auto& blk : lblocks) {
        const auto bs = static_cast<Eigen::Index>(blk.vecs.size());
        const int bidx = lblock_of_vec[blk.vecs[0]];
        auto restrict_to_block = [&](const std::vector<std::pair<Eigen::Index, cplx>>& entries) {
            Vec v = Vec::Zero(bs);
            for (const auto& [gi, val] : entries)
                if (lblock_of_vec[gi] == bidx) v[lpos_of_vec[gi]] = val;
            return v;
        };
        if (blk.q == 0) {
            const Vec s = restrict_to_block(src[2]);
            const Vec p = restrict_to_block(prb[2]);
            if (s.isZero(0) || p.isZero(0)) continue;
            const Vec c = blk.Vinv * s;
            const Vec g = (p.adjoint() * blk.V).transpose();  // g[f] = (p^dag V)_f
            TermBlock zzb;
            zzb.kind = TermKind::zz;
            zzb.dm = 0;
            for (Eigen::Index f = 0; f < bs; ++f) {
                const cplx amp = g[f] * c[f] * inv_dim;
                if (amp == cplx(0.0, 0.0)) continue;
                zzb.lambda.push_back(blk.lambda[f]);
                zzb.amp.push_back(amp);
            }
            model.blocks.push_back(std::move(zzb));
        } else {
            std::array<Vec, 2> cvec, gvec;
            for (int a = 0; a < 2; ++a) {
                cvec[a] = blk.Vinv * restrict_to_block(src[a]);
                gvec[a] = (restrict_to_block(prb[a]).adjoint() * blk.V).transpose();
            }
            TermBlock xy;
            xy.kind = TermKind::xy4;
            xy.dm = blk.q;
            for (Eigen::Index f = 0; f < bs; ++f) {
                std::array<cplx, 4> amp{};
                bool nonzero = false;
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b) {
                        amp[2 * a + b] = gvec[b][f] * cvec[a][f] * inv_dim;
                        nonzero = nonzero || amp[2 * a + b] != cplx(0.0, 0.0);
                    }
                if (!nonzero) continue;
                xy.lambda.push_back(blk.lambda[f]);
                xy.amp.insert(xy.amp.end(), amp.begin(), amp.end());
            }
            model.blocks.push_back(std::move(xy));
        }
    }
    return model;
}

SpectralModel MoleculePropagator::Impl::dense_model(int source, int probe) const {
    SpectralModel model;
    model.omega_bar = 0.0;
    model.blocked = false;
    const double inv_dim = 1.0 / static_cast<double>(dim);
    const Eigen::Index sdim = dim * dim;

    TermBlock dense;
    dense.kind = TermKind::dense9;
    dense.dm = 0;
    std::array<Vec, 3> c, g;
    for (int a = 0; a < 3; ++a) {
        Vec s = Vec::Zero(sdim), p = Vec::Zero(sdim);
        for (const auto& [gi, val] : sigma_vec_entries(n, dim, source, a)) s[gi] = val;
        for (const auto& [gi, val] : sigma_vec_entries(n, dim, probe, a)) p[gi] = val;
        c[a] = dense_Vinv * s;
        g[a] = (p.adjoint() * dense_V).transpose();
    }
    for (Eigen::Index f = 0; f < sdim; ++f) {
        std::array<cplx, 9> amp{};
        bool nonzero = false;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                amp[3 * a + b] = g[b][f] * c[a][f] * inv_dim;
                nonzero = nonzero || std::abs(amp[3 * a + b]) > 1e-300;
            }
        if (!nonzero) continue;
        dense.lambda.push_back(dense_lambda[f]);
        dense.amp.insert(dense.amp.end(), amp.begin(), amp.end());
    }
    model.blocks.push_back(std::move(dense));
    return model;
}

SpectralModel MoleculePropagator::Impl::model_for(int source, int probe) const {
    if (coherent_route) return coherent_model(source, probe);
    if (blocked_liouville) return blocked_model(source, probe);
    return dense_model(source, probe);
}

MoleculePropagator::MoleculePropagator(const SpinSystem& sys, const DynamicsOptions& opts)
    : impl_(std::make_unique<Impl>(sys, opts)) {}

MoleculePropagator::~MoleculePropagator() = default;
MoleculePropagator::MoleculePropagator(MoleculePropagator&&) noexcept = default;

int MoleculePropagator::n_spins() const { return impl_->n; }

CorrelationTensor MoleculePropagator::correlation_tensor(int source, int probe,
                                                         const TimeGrid& grid) const {
    if (source < 0 || source >= impl_->n || probe < 0 || probe >= impl_->n)
        throw std::invalid_argument("correlation_tensor: spin index out of range");
    grid.validate();
    const SpectralModel model = impl_->model_for(source, probe);
    CorrelationTensor out;
    out.times = grid.points;
    out.source_spin = source;
    out.probe_spin = probe;
    evaluate_model(model, grid, impl_->threads, out.m, out.max_imag);
    if (out.max_imag > 1e-10) {
        std::ostringstream os;
        os << "correlation tensor has non-negligible imaginary part " << out.max_imag
           << " (source " << source << ", probe " << probe << ", system '" << impl_->sys.label
           << "', relaxation " << (impl_->opts.with_relaxation ? "on" : "off") << ")";
        throw std::runtime_error(os.str());
    }
    return out;
}

CorrelationTensor correlation_tensor(const SpinSystem& sys, int source, int probe,
                                     const TimeGrid& grid, const DynamicsOptions& opts) {
    return MoleculePropagator(sys, opts).correlation_tensor(source, probe, grid);
}

// ---------------------------------------------------------------------------
// Factorized and direct joint probabilities

std::vector<double> singlet_probability_factorized(const CorrelationTensor& mA,
                                                   const CorrelationTensor& mB) {
    if (mA.times.size() != mB.times.size() || mA.times != mB.times)
        throw std::invalid_argument("singlet_probability_factorized: time grids differ");
    std::vector<double> p(mA.times.size());
    for (std::size_t i = 0; i < p.size(); ++i)
        p[i] = 0.25 + 0.25 * (mA.m[i].cwiseProduct(mB.m[i])).sum();
    return p;
}

namespace {

Mat factor_liouvillian_dense(const SpinSystem& sys, const DynamicsOptions& opts) {
    const SpMat h = build_coherent_hamiltonian(sys, opts.per_site_isotropic_shifts);
    Mat L = Mat(commutator_superop(h).sparse);
    if (opts.with_relaxation) {
        OrientationGrid grid = opts.orientation;
        if (grid.rotations.empty()) grid = default_relaxation_grid();
        const SuperOp gamma = relaxation_superop(sys, opts.mechanisms, grid);
        L += cplx(0.0, 1.0) * gamma.dense;
    }
    return L;
}

void apply_factor_left(const Mat& E, Mat& rho, Eigen::Index dA, Eigen::Index dB) {
    // propagate the A (slow) factor: rho[(iA dB + iB), (jA dB + jB)]
    Mat slice(dA, dA);
    for (Eigen::Index ib = 0; ib < dB; ++ib)
        for (Eigen::Index jb = 0; jb < dB; ++jb) {
            for (Eigen::Index ia = 0; ia < dA; ++ia)
                for (Eigen::Index ja = 0; ja < dA; ++ja)
                    slice(ia, ja) = rho(ia * dB + ib, ja * dB + jb);
            const Mat evolved = unvec_op(E * vec_op(slice));
            for (Eigen::Index ia = 0; ia < dA; ++ia)
                for (Eigen::Index ja = 0; ja < dA; ++ja)
                    rho(ia * dB + ib, ja * dB + jb) = evolved(ia, ja);
        }
}

void apply_factor_right(const Mat& E, Mat& rho, Eigen::Index dA, Eigen::Index dB) {
    Mat slice(dB, dB);
    for (Eigen::Index ia = 0; ia < dA; ++ia)
        for (Eigen::Index ja = 0; ja < dA; ++ja) {
            for (Eigen::Index ib = 0; ib < dB; ++ib)
                for (Eigen::Index jb = 0; jb < dB; ++jb)
                    slice(ib, jb) = rho(ia * dB + ib, ja * dB + jb);
            const Mat evolved = unvec_op(E * vec_op(slice));
            for (Eigen::Index ib = 0; ib < dB; ++ib)
                for (Eigen::Index jb = 0; jb < dB; ++jb)
                    rho(ia * dB + ib, ja * dB + jb) = evolved(ib, jb);
        }
}

}  // namespace

JointDirectResult joint_evolution_direct(const SpinSystem& sysA, const SpinSystem& sysB,
                                         int pairA, int pairB, const TimeGrid& grid,
                                         const DynamicsOptions& opts, int oracle_cap_spins) {
    sysA.validate();
    sysB.validate();
    grid.validate();
    const int n_total = sysA.n_spins + sysB.n_spins;
    if (n_total > oracle_cap_spins)
        throw std::invalid_argument("joint evolution limited to " +
                                    std::to_string(oracle_cap_spins) +
                                    " total spins (brute-force oracle path)");
    if (pairA < 0 || pairA >= sysA.n_spins || pairB < 0 || pairB >= sysB.n_spins)
        throw std::invalid_argument("joint evolution: pair index out of range");

    const Eigen::Index dA = Eigen::Index(1) << sysA.n_spins;
    const Eigen::Index dB = Eigen::Index(1) << sysB.n_spins;
    const Mat LA = factor_liouvillian_dense(sysA, opts);
    const Mat LB = factor_liouvillian_dense(sysB, opts);

    const Mat P = Mat(singlet_projector(n_total, pairA, sysA.n_spins + pairB));
    const Mat rho0 = P / P.trace();

    JointDirectResult res;
    res.times = grid.points;
    res.p.reserve(grid.points.size());
    res.rho_pair.reserve(grid.points.size());
    for (double t : grid.points) {
        const Mat EA = Mat(cplx(0.0, -1.0) * t * LA).exp();
        const Mat EB = Mat(cplx(0.0, -1.0) * t * LB).exp();
        Mat rho = rho0;
        apply_factor_left(EA, rho, dA, dB);
        apply_factor_right(EB, rho, dA, dB);
        res.p.push_back((P * rho).trace().real());
        res.rho_pair.push_back(
            Eigen::Matrix4cd(partial_trace(rho, n_total, {pairA, sysA.n_spins + pairB})));
        res.max_trace_error = std::max(res.max_trace_error, std::abs(rho.trace() - cplx(1.0, 0.0)));
        res.max_herm_error =
            std::max(res.max_herm_error, (rho - rho.adjoint()).cwiseAbs().maxCoeff());
    }
    return res;
}

std::vector<double> joint_singlet_probability_direct(const SpinSystem& sysA,
                                                     const SpinSystem& sysB, int pairA, int pairB,
                                                     const TimeGrid& grid,
                                                     const DynamicsOptions& opts,
                                                     int oracle_cap_spins) {
    return joint_evolution_direct(sysA, sysB, pairA, pairB, grid, opts, oracle_cap_spins).p;
}

}  // namespace capspin
