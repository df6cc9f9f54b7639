#include "capspin/observables.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace capspin {

SpMat singlet_projector(int n_total, int siteA, int siteB) {
    if (n_total < 2) throw std::invalid_argument("singlet_projector: need at least two spins");
    if (siteA == siteB || siteA < 0 || siteB < 0 || siteA >= n_total || siteB >= n_total)
        throw std::invalid_argument("singlet_projector: bad site pair");
    const Eigen::Index dim = Eigen::Index(1) << n_total;
    SpMat id(dim, dim);
    id.setIdentity();
    return SpMat(0.25 * id - dot_coupling_op(n_total, siteA, siteB));
}

PairDensity reduced_pair_density(const CorrelationTensor& mA, const CorrelationTensor& mB) {
    if (mA.times != mB.times)
        throw std::invalid_argument("reduced_pair_density: time grids differ");
    static const std::array<Eigen::Matrix2cd, 3> sigma = [] {
        std::array<Eigen::Matrix2cd, 3> s;
        s[0] << 0, 1, 1, 0;
        s[1] << cplx(0, 0), cplx(0, -1), cplx(0, 1), cplx(0, 0);
        s[2] << 1, 0, 0, -1;
        return s;
    }();
    PairDensity out;
    out.times = mA.times;
    out.rho.reserve(out.times.size());
    for (std::size_t i = 0; i < out.times.size(); ++i) {
        Eigen::Matrix4cd rho = 0.25 * Eigen::Matrix4cd::Identity();
        for (int a = 0; a < 3; ++a) {
            Eigen::Matrix2cd sA = Eigen::Matrix2cd::Zero();
            Eigen::Matrix2cd sB = Eigen::Matrix2cd::Zero();
            for (int b = 0; b < 3; ++b) {
                sA += mA.m[i](a, b) * sigma[b];
                sB += mB.m[i](a, b) * sigma[b];
            }
            rho -= 0.25 * Eigen::kroneckerProduct(sA, sB);
        }
        out.rho.push_back(rho);
    }
    return out;
}

double concurrence(const Eigen::Matrix4cd& rho, bool si_literal, double validation_tol) {
    if (std::abs(rho.trace() - cplx(1.0, 0.0)) > validation_tol)
        throw std::invalid_argument("concurrence: input trace differs from 1");
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > validation_tol)
        throw std::invalid_argument("concurrence: input is not Hermitian");
    {
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(0.5 * (rho + rho.adjoint()));
        if (es.eigenvalues().minCoeff() < -validation_tol)
            throw std::invalid_argument("concurrence: input has a negative eigenvalue");
    }
    Eigen::Matrix4cd yy = Eigen::Matrix4cd::Zero();
    yy(0, 3) = -1;
    yy(1, 2) = 1;
    yy(2, 1) = 1;
    yy(3, 0) = -1;  // sigma_y x sigma_y
    std::array<double, 4> l{};
    if (si_literal) {
        const Eigen::Matrix4cd R = rho * yy * rho * yy;
        Eigen::ComplexEigenSolver<Eigen::Matrix4cd> es(R);
        for (int i = 0; i < 4; ++i) l[i] = es.eigenvalues()[i].real();
    } else {
        const Eigen::Matrix4cd R = rho * yy * rho.conjugate() * yy;
        Eigen::ComplexEigenSolver<Eigen::Matrix4cd> es(R);
        for (int i = 0; i < 4; ++i) l[i] = std::sqrt(std::max(0.0, es.eigenvalues()[i].real()));
    }
    std::sort(l.begin(), l.end(), std::greater<>());
    return std::max(0.0, l[0] - l[1] - l[2] - l[3]);
}

double entanglement_yield(const std::vector<double>& times, const std::vector<double>& p,
                          double k_per_s, double horizon_s) {
    if (times.size() != p.size() || times.empty())
        throw std::invalid_argument("entanglement_yield: bad series");
    if (k_per_s <= 0.0 || horizon_s <= 0.0)
        throw std::invalid_argument("entanglement_yield: rate and horizon must be positive");
    const auto f = [&](double t, double pv) {
        return std::max(pv - 0.5, 0.0) * std::exp(-k_per_s * t);
    };
    double integral = 0.0;
    for (std::size_t i = 1; i < times.size(); ++i) {
        double t0 = times[i - 1], t1 = times[i];
        double p0 = p[i - 1], p1 = p[i];
        if (t0 >= horizon_s) break;
        if (t1 > horizon_s) {
            p1 = p0 + (p1 - p0) * (horizon_s - t0) / (t1 - t0);
            t1 = horizon_s;
        }
        // split at the p = 1/2 kink to keep the trapezoid exact for linear p
        if ((p0 - 0.5) * (p1 - 0.5) < 0.0) {
            const double tc = t0 + (0.5 - p0) * (t1 - t0) / (p1 - p0);
            integral += 0.5 * (tc - t0) * (f(t0, p0) + f(tc, 0.5));
            t0 = tc;
            p0 = 0.5;
        }
        integral += 0.5 * (t1 - t0) * (f(t0, p0) + f(t1, p1));
    }
    return k_per_s * integral;
}

CrossingReport threshold_crossings(const std::vector<double>& times,
                                   const std::vector<double>& p, double threshold) {
    if (times.size() != p.size() || times.empty())
        throw std::invalid_argument("threshold_crossings: bad series");
    CrossingReport rep;
    rep.threshold = threshold;
    if (p.front() < threshold) {
        rep.first_below_s = times.front();
    } else {
        for (std::size_t i = 1; i < p.size(); ++i) {
            if (p[i] < threshold && p[i - 1] >= threshold) {
                rep.first_below_s =
                    times[i - 1] + (threshold - p[i - 1]) * (times[i] - times[i - 1]) /
                                       (p[i] - p[i - 1]);
                break;
            }
        }
    }
    std::size_t last = p.size();
    for (std::size_t i = p.size(); i-- > 0;) {
        if (p[i] >= threshold) {
            last = i;
            break;
        }
    }
    if (last < p.size()) {
        if (last + 1 == p.size()) {
            rep.last_above_s = times.back();
        } else {
            rep.last_above_s = times[last] + (threshold - p[last]) *
                                                 (times[last + 1] - times[last]) /
                                                 (p[last + 1] - p[last]);
        }
    }
    return rep;
}

std::int64_t unique_frequency_bound(std::int64_t n_levels) {
    if (n_levels < 0) throw std::invalid_argument("unique_frequency_bound: negative level count");
    // (n^4 - 2n^3 + 7n^2 - 6n)/8 = n(n-1)(n^2-n+6)/8
    const std::int64_t n = n_levels;
    return n * (n - 1) * (n * n - n + 6) / 8;
}

int count_distinct_levels(const Mat& H, double tol_hz) {
    if (H.rows() != H.cols() || H.rows() == 0)
        throw std::invalid_argument("count_distinct_levels: matrix must be square and non-empty");
    if ((H - H.adjoint()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, H.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("count_distinct_levels: matrix is not Hermitian");
    Eigen::SelfAdjointEigenSolver<Mat> es(H);
    const Eigen::VectorXd e = es.eigenvalues();
    int count = 1;
    for (Eigen::Index i = 1; i < e.size(); ++i)
        if ((e[i] - e[i - 1]) / (2.0 * constants::pi) > tol_hz) ++count;
    return count;
}

double diffusion_traversal_time(double d_m2_s, double length_m) {
    if (d_m2_s <= 0.0) throw std::invalid_argument("diffusion_traversal_time: D must be positive");
    if (length_m < 0.0) throw std::invalid_argument("diffusion_traversal_time: negative length");
    return length_m * length_m / (2.0 * d_m2_s);
}

}  // namespace capspin
