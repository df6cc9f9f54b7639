#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "capspin/dynamics.hpp"
#include "capspin/spin_ops.hpp"

namespace capspin {

// |S><S| on (siteA, siteB) tensored with identity elsewhere; idempotent,
// trace 2^(n_total-2).
SpMat singlet_projector(int n_total, int siteA, int siteB);

struct PairDensity {
    std::vector<double> times;
    std::vector<Eigen::Matrix4cd> rho;
};

// rho_pair(t) = 1/4 [ 1x1 - sum_a (sum_b m^A_ab sigma_b) x (sum_g m^B_ag sigma_g) ].
PairDensity reduced_pair_density(const CorrelationTensor& mA, const CorrelationTensor& mB);

// Wootters concurrence C = max(0, l1-l2-l3-l4), l_i the descending square
// roots of the eigenvalues of rho (sy x sy) conj(rho) (sy x sy). Throws on
// non-density input (trace/Hermiticity/positivity beyond tolerance).
// si_literal evaluates the abbreviated published variant (no conjugation, no
// square roots) for comparison; never the default.
double concurrence(const Eigen::Matrix4cd& rho, bool si_literal = false,
                   double validation_tol = 1e-8);

// k * integral_0^T max(p - 1/2, 0) e^{-kt} dt, trapezoidal on the series grid.
double entanglement_yield(const std::vector<double>& times, const std::vector<double>& p,
                          double k_per_s = constants::default_yield_rate_per_s,
                          double horizon_s = constants::default_yield_horizon_s);

struct CrossingReport {
    std::optional<double> first_below_s;
    std::optional<double> last_above_s;
    double threshold = 0.5;
};

// First downward crossing and last time at/above threshold, linearly
// interpolated between samples.
CrossingReport threshold_crossings(const std::vector<double>& times,
                                   const std::vector<double>& p, double threshold = 0.5);

// z(n) = (n^4 - 2n^3 + 7n^2 - 6n)/8, the level-pair frequency-count bound.
std::int64_t unique_frequency_bound(std::int64_t n_levels);

// Number of eigenvalue clusters of Hermitian H (rad/s) under a gap tolerance
// given in Hz (single-linkage on sorted eigenvalues).
int count_distinct_levels(const Mat& H, double tol_hz = 1e-6);

// t = L^2 / (2D), one-dimensional mean-square-displacement convention.
double diffusion_traversal_time(double d_m2_s, double length_m);

}  // namespace capspin
