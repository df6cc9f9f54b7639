#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>
#include <vector>

#include "capspin/constants.hpp"
#include "capspin/observables.hpp"
#include "capspin/spin_ops.hpp"

using namespace capspin;

namespace {

Eigen::Vector4cd singlet_vec() {
    Eigen::Vector4cd s;
    s << 0.0, 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0), 0.0;
    return s;
}

Eigen::Matrix4cd werner(double w) {
    const Eigen::Vector4cd s = singlet_vec();
    return w * (s * s.adjoint()) + (1.0 - w) * 0.25 * Eigen::Matrix4cd::Identity();
}

Eigen::Matrix2cd random_unitary(unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::Matrix2cd h;
    h << cplx(g(rng), 0.0), cplx(g(rng), g(rng)), 0.0, cplx(g(rng), 0.0);
    h(1, 0) = std::conj(h(0, 1));
    return (cplx(0.0, 1.0) * h).exp();
}

Eigen::Matrix4cd random_density(unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::Matrix4cd a;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) a(i, j) = cplx(g(rng), g(rng));
    Eigen::Matrix4cd rho = a * a.adjoint();
    return rho / rho.trace();
}

}  // namespace

TEST_CASE("singlet projector is an idempotent Hermitian projector of rank 2^(n-2)") {
    for (int n : {2, 3, 4}) {
        const Mat p = Mat(singlet_projector(n, 0, n - 1));
        CHECK((p - p.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
        CHECK((p * p - p).cwiseAbs().maxCoeff() < 1e-14);
        CHECK(p.trace().real() ==
              doctest::Approx(static_cast<double>(1 << (n - 2))).epsilon(1e-12));
    }
}

TEST_CASE("singlet projector trace scales to large registers without densifying") {
    const SpMat p = singlet_projector(12, 3, 7);
    cplx tr = 0.0;
    for (int k = 0; k < p.outerSize(); ++k)
        for (SpMat::InnerIterator it(p, k); it; ++it)
            if (it.row() == it.col()) tr += it.value();
    CHECK(tr.real() == doctest::Approx(1024.0).epsilon(1e-12));
}

TEST_CASE("singlet projector fixes the singlet and kills the triplets") {
    const Mat p = Mat(singlet_projector(2, 0, 1));
    const Eigen::Vector4cd s = singlet_vec();
    CHECK((Mat(p * s) - Mat(s)).cwiseAbs().maxCoeff() < 1e-14);

    Eigen::Vector4cd t0;
    t0 << 0.0, 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), 0.0;
    CHECK(Mat(p * t0).cwiseAbs().maxCoeff() < 1e-14);
    Eigen::Vector4cd up;
    up << 1.0, 0.0, 0.0, 0.0;
    CHECK(Mat(p * up).cwiseAbs().maxCoeff() < 1e-14);

    CHECK_THROWS_AS(singlet_projector(2, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(singlet_projector(2, 0, 2), std::invalid_argument);
}

TEST_CASE("identity transfer tensors reproduce the pure singlet pair state") {
    CorrelationTensor ident;
    ident.times = {0.0};
    ident.m = {Eigen::Matrix3d::Identity()};
    const auto pair = reduced_pair_density(ident, ident);
    const Eigen::Vector4cd s = singlet_vec();
    const Eigen::Matrix4cd expect = s * s.adjoint();
    CHECK((pair.rho[0] - expect).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("concurrence endpoints: singlet one, maximally mixed zero") {
    const Eigen::Vector4cd s = singlet_vec();
    CHECK(concurrence(s * s.adjoint()) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(concurrence(0.25 * Eigen::Matrix4cd::Identity()) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("concurrence matches the Werner-state closed form") {
    for (double w : {0.0, 0.1, 1.0 / 3.0, 0.4, 0.6, 0.8, 0.95, 1.0}) {
        const double expect = std::max(0.0, (3.0 * w - 1.0) / 2.0);
        CHECK(std::abs(concurrence(werner(w)) - expect) < 1e-10);
    }
}

TEST_CASE("concurrence is invariant under local unitaries") {
    for (unsigned k = 0; k < 100; ++k) {
        const Eigen::Matrix4cd rho = random_density(1000 + k);
        const double base = concurrence(rho);
        const Eigen::Matrix4cd u =
            Eigen::kroneckerProduct(random_unitary(2000 + k), random_unitary(3000 + k));
        const double rotated = concurrence(Eigen::Matrix4cd(u * rho * u.adjoint()));
        CHECK(std::abs(base - rotated) < 1e-9);
    }
}

TEST_CASE("abbreviated concurrence variant is a distinct quantity") {
    const Eigen::Matrix4cd rho = werner(0.8);
    const double wootters = concurrence(rho);
    const double literal = concurrence(rho, true);
    CHECK(wootters == doctest::Approx(0.7).epsilon(1e-10));
    CHECK(literal == doctest::Approx(0.715).epsilon(1e-10));
    CHECK(std::abs(literal - wootters) > 0.01);
}

TEST_CASE("concurrence validates its input as a density matrix") {
    Eigen::Matrix4cd bad_trace = 0.5 * Eigen::Matrix4cd::Identity();
    CHECK_THROWS_AS(concurrence(bad_trace), std::invalid_argument);

    Eigen::Matrix4cd not_hermitian = 0.25 * Eigen::Matrix4cd::Identity();
    not_hermitian(0, 1) = cplx(0.1, 0.0);
    CHECK_THROWS_AS(concurrence(not_hermitian), std::invalid_argument);

    Eigen::Matrix4cd negative = Eigen::Matrix4cd::Zero();
    negative(0, 0) = 1.2;
    negative(1, 1) = -0.2;
    CHECK_THROWS_AS(concurrence(negative), std::invalid_argument);
}

TEST_CASE("yield of a saturated series matches the closed form") {
    const double k = constants::default_yield_rate_per_s;
    const double horizon = constants::default_yield_horizon_s;
    std::vector<double> times, p;
    for (double t = 0.0; t <= 1000.0 + 1e-9; t += 0.05) {
        times.push_back(t);
        p.push_back(1.0);
    }
    const double expect = 0.5 * (1.0 - std::exp(-k * horizon));
    CHECK(entanglement_yield(times, p) == doctest::Approx(expect).epsilon(1e-6));

    // A longer series is clipped at the horizon.
    std::vector<double> long_times = times, long_p = p;
    for (double t = 1000.05; t <= 2000.0 + 1e-9; t += 0.05) {
        long_times.push_back(t);
        long_p.push_back(1.0);
    }
    CHECK(entanglement_yield(long_times, long_p) ==
          doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("yield vanishes at and below the half threshold") {
    const std::vector<double> times = {0.0, 100.0, 1000.0};
    CHECK(entanglement_yield(times, {0.5, 0.5, 0.5}) == 0.0);
    CHECK(entanglement_yield(times, {0.3, 0.1, 0.0}) == 0.0);
}

TEST_CASE("yield splits integration segments at threshold kinks") {
    // p falls linearly through 1/2; a coarse grid must still localize the kink.
    std::vector<double> coarse_t, coarse_p;
    for (int i = 0; i <= 10; ++i) {
        coarse_t.push_back(0.1 * i);
        coarse_p.push_back(1.0 - 0.1 * i);
    }
    std::vector<double> fine_t, fine_p;
    for (int i = 0; i <= 100000; ++i) {
        fine_t.push_back(1e-5 * i);
        fine_p.push_back(1.0 - 1e-5 * i);
    }
    const double coarse = entanglement_yield(coarse_t, coarse_p, 1.0, 1.0);
    const double fine = entanglement_yield(fine_t, fine_p, 1.0, 1.0);
    CHECK(std::abs(coarse - fine) < 1e-2 * fine);
    // Closed form for k = 1, p = 1 - t: integral of (1/2 - t) e^-t over [0, 1/2].
    const double closed = 0.5 * (1.0 - std::exp(-0.5)) -
                          (1.0 - 1.5 * std::exp(-0.5));
    CHECK(fine == doctest::Approx(closed).epsilon(1e-6));
}

TEST_CASE("yield is monotone in the probability series") {
    std::vector<double> times, lo, hi;
    for (int i = 0; i <= 200; ++i) {
        const double t = 5.0 * i;
        times.push_back(t);
        lo.push_back(0.5 + 0.2 * std::exp(-t / 100.0));
        hi.push_back(0.5 + 0.4 * std::exp(-t / 100.0));
    }
    CHECK(entanglement_yield(times, lo) < entanglement_yield(times, hi));
}

TEST_CASE("threshold crossings interpolate linearly") {
    const std::vector<double> times = {0.0, 1.0, 2.0, 3.0, 4.0};
    const std::vector<double> p = {1.0, 0.6, 0.4, 0.6, 0.4};
    const auto rep = threshold_crossings(times, p);
    REQUIRE(rep.first_below_s.has_value());
    REQUIRE(rep.last_above_s.has_value());
    CHECK(*rep.first_below_s == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(*rep.last_above_s == doctest::Approx(3.5).epsilon(1e-12));
}

TEST_CASE("threshold crossing edge cases") {
    const std::vector<double> times = {0.0, 1.0, 2.0};

    const auto always_above = threshold_crossings(times, {1.0, 0.9, 0.8});
    CHECK(!always_above.first_below_s.has_value());
    CHECK(*always_above.last_above_s == doctest::Approx(2.0));

    const auto starts_below = threshold_crossings(times, {0.4, 0.3, 0.2});
    CHECK(*starts_below.first_below_s == doctest::Approx(0.0));
    CHECK(!starts_below.last_above_s.has_value());

    const auto touches = threshold_crossings(times, {1.0, 0.5, 0.4});
    CHECK(*touches.first_below_s == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(threshold_crossings({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(threshold_crossings(times, {1.0, 0.5}), std::invalid_argument);
}

TEST_CASE("frequency-count bound takes its published values") {
    CHECK(unique_frequency_bound(16) == 7380);
    CHECK(unique_frequency_bound(13) == 3159);
    CHECK(unique_frequency_bound(64) == 2035152);
    CHECK(unique_frequency_bound(44) == 448877);
    CHECK(unique_frequency_bound(0) == 0);
    CHECK(unique_frequency_bound(1) == 0);
    CHECK(unique_frequency_bound(2) == 2);
    CHECK_THROWS_AS(unique_frequency_bound(-1), std::invalid_argument);
}

TEST_CASE("distinct level counting clusters within the gap tolerance") {
    CHECK(count_distinct_levels(Mat::Zero(4, 4)) == 1);

    const double j = 0.193;
    const Mat h = 2.0 * constants::pi * j * Mat(dot_coupling_op(2, 0, 1));
    CHECK(count_distinct_levels(h) == 2);

    Mat diag = Mat::Zero(3, 3);
    diag(0, 0) = 0.0;
    diag(1, 1) = 2.0 * constants::pi * 0.5e-6;
    diag(2, 2) = 2.0 * constants::pi * 1.0;
    CHECK(count_distinct_levels(diag, 1e-6) == 2);
    CHECK(count_distinct_levels(diag, 1e-9) == 3);

    Mat skew = Mat::Zero(2, 2);
    skew(0, 1) = 1.0;
    CHECK_THROWS_AS(count_distinct_levels(skew), std::invalid_argument);
}

TEST_CASE("diffusion traversal time uses the one-dimensional convention") {
    const double t = diffusion_traversal_time(1.01e-9, 0.01);
    CHECK(t == doctest::Approx(0.01 * 0.01 / (2.0 * 1.01e-9)).epsilon(1e-12));
    CHECK(t / 3600.0 == doctest::Approx(13.7514).epsilon(1e-4));
    CHECK_THROWS_AS(diffusion_traversal_time(0.0, 0.01), std::invalid_argument);
    CHECK_THROWS_AS(diffusion_traversal_time(1e-9, -1.0), std::invalid_argument);
}
