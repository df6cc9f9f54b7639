#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "capspin/ensemble.hpp"
#include "capspin/structure_io.hpp"

using namespace capspin;

namespace {

std::string fixture(const char* name) {
    return std::string(CAPSPIN_DATA_DIR) + "/" + name;
}

double coupling_rss(const Eigen::MatrixXd& j) {
    double ss = 0.0;
    for (int i = 0; i < j.rows(); ++i)
        for (int k = i + 1; k < j.cols(); ++k) ss += j(i, k) * j(i, k);
    return std::sqrt(ss);
}

}  // namespace

TEST_CASE("random couplings hit the requested norm exactly") {
    for (int n : {2, 4, 6}) {
        const SpinSystem sys = random_coupling_system(n, 7, 0.4);
        CHECK(sys.n_spins == n);
        CHECK(!sys.has_positions());
        CHECK(coupling_rss(sys.j_hz) == doctest::Approx(0.4).epsilon(1e-12));
        CHECK((sys.j_hz - sys.j_hz.transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK(sys.j_hz.diagonal().cwiseAbs().maxCoeff() == 0.0);
    }
    // A single pair pins the magnitude completely.
    const SpinSystem pair = random_coupling_system(2, 3, 1.0);
    CHECK(std::abs(pair.j_hz(0, 1)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("random couplings are seed-deterministic and seed-sensitive") {
    const SpinSystem a = random_coupling_system(5, 11, 0.4);
    const SpinSystem b = random_coupling_system(5, 11, 0.4);
    const SpinSystem c = random_coupling_system(5, 12, 0.4);
    CHECK((a.j_hz - b.j_hz).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.j_hz - c.j_hz).cwiseAbs().maxCoeff() > 1e-6);
    CHECK(a.label == "random-n5-seed11");
}

TEST_CASE("per-row normalization balances every row norm") {
    const double target = 0.5;
    const SpinSystem sys = random_coupling_system(6, 21, target, NormalizationScope::per_row);
    for (int i = 0; i < 6; ++i) {
        double ss = 0.0;
        for (int j = 0; j < 6; ++j)
            if (j != i) ss += sys.j_hz(i, j) * sys.j_hz(i, j);
        CHECK(std::sqrt(ss) == doctest::Approx(target).epsilon(1e-9));
    }
    CHECK((sys.j_hz - sys.j_hz.transpose()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("random coupling generator rejects degenerate sizes") {
    CHECK_THROWS_AS(random_coupling_system(1, 0), std::invalid_argument);
    CHECK_THROWS_AS(random_coupling_system(0, 0), std::invalid_argument);
}

TEST_CASE("seed derivation decorrelates sample indices") {
    CHECK(derive_seed(42, 0) == derive_seed(42, 0));
    CHECK(derive_seed(42, 0) != derive_seed(42, 1));
    CHECK(derive_seed(42, 1) != derive_seed(43, 1));
    CHECK(derive_seed(0, 0) != 0);
}

TEST_CASE("type-8 quantiles interpolate with the one-third plotting offsets") {
    const std::vector<double> v = {9, 1, 8, 2, 7, 3, 6, 4, 5};
    CHECK(quantile_type8(v, 0.5) == doctest::Approx(5.0).epsilon(1e-13));
    CHECK(quantile_type8(v, 0.25) == doctest::Approx(2.6666666666666665).epsilon(1e-13));
    CHECK(quantile_type8(v, 0.75) == doctest::Approx(7.333333333333333).epsilon(1e-13));
    CHECK(quantile_type8(v, 0.0) == 1.0);
    CHECK(quantile_type8(v, 1.0) == 9.0);
    CHECK(quantile_type8({3.5}, 0.5) == 3.5);
    CHECK_THROWS_AS(quantile_type8({}, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(quantile_type8({1.0}, -0.1), std::invalid_argument);
}

TEST_CASE("point group orders cover the common Schoenflies labels") {
    CHECK(point_group_order("C1") == 1);
    CHECK(point_group_order("Ci") == 2);
    CHECK(point_group_order("Cs") == 2);
    CHECK(point_group_order("C2") == 2);
    CHECK(point_group_order("C2v") == 4);
    CHECK(point_group_order("C3h") == 6);
    CHECK(point_group_order("S4") == 4);
    CHECK(point_group_order("S6") == 6);
    CHECK(point_group_order("D3") == 6);
    CHECK(point_group_order("D3h") == 12);
    CHECK(point_group_order("D2d") == 8);
    CHECK(point_group_order("Td") == 24);
    CHECK(point_group_order("Oh") == 48);
    CHECK(point_group_order("td") == 24);
    CHECK(point_group_order(" c2V ") == 4);
    CHECK(!point_group_order("S3").has_value());
    CHECK(!point_group_order("Q9x").has_value());
    CHECK(!point_group_order("").has_value());
}

TEST_CASE("relaxation mode resolution follows the geometry by default") {
    const SpinSystem dimer = parse_structure(fixture("dimer_s4.json"));
    const SpinSystem synth = parse_structure(fixture("posner_synthetic_a.json"));
    RunConfig config;

    CHECK(dynamics_options_for(dimer, config).with_relaxation);
    CHECK(!dynamics_options_for(synth, config).with_relaxation);

    config.relaxation = RelaxationMode::off;
    CHECK(!dynamics_options_for(dimer, config).with_relaxation);

    config.relaxation = RelaxationMode::on;
    CHECK(dynamics_options_for(dimer, config).with_relaxation);
    CHECK(!dynamics_options_for(dimer, config).orientation.rotations.empty());
}

TEST_CASE("effective grid defaults to the dense-then-coarse piecewise layout") {
    RunConfig config;
    CHECK(effective_grid(config).size() == 21961);
    config.grid = TimeGrid::linear(1.0, 0.5);
    CHECK(effective_grid(config).size() == 3);
}

TEST_CASE("structure batches aggregate series, crossings, and symmetry points") {
    SpinSystem dimer = parse_structure(fixture("dimer_s4.json"));
    RunConfig config;
    config.relaxation = RelaxationMode::off;
    config.grid = TimeGrid::linear(2.0, 0.05);
    const auto summary = run_structure_batch({dimer}, config, {0.25, 0.5});

    REQUIRE(summary.results.size() == 1);
    CHECK(summary.failures.empty());
    CHECK(summary.mean_p == summary.results[0].p);
    CHECK(summary.results[0].p.front() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(!summary.results[0].c.empty());
    CHECK(summary.yields.size() == 1);
    REQUIRE(summary.symmetry_scatter.size() == 1);
    CHECK(summary.symmetry_scatter[0].operations == 4);
    CHECK(summary.unknown_symmetry_count == 0);
    CHECK(summary.first_below_quantiles.count(0.25) == 1);
    CHECK(summary.first_below_quantiles.count(0.5) == 1);
}

TEST_CASE("structure batches keep going when one system fails") {
    const SpinSystem dimer = parse_structure(fixture("dimer_s4.json"));
    const SpinSystem monomer = parse_structure(fixture("monomer.json"));
    RunConfig config;
    config.relaxation = RelaxationMode::off;
    config.grid = TimeGrid::linear(1.0, 0.25);
    config.pair_b = 3;  // valid for the dimer, out of range for the monomer
    const auto summary = run_structure_batch({dimer, monomer}, config);

    CHECK(summary.results.size() == 1);
    REQUIRE(summary.failures.size() == 1);
    CHECK(summary.failures[0].label == monomer.label);
    CHECK(summary.failures[0].error.find("out of range") != std::string::npos);

    CHECK_THROWS_AS(run_structure_batch({}, config), std::invalid_argument);
}

TEST_CASE("unknown symmetry labels are counted, empty ones skipped") {
    SpinSystem odd = random_coupling_system(2, 5, 0.4);
    odd.symmetry_label = "Q9x";
    SpinSystem blank = random_coupling_system(2, 6, 0.4);
    RunConfig config;
    config.grid = TimeGrid::linear(1.0, 0.5);
    config.compute_concurrence = false;
    const auto summary = run_structure_batch({odd, blank}, config);
    CHECK(summary.unknown_symmetry_count == 1);
    CHECK(summary.symmetry_scatter.empty());
}

TEST_CASE("transfer grid pins the source entry and starts probes at one quarter") {
    const SpinSystem dimer = parse_structure(fixture("dimer_s4.json"));
    RunConfig config;
    config.relaxation = RelaxationMode::off;
    config.grid = TimeGrid::linear(2.0, 0.1);
    config.pair_a = 0;
    config.pair_b = 1;
    const auto grid_result = transfer_grid(dimer, config);

    CHECK(grid_result.n == 4);
    CHECK(grid_result.source_a == 0);
    CHECK(grid_result.source_b == 1);
    for (int k = 0; k < 4; ++k)
        for (int l = 0; l < 4; ++l) {
            const double p0 = grid_result.p[k][l][0];
            if (k == 0 && l == 1)
                CHECK(p0 == doctest::Approx(1.0).epsilon(1e-12));
            else
                CHECK(p0 == doctest::Approx(0.25).epsilon(1e-12));
        }

    const auto summary = run_structure_batch({dimer}, config);
    const auto& standard = summary.results[0].p;
    double diff = 0.0;
    for (std::size_t i = 0; i < standard.size(); ++i)
        diff = std::max(diff, std::abs(grid_result.p[0][1][i] - standard[i]));
    CHECK(diff == 0.0);
}

TEST_CASE("yield study rows are deterministic and degenerate sizes collapse") {
    RandomEnsembleSpec spec;
    spec.n_p_values = {2, 3};
    spec.samples_per_size = 3;
    spec.seed = 9;
    spec.normalization_hz = 0.4;
    RunConfig config;
    config.grid = TimeGrid::linear(50.0, 0.05);

    const auto study = yield_vs_size_study(spec, config);
    REQUIRE(study.rows.size() == 2);
    CHECK(study.failures.empty());
    CHECK(study.rows[0].n_p == 2);
    CHECK(study.rows[0].yields.size() == 3);
    // Two-spin systems all share |J| = norm, so every sample yields the same.
    CHECK(study.rows[0].median == doctest::Approx(study.rows[0].yields[0]).epsilon(1e-12));
    CHECK(study.rows[0].q25 == doctest::Approx(study.rows[0].q75).epsilon(1e-12));
    CHECK(study.rows[0].median > 0.0);

    const auto repeat = yield_vs_size_study(spec, config);
    for (std::size_t r = 0; r < study.rows.size(); ++r)
        for (std::size_t s = 0; s < study.rows[r].yields.size(); ++s)
            CHECK(study.rows[r].yields[s] == repeat.rows[r].yields[s]);

    spec.samples_per_size = 0;
    CHECK(yield_vs_size_study(spec, config).rows.empty());
    spec.samples_per_size = -1;
    CHECK_THROWS_AS(yield_vs_size_study(spec, config), std::invalid_argument);
}
