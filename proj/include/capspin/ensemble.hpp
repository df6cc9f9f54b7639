#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "capspin/dynamics.hpp"
#include "capspin/observables.hpp"
#include "capspin/spin_system.hpp"
#include "capspin/time_grid.hpp"

namespace capspin {

enum class NormalizationScope { all_pairs, per_row };

struct RandomEnsembleSpec {
    std::vector<int> n_p_values;
    int samples_per_size = 50;
    std::uint64_t seed = 0;
    double normalization_hz = 1.0;
    NormalizationScope scope = NormalizationScope::all_pairs;
};

// J entries drawn standard-normal, rescaled so the coupling norm matches
// normalization_hz (all_pairs: RSS over distinct pairs; per_row: every row's
// RSS). Positions absent; deterministic in (seed, sample index via seed mixing
// done by the caller).
SpinSystem random_coupling_system(int n_p, std::uint64_t seed, double normalization_hz = 1.0,
                                  NormalizationScope scope = NormalizationScope::all_pairs);

// Derived per-sample seed so parallel execution order cannot matter.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

enum class RelaxationMode { off, on, automatic };

struct RunConfig {
    RelaxationMode relaxation = RelaxationMode::automatic;  // on iff geometry present
    MechanismSet mechanisms = MechanismSet::dipolar_only();
    GridKind orientation_kind = GridKind::spherical_design;
    int orientation_count = default_orientation_count;
    std::uint64_t orientation_seed = 0;
    TimeGrid grid;  // empty -> default piecewise 0-1000 s
    int pair_a = 0;
    int pair_b = 0;
    bool compute_concurrence = true;
    int threads = 0;  // 0 -> CAPSPIN_THREADS env or hardware count
};

DynamicsOptions dynamics_options_for(const SpinSystem& sys, const RunConfig& config);
TimeGrid effective_grid(const RunConfig& config);

struct StructureResult {
    std::string label;
    std::string symmetry_label;
    std::vector<double> p;
    std::vector<double> c;  // empty when concurrence disabled
    CrossingReport crossings;
    double yield = 0.0;
};

struct BatchFailure {
    std::string label;
    std::string error;
};

struct SymmetryScatterPoint {
    std::string label;
    int operations = 1;
    std::optional<double> first_below_s;
    std::optional<double> last_above_s;
};

struct EnsembleSummary {
    std::vector<double> times;
    std::vector<double> mean_p;
    std::vector<double> mean_c;
    std::vector<StructureResult> results;
    std::map<double, double> first_below_quantiles;  // over defined values only
    std::map<double, double> last_above_quantiles;
    int undefined_first_below = 0;
    int undefined_last_above = 0;
    std::vector<double> yields;
    std::vector<SymmetryScatterPoint> symmetry_scatter;
    int unknown_symmetry_count = 0;
    std::vector<BatchFailure> failures;
};

EnsembleSummary run_structure_batch(const std::vector<SpinSystem>& systems,
                                    const RunConfig& config,
                                    const std::vector<double>& quantiles = {0.5});

struct YieldStudyRow {
    int n_p = 0;
    std::vector<double> yields;
    double median = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
};

struct YieldStudy {
    std::vector<YieldStudyRow> rows;
    std::vector<BatchFailure> failures;
};

// Coherent-only by construction (random systems carry no geometry).
YieldStudy yield_vs_size_study(const RandomEnsembleSpec& spec, const RunConfig& config);

// Singlet-probability series for every probe pair (k, l) given the entangled
// source pair (source_a in molecule A, source_b in molecule B); both molecules
// share the same structure. Entry (source_a, source_b) is the standard p(t).
struct TransferGrid {
    int n = 0;
    int source_a = 0;
    int source_b = 0;
    std::vector<double> times;
    std::vector<std::vector<std::vector<double>>> p;  // [k][l] -> series
};

TransferGrid transfer_grid(const SpinSystem& sys, const RunConfig& config);

// Median-unbiased (type 8) quantile; values need not be sorted.
double quantile_type8(std::vector<double> values, double q);

// Order of a Schoenflies point group for common labels (case-insensitive);
// nullopt for unknown labels.
std::optional<int> point_group_order(const std::string& symmetry_label);

}  // namespace capspin
