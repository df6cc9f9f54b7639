#include "capspin/ensemble.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <stdexcept>

#include "capspin/threading.hpp"

namespace capspin {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(seed ^ splitmix64(index + 1));
}

SpinSystem random_coupling_system(int n_p, std::uint64_t seed, double normalization_hz,
                                  NormalizationScope scope) {
    if (n_p < 2) throw std::invalid_argument("random_coupling_system: need at least two spins");
    if (normalization_hz <= 0.0)
        throw std::invalid_argument("random_coupling_system: normalization must be positive");
    SpinSystem sys;
    sys.n_spins = n_p;
    sys.j_hz = Eigen::MatrixXd::Zero(n_p, n_p);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < n_p; ++i)
        for (int j = i + 1; j < n_p; ++j) {
            const double v = gauss(rng);
            sys.j_hz(i, j) = v;
            sys.j_hz(j, i) = v;
        }
    if (scope == NormalizationScope::all_pairs) {
        double ss = 0.0;
        for (int i = 0; i < n_p; ++i)
            for (int j = i + 1; j < n_p; ++j) ss += sys.j_hz(i, j) * sys.j_hz(i, j);
        if (ss == 0.0) throw std::runtime_error("random_coupling_system: degenerate draw");
        sys.j_hz *= normalization_hz / std::sqrt(ss);
    } else {
        // symmetric Sinkhorn iteration on the squared couplings so every
        // row's root-sum-square converges to the target
        const double target = normalization_hz * normalization_hz;
        Eigen::VectorXd row(n_p);
        bool converged = false;
        for (int iter = 0; iter < 1000 && !converged; ++iter) {
            for (int i = 0; i < n_p; ++i) row[i] = sys.j_hz.row(i).squaredNorm();
            if (row.minCoeff() <= 0.0)
                throw std::runtime_error("random_coupling_system: degenerate draw");
            converged = ((row.array() - target).abs() <= 1e-13 * target).all();
            if (converged) break;
            for (int i = 0; i < n_p; ++i)
                for (int j = i + 1; j < n_p; ++j) {
                    const double s = std::sqrt(std::sqrt(row[i] / target) *
                                               std::sqrt(row[j] / target));
                    sys.j_hz(i, j) /= s;
                    sys.j_hz(j, i) = sys.j_hz(i, j);
                }
        }
        if (!converged)
            throw std::runtime_error("random_coupling_system: per-row normalization stalled");
    }
    sys.label = "random-n" + std::to_string(n_p) + "-seed" + std::to_string(seed);
    return sys;
}

DynamicsOptions dynamics_options_for(const SpinSystem& sys, const RunConfig& config) {
    DynamicsOptions opts;
    switch (config.relaxation) {
        case RelaxationMode::off: opts.with_relaxation = false; break;
        case RelaxationMode::on: opts.with_relaxation = true; break;
        case RelaxationMode::automatic: opts.with_relaxation = sys.has_positions(); break;
    }
    opts.mechanisms = config.mechanisms;
    if (opts.with_relaxation)
        opts.orientation = orientation_grid(config.orientation_kind, config.orientation_count,
                                            config.orientation_seed);
    return opts;
}

TimeGrid effective_grid(const RunConfig& config) {
    if (config.grid.points.empty()) return TimeGrid::default_piecewise();
    config.grid.validate();
    return config.grid;
}

namespace {

StructureResult evaluate_structure(const SpinSystem& sys, const RunConfig& config,
                                   const TimeGrid& grid) {
    if (config.pair_a < 0 || config.pair_a >= sys.n_spins || config.pair_b < 0 ||
        config.pair_b >= sys.n_spins)
        throw std::invalid_argument("pair index out of range for system '" + sys.label + "'");
    const DynamicsOptions opts = dynamics_options_for(sys, config);
    MoleculePropagator prop(sys, opts);
    const CorrelationTensor mA = prop.correlation_tensor(config.pair_a, config.pair_a, grid);
    const CorrelationTensor mB = (config.pair_b == config.pair_a)
                                     ? mA
                                     : prop.correlation_tensor(config.pair_b, config.pair_b, grid);
    StructureResult res;
    res.label = sys.label;
    res.symmetry_label = sys.symmetry_label;
    res.p = singlet_probability_factorized(mA, mB);
    res.crossings = threshold_crossings(grid.points, res.p);
    res.yield = entanglement_yield(grid.points, res.p);
    if (config.compute_concurrence) {
        const PairDensity pd = reduced_pair_density(mA, mB);
        res.c.resize(pd.rho.size());
        for (std::size_t i = 0; i < pd.rho.size(); ++i) res.c[i] = concurrence(pd.rho[i]);
    }
    return res;
}

}  // namespace

EnsembleSummary run_structure_batch(const std::vector<SpinSystem>& systems,
                                    const RunConfig& config,
                                    const std::vector<double>& quantiles) {
    if (systems.empty()) throw std::invalid_argument("run_structure_batch: no systems given");
    const TimeGrid grid = effective_grid(config);

    struct Slot {
        bool ok = false;
        StructureResult result;
        BatchFailure failure;
    };
    std::vector<Slot> slots(systems.size());
    parallel_for(systems.size(), config.threads, [&](std::size_t i) {
        try {
            slots[i].result = evaluate_structure(systems[i], config, grid);
            slots[i].ok = true;
        } catch (const std::exception& e) {
            slots[i].failure = {systems[i].label, e.what()};
        }
    });

    EnsembleSummary summary;
    summary.times = grid.points;
    std::vector<double> first_vals, last_vals;
    std::size_t n_ok = 0;
    for (auto& slot : slots) {
        if (!slot.ok) {
            summary.failures.push_back(std::move(slot.failure));
            continue;
        }
        StructureResult& r = slot.result;
        ++n_ok;
        if (summary.mean_p.empty()) summary.mean_p.assign(grid.points.size(), 0.0);
        for (std::size_t t = 0; t < r.p.size(); ++t) summary.mean_p[t] += r.p[t];
        if (!r.c.empty()) {
            if (summary.mean_c.empty()) summary.mean_c.assign(grid.points.size(), 0.0);
            for (std::size_t t = 0; t < r.c.size(); ++t) summary.mean_c[t] += r.c[t];
        }
        if (r.crossings.first_below_s)
            first_vals.push_back(*r.crossings.first_below_s);
        else
            ++summary.undefined_first_below;
        if (r.crossings.last_above_s)
            last_vals.push_back(*r.crossings.last_above_s);
        else
            ++summary.undefined_last_above;
        summary.yields.push_back(r.yield);
        if (!r.symmetry_label.empty()) {
            if (const auto order = point_group_order(r.symmetry_label)) {
                summary.symmetry_scatter.push_back({r.symmetry_label, *order,
                                                    r.crossings.first_below_s,
                                                    r.crossings.last_above_s});
            } else {
                ++summary.unknown_symmetry_count;
            }
        }
        summary.results.push_back(std::move(r));
    }
    if (n_ok > 0) {
        for (double& v : summary.mean_p) v /= static_cast<double>(n_ok);
        for (double& v : summary.mean_c) v /= static_cast<double>(n_ok);
    }
    for (double q : quantiles) {
        if (!first_vals.empty()) summary.first_below_quantiles[q] = quantile_type8(first_vals, q);
        if (!last_vals.empty()) summary.last_above_quantiles[q] = quantile_type8(last_vals, q);
    }
    return summary;
}

YieldStudy yield_vs_size_study(const RandomEnsembleSpec& spec, const RunConfig& config) {
    YieldStudy study;
    if (spec.samples_per_size < 0)
        throw std::invalid_argument("yield_vs_size_study: negative sample count");
    if (spec.samples_per_size == 0 || spec.n_p_values.empty()) return study;
    const TimeGrid grid = effective_grid(config);

    for (int n_p : spec.n_p_values) {
        YieldStudyRow row;
        row.n_p = n_p;
        struct Slot {
            bool ok = false;
            double yield = 0.0;
            BatchFailure failure;
        };
        std::vector<Slot> slots(static_cast<std::size_t>(spec.samples_per_size));
        parallel_for(slots.size(), config.threads, [&](std::size_t s) {
            const std::uint64_t mix =
                (static_cast<std::uint64_t>(n_p) << 32) | static_cast<std::uint64_t>(s);
            const std::string label =
                "random-n" + std::to_string(n_p) + "-sample" + std::to_string(s);
            try {
                SpinSystem sys = random_coupling_system(n_p, derive_seed(spec.seed, mix),
                                                        spec.normalization_hz, spec.scope);
                sys.label = label;
                RunConfig local = config;
                local.relaxation = RelaxationMode::off;  // coherent-only study
                local.compute_concurrence = false;
                local.pair_a = 0;
                local.pair_b = 0;
                slots[s].yield = evaluate_structure(sys, local, grid).yield;
                slots[s].ok = true;
            } catch (const std::exception& e) {
                slots[s].failure = {label, e.what()};
            }
        });
        for (auto& slot : slots) {
            if (slot.ok)
                row.yields.push_back(slot.yield);
            else
                study.failures.push_back(std::move(slot.failure));
        }
        if (!row.yields.empty()) {
            row.median = quantile_type8(row.yields, 0.5);
            row.q25 = quantile_type8(row.yields, 0.25);
            row.q75 = quantile_type8(row.yields, 0.75);
        }
        study.rows.push_back(std::move(row));
    }
    return study;
}

TransferGrid transfer_grid(const SpinSystem& sys, const RunConfig& config) {
    sys.validate();
    if (config.pair_a < 0 || config.pair_a >= sys.n_spins || config.pair_b < 0 ||
        config.pair_b >= sys.n_spins)
        throw std::invalid_argument("transfer_grid: source pair index out of range");
    const TimeGrid grid = effective_grid(config);
    const DynamicsOptions opts = dynamics_options_for(sys, config);
    MoleculePropagator prop(sys, opts);

    const int n = sys.n_spins;
    std::vector<CorrelationTensor> from_a(n), from_b;
    for (int k = 0; k < n; ++k) from_a[k] = prop.correlation_tensor(config.pair_a, k, grid);
    const std::vector<CorrelationTensor>* bp = &from_a;
    if (config.pair_b != config.pair_a) {
        from_b.resize(n);
        for (int l = 0; l < n; ++l) from_b[l] = prop.correlation_tensor(config.pair_b, l, grid);
        bp = &from_b;
    }

    TransferGrid out;
    out.n = n;
    out.source_a = config.pair_a;
    out.source_b = config.pair_b;
    out.times = grid.points;
    out.p.assign(n, std::vector<std::vector<double>>(n));
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
            out.p[k][l] = singlet_probability_factorized(from_a[k], (*bp)[l]);
    return out;
}

double quantile_type8(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile_type8: empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile_type8: q outside [0,1]");
    std::sort(values.begin(), values.end());
    const auto n = static_cast<double>(values.size());
    double h = (n + 1.0 / 3.0) * q + 1.0 / 3.0;
    h = std::clamp(h, 1.0, n);
    const auto j = static_cast<std::size_t>(std::floor(h));
    const double g = h - std::floor(h);
    if (j >= values.size()) return values.back();
    const double lo = values[j - 1];
    const double hi = values[std::min(values.size() - 1, j)];
    return lo + g * (hi - lo);
}

std::optional<int> point_group_order(const std::string& symmetry_label) {
    std::string s;
    for (char c : symmetry_label)
        if (!std::isspace(static_cast<unsigned char>(c)))
            s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (s.empty()) return std::nullopt;

    if (s == "ci") return 2;
    if (s == "cs") return 2;
    if (s == "t") return 12;
    if (s == "td") return 24;
    if (s == "th") return 24;
    if (s == "o") return 24;
    if (s == "oh") return 48;
    if (s == "i") return 60;
    if (s == "ih") return 120;

    const char family = s[0];
    if (family != 'c' && family != 'd' && family != 's') return std::nullopt;
    std::size_t i = 1;
    std::string digits;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) digits.push_back(s[i++]);
    if (digits.empty()) return std::nullopt;
    const int nfold = std::stoi(digits);
    if (nfold < 1) return std::nullopt;
    const std::string suffix = s.substr(i);

    if (family == 'c') {
        if (suffix.empty()) return nfold;
        if (suffix == "v" || suffix == "h") return 2 * nfold;
        return std::nullopt;
    }
    if (family == 'd') {
        if (suffix.empty()) return 2 * nfold;
        if (suffix == "d" || suffix == "h") return 4 * nfold;
        return std::nullopt;
    }
    // s_n groups exist for even n only
    if (!suffix.empty() || nfold % 2 != 0) return std::nullopt;
    return nfold;
}

}  // namespace capspin
