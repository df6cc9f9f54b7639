#include <CLI11.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "capspin/ensemble.hpp"
#include "capspin/series_io.hpp"
#include "capspin/structure_io.hpp"
#include "capspin/threading.hpp"

namespace fs = std::filesystem;
using namespace capspin;

namespace {

struct RunFlags {
    std::string relaxation = "auto";
    std::string mechanisms = "dipolar";
    std::string grid = "default";
    std::string pair = "0,0";
    std::string orientation = "design";
    int orientation_count = default_orientation_count;
    std::uint64_t orientation_seed = 0;
    int threads = 0;
};

void add_run_flags(CLI::App* cmd, RunFlags& flags) {
    cmd->add_option("--relaxation", flags.relaxation, "auto|on|off (auto: on iff geometry present)")
        ->check(CLI::IsMember({"auto", "on", "off"}));
    cmd->add_option("--mechanisms", flags.mechanisms, "comma list of dipolar,csa");
    cmd->add_option("--grid", flags.grid,
                    "default | linear:END:DT | piecewise:S:E:DT[,S:E:DT...] (seconds)");
    cmd->add_option("--pair", flags.pair, "spin indices iA,iB carrying the entangled pair");
    cmd->add_option("--orientation", flags.orientation, "design|random orientation average")
        ->check(CLI::IsMember({"design", "random"}));
    cmd->add_option("--orientations", flags.orientation_count, "orientation count");
    cmd->add_option("--orientation-seed", flags.orientation_seed, "seed for random orientations");
    cmd->add_option("--threads", flags.threads, "worker threads (0: CAPSPIN_THREADS or hardware)");
}

MechanismSet parse_mechanisms(const std::string& csv) {
    MechanismSet set;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "dipolar")
            set.add(Mechanism::dipolar);
        else if (item == "csa")
            set.add(Mechanism::csa);
        else if (!item.empty())
            throw std::invalid_argument("unknown mechanism '" + item +
                                        "' (expected dipolar or csa)");
    }
    if (set.empty()) throw std::invalid_argument("no mechanisms given");
    return set;
}

TimeGrid parse_grid_spec(const std::string& spec) {
    if (spec == "default") return TimeGrid::default_piecewise();
    const auto head = spec.find(':');
    if (head == std::string::npos)
        throw std::invalid_argument("bad grid spec '" + spec + "'");
    const std::string kind = spec.substr(0, head);
    const std::string rest = spec.substr(head + 1);
    auto parse_triple = [&](const std::string& seg, double& a, double& b, double& dt) {
        std::stringstream ss(seg);
        std::string t1, t2, t3;
        if (!std::getline(ss, t1, ':') || !std::getline(ss, t2, ':') || !std::getline(ss, t3))
            throw std::invalid_argument("bad grid segment '" + seg + "'");
        a = std::stod(t1);
        b = std::stod(t2);
        dt = std::stod(t3);
    };
    if (kind == "linear") {
        std::stringstream ss(rest);
        std::string t1, t2;
        if (!std::getline(ss, t1, ':') || !std::getline(ss, t2))
            throw std::invalid_argument("linear grid needs END:DT");
        return TimeGrid::linear(std::stod(t1), std::stod(t2));
    }
    if (kind != "piecewise") throw std::invalid_argument("bad grid kind '" + kind + "'");
    TimeGrid grid;
    grid.scheme = TimeGrid::Scheme::piecewise;
    std::stringstream segs(rest);
    std::string seg;
    while (std::getline(segs, seg, ',')) {
        double a = 0, b = 0, dt = 0;
        parse_triple(seg, a, b, dt);
        if (dt <= 0 || b <= a) throw std::invalid_argument("bad grid segment '" + seg + "'");
        if (grid.points.empty()) {
            if (a != 0.0) throw std::invalid_argument("grid must start at 0");
            grid.points.push_back(0.0);
        } else if (std::abs(grid.points.back() - a) > 1e-12 * std::max(1.0, a)) {
            throw std::invalid_argument("grid segments must be contiguous at " + seg);
        }
        for (std::size_t k = 1;; ++k) {
            const double t = a + static_cast<double>(k) * dt;
            if (t > b * (1.0 + 1e-12)) break;
            grid.points.push_back(t);
        }
        if (grid.points.back() < b * (1.0 - 1e-12)) grid.points.push_back(b);
    }
    grid.validate();
    return grid;
}

std::pair<int, int> parse_pair_spec(const std::string& spec) {
    const auto comma = spec.find(',');
    if (comma == std::string::npos)
        throw std::invalid_argument("pair must be given as iA,iB");
    return {std::stoi(spec.substr(0, comma)), std::stoi(spec.substr(comma + 1))};
}

RunConfig config_from_flags(const RunFlags& flags) {
    RunConfig config;
    if (flags.relaxation == "on")
        config.relaxation = RelaxationMode::on;
    else if (flags.relaxation == "off")
        config.relaxation = RelaxationMode::off;
    else
        config.relaxation = RelaxationMode::automatic;
    config.mechanisms = parse_mechanisms(flags.mechanisms);
    config.orientation_kind =
        flags.orientation == "design" ? GridKind::spherical_design : GridKind::random_uniform;
    config.orientation_count = flags.orientation_count;
    config.orientation_seed = flags.orientation_seed;
    config.grid = parse_grid_spec(flags.grid);
    const auto [a, b] = parse_pair_spec(flags.pair);
    config.pair_a = a;
    config.pair_b = b;
    config.threads = flags.threads;
    return config;
}

std::string describe_relaxation(const SpinSystem& sys, const RunConfig& config) {
    const DynamicsOptions opts = dynamics_options_for(sys, config);
    if (!opts.with_relaxation) return "off";
    std::string mechanisms;
    if (opts.mechanisms.has(Mechanism::dipolar)) mechanisms += "dipolar";
    if (opts.mechanisms.has(Mechanism::csa)) mechanisms += mechanisms.empty() ? "csa" : ",csa";
    return "on (" + mechanisms + ")";
}

std::vector<std::pair<std::string, std::string>> run_metadata(const std::string& command,
                                                             const SpinSystem& sys,
                                                             const RunConfig& config,
                                                             const std::string& source_path) {
    const TimeGrid grid = effective_grid(config);
    std::vector<std::pair<std::string, std::string>> md;
    md.emplace_back("tool", "capspin " CAPSPIN_VERSION);
    md.emplace_back("command", command);
    md.emplace_back("structure_file", source_path);
    md.emplace_back("structure_hash", structure_hash(sys));
    md.emplace_back("label", sys.label);
    if (!sys.symmetry_label.empty()) md.emplace_back("symmetry", sys.symmetry_label);
    md.emplace_back("relaxation", describe_relaxation(sys, config));
    md.emplace_back("orientation_grid",
                    config.orientation_kind == GridKind::spherical_design
                        ? "design-" + std::to_string(default_orientation_count)
                        : "random-" + std::to_string(config.orientation_count) + "-seed" +
                              std::to_string(config.orientation_seed));
    md.emplace_back("time_grid", grid.describe());
    md.emplace_back("pair",
                    std::to_string(config.pair_a) + "," + std::to_string(config.pair_b));
    md.emplace_back("tau_c_ps", format_double(sys.tau_c_s * 1e12));
    md.emplace_back("b_field_ut", format_double(sys.b_field_t * 1e6));
    return md;
}

ResultSeries simulate_structure(const SpinSystem& sys, const RunConfig& config,
                                bool with_concurrence, const std::string& source_path) {
    const TimeGrid grid = effective_grid(config);
    const DynamicsOptions opts = dynamics_options_for(sys, config);
    if (config.pair_a < 0 || config.pair_a >= sys.n_spins || config.pair_b < 0 ||
        config.pair_b >= sys.n_spins)
        throw std::invalid_argument("pair index out of range for '" + sys.label + "'");
    MoleculePropagator prop(sys, opts);
    const CorrelationTensor mA = prop.correlation_tensor(config.pair_a, config.pair_a, grid);
    const CorrelationTensor mB = (config.pair_b == config.pair_a)
                                     ? mA
                                     : prop.correlation_tensor(config.pair_b, config.pair_b, grid);
    ResultSeries series;
    series.metadata = run_metadata("simulate", sys, config, source_path);
    series.time_s = grid.points;
    series.p_singlet = singlet_probability_factorized(mA, mB);
    if (with_concurrence) {
        const PairDensity pd = reduced_pair_density(mA, mB);
        series.concurrence.resize(pd.rho.size());
        for (std::size_t i = 0; i < pd.rho.size(); ++i)
            series.concurrence[i] = concurrence(pd.rho[i]);
    }
    return series;
}

bool looks_like_structure(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open file: " + path);
    char c;
    while (in.get(c)) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        return c == '{';
    }
    throw std::invalid_argument("empty file: " + path);
}

// series from either a ready-made series file or a structure simulated on the fly
ResultSeries series_from_path(const std::string& path, const RunFlags& flags) {
    if (looks_like_structure(path)) {
        const SpinSystem sys = parse_structure(path);
        return simulate_structure(sys, config_from_flags(flags), false, path);
    }
    return parse_series(path);
}

void atomic_write_text(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open for writing: " + tmp);
        f << content;
        f.flush();
        if (!f) throw std::runtime_error("write failed: " + tmp);
    }
    fs::rename(tmp, path);
}

nlohmann::json crossings_json(const CrossingReport& rep) {
    nlohmann::json j;
    j["threshold"] = rep.threshold;
    j["first_below_s"] =
        rep.first_below_s ? nlohmann::json(*rep.first_below_s) : nlohmann::json(nullptr);
    j["last_above_s"] =
        rep.last_above_s ? nlohmann::json(*rep.last_above_s) : nlohmann::json(nullptr);
    return j;
}

int cmd_simulate(const std::string& path, const RunFlags& flags, std::string out,
                 bool no_concurrence) {
    const SpinSystem sys = parse_structure(path);
    const RunConfig config = config_from_flags(flags);
    const ResultSeries series = simulate_structure(sys, config, !no_concurrence, path);
    if (out.empty())
        out = (sys.label.empty() ? fs::path(path).stem().string() : sys.label) + "_series.csv";
    write_series(series, out);
    std::cout << "wrote " << out << " (" << series.time_s.size() << " samples)\n";
    return 0;
}

int cmd_crossings(const std::string& path, const RunFlags& flags, double threshold) {
    const ResultSeries series = series_from_path(path, flags);
    const CrossingReport rep = threshold_crossings(series.time_s, series.p_singlet, threshold);
    std::cout << "threshold: " << format_double(rep.threshold) << "\n";
    std::cout << "first_below_s: "
              << (rep.first_below_s ? format_double(*rep.first_below_s) : "none") << "\n";
    std::cout << "last_above_s: "
              << (rep.last_above_s ? format_double(*rep.last_above_s) : "none") << "\n";
    return 0;
}

int cmd_yield(const std::string& path, const RunFlags& flags, double k, double horizon) {
    const ResultSeries series = series_from_path(path, flags);
    std::cout << format_double(entanglement_yield(series.time_s, series.p_singlet, k, horizon))
              << "\n";
    return 0;
}

int cmd_transfer(const std::string& path, const RunFlags& flags, std::string out_dir) {
    const SpinSystem sys = parse_structure(path);
    const RunConfig config = config_from_flags(flags);
    const TransferGrid grid = transfer_grid(sys, config);
    if (out_dir.empty())
        out_dir = (sys.label.empty() ? fs::path(path).stem().string() : sys.label) + "_transfer";
    fs::create_directories(out_dir);

    nlohmann::json manifest;
    manifest["n_spins"] = grid.n;
    manifest["source_pair"] = {grid.source_a, grid.source_b};
    for (const auto& [key, value] : run_metadata("transfer", sys, config, path))
        manifest["run"][key] = value;
    auto& files = manifest["files"];
    for (int k = 0; k < grid.n; ++k)
        for (int l = 0; l < grid.n; ++l) {
            ResultSeries series;
            series.metadata = run_metadata("transfer", sys, config, path);
            series.metadata.emplace_back("probe_pair",
                                         std::to_string(k) + "," + std::to_string(l));
            series.time_s = grid.times;
            series.p_singlet = grid.p[k][l];
            const std::string name =
                "pair_" + std::to_string(k) + "_" + std::to_string(l) + ".csv";
            write_series(series, (fs::path(out_dir) / name).string());
            files.push_back({{"probe_a", k}, {"probe_b", l}, {"file", name}});
        }
    atomic_write_text((fs::path(out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
    std::cout << "wrote " << grid.n * grid.n << " series + manifest under " << out_dir << "\n";
    return 0;
}

int cmd_batch(const std::string& dir, const RunFlags& flags,
              const std::vector<double>& quantiles, std::string out) {
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            paths.push_back(entry.path().string());
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw std::invalid_argument("no .json structures under " + dir);

    std::vector<SpinSystem> systems;
    systems.reserve(paths.size());
    for (const auto& p : paths) systems.push_back(parse_structure(p));

    const RunConfig config = config_from_flags(flags);
    const EnsembleSummary summary =
        run_structure_batch(systems, config, quantiles.empty() ? std::vector<double>{0.5}
                                                               : quantiles);

    nlohmann::json j;
    j["tool"] = "capspin " CAPSPIN_VERSION;
    j["command"] = "batch";
    j["structures"] = paths.size();
    j["time_grid"] = effective_grid(config).describe();
    j["times_s"] = summary.times;
    j["mean_p"] = summary.mean_p;
    j["mean_c"] = summary.mean_c;
    for (const auto& r : summary.results) {
        nlohmann::json row;
        row["label"] = r.label;
        row["symmetry"] = r.symmetry_label;
        row["yield"] = r.yield;
        row["crossings"] = crossings_json(r.crossings);
        j["structures_detail"].push_back(row);
    }
    for (const auto& [q, v] : summary.first_below_quantiles)
        j["first_below_quantiles"][format_double(q)] = v;
    for (const auto& [q, v] : summary.last_above_quantiles)
        j["last_above_quantiles"][format_double(q)] = v;
    j["undefined_first_below"] = summary.undefined_first_below;
    j["undefined_last_above"] = summary.undefined_last_above;
    j["yields"] = summary.yields;
    for (const auto& pt : summary.symmetry_scatter) {
        nlohmann::json row;
        row["symmetry"] = pt.label;
        row["operations"] = pt.operations;
        row["first_below_s"] =
            pt.first_below_s ? nlohmann::json(*pt.first_below_s) : nlohmann::json(nullptr);
        row["last_above_s"] =
            pt.last_above_s ? nlohmann::json(*pt.last_above_s) : nlohmann::json(nullptr);
        j["symmetry_scatter"].push_back(row);
    }
    j["unknown_symmetry_count"] = summary.unknown_symmetry_count;
    for (const auto& f : summary.failures)
        j["failures"].push_back({{"label", f.label}, {"error", f.error}});

    if (out.empty()) out = "batch_summary.json";
    atomic_write_text(out, j.dump(2) + "\n");
    std::cout << "wrote " << out << " (" << summary.results.size() << " ok, "
              << summary.failures.size() << " failed)\n";
    if (!summary.failures.empty()) {
        for (const auto& f : summary.failures)
            std::cerr << "failed: " << f.label << ": " << f.error << "\n";
        return 1;
    }
    return 0;
}

int cmd_ensemble(const std::vector<int>& sizes, int samples, std::uint64_t seed,
                 double normalization, const std::string& scope, const RunFlags& flags,
                 std::string out) {
    RandomEnsembleSpec spec;
    spec.n_p_values = sizes;
    spec.samples_per_size = samples;
    spec.seed = seed;
    spec.normalization_hz = normalization;
    spec.scope =
        scope == "per_row" ? NormalizationScope::per_row : NormalizationScope::all_pairs;
    const RunConfig config = config_from_flags(flags);
    const YieldStudy study = yield_vs_size_study(spec, config);

    std::ostringstream text;
    text << "# tool: capspin " CAPSPIN_VERSION "\n";
    text << "# command: ensemble\n";
    text << "# seed: " << seed << "\n";
    text << "# samples_per_size: " << samples << "\n";
    text << "# normalization_hz: " << format_double(normalization) << "\n";
    text << "# normalization_scope: " << scope << "\n";
    text << "# time_grid: " << effective_grid(config).describe() << "\n";
    text << "n_p,samples,median_yield,q25_yield,q75_yield\n";
    for (const auto& row : study.rows)
        text << row.n_p << ',' << row.yields.size() << ',' << format_double(row.median) << ','
             << format_double(row.q25) << ',' << format_double(row.q75) << "\n";

    if (out.empty()) out = "yield_vs_size.csv";
    atomic_write_text(out, text.str());
    std::cout << text.str();
    if (!study.failures.empty()) {
        for (const auto& f : study.failures)
            std::cerr << "failed: " << f.label << ": " << f.error << "\n";
        return 1;
    }
    return 0;
}

SpinSystem random_positioned_system(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 0.3);
    std::uniform_real_distribution<double> coord(-4.0, 4.0);
    SpinSystem sys;
    sys.n_spins = n;
    sys.j_hz = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double v = gauss(rng);
            sys.j_hz(i, j) = v;
            sys.j_hz(j, i) = v;
        }
    for (int k = 0; k < n; ++k) {
        for (int attempt = 0; attempt < 1000; ++attempt) {
            Eigen::Vector3d r(coord(rng), coord(rng), coord(rng));
            bool ok = true;
            for (const auto& prev : sys.positions)
                if ((r * constants::angstrom_m - prev).norm() < 2.5 * constants::angstrom_m)
                    ok = false;
            if (ok) {
                sys.positions.push_back(r * constants::angstrom_m);
                break;
            }
        }
    }
    if (static_cast<int>(sys.positions.size()) != n)
        throw std::runtime_error("failed to place spins with minimum separation");
    sys.label = "oracle-n" + std::to_string(n) + "-seed" + std::to_string(seed);
    return sys;
}

int cmd_oracle_check(int max_spins, std::uint64_t seed) {
    if (max_spins < 2 || max_spins > 3)
        throw std::invalid_argument("--max-spins must be 2 or 3 (direct-route oracle cap)");
    TimeGrid grid;
    grid.scheme = TimeGrid::Scheme::linear;
    for (int k = 0; k <= 40; ++k) grid.points.push_back(static_cast<double>(k) * 0.05);

    double worst_p = 0.0, worst_rho = 0.0;
    int cases = 0;
    for (int nA = 2; nA <= max_spins; ++nA)
        for (int nB = 2; nB <= max_spins; ++nB)
            for (const bool relaxed : {false, true}) {
                const std::uint64_t mix = derive_seed(
                    seed, static_cast<std::uint64_t>(nA * 16 + nB * 2 + (relaxed ? 1 : 0)));
                const SpinSystem sysA = random_positioned_system(nA, mix);
                const SpinSystem sysB = random_positioned_system(nB, derive_seed(mix, 1));
                DynamicsOptions opts;
                opts.with_relaxation = relaxed;
                const auto direct = joint_evolution_direct(sysA, sysB, 0, 0, grid, opts);
                const CorrelationTensor mA =
                    correlation_tensor(sysA, 0, 0, grid, opts);
                const CorrelationTensor mB =
                    correlation_tensor(sysB, 0, 0, grid, opts);
                const auto p = singlet_probability_factorized(mA, mB);
                const PairDensity pd = reduced_pair_density(mA, mB);
                for (std::size_t i = 0; i < grid.points.size(); ++i) {
                    worst_p = std::max(worst_p, std::abs(p[i] - direct.p[i]));
                    worst_rho = std::max(
                        worst_rho,
                        (pd.rho[i] - direct.rho_pair[i]).cwiseAbs().maxCoeff());
                }
                ++cases;
            }

    // cross-method agreement of the generic propagators
    const SpinSystem sys = random_positioned_system(2, derive_seed(seed, 99));
    DynamicsOptions opts;
    opts.with_relaxation = true;
    const SuperOp gamma = relaxation_superop(sys, MechanismSet::dipolar_only(),
                                             default_relaxation_grid());
    const Liouvillian L =
        build_liouvillian(build_coherent_hamiltonian(sys), &gamma);
    Mat x0 = Mat(singlet_projector(2, 0, 1));
    x0 /= x0.trace();
    TimeGrid short_grid;
    short_grid.scheme = TimeGrid::Scheme::linear;
    for (int k = 0; k <= 10; ++k) short_grid.points.push_back(static_cast<double>(k) * 0.1);
    const auto eig = propagate(L, x0, short_grid, PropagationMethod::eigendecomposition);
    const auto kry = propagate(L, x0, short_grid, PropagationMethod::krylov_expm);
    double worst_prop = 0.0;
    for (std::size_t i = 0; i < short_grid.points.size(); ++i)
        worst_prop = std::max(
            worst_prop, (eig.trajectory[i] - kry.trajectory[i]).cwiseAbs().maxCoeff());

    std::cout << "cases: " << cases << "\n";
    std::cout << "factorized_vs_direct_p_max: " << format_double(worst_p) << "\n";
    std::cout << "factorized_vs_direct_rho_max: " << format_double(worst_rho) << "\n";
    std::cout << "eig_vs_krylov_max: " << format_double(worst_prop) << "\n";
    const bool ok = worst_p < 1e-10 && worst_rho < 1e-10 && worst_prop < 1e-8;
    std::cout << (ok ? "OK" : "FAIL") << "\n";
    return ok ? 0 : 1;
}

int cmd_freqbound(std::int64_t levels) {
    std::cout << unique_frequency_bound(levels) << "\n";
    return 0;
}

int cmd_diffusion(double d, double length) {
    const double t = diffusion_traversal_time(d, length);
    std::cout << "t_s: " << format_double(t) << "\n";
    std::cout << "t_hours: " << format_double(t / 3600.0) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"singlet-order spin dynamics for coupled nuclear-spin clusters"};
    app.require_subcommand(1);

    RunFlags flags;
    std::string path, out;
    bool no_concurrence = false;
    double threshold = 0.5;
    double k_rate = constants::default_yield_rate_per_s;
    double horizon = constants::default_yield_horizon_s;
    std::vector<int> sizes{2, 3, 4, 5, 6};
    int samples = 50;
    std::uint64_t seed = 42;
    double normalization = 1.0;
    std::string scope = "all_pairs";
    std::vector<double> quantiles{0.5};
    int max_spins = 3;
    std::int64_t levels = 0;
    double diff_d = 0.0, diff_len = 0.0;

    auto* simulate = app.add_subcommand("simulate", "singlet probability and concurrence series");
    simulate->add_option("structure", path, "structure file")->required();
    add_run_flags(simulate, flags);
    simulate->add_option("--out", out, "output series file");
    simulate->add_flag("--no-concurrence", no_concurrence, "skip the concurrence column");

    auto* crossings = app.add_subcommand("crossings", "threshold crossing report");
    crossings->add_option("input", path, "series or structure file")->required();
    add_run_flags(crossings, flags);
    crossings->add_option("--threshold", threshold, "probability threshold");

    auto* yield_cmd = app.add_subcommand("yield", "exponential-readout entanglement yield");
    yield_cmd->add_option("input", path, "series or structure file")->required();
    add_run_flags(yield_cmd, flags);
    yield_cmd->add_option("--k", k_rate, "readout rate 1/s");
    yield_cmd->add_option("--horizon", horizon, "integration horizon s");

    auto* transfer = app.add_subcommand("transfer", "cross-pair transfer grid");
    transfer->add_option("structure", path, "structure file")->required();
    add_run_flags(transfer, flags);
    transfer->add_option("--out", out, "output directory");

    auto* batch = app.add_subcommand("batch", "batch summary over a structure directory");
    batch->add_option("dir", path, "directory of structure files")->required();
    add_run_flags(batch, flags);
    batch->add_option("--quantiles", quantiles, "crossing-time quantiles");
    batch->add_option("--out", out, "summary output file");

    auto* ensemble = app.add_subcommand("ensemble", "yield vs. size over random ensembles");
    ensemble->add_option("--sizes", sizes, "spin counts");
    ensemble->add_option("--samples", samples, "samples per size");
    ensemble->add_option("--seed", seed, "ensemble seed");
    ensemble->add_option("--normalization", normalization, "coupling norm in Hz");
    ensemble->add_option("--scope", scope, "all_pairs|per_row")
        ->check(CLI::IsMember({"all_pairs", "per_row"}));
    add_run_flags(ensemble, flags);
    ensemble->add_option("--out", out, "table output file");

    auto* freqbound = app.add_subcommand("freqbound", "distinct level-pair frequency bound");
    freqbound->add_option("--levels", levels, "level count")->required();

    auto* oracle = app.add_subcommand("oracle-check", "factorized vs. direct validation suite");
    oracle->add_option("--max-spins", max_spins, "spins per molecule (2 or 3)");
    oracle->add_option("--seed", seed, "case seed");

    auto* diffusion = app.add_subcommand("diffusion", "diffusive traversal time");
    diffusion->add_option("--d", diff_d, "diffusion coefficient m^2/s")->required();
    diffusion->add_option("--length", diff_len, "distance m")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) return cmd_simulate(path, flags, out, no_concurrence);
        if (crossings->parsed()) return cmd_crossings(path, flags, threshold);
        if (yield_cmd->parsed()) return cmd_yield(path, flags, k_rate, horizon);
        if (transfer->parsed()) return cmd_transfer(path, flags, out);
        if (batch->parsed()) return cmd_batch(path, flags, quantiles, out);
        if (ensemble->parsed())
            return cmd_ensemble(sizes, samples, seed, normalization, scope, flags, out);
        if (freqbound->parsed()) return cmd_freqbound(levels);
        if (oracle->parsed()) return cmd_oracle_check(max_spins, seed);
        if (diffusion->parsed()) return cmd_diffusion(diff_d, diff_len);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
