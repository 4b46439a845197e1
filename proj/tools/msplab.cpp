// msplab command-line front end.
//
//   msplab gen       --plants 1 --demand 1000 --realizations 5 -o inst.json
//   msplab fit       --instance inst.json --w 5 --w 10 --w 15 --samples 50
//   msplab simulate  --instance inst.json --policy static --tau 4 --T 200
//   msplab bound     --kappa 53000 --gamma 0.1 --gamma 0.99
//   msplab train-stationary --instance inst.json --gamma 0.9 -o pool.txt
//
// Exit codes: 0 ok, 2 configuration error, 3 numerical failure, 4 I/O error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "msplab/cuts.hpp"
#include "msplab/errors.hpp"
#include "msplab/horizon.hpp"
#include "msplab/hpop.hpp"
#include "msplab/results.hpp"
#include "msplab/rolling.hpp"
#include "msplab/scan.hpp"
#include "msplab/stationary.hpp"

namespace fs = std::filesystem;
using namespace msplab;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

std::string default_out_dir() {
    const char* env = std::getenv("MSPLAB_OUT_DIR");
    return env && *env ? env : ".";
}

// Relative outputs go under the output directory, which is created on demand.
std::string out_path(const std::string& dir, const std::string& name) {
    fs::path p(name);
    if (p.is_relative()) p = fs::path(dir) / p;
    std::error_code ec;
    if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + p.parent_path().string() + ": " + ec.message());
    return p.string();
}

std::string fmt(double v, int prec = 10) {
    std::ostringstream s;
    s << std::setprecision(prec) << v;
    return s.str();
}

std::string join(const std::vector<std::string>& args) {
    std::string s;
    for (const auto& a : args) s += (s.empty() ? "" : " ") + a;
    return s;
}

struct Common {
    std::string out_dir = default_out_dir();
    std::vector<std::string> argv;
};

// ---------------------------------------------------------------------------

struct GenOpts {
    HpopPreset preset;
    std::string output;
};

void run_gen(const GenOpts& o, const Common& c) {
    auto inst = build_hpop(o.preset);
    const std::string name = o.output.empty() ? "hpop_H" + std::to_string(o.preset.plants) + "_d" +
                                                    fmt(o.preset.demand) + "_X" +
                                                    std::to_string(o.preset.realizations) + ".json"
                                              : o.output;
    const auto path = out_path(c.out_dir, name);
    save_instance(inst, path);
    std::cout << "instance: " << path << "\n"
              << "plants: " << inst.hydro.size() << "  reservoirs: " << inst.reservoir_plants().size()
              << "  realizations: " << inst.inflow.size() << "  demand: " << inst.demand << "\n";
}

// ---------------------------------------------------------------------------

struct FitOpts {
    std::string instance;
    std::vector<std::size_t> windows{10};
    std::size_t samples = 50;
    std::size_t tau_max = 16;
    double epsilon = 1e-5;
    std::uint64_t seed = 0;
    std::size_t stall = 50;
    std::size_t jobs = 1;
    std::size_t max_pieces = 3;
    std::string prefix = "map";
    std::string scan_file = "scan.csv";
};

void run_fit(const FitOpts& o, const Common& c) {
    const auto inst = load_instance(o.instance);
    const auto model = StageModel::from_instance(inst);
    ScanConfig cfg;
    cfg.samples = o.samples;
    cfg.tau_max = o.tau_max;
    cfg.epsilon = o.epsilon;
    cfg.seed = o.seed;
    cfg.train.stall_window = o.stall;
    cfg.train.rng_seed = o.seed;
    for (auto w : o.windows) {
        cfg.w = w;
        cfg.validate();
    }
    if (o.samples < 2) throw ConfigError("regression needs at least two scan samples (got " + std::to_string(o.samples) + ")");

    const auto rows = run_scan(model, o.windows, cfg, o.jobs);
    const auto scan_path = out_path(c.out_dir, o.scan_file);
    save_scan(rows, o.windows, scan_path);
    double scan_ms = 0.0;
    for (const auto& r : rows) scan_ms += r.wall_ms;
    std::cout << "scan: " << scan_path << "  (" << rows.size() << " samples, " << fmt(scan_ms / 1000.0, 4)
              << " s)\n";
    std::cout << "w,map,pieces,r2_avg\n";
    for (std::size_t k = 0; k < o.windows.size(); ++k) {
        const auto map = fit_horizon_map(scan_points(rows, k), o.max_pieces);
        const auto map_path = out_path(c.out_dir, o.prefix + "_w" + std::to_string(o.windows[k]) + ".json");
        save_horizon_map(map, map_path);
        std::cout << o.windows[k] << ',' << map_path << ',' << map.pieces.size() << ',' << fmt(map.r2_avg, 6) << "\n";
        for (const auto& p : map.pieces)
            std::cout << "  [" << fmt(p.lo, 8) << ", " << (std::isinf(p.hi) ? std::string("inf") : fmt(p.hi, 8))
                      << ")  theta0=" << fmt(p.theta0, 6) << "  theta1=" << fmt(p.theta1, 6)
                      << "  r2=" << fmt(p.r2, 6) << "  n=" << p.count << "\n";
    }
}

// ---------------------------------------------------------------------------

struct SimOpts {
    std::string instance;
    std::string policy = "static";
    std::size_t tau = 4;
    std::string map;
    std::size_t tau_max = 16;
    std::string pool;
    std::optional<double> gamma;
    std::size_t T = 200;
    std::uint64_t path_seed = 42;
    std::uint64_t seed = 7;
    std::optional<std::size_t> fixed_effort;
    std::string baseline;
    std::string output = "result.csv";
};

// gamma recorded next to a stationary pool snapshot, if any
std::optional<double> snapshot_gamma(const std::string& pool_path) {
    const auto mp = manifest_path(pool_path);
    if (!fs::exists(mp)) return std::nullopt;
    const auto m = load_manifest(mp);
    auto it = m.overrides.find("gamma");
    if (it == m.overrides.end()) return std::nullopt;
    return std::stod(it->second);
}

void run_simulate(const SimOpts& o, const Common& c) {
    const auto inst = load_instance(o.instance);
    const auto model = StageModel::from_instance(inst);
    if (o.T == 0) throw ConfigError("path length T must be at least 1");
    const auto path = sample_path(model.process, o.T, o.path_seed);

    RunManifest man;
    man.command = join(c.argv);
    man.instance = o.instance;
    man.seeds = {{"path", o.path_seed}, {"train", o.seed}};
    man.output_dir = c.out_dir;

    SimulationResult res;
    if (o.policy == "stationary") {
        if (o.pool.empty()) throw ConfigError("--policy stationary needs --pool (see train-stationary)");
        const auto gamma = o.gamma ? o.gamma : snapshot_gamma(o.pool);
        if (!gamma) throw ConfigError("--gamma not given and not recorded with the pool");
        const auto pool = load_cut_pool(o.pool);
        man.policy = PolicySpec::stationary(*gamma).describe();
        man.overrides["pool"] = o.pool;
        res = simulate_stationary(model, *gamma, pool, path);
    } else {
        PolicySpec spec;
        if (o.policy == "static") {
            spec = PolicySpec::fixed(o.tau);
        } else if (o.policy == "dynamic") {
            if (o.map.empty()) throw ConfigError("--policy dynamic needs --map");
            spec = PolicySpec::dynamic(load_horizon_map(o.map), o.tau_max);
            man.overrides["map"] = o.map;
        } else {
            throw ConfigError("unknown policy '" + o.policy + "' (static, dynamic, stationary)");
        }
        TrainConfig tc;
        tc.rng_seed = o.seed;
        EffortSchedule sched = o.fixed_effort ? EffortSchedule::fixed(*o.fixed_effort) : EffortSchedule{};
        if (o.fixed_effort) man.overrides["fixed_effort"] = std::to_string(*o.fixed_effort);
        man.policy = spec.describe();
        res = simulate(model, spec, path, tc, sched);
    }
    man.overrides["T"] = std::to_string(o.T);

    std::optional<double> gap, ratio;
    if (!o.baseline.empty()) {
        const auto ref = load_result(o.baseline);
        gap = relative_gap(res.z_bar, ref.z_bar);
        ratio = ref.total_seconds > 0.0 ? res.total_seconds / ref.total_seconds : 0.0;
        man.overrides["baseline"] = o.baseline;
        man.summary["gap"] = *gap;
        man.summary["time_ratio"] = *ratio;
        man.summary["baseline_z_bar"] = ref.z_bar;
    }
    man.summary["wall_seconds"] = res.total_seconds;
    const auto out = out_path(c.out_dir, o.output);
    save_result(res, man, out);

    std::size_t hmin = 0, hmax = 0;
    for (auto h : res.horizons()) {
        hmin = hmin == 0 ? h : std::min(hmin, h);
        hmax = std::max(hmax, h);
    }
    std::cout << "policy: " << man.policy << "\n"
              << "result: " << out << "\n"
              << "z_bar: " << fmt(res.z_bar) << "  std: " << fmt(res.cost_std, 6) << "\n"
              << "time_s: " << fmt(res.total_seconds, 4) << "  sddp_iterations: " << res.total_iterations() << "\n";
    if (o.policy != "stationary") std::cout << "tau range: [" << hmin << ", " << hmax << "]\n";
    if (gap) std::cout << "gap: " << fmt(*gap, 6) << "  time_ratio: " << fmt(*ratio, 6) << "\n";
}

// ---------------------------------------------------------------------------

struct BoundOpts {
    std::optional<double> kappa;
    bool compute = false;
    std::string instance;
    std::vector<double> gammas{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99};
    std::optional<double> epsilon;
    std::string regime = "general";
    std::string output;
};

void run_bound(const BoundOpts& o, const Common& c) {
    if (!o.kappa && !o.compute) throw ConfigError("give --kappa or --compute-kappa");
    const CostRegime regime = o.regime == "general"       ? CostRegime::general
                              : o.regime == "nonpositive" ? CostRegime::nonpositive
                                                          : throw ConfigError("regime must be general or nonpositive");
    const double eps = o.epsilon.value_or(1e-5);
    std::vector<std::pair<std::string, double>> kappas;
    if (o.kappa) kappas.push_back({"given", *o.kappa});
    if (o.compute) {
        if (o.instance.empty()) throw ConfigError("--compute-kappa needs --instance");
        kappas.push_back({"computed", compute_kappa(load_instance(o.instance))});
    }
    if (!o.epsilon) std::cout << "# epsilon = 1e-05 is an inferred default, not a printed value\n";
    for (const auto& [src, k] : kappas) std::cout << "# kappa (" << src << ") = " << fmt(k, 12) << "\n";

    std::ostringstream table;
    table << "kappa_source,kappa,gamma,epsilon,tau_star,tau_ceil,bound_at_ceil\n";
    for (const auto& [src, k] : kappas)
        for (double g : o.gammas) {
            const double t = epsilon_sufficient_horizon({k, g, eps, regime});
            const double tc = std::ceil(t);
            table << src << ',' << fmt(k, 12) << ',' << fmt(g) << ',' << fmt(eps) << ',' << std::fixed
                  << std::setprecision(2) << t << std::defaultfloat << ',' << fmt(tc) << ','
                  << fmt(suboptimality_bound(tc, g, k, regime), 6) << '\n';
        }
    std::cout << table.str();
    if (!o.output.empty()) {
        const auto path = out_path(c.out_dir, o.output);
        std::ofstream out(path);
        if (!out) throw IoError("cannot open " + path + " for writing");
        out << table.str();
        RunManifest man;
        man.command = join(c.argv);
        man.instance = o.instance;
        man.output_dir = c.out_dir;
        man.overrides["epsilon"] = fmt(eps);
        man.overrides["epsilon_inferred"] = o.epsilon ? "false" : "true";
        man.overrides["regime"] = o.regime;
        save_manifest(man, manifest_path(path));
    }
}

// ---------------------------------------------------------------------------

struct StatOpts {
    std::string instance;
    double gamma = 0.9;
    std::uint64_t seed = 0;
    std::size_t stall = 100;
    std::size_t max_iterations = 100000;
    double time_limit = 10800.0;
    std::string output = "stationary_pool.txt";
};

void run_train_stationary(const StatOpts& o, const Common& c) {
    check_discount(o.gamma);
    const auto inst = load_instance(o.instance);
    StationaryModel sm(StageModel::from_instance(inst), o.gamma);
    TrainConfig cfg;
    cfg.rng_seed = o.seed;
    cfg.stall_window = o.stall;
    cfg.max_iterations = o.max_iterations;
    cfg.time_limit_seconds = o.time_limit;
    CutPool pool = make_stationary_pool(sm);
    const auto& first = sm.model.process[0];
    const auto rep = train_stationary(sm, pool, sm.model.initial_storage, first, cfg);

    const auto path = out_path(c.out_dir, o.output);
    save_cut_pool(path, pool);
    RunManifest man;
    man.command = join(c.argv);
    man.instance = o.instance;
    man.policy = PolicySpec::stationary(o.gamma).describe();
    man.seeds = {{"train", o.seed}};
    man.overrides = {{"gamma", fmt(o.gamma, 17)}, {"stall_window", std::to_string(o.stall)}};
    man.output_dir = c.out_dir;
    man.summary = {{"iterations", double(rep.iterations)},
                   {"lower_bound", rep.lower_bounds.empty() ? 0.0 : rep.lower_bounds.back()},
                   {"cuts", double(pool.total_cuts())}};
    save_manifest(man, manifest_path(path));
    std::cout << "pool: " << path << "\n"
              << "iterations: " << rep.iterations << "  reason: " << to_string(rep.reason)
              << "  cuts: " << pool.total_cuts() << "\n"
              << "lower_bound: " << fmt(rep.lower_bounds.empty() ? 0.0 : rep.lower_bounds.back()) << "\n"
              << "time_s: " << fmt(rep.wall_seconds, 4) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rolling-horizon and SDDP toolkit for hydrothermal planning"};
    app.require_subcommand(1);
    app.fallthrough();
    Common common;
    common.argv.push_back(fs::path(argv[0]).filename().string());
    for (int i = 1; i < argc; ++i) common.argv.push_back(argv[i]);
    app.add_option("--out-dir", common.out_dir, "Directory for relative output paths (default $MSPLAB_OUT_DIR or .)");

    GenOpts gen;
    auto* g = app.add_subcommand("gen", "Write a benchmark instance file");
    g->add_option("--plants", gen.preset.plants, "Hydro plants: 1, 3 or 6");
    g->add_option("--demand", gen.preset.demand, "Demand per stage");
    g->add_option("--realizations", gen.preset.realizations, "Inflow realizations: 5 or 12");
    g->add_option("--c0", gen.preset.c0, "Inflow-to-storage scale");
    g->add_flag("--strict-presets", gen.preset.strict, "Reject demands outside the benchmark grid");
    g->add_option("-o,--output", gen.output, "Instance file");

    FitOpts fit;
    auto* f = app.add_subcommand("fit", "Stability scan and horizon-map regression");
    f->add_option("--instance", fit.instance)->required();
    f->add_option("--w", fit.windows, "Stability window(s); repeat for several")->take_all();
    f->add_option("--samples,-N", fit.samples);
    f->add_option("--tau-max", fit.tau_max);
    f->add_option("--epsilon", fit.epsilon);
    f->add_option("--seed", fit.seed);
    f->add_option("--stall", fit.stall, "SDDP stall window per scanned horizon");
    f->add_option("--jobs", fit.jobs);
    f->add_option("--max-pieces", fit.max_pieces);
    f->add_option("--prefix", fit.prefix, "Map files are <prefix>_w<w>.json");
    f->add_option("--scan-file", fit.scan_file);

    SimOpts sim;
    auto* s = app.add_subcommand("simulate", "Evaluate a policy along a sampled path");
    s->add_option("--instance", sim.instance)->required();
    s->add_option("--policy", sim.policy, "static, dynamic or stationary");
    s->add_option("--tau", sim.tau);
    s->add_option("--map", sim.map);
    s->add_option("--tau-max", sim.tau_max);
    s->add_option("--pool", sim.pool, "Stationary pool snapshot");
    s->add_option("--gamma", sim.gamma);
    s->add_option("--T", sim.T, "Path length");
    s->add_option("--path-seed", sim.path_seed);
    s->add_option("--seed", sim.seed, "SDDP seed");
    s->add_option("--fixed-effort", sim.fixed_effort, "Same stall window at every roll");
    s->add_option("--baseline", sim.baseline, "Reference result table for gap and time ratio");
    s->add_option("-o,--output", sim.output);

    BoundOpts bound;
    auto* b = app.add_subcommand("bound", "Epsilon-sufficient horizons and suboptimality bounds");
    b->add_option("--kappa", bound.kappa);
    b->add_flag("--compute-kappa", bound.compute);
    b->add_option("--instance", bound.instance);
    b->add_option("--gamma", bound.gammas)->take_all();
    b->add_option("--epsilon", bound.epsilon);
    b->add_option("--regime", bound.regime, "general or nonpositive");
    b->add_option("-o,--output", bound.output);

    StatOpts stat;
    auto* t = app.add_subcommand("train-stationary", "Train the discounted stationary model");
    t->add_option("--instance", stat.instance)->required();
    t->add_option("--gamma", stat.gamma);
    t->add_option("--seed", stat.seed);
    t->add_option("--stall", stat.stall);
    t->add_option("--max-iterations", stat.max_iterations);
    t->add_option("--time-limit", stat.time_limit);
    t->add_option("-o,--output", stat.output);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*g) run_gen(gen, common);
        else if (*f) run_fit(fit, common);
        else if (*s) run_simulate(sim, common);
        else if (*b) run_bound(bound, common);
        else if (*t) run_train_stationary(stat, common);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const SchemaError& e) {
        std::cerr << "bad file: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return 0;
}
