#pragma once

// Offline horizon learning: for sampled system states, grow the horizon until
// the first-stage decision stops changing over a window of w horizons, then
// regress the resulting horizons on phi1. Also the zero-state cost bound kappa.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "msplab/errors.hpp"
#include "msplab/horizon.hpp"
#include "msplab/hpop.hpp"
#include "msplab/sddp.hpp"

namespace msplab {

struct ScanConfig {
    std::size_t samples = 50;
    double epsilon = 1e-5;
    std::size_t w = 10;
    std::size_t tau_max = 16;
    std::uint64_t seed = 0;
    TrainConfig train;

    ScanConfig() { train.stall_window = 50; }

    void validate() const {
        if (w == 0) throw ConfigError("stability window w must be at least 1");
        if (tau_max <= w) throw ConfigError("tau_max must exceed w");
        if (!(epsilon > 0.0)) throw ConfigError("scan tolerance must be positive");
        train.validate();
    }
};

struct ScanState {
    std::vector<double> storage;
    std::size_t realization = 0;
    double phi1 = 0.0;
};

/// Storage uniform on each state column's bounds, plus one realization drawn
/// from the process.
template <class Rng>
ScanState draw_scan_state(const StageModel& model, Rng& rng) {
    ScanState s;
    const auto& lp = model.stage.base_lp;
    for (auto c : model.stage.state_extract) {
        const double lo = lp.var_lower[c], hi = lp.var_upper[c];
        if (!std::isfinite(hi)) throw ConfigError("state sampling needs finite storage bounds");
        std::uniform_real_distribution<double> u(lo, hi);
        s.storage.push_back(u(rng));
    }
    s.realization = model.process.sample(rng);
    s.phi1 = make_state(model.stage, s.storage, model.process[s.realization]).energy_potential;
    return s;
}

/// ||a - b|| / max(1, ||b||)
inline double relative_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += (a[i] - b[i]) * (a[i] - b[i]);
        nb += b[i] * b[i];
    }
    return std::sqrt(d) / std::max(1.0, std::sqrt(nb));
}

/// First tau with ||x^tau - x^{tau-w}|| rel < eps gives tau - w; tau_max when
/// no such tau <= decisions.size() exists. decisions[k] is x_1 at horizon k+1.
inline std::size_t stable_horizon(const std::vector<std::vector<double>>& decisions, std::size_t w, double eps,
                                  std::size_t tau_max) {
    for (std::size_t tau = w + 1; tau <= std::min(tau_max, decisions.size()); ++tau)
        if (relative_distance(decisions[tau - 1], decisions[tau - 1 - w]) < eps) return tau - w;
    return tau_max;
}

/// Stability test for several windows at once. Horizons are trained in
/// increasing order, each warm-started from the previous pool shifted by one
/// stage; the scan stops once every window has triggered or tau_max is hit.
inline std::vector<std::size_t> stability_scan(const StageModel& model, const ScanState& state,
                                               const std::vector<std::size_t>& windows, const ScanConfig& cfg,
                                               std::uint64_t stream = 0) {
    if (windows.empty()) throw ConfigError("no stability windows requested");
    for (auto w : windows) {
        ScanConfig c = cfg;
        c.w = w;
        c.validate();
    }
    std::seed_seq seq{cfg.seed, stream};
    std::mt19937_64 rng(seq);
    const Realization& xi = model.process[state.realization];

    std::vector<std::size_t> result(windows.size(), 0);
    std::vector<char> done(windows.size(), 0);
    std::vector<std::vector<double>> decisions;
    CutPool pool = make_pool(model, 1);
    for (std::size_t tau = 1; tau <= cfg.tau_max; ++tau) {
        if (tau > 1) pool.extend_front();
        train(model, pool, tau, state.storage, xi, cfg.train, rng);
        decisions.push_back(first_stage(model, pool, tau, state.storage, xi).decision);
        bool all = true;
        for (std::size_t k = 0; k < windows.size(); ++k) {
            if (!done[k] && tau > windows[k] &&
                relative_distance(decisions[tau - 1], decisions[tau - 1 - windows[k]]) < cfg.epsilon) {
                result[k] = tau - windows[k];
                done[k] = 1;
            }
            all = all && done[k];
        }
        if (all) return result;
    }
    for (std::size_t k = 0; k < windows.size(); ++k)
        if (!done[k]) result[k] = cfg.tau_max;
    return result;
}

inline std::size_t stability_scan(const StageModel& model, const ScanState& state, const ScanConfig& cfg,
                                  std::uint64_t stream = 0) {
    return stability_scan(model, state, std::vector<std::size_t>{cfg.w}, cfg, stream)[0];
}

struct ScanRow {
    std::size_t n = 0;
    double phi1 = 0.0;
    std::vector<std::size_t> tau_star;  // one per window
    double wall_ms = 0.0;
};

/// Draws cfg.samples states and scans each. Samples run on up to `jobs`
/// threads; results keep sample order.
inline std::vector<ScanRow> run_scan(const StageModel& model, const std::vector<std::size_t>& windows,
                                     const ScanConfig& cfg, std::size_t jobs = 1) {
    if (cfg.samples == 0) throw ConfigError("scan needs at least one sample");
    std::mt19937_64 rng(cfg.seed);
    std::vector<ScanState> states;
    for (std::size_t n = 0; n < cfg.samples; ++n) states.push_back(draw_scan_state(model, rng));

    std::vector<ScanRow> rows(cfg.samples);
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(cfg.samples);
    auto worker = [&] {
        for (std::size_t n = next++; n < cfg.samples; n = next++) {
            const auto t0 = std::chrono::steady_clock::now();
            try {
                rows[n].tau_star = stability_scan(model, states[n], windows, cfg, n + 1);
            } catch (...) {
                errors[n] = std::current_exception();
            }
            rows[n].n = n + 1;
            rows[n].phi1 = states[n].phi1;
            rows[n].wall_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        }
    };
    jobs = std::max<std::size_t>(1, std::min(jobs, cfg.samples));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return rows;
}

inline std::vector<HorizonPoint> scan_points(const std::vector<ScanRow>& rows, std::size_t window_index) {
    std::vector<HorizonPoint> pts;
    for (const auto& r : rows) pts.push_back({r.phi1, static_cast<double>(r.tau_star.at(window_index))});
    return pts;
}

/// Scan file: w,n,phi1,tau_star,wall_ms (one row per window and sample).
inline void save_scan(const std::vector<ScanRow>& rows, const std::vector<std::size_t>& windows,
                      const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "w,n,phi1,tau_star,wall_ms\n" << std::setprecision(17);
    for (std::size_t k = 0; k < windows.size(); ++k)
        for (const auto& r : rows)
            out << windows[k] << ',' << r.n << ',' << r.phi1 << ',' << r.tau_star[k] << ',' << std::setprecision(6)
                << r.wall_ms << std::setprecision(17) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------

/// Optimal single-stage cost with every s_h = 0 (empty reservoirs, no inflow)
/// and no cost-to-go.
inline double compute_kappa(const HPOPInstance& inst) {
    const auto tmpl = make_stage_template(inst);
    std::vector<double> storage(tmpl.state_dim(), 0.0);
    for (std::size_t k = 0; k < storage.size(); ++k)
        storage[k] = tmpl.base_lp.var_lower[tmpl.state_extract[k]];
    Realization dry{0, 1.0, std::vector<double>(inst.hydro.size(), 0.0)};
    auto lp = instantiate_stage(tmpl, storage, dry, std::span<const Cut>{}, 0.0, 1.0);
    auto sol = solve(lp);
    if (!sol.optimal()) throw NumericalError("zero-state stage LP is not solvable");
    return sol.objective;
}

}  // namespace msplab
