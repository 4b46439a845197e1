#pragma once

// Discounted infinite-horizon SDDP on a stationary process. One shared cut
// pool approximates the cost-to-go of every stage; stage LPs weigh it by the
// discount factor. Each iteration draws its forward horizon from a geometric
// distribution with success probability 1 - gamma.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "msplab/cuts.hpp"
#include "msplab/errors.hpp"
#include "msplab/results.hpp"
#include "msplab/sddp.hpp"

namespace msplab {

inline void check_discount(double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("discount factor must lie strictly between 0 and 1");
}

/// Longest horizon the sampler returns: 50 / (1 - gamma), rounded up.
inline std::size_t horizon_cap(double gamma) {
    return static_cast<std::size_t>(std::ceil(50.0 / (1.0 - gamma) - 1e-9));
}

/// P(T = k) = (1 - gamma) gamma^(k-1), k >= 1, truncated at horizon_cap.
template <class Rng>
std::size_t sample_horizon(double gamma, Rng& rng) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("discount factor must lie in [0, 1)");
    if (gamma == 0.0) return 1;
    std::geometric_distribution<std::size_t> geo(1.0 - gamma);
    return std::min(geo(rng) + 1, horizon_cap(gamma));
}

struct StationaryModel {
    StageModel model;
    double gamma = 0.9;

    StationaryModel(StageModel m, double g) : model(std::move(m)), gamma(g) { check_discount(gamma); }
};

inline CutPool make_stationary_pool(const StationaryModel& sm, double floor = 0.0) {
    return CutPool(1, sm.model.stage.state_dim(), floor);
}

/// Solves the stage LP  f + gamma * Qcheck  at one state and realization.
inline StageResult stationary_stage(const StationaryModel& sm, const CutPool& pool, std::span<const double> state,
                                    const Realization& xi, std::vector<std::size_t>* active = nullptr) {
    return solve_stage(sm.model.stage, state, xi, pool.section(0), pool.floor(), sm.gamma, active);
}

inline double stationary_lower_bound(const StationaryModel& sm, const CutPool& pool, std::span<const double> state,
                                     const Realization& first) {
    return stationary_stage(sm, pool, state, first).value;
}

template <class Rng>
TrainReport train_stationary(const StationaryModel& sm, CutPool& pool, std::span<const double> initial_state,
                             const Realization& first, const TrainConfig& cfg, Rng& rng) {
    cfg.validate();
    if (pool.num_sections() != 1) throw ConfigError("a stationary pool has exactly one section");
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
    const auto& process = sm.model.process;

    TrainReport rep;
    std::vector<double> costs;
    std::vector<std::size_t> active;
    rep.reason = Termination::iterations;
    while (rep.iterations < cfg.max_iterations) {
        if (elapsed() >= cfg.time_limit_seconds) {
            rep.reason = Termination::time;
            break;
        }
        ++rep.iterations;
        for (std::size_t p = 0; p < cfg.forward_paths_per_iteration; ++p) {
            const std::size_t horizon = sample_horizon(sm.gamma, rng);
            std::vector<std::vector<double>> trial;
            std::vector<double> x(initial_state.begin(), initial_state.end());
            double cost = 0.0;
            for (std::size_t t = 1; t <= horizon; ++t) {
                const Realization& xi = t == 1 ? first : process[process.sample(rng)];
                auto r = stationary_stage(sm, pool, x, xi, &active);
                cost += r.immediate;
                x = r.state;
                trial.push_back(r.state);
            }
            costs.push_back(cost);
            for (std::size_t t = horizon; t >= 2; --t) {
                const auto& xt = trial[t - 2];
                Cut cut = expected_cut(sm.model, xt, pool.section(0), pool.floor(), sm.gamma, rep.iterations);
                rep.cuts_added += add_if_violated(pool, 0, std::move(cut), xt, cfg.cut_violation_tol);
            }
        }
        rep.lower_bounds.push_back(stationary_lower_bound(sm, pool, initial_state, first));
        if (stalled(rep.lower_bounds, cfg.stall_window, cfg.stall_rel_tol)) {
            rep.reason = Termination::stall;
            break;
        }
    }
    detail::finish_upper_bound(rep, costs, cfg.upper_bound_window);
    rep.wall_seconds = elapsed();
    return rep;
}

inline TrainReport train_stationary(const StationaryModel& sm, CutPool& pool, std::span<const double> initial_state,
                                    const Realization& first, const TrainConfig& cfg) {
    std::mt19937_64 rng(cfg.rng_seed);
    return train_stationary(sm, pool, initial_state, first, cfg, rng);
}

/// Greedy stationary policy along `path` (realization indices). Stage costs
/// are accrued undiscounted; z_bar is their plain average.
inline SimulationResult evaluate_stationary(const StationaryModel& sm, const CutPool& pool,
                                            const std::vector<std::size_t>& path,
                                            std::span<const double> initial_state) {
    if (pool.num_sections() != 1) throw ConfigError("a stationary pool has exactly one section");
    if (pool.state_dim() != sm.model.stage.state_dim())
        throw ConfigError("cut pool dimension does not match the model state dimension");
    const auto start = std::chrono::steady_clock::now();
    SimulationResult res;
    double running = 0.0;
    std::vector<double> x(initial_state.begin(), initial_state.end());
    std::vector<std::size_t> active;
    for (std::size_t k : path) {
        const auto t0 = std::chrono::steady_clock::now();
        auto r = stationary_stage(sm, pool, x, sm.model.process[k], &active);
        x = r.state;
        RollRecord rec;
        rec.tau = 0;
        rec.stage_cost = r.immediate;
        rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        record_roll(res, rec, running);
    }
    finalize(res);
    res.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

}  // namespace msplab
