#pragma once

// Finite-horizon SDDP with single aggregated cuts.
//
// A horizon-T problem has stages 1..T; stage 1 sees a known realization and
// a known incoming state, stages 2..T draw from the process. The pool holds
// T-1 sections, section t-2 approximating the expected cost-to-go of stage t.
// Beyond stage T the cost-to-go is zero.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "msplab/cuts.hpp"
#include "msplab/errors.hpp"
#include "msplab/hpop.hpp"
#include "msplab/lp.hpp"
#include "msplab/model.hpp"

namespace msplab {

/// Stage template plus the stage-wise independent process it is driven by.
struct StageModel {
    StageTemplate stage;
    DiscreteProcess process;
    std::vector<double> initial_storage;

    static StageModel from_instance(const HPOPInstance& inst) {
        return {make_stage_template(inst), inst.inflow, inst.initial_storage()};
    }
};

// ---------------------------------------------------------------------------
// Stage solves.

struct StageResult {
    LPSolution lp;              // solution of the final (reduced) LP
    double value = 0.0;         // f(x) + discount * theta
    double immediate = 0.0;     // f(x)
    double theta = 0.0;
    std::vector<double> state;  // post-decision state
    std::vector<double> base_duals;
    std::vector<double> decision;  // base columns only
};

/// Solves  min f(x) + discount * max(floor, cuts(Sx))  over the stage feasible
/// set. Cut rows are added lazily: the most violated one is appended until
/// none is violated, which gives the optimum of the LP holding every cut row.
/// `active` carries cut indices between calls as a warm guess and is replaced
/// by the cuts binding at the returned solution.
inline StageResult solve_stage(const StageTemplate& tmpl, std::span<const double> incoming, const Realization& xi,
                               std::span<const Cut> cuts, double floor, double discount,
                               std::vector<std::size_t>* active = nullptr) {
    std::vector<std::size_t> chosen;
    if (active)
        for (auto k : *active)
            if (k < cuts.size()) chosen.push_back(k);
    std::vector<Cut> rows;
    const std::size_t n0 = tmpl.num_columns();
    for (;;) {
        rows.clear();
        for (auto k : chosen) rows.push_back(cuts[k]);
        auto lp = instantiate_stage(tmpl, incoming, xi, rows, floor, discount);
        LPSolution sol = solve(lp);
        if (sol.status == LPStatus::infeasible)
            throw NumericalError("stage LP infeasible (relatively complete recourse violated)");
        if (sol.status == LPStatus::unbounded) throw NumericalError("stage LP unbounded");

        StageResult r;
        r.theta = sol.primal[n0];
        r.state = post_decision_state(tmpl, sol.primal);
        const double tol = 1e-9 * std::max(1.0, std::abs(r.theta));
        std::size_t worst = cuts.size();
        double worst_gap = tol;
        for (std::size_t k = 0; k < cuts.size(); ++k) {
            const double gap = cuts[k].evaluate(r.state) - r.theta;
            if (gap > worst_gap) {
                worst_gap = gap;
                worst = k;
            }
        }
        if (worst < cuts.size()) {
            chosen.push_back(worst);
            continue;
        }
        r.immediate = stage_cost(tmpl, sol.primal);
        r.value = sol.objective;
        r.base_duals.assign(sol.duals.begin(), sol.duals.begin() + static_cast<std::ptrdiff_t>(tmpl.base_lp.num_rows()));
        r.decision.assign(sol.primal.begin(), sol.primal.begin() + static_cast<std::ptrdiff_t>(n0));
        if (active) {
            active->clear();
            for (auto k : chosen)
                if (cuts[k].evaluate(r.state) >= r.theta - 1e-7 * std::max(1.0, std::abs(r.theta)))
                    active->push_back(k);
        }
        r.lp = std::move(sol);
        return r;
    }
}

/// Subgradient of the stage value with respect to the incoming state:
/// the rhs is b - B x_prev, so g = -B' pi.
inline std::vector<double> state_subgradient(const StageTemplate& tmpl, std::span<const double> base_duals) {
    std::vector<double> g(tmpl.state_dim(), 0.0);
    for (std::size_t i = 0; i < base_duals.size(); ++i)
        for (std::size_t k = 0; k < g.size(); ++k) g[k] -= tmpl.linking_matrix(i, k) * base_duals[i];
    return g;
}

/// Cost-to-go cuts seen by stage t (1-based) of a horizon-T problem.
inline std::span<const Cut> stage_cuts(const CutPool& pool, std::size_t t, std::size_t horizon) {
    if (t >= horizon) return {};
    return pool.section(t - 1);
}

inline double stage_floor(const CutPool& pool, std::size_t t, std::size_t horizon) {
    return t >= horizon ? 0.0 : pool.floor();
}

// ---------------------------------------------------------------------------
// Configuration and reports.

enum class Termination { iterations, time, stall };

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::iterations: return "iterations";
        case Termination::time: return "time";
        case Termination::stall: return "stall";
    }
    return "?";
}

struct TrainConfig {
    std::size_t max_iterations = 100000;
    double time_limit_seconds = 10800.0;
    std::size_t stall_window = 500;  // jbar
    double stall_rel_tol = 1e-4;
    std::size_t forward_paths_per_iteration = 1;
    std::uint64_t rng_seed = 0;
    double cut_violation_tol = 1e-7;
    std::size_t upper_bound_window = 100;

    void validate() const {
        if (stall_window == 0) throw ConfigError("stall window must be positive");
        if (!(stall_rel_tol > 0.0 && stall_rel_tol < 1.0)) throw ConfigError("stall tolerance must lie in (0,1)");
        if (!(time_limit_seconds > 0.0)) throw ConfigError("time limit must be positive");
        if (forward_paths_per_iteration == 0) throw ConfigError("need at least one forward path per iteration");
        if (!(cut_violation_tol >= 0.0)) throw ConfigError("cut violation tolerance must be nonnegative");
    }
};

struct TrainReport {
    std::size_t iterations = 0;
    std::vector<double> lower_bounds;
    double wall_seconds = 0.0;
    Termination reason = Termination::iterations;
    std::size_t cuts_added = 0;
    double upper_bound_mean = 0.0;  // forward-pass cost over the last window
    double upper_bound_std = 0.0;

    bool operator==(const TrainReport& o) const {
        // wall time is not part of the deterministic contract
        return iterations == o.iterations && lower_bounds == o.lower_bounds && reason == o.reason &&
               cuts_added == o.cuts_added && upper_bound_mean == o.upper_bound_mean &&
               upper_bound_std == o.upper_bound_std;
    }
};

/// (LB^i - LB^{i-jbar}) / LB^i < eps, absolute progress when |LB^i| < 1.
inline bool stalled(const std::vector<double>& lb, std::size_t window, double eps) {
    const std::size_t i = lb.size();
    if (i <= window) return false;
    const double now = lb[i - 1], then = lb[i - 1 - window];
    const double progress = now - then;
    if (std::abs(now) < 1.0) return progress < eps;
    return progress / std::abs(now) < eps;
}

// ---------------------------------------------------------------------------
// Passes.

struct Trajectory {
    std::vector<std::size_t> realizations;        // index per stage >= 2; stage 1 stores 0
    std::vector<std::vector<double>> states;      // post-decision state of stage t at t-1
    std::vector<double> stage_costs;
    double total_cost = 0.0;
};

template <class Rng>
Trajectory forward_pass(const StageModel& model, const CutPool& pool, std::size_t horizon,
                        std::span<const double> initial_state, const Realization& first, Rng& rng) {
    if (horizon == 0) throw ConfigError("horizon must be at least 1");
    if (pool.num_sections() + 1 != horizon) throw ConfigError("cut pool sections do not match the horizon");
    Trajectory tr;
    std::vector<double> incoming(initial_state.begin(), initial_state.end());
    for (std::size_t t = 1; t <= horizon; ++t) {
        std::size_t k = 0;
        const Realization* xi = &first;
        if (t > 1) {
            k = model.process.sample(rng);
            xi = &model.process[k];
        }
        auto r = solve_stage(model.stage, incoming, *xi, stage_cuts(pool, t, horizon), stage_floor(pool, t, horizon), 1.0);
        tr.realizations.push_back(k);
        tr.stage_costs.push_back(r.immediate);
        tr.total_cost += r.immediate;
        tr.states.push_back(r.state);
        incoming = std::move(r.state);
    }
    return tr;
}

/// Expected-value cut of stage-t cost-to-go at x_trial. `discount` multiplies
/// the epigraph of the stage LPs solved here; `cuts`/`floor` are what those LPs see.
inline Cut expected_cut(const StageModel& model, std::span<const double> x_trial, std::span<const Cut> cuts,
                        double floor, double discount, std::size_t birth) {
    Cut cut;
    cut.beta.assign(model.stage.state_dim(), 0.0);
    cut.birth_iteration = birth;
    double expected = 0.0;
    std::vector<std::size_t> active;
    for (const auto& xi : model.process.realizations()) {
        auto r = solve_stage(model.stage, x_trial, xi, cuts, floor, discount, &active);
        const auto g = state_subgradient(model.stage, r.base_duals);
        expected += xi.probability * r.value;
        for (std::size_t k = 0; k < g.size(); ++k) cut.beta[k] += xi.probability * g[k];
    }
    cut.alpha = expected;
    for (std::size_t k = 0; k < cut.beta.size(); ++k) cut.alpha -= cut.beta[k] * x_trial[k];
    return cut;
}

/// Adds `cut` to `section` if it lifts the approximation at x_trial.
inline bool add_if_violated(CutPool& pool, std::size_t section, Cut cut, std::span<const double> x_trial,
                            double tol) {
    const double current = pool.value(section, x_trial);
    if (cut.evaluate(x_trial) <= current + tol * std::max(1.0, std::abs(current))) return false;
    pool.add(section, std::move(cut));
    return true;
}

/// Returns the number of cuts added.
inline std::size_t backward_pass(const StageModel& model, CutPool& pool, std::size_t horizon, const Trajectory& tr,
                                 std::size_t iteration = 0, double violation_tol = 1e-7) {
    std::size_t added = 0;
    for (std::size_t t = horizon; t >= 2; --t) {
        const auto& x_trial = tr.states[t - 2];
        Cut cut = expected_cut(model, x_trial, stage_cuts(pool, t, horizon), stage_floor(pool, t, horizon), 1.0, iteration);
        added += add_if_violated(pool, t - 2, std::move(cut), x_trial, violation_tol);
    }
    return added;
}

inline StageResult first_stage(const StageModel& model, const CutPool& pool, std::size_t horizon,
                               std::span<const double> initial_state, const Realization& first) {
    return solve_stage(model.stage, initial_state, first, stage_cuts(pool, 1, horizon), stage_floor(pool, 1, horizon), 1.0);
}

inline double lower_bound(const StageModel& model, const CutPool& pool, std::size_t horizon,
                          std::span<const double> initial_state, const Realization& first) {
    return first_stage(model, pool, horizon, initial_state, first).value;
}

inline CutPool make_pool(const StageModel& model, std::size_t horizon, double floor = 0.0) {
    if (horizon == 0) throw ConfigError("horizon must be at least 1");
    return CutPool(horizon - 1, model.stage.state_dim(), floor);
}

namespace detail {

inline void finish_upper_bound(TrainReport& rep, const std::vector<double>& costs, std::size_t window) {
    if (costs.empty()) return;
    const std::size_t start = costs.size() > window ? costs.size() - window : 0;
    const double n = static_cast<double>(costs.size() - start);
    double mean = 0.0;
    for (std::size_t i = start; i < costs.size(); ++i) mean += costs[i];
    mean /= n;
    double var = 0.0;
    for (std::size_t i = start; i < costs.size(); ++i) var += (costs[i] - mean) * (costs[i] - mean);
    rep.upper_bound_mean = mean;
    rep.upper_bound_std = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
}

}  // namespace detail

/// Trains `pool` in place. A horizon-1 problem has nothing to learn and
/// returns immediately with reason "stall".
template <class Rng>
TrainReport train(const StageModel& model, CutPool& pool, std::size_t horizon, std::span<const double> initial_state,
                  const Realization& first, const TrainConfig& cfg, Rng& rng) {
    cfg.validate();
    if (pool.num_sections() + 1 != horizon) throw ConfigError("cut pool sections do not match the horizon");
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

    TrainReport rep;
    if (horizon == 1) {
        rep.reason = Termination::stall;
        return rep;
    }
    std::vector<double> costs;
    rep.reason = Termination::iterations;
    while (rep.iterations < cfg.max_iterations) {
        if (elapsed() >= cfg.time_limit_seconds) {
            rep.reason = Termination::time;
            break;
        }
        ++rep.iterations;
        for (std::size_t p = 0; p < cfg.forward_paths_per_iteration; ++p) {
            auto tr = forward_pass(model, pool, horizon, initial_state, first, rng);
            costs.push_back(tr.total_cost);
            rep.cuts_added += backward_pass(model, pool, horizon, tr, rep.iterations, cfg.cut_violation_tol);
        }
        rep.lower_bounds.push_back(lower_bound(model, pool, horizon, initial_state, first));
        if (stalled(rep.lower_bounds, cfg.stall_window, cfg.stall_rel_tol)) {
            rep.reason = Termination::stall;
            break;
        }
    }
    detail::finish_upper_bound(rep, costs, cfg.upper_bound_window);
    rep.wall_seconds = elapsed();
    return rep;
}

inline TrainReport train(const StageModel& model, CutPool& pool, std::size_t horizon,
                         std::span<const double> initial_state, const Realization& first, const TrainConfig& cfg) {
    std::mt19937_64 rng(cfg.rng_seed);
    return train(model, pool, horizon, initial_state, first, cfg, rng);
}

}  // namespace msplab
