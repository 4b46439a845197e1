#pragma once

// Rolling-horizon simulation. At each roll the current state and realization
// define a tau-stage problem whose terminal cost-to-go is zero; its cut pool
// is kept per tau and retrained with a decreasing stall window; only the
// first-stage decision is implemented.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "msplab/cuts.hpp"
#include "msplab/errors.hpp"
#include "msplab/horizon.hpp"
#include "msplab/results.hpp"
#include "msplab/sddp.hpp"
#include "msplab/stationary.hpp"

namespace msplab {

struct PolicySpec {
    enum class Kind { static_horizon, dynamic, stationary };

    Kind kind = Kind::static_horizon;
    std::size_t tau = 1;
    HorizonMap map;
    std::size_t tau_max = 16;
    double gamma = 0.9;

    static PolicySpec fixed(std::size_t tau) {
        PolicySpec p;
        p.kind = Kind::static_horizon;
        p.tau = tau;
        return p;
    }
    static PolicySpec dynamic(HorizonMap map, std::size_t tau_max) {
        PolicySpec p;
        p.kind = Kind::dynamic;
        p.map = std::move(map);
        p.tau_max = tau_max;
        return p;
    }
    static PolicySpec stationary(double gamma) {
        PolicySpec p;
        p.kind = Kind::stationary;
        p.gamma = gamma;
        return p;
    }

    void validate() const {
        switch (kind) {
            case Kind::static_horizon:
                if (tau == 0) throw ConfigError("static horizon must be at least 1");
                break;
            case Kind::dynamic:
                if (tau_max == 0) throw ConfigError("tau_max must be at least 1");
                map.validate();
                break;
            case Kind::stationary: check_discount(gamma); break;
        }
    }

    std::string describe() const {
        switch (kind) {
            case Kind::static_horizon: return "static(tau=" + std::to_string(tau) + ")";
            case Kind::dynamic: return "dynamic(tau_max=" + std::to_string(tau_max) + ")";
            case Kind::stationary: {
                std::ostringstream s;
                s << "stationary(gamma=" << gamma << ")";
                return s.str();
            }
        }
        return "?";
    }
};

/// Stall windows per phase of a run. `current` is 0 before the first roll.
struct EffortSchedule {
    std::size_t initial = 500;
    std::size_t after_first_roll = 50;
    std::size_t all_seen = 10;
    std::size_t stalled = 1;
    std::size_t stall_streak_limit = 50;
    std::size_t current = 0;

    /// Same window in every phase; fixed(1) disables online training.
    static EffortSchedule fixed(std::size_t jbar) {
        EffortSchedule s;
        s.initial = s.after_first_roll = s.all_seen = s.stalled = jbar;
        return s;
    }
};

/// Window for roll `roll` (1-based). Never increases over a run.
inline std::size_t next_effort(EffortSchedule& s, std::size_t roll, bool seen_all, std::size_t stall_streak) {
    std::size_t target;
    if (roll <= 1) target = s.initial;
    else if (stall_streak > s.stall_streak_limit) target = s.stalled;
    else if (seen_all) target = s.all_seen;
    else target = s.after_first_roll;
    s.current = s.current == 0 ? target : std::min(s.current, target);
    return s.current;
}

struct RhProblem {
    std::size_t tau = 1;
    CutPool pool;
};

/// One problem (and cut pool) per horizon, created on first request.
class ProblemCache {
public:
    explicit ProblemCache(const StageModel& model) : state_dim_(model.stage.state_dim()) {}

    RhProblem& lookup(std::size_t tau) {
        if (tau == 0) throw ConfigError("horizon must be at least 1");
        auto it = problems_.find(tau);
        if (it == problems_.end())
            it = problems_.emplace(tau, RhProblem{tau, CutPool(tau - 1, state_dim_, 0.0)}).first;
        return it->second;
    }

    /// Installs a pre-trained pool for horizon tau.
    void install(std::size_t tau, CutPool pool) {
        if (pool.num_sections() + 1 != tau) throw ConfigError("pool sections do not match the horizon");
        if (pool.state_dim() != state_dim_) throw ConfigError("pool dimension does not match the model");
        problems_[tau] = RhProblem{tau, std::move(pool)};
    }

    std::size_t size() const { return problems_.size(); }
    bool contains(std::size_t tau) const { return problems_.count(tau) != 0; }

private:
    std::size_t state_dim_;
    std::map<std::size_t, RhProblem> problems_;
};

/// Path of realization indices drawn from the process.
inline std::vector<std::size_t> sample_path(const DiscreteProcess& process, std::size_t length, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return process.sample_path(length, rng);
}

/// Static or dynamic rolling-horizon simulation along `path`. The stationary
/// variant needs a trained pool; see simulate_stationary.
inline SimulationResult simulate(const StageModel& model, const PolicySpec& policy, const std::vector<std::size_t>& path,
                                 const TrainConfig& train_cfg, EffortSchedule schedule, ProblemCache* shared = nullptr,
                                 std::vector<std::vector<double>>* states = nullptr) {
    policy.validate();
    if (policy.kind == PolicySpec::Kind::stationary)
        throw ConfigError("stationary policies are simulated with a trained pool (simulate_stationary)");
    train_cfg.validate();
    ProblemCache local(model);
    ProblemCache& cache = shared ? *shared : local;

    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(train_cfg.rng_seed);
    SimulationResult res;
    double running = 0.0;
    std::vector<double> storage = model.initial_storage;
    std::set<std::size_t> seen;
    std::size_t streak = 0;
    for (std::size_t t = 1; t <= path.size(); ++t) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::size_t k = path[t - 1];
        const Realization& xi = model.process[k];
        seen.insert(k);

        std::size_t tau = policy.tau;
        if (policy.kind == PolicySpec::Kind::dynamic) {
            const double phi1 = make_state(model.stage, storage, xi).energy_potential;
            tau = horizon_from_prediction(policy.map.predict(phi1), policy.tau_max);
        }
        RhProblem& prob = cache.lookup(tau);
        const std::size_t jbar = next_effort(schedule, t, seen.size() == model.process.size(), streak);

        RollRecord rec;
        rec.tau = tau;
        rec.jbar = jbar;
        if (jbar > 1 && tau > 1) {
            TrainConfig cfg = train_cfg;
            cfg.stall_window = jbar;
            const auto rep = train(model, prob.pool, tau, storage, xi, cfg, rng);
            rec.iterations = rep.iterations;
            const bool quick = jbar == schedule.all_seen && rep.reason == Termination::stall && rep.iterations == jbar + 1;
            streak = quick ? streak + 1 : 0;
        }
        auto r = first_stage(model, prob.pool, tau, storage, xi);
        rec.stage_cost = r.immediate;
        storage = r.state;
        if (states) states->push_back(storage);
        rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        record_roll(res, rec, running);
    }
    finalize(res);
    res.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

/// Fixed-pool policy: first-stage decisions of the horizon-tau problem with
/// the given pool, no training.
inline SimulationResult evaluate_pool(const StageModel& model, const CutPool& pool, std::size_t tau,
                                      const std::vector<std::size_t>& path,
                                      std::vector<std::vector<double>>* states = nullptr) {
    const auto start = std::chrono::steady_clock::now();
    SimulationResult res;
    double running = 0.0;
    std::vector<double> storage = model.initial_storage;
    for (std::size_t k : path) {
        auto r = first_stage(model, pool, tau, storage, model.process[k]);
        storage = r.state;
        if (states) states->push_back(storage);
        RollRecord rec;
        rec.tau = tau;
        rec.stage_cost = r.immediate;
        record_roll(res, rec, running);
    }
    finalize(res);
    res.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

/// Stationary policy along `path` with a trained shared pool.
inline SimulationResult simulate_stationary(const StageModel& model, double gamma, const CutPool& pool,
                                            const std::vector<std::size_t>& path) {
    StationaryModel sm(model, gamma);
    return evaluate_stationary(sm, pool, path, model.initial_storage);
}

}  // namespace msplab
