#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "msplab/hpop.hpp"
#include "msplab/stationary.hpp"
#include "msplab/value_iteration.hpp"
#include "oracles.hpp"

using namespace msplab;

namespace {

// storage_toy with integer data and its grid model
const std::vector<int> kInflows{0, 1, 3};
const std::vector<double> kProbs{0.3, 0.3, 0.4};

StageModel toy_model(double x0) {
    StageModel m;
    m.stage = oracle::storage_toy(3.0, 2.0, 2.0, 0.1, 0.2, 5.0);
    std::vector<Realization> rs;
    for (std::size_t k = 0; k < kInflows.size(); ++k) rs.push_back({0, kProbs[k], {double(kInflows[k])}});
    m.process = DiscreteProcess(rs);
    m.initial_storage = {x0};
    return m;
}

FiniteMdp toy_mdp() { return oracle::storage_mdp(3, 2, 2, 0.1, 0.2, 5.0, kInflows, kProbs); }

// min_a c + gamma g(next) at state x after outcome w
double decision_value(const FiniteMdp& m, double gamma, const std::vector<double>& g, std::size_t x, std::size_t w) {
    double best = 1e300;
    for (const auto& o : m.options[x][w]) best = std::min(best, o.cost + gamma * g[o.next]);
    return best;
}

TrainConfig tight(std::uint64_t seed) {
    TrainConfig c;
    c.max_iterations = 3000;
    c.stall_window = 200;
    c.stall_rel_tol = 1e-10;
    c.rng_seed = seed;
    return c;
}

}  // namespace

TEST(Sampler, MeanAndPmf) {
    std::mt19937_64 rng(11);
    const double g = 0.9;
    const int n = 1000000;
    std::vector<int> counts(21, 0);
    double mean = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto k = sample_horizon(g, rng);
        ASSERT_GE(k, 1u);
        mean += static_cast<double>(k);
        if (k <= 20) ++counts[k];
    }
    mean /= n;
    EXPECT_NEAR(mean, 10.0, 0.1);
    for (int k = 1; k <= 20; ++k) {
        const double p = (1 - g) * std::pow(g, k - 1);
        const double se = std::sqrt(p * (1 - p) / n);
        EXPECT_NEAR(counts[k] / double(n), p, 3 * se) << k;
    }
}

TEST(Sampler, EdgeCases) {
    std::mt19937_64 rng(1);
    EXPECT_EQ(sample_horizon(0.0, rng), 1u);
    EXPECT_THROW(sample_horizon(1.0, rng), ConfigError);
    EXPECT_EQ(horizon_cap(0.9), 500u);
    for (int i = 0; i < 10000; ++i) EXPECT_LE(sample_horizon(0.99, rng), horizon_cap(0.99));
}

TEST(Stationary, RejectsDiscountOutsideOpenInterval) {
    EXPECT_THROW(StationaryModel(toy_model(0.0), 1.0), ConfigError);
    EXPECT_THROW(StationaryModel(toy_model(0.0), 0.0), ConfigError);
    EXPECT_NO_THROW(StationaryModel(toy_model(0.0), 0.5));
}

TEST(Stationary, ToyMatchesValueIteration) {
    const auto mdp = toy_mdp();
    for (double g : {0.5, 0.8}) {
        const auto gstar = value_fixed_point(mdp, g);
        for (std::size_t x0 : {0u, 2u}) {
            for (std::size_t w : {0u, 2u}) {
                StationaryModel sm(toy_model(double(x0)), g);
                CutPool pool = make_stationary_pool(sm);
                const auto& first = sm.model.process[w];
                train_stationary(sm, pool, sm.model.initial_storage, first, tight(7 + x0 + w));
                const double lb = stationary_lower_bound(sm, pool, sm.model.initial_storage, first);
                EXPECT_NEAR(lb, decision_value(mdp, g, gstar, x0, w), 1e-3) << g << " " << x0 << " " << w;
            }
        }
    }
}

TEST(Stationary, CutsUnderestimateValue) {
    const auto mdp = toy_mdp();
    const double g = 0.8;
    const auto gstar = value_fixed_point(mdp, g);
    StationaryModel sm(toy_model(1.0), g);
    CutPool pool = make_stationary_pool(sm);
    train_stationary(sm, pool, sm.model.initial_storage, sm.model.process[1], tight(3));
    for (std::size_t x = 0; x <= 3; ++x)
        EXPECT_LE(pool.value(0, std::vector<double>{double(x)}), gstar[x] + 1e-6);
}

TEST(Stationary, Reproducible) {
    StationaryModel sm(toy_model(1.0), 0.7);
    CutPool a = make_stationary_pool(sm), b = make_stationary_pool(sm);
    TrainConfig c = tight(9);
    c.max_iterations = 200;
    auto ra = train_stationary(sm, a, sm.model.initial_storage, sm.model.process[0], c);
    auto rb = train_stationary(sm, b, sm.model.initial_storage, sm.model.process[0], c);
    EXPECT_EQ(ra, rb);
    EXPECT_EQ(a, b);
}

TEST(Stationary, HpopLowDiscountTrains) {
    auto base = StageModel::from_instance(build_hpop({1, 1000.0, 5}));
    base.initial_storage = {base.stage.base_lp.var_lower[base.stage.state_extract[0]]};
    StationaryModel sm(base, 0.1);
    CutPool pool = make_stationary_pool(sm);
    TrainConfig c;
    c.stall_window = 20;
    c.max_iterations = 2000;
    c.rng_seed = 4;
    const auto& dry = sm.model.process[sm.model.process.size() - 1];
    auto rep = train_stationary(sm, pool, sm.model.initial_storage, dry, c);
    EXPECT_EQ(rep.reason, Termination::stall);
    for (std::size_t i = 1; i < rep.lower_bounds.size(); ++i)
        EXPECT_GE(rep.lower_bounds[i], rep.lower_bounds[i - 1] - 1e-6 * std::abs(rep.lower_bounds[i]));
    const double myopic = solve_stage(sm.model.stage, sm.model.initial_storage, dry, {}, 0.0, 0.1).value;
    EXPECT_GE(rep.lower_bounds.back(), myopic - 1e-6);
    EXPECT_GT(rep.lower_bounds.back(), 0.0);
}

TEST(Stationary, EvaluationIsUndiscountedAverage) {
    StationaryModel sm(toy_model(1.0), 0.5);
    CutPool pool = make_stationary_pool(sm);
    TrainConfig c = tight(2);
    c.max_iterations = 100;
    train_stationary(sm, pool, sm.model.initial_storage, sm.model.process[0], c);
    const std::vector<std::size_t> path{0, 2, 1, 1, 0, 2, 2, 0};
    auto res = evaluate_stationary(sm, pool, path, sm.model.initial_storage);
    ASSERT_EQ(res.rolls.size(), path.size());
    double sum = 0.0;
    std::vector<double> x = sm.model.initial_storage;
    for (std::size_t t = 0; t < path.size(); ++t) {
        auto r = stationary_stage(sm, pool, x, sm.model.process[path[t]]);
        EXPECT_NEAR(res.rolls[t].stage_cost, r.immediate, 1e-9);
        sum += r.immediate;
        x = r.state;
    }
    EXPECT_NEAR(res.z_bar, sum / path.size(), 1e-9);
}
