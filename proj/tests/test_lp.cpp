#include <gtest/gtest.h>

#include <random>

#include "msplab/lp.hpp"
#include "oracles.hpp"

using namespace msplab;

TEST(Simplex, SingleEquality) {
    LinearProgram lp;
    lp.add_var(1.0);
    const auto r = lp.add_row(3.0);
    lp.eq_matrix(r, 0) = 1.0;
    auto sol = solve(lp);
    ASSERT_TRUE(sol.optimal());
    EXPECT_DOUBLE_EQ(sol.objective, 3.0);
    EXPECT_NEAR(sol.duals[0], 1.0, 1e-12);
}

TEST(Simplex, UpperBoundActive) {
    LinearProgram lp;
    lp.add_var(-1.0, 0.0, 5.0);
    auto sol = solve(lp);
    ASSERT_TRUE(sol.optimal());
    EXPECT_DOUBLE_EQ(sol.objective, -5.0);
}

TEST(Simplex, Infeasible) {
    LinearProgram lp;
    lp.add_var(1.0, 0.0, 1.0);
    const auto r = lp.add_row(2.0);
    lp.eq_matrix(r, 0) = 1.0;
    EXPECT_EQ(solve(lp).status, LPStatus::infeasible);
}

TEST(Simplex, Unbounded) {
    LinearProgram lp;
    lp.add_var(-1.0);
    lp.add_var(0.0);
    const auto r = lp.add_row(1.0);
    lp.eq_matrix(r, 0) = 1.0;
    lp.eq_matrix(r, 1) = -1.0;
    EXPECT_EQ(solve(lp).status, LPStatus::unbounded);
}

TEST(Simplex, RejectsInvertedBounds) {
    LinearProgram lp;
    lp.add_var(1.0, 2.0, 1.0);
    EXPECT_THROW(solve(lp), std::invalid_argument);
}

TEST(Simplex, NegativeRhsRowAndFreeLikeColumns) {
    // min x + 2y  s.t. x - y = -3, 0<=x<=10, 0<=y<=10  ->  x=0, y=3
    LinearProgram lp;
    lp.add_var(1.0, 0.0, 10.0);
    lp.add_var(2.0, 0.0, 10.0);
    const auto r = lp.add_row(-3.0);
    lp.eq_matrix(r, 0) = 1.0;
    lp.eq_matrix(r, 1) = -1.0;
    auto sol = solve(lp);
    ASSERT_TRUE(sol.optimal());
    EXPECT_NEAR(sol.objective, 6.0, 1e-12);
    EXPECT_NEAR(sol.primal[1], 3.0, 1e-12);
    EXPECT_NEAR(sol.duals[0], -2.0, 1e-12);
}

TEST(Simplex, MatchesVertexEnumeration) {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> nd(1, 6);
    int compared = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const auto n = static_cast<std::size_t>(nd(rng));
        const auto m = std::min<std::size_t>(n, static_cast<std::size_t>(nd(rng) % 5));
        auto lp = oracle::random_lp(rng, n, m);
        auto sol = solve(lp);
        auto ref = oracle::vertex_oracle(lp);
        ASSERT_TRUE(ref.feasible) << "trial " << trial;
        ASSERT_TRUE(sol.optimal()) << "trial " << trial;
        EXPECT_NEAR(sol.objective, ref.objective, 1e-8) << "trial " << trial;
        EXPECT_LE(primal_residual(lp, sol.primal), 1e-7);
        EXPECT_NEAR(dual_objective(lp, sol, 1e-9), sol.objective, 1e-6) << "trial " << trial;
        ++compared;
    }
    EXPECT_EQ(compared, 300);
}

TEST(Simplex, DualIsSubgradientOfRhs) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> d(-1e-4, 1e-4);
    for (int trial = 0; trial < 200; ++trial) {
        auto lp = oracle::random_lp(rng, 6, 3);
        auto sol = solve(lp);
        ASSERT_TRUE(sol.optimal());
        for (int k = 0; k < 5; ++k) {
            auto pert = lp;
            double dot = 0.0;
            for (std::size_t i = 0; i < lp.num_rows(); ++i) {
                const double delta = d(rng) / std::sqrt(3.0);
                pert.eq_rhs[i] += delta;
                dot += sol.duals[i] * delta;
            }
            auto ps = solve(pert);
            if (!ps.optimal()) continue;  // perturbation left the feasible rhs set
            EXPECT_GE(ps.objective, sol.objective + dot - 1e-6);
        }
    }
}

TEST(Simplex, Deterministic) {
    std::mt19937_64 rng(3);
    auto lp = oracle::random_lp(rng, 6, 4);
    auto a = solve(lp), b = solve(lp);
    EXPECT_EQ(a.primal, b.primal);
    EXPECT_EQ(a.duals, b.duals);
    EXPECT_EQ(a.pivots, b.pivots);
}

TEST(Simplex, DegenerateCycleProneProblem) {
    // Beale's example, cycles under the textbook Dantzig rule.
    // min -3/4 x4 + 20 x5 - 1/2 x6 + 6 x7, slack form
    LinearProgram lp;
    for (double c : {0.0, 0.0, 0.0, -0.75, 20.0, -0.5, 6.0}) lp.add_var(c);
    const double rows[3][7] = {{1, 0, 0, 0.25, -8, -1, 9}, {0, 1, 0, 0.5, -12, -0.5, 3}, {0, 0, 1, 0, 0, 1, 0}};
    const double rhs[3] = {0, 0, 1};
    for (int i = 0; i < 3; ++i) {
        const auto r = lp.add_row(rhs[i]);
        for (int j = 0; j < 7; ++j) lp.eq_matrix(r, static_cast<std::size_t>(j)) = rows[i][j];
    }
    auto sol = solve(lp);
    ASSERT_TRUE(sol.optimal());
    EXPECT_NEAR(sol.objective, -1.25, 1e-12);
}
