#pragma once

// Value iteration on small finite models with decisions taken after the
// random outcome is observed:
//
//   g^k(x) = sum_xi p_xi  min_{a in A(x, xi)}  c(x, a, xi) + gamma g^{k-1}(next(x, a, xi))
//
// Used as ground truth for contraction, horizon-bound and stationary-SDDP checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "msplab/errors.hpp"

namespace msplab {

struct MdpOption {
    double cost = 0.0;
    std::size_t next = 0;
};

struct FiniteMdp {
    std::size_t num_states = 0;
    std::vector<double> outcome_probs;
    // options[x][xi] lists the admissible actions
    std::vector<std::vector<std::vector<MdpOption>>> options;

    void validate() const {
        if (options.size() != num_states) throw ConfigError("options table must have one entry per state");
        std::size_t pairs = 0;
        for (const auto& per_state : options) {
            if (per_state.size() != outcome_probs.size()) throw ConfigError("options needed for every outcome");
            for (const auto& opts : per_state) {
                if (opts.empty()) throw ConfigError("every (state, outcome) needs at least one action");
                for (const auto& o : opts)
                    if (o.next >= num_states) throw ConfigError("transition to unknown state");
                pairs += opts.size();
            }
        }
        if (pairs > 10000 * std::max<std::size_t>(1, outcome_probs.size()))
            throw ConfigError("value-iteration oracle is meant for at most 1e4 state-action pairs");
    }

    /// max |c| over all options.
    double kappa() const {
        double k = 0.0;
        for (const auto& per_state : options)
            for (const auto& opts : per_state)
                for (const auto& o : opts) k = std::max(k, std::abs(o.cost));
        return k;
    }
};

/// One Bellman update.
inline std::vector<double> bellman(const FiniteMdp& m, double gamma, const std::vector<double>& g) {
    std::vector<double> out(m.num_states, 0.0);
    for (std::size_t x = 0; x < m.num_states; ++x)
        for (std::size_t w = 0; w < m.outcome_probs.size(); ++w) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& o : m.options[x][w]) best = std::min(best, o.cost + gamma * g[o.next]);
            out[x] += m.outcome_probs[w] * best;
        }
    return out;
}

/// g^0 .. g^K, starting from g^0 (zero when empty).
inline std::vector<std::vector<double>> value_iteration(const FiniteMdp& m, double gamma, std::size_t iterations,
                                                        std::vector<double> g0 = {}) {
    m.validate();
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("discount factor must lie in [0, 1)");
    if (g0.empty()) g0.assign(m.num_states, 0.0);
    std::vector<std::vector<double>> trace{std::move(g0)};
    for (std::size_t k = 0; k < iterations; ++k) trace.push_back(bellman(m, gamma, trace.back()));
    return trace;
}

inline double sup_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

/// Fixed point by iterating until the update moves less than `tol`.
inline std::vector<double> value_fixed_point(const FiniteMdp& m, double gamma, double tol = 1e-13,
                                             std::size_t max_iterations = 10000000) {
    m.validate();
    std::vector<double> g(m.num_states, 0.0);
    for (std::size_t k = 0; k < max_iterations; ++k) {
        auto next = bellman(m, gamma, g);
        const double d = sup_distance(next, g);
        g = std::move(next);
        if (d <= tol) return g;
    }
    throw NumericalError("value iteration did not converge");
}

/// choice[x][xi] = index into options[x][xi].
using MdpPolicy = std::vector<std::vector<std::size_t>>;

/// Greedy with respect to g; ties go to the lowest action index.
inline MdpPolicy greedy_policy(const FiniteMdp& m, double gamma, const std::vector<double>& g) {
    MdpPolicy pi(m.num_states, std::vector<std::size_t>(m.outcome_probs.size(), 0));
    for (std::size_t x = 0; x < m.num_states; ++x)
        for (std::size_t w = 0; w < m.outcome_probs.size(); ++w) {
            double best = std::numeric_limits<double>::infinity();
            const auto& opts = m.options[x][w];
            for (std::size_t a = 0; a < opts.size(); ++a) {
                const double v = opts[a].cost + gamma * g[opts[a].next];
                if (v < best) {
                    best = v;
                    pi[x][w] = a;
                }
            }
        }
    return pi;
}

/// Exact discounted value of a stationary policy: solves (I - gamma P) V = c.
inline std::vector<double> policy_value(const FiniteMdp& m, double gamma, const MdpPolicy& pi) {
    const std::size_t n = m.num_states;
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    std::vector<double> c(n, 0.0);
    for (std::size_t x = 0; x < n; ++x) {
        a[x][x] += 1.0;
        for (std::size_t w = 0; w < m.outcome_probs.size(); ++w) {
            const auto& o = m.options[x][w][pi[x][w]];
            c[x] += m.outcome_probs[w] * o.cost;
            a[x][o.next] -= gamma * m.outcome_probs[w];
        }
    }
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t p = col;
        for (std::size_t i = col + 1; i < n; ++i)
            if (std::abs(a[i][col]) > std::abs(a[p][col])) p = i;
        if (std::abs(a[p][col]) < 1e-14) throw NumericalError("singular policy evaluation system");
        std::swap(a[p], a[col]);
        std::swap(c[p], c[col]);
        for (std::size_t i = 0; i < n; ++i) {
            if (i == col) continue;
            const double f = a[i][col] / a[col][col];
            if (f == 0.0) continue;
            for (std::size_t k = col; k < n; ++k) a[i][k] -= f * a[col][k];
            c[i] -= f * c[col];
        }
    }
    for (std::size_t i = 0; i < n; ++i) c[i] /= a[i][i];
    return c;
}

/// Rolling-horizon policy with look-ahead tau: greedy with respect to the
/// (tau-1)-step value g^{tau-1} from g^0 = 0.
inline MdpPolicy horizon_policy(const FiniteMdp& m, double gamma, std::size_t tau) {
    if (tau == 0) throw ConfigError("look-ahead must be at least 1");
    auto trace = value_iteration(m, gamma, tau - 1);
    return greedy_policy(m, gamma, trace.back());
}

}  // namespace msplab
