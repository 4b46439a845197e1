#pragma once

// Stage templates for stage-wise independent multistage stochastic LPs:
//
//   Q_t(x_{t-1}, xi) = min { c'x + discount * theta :
//                            A x + B x_{t-1} = b(xi),
//                            theta >= beta_l . S x + alpha_l  for every cut l,
//                            theta >= floor,  l <= x <= u }
//
// S picks the post-decision state out of x (StageTemplate::state_extract).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "msplab/cuts.hpp"
#include "msplab/errors.hpp"
#include "msplab/lp.hpp"

namespace msplab {

struct Realization {
    std::size_t id = 0;
    double probability = 0.0;
    std::vector<double> data;

    bool operator==(const Realization&) const = default;
};

/// Finite distribution shared by every stage t >= 2.
class DiscreteProcess {
public:
    DiscreteProcess() = default;
    explicit DiscreteProcess(std::vector<Realization> realizations, bool stationary = true)
        : realizations_(std::move(realizations)), stationary_(stationary) {
        if (realizations_.empty()) throw ConfigError("a process needs at least one realization");
        for (std::size_t k = 0; k < realizations_.size(); ++k) {
            realizations_[k].id = k;
            if (!(realizations_[k].probability > 0.0))
                throw ConfigError("realization probabilities must be positive");
            if (realizations_[k].data.size() != realizations_[0].data.size())
                throw ConfigError("realizations must share one data dimension");
        }
        normalize();
    }

    std::size_t size() const { return realizations_.size(); }
    const Realization& operator[](std::size_t k) const { return realizations_.at(k); }
    const std::vector<Realization>& realizations() const { return realizations_; }
    bool stationary() const { return stationary_; }

    /// Index drawn with the realization probabilities.
    template <class Rng>
    std::size_t sample(Rng& rng) const {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const double u = unif(rng);
        double acc = 0.0;
        for (std::size_t k = 0; k + 1 < realizations_.size(); ++k) {
            acc += realizations_[k].probability;
            if (u < acc) return k;
        }
        return realizations_.size() - 1;
    }

    template <class Rng>
    std::vector<std::size_t> sample_path(std::size_t length, Rng& rng) const {
        std::vector<std::size_t> path(length);
        for (auto& k : path) k = sample(rng);
        return path;
    }

    bool operator==(const DiscreteProcess&) const = default;

private:
    void normalize() {
        double total = 0.0;
        for (const auto& r : realizations_) total += r.probability;
        if (std::abs(total - 1.0) < 1e-12) return;  // keeps saved files bit-stable
        for (auto& r : realizations_) r.probability /= total;
    }

    std::vector<Realization> realizations_;
    bool stationary_ = true;
};

/// Where a realization writes into the right-hand side:
/// rhs[row] += scale * xi.data[component].
struct RandomRhsEntry {
    std::size_t row = 0;
    std::size_t component = 0;
    double scale = 1.0;

    bool operator==(const RandomRhsEntry&) const = default;
};

/// Describes how a pre-decision state is summarised for horizon prediction:
/// per plant, available water  s = stored + scale * inflow  (no stored term
/// when the plant has no storage), and  phi1 = sum_h efficiency_h * s_h.
struct StateSummarySpec {
    std::vector<double> efficiency;
    std::vector<std::optional<std::size_t>> storage_slot;  // index into the state vector
    std::vector<std::size_t> inflow_component;
    double inflow_scale = 1.0;

    bool empty() const { return efficiency.empty(); }
    bool operator==(const StateSummarySpec&) const = default;
};

struct StageTemplate {
    LinearProgram base_lp;                    // stage columns and rows, no epigraph
    DenseMatrix linking_matrix;               // rows(base_lp) x state_dim
    std::vector<RandomRhsEntry> rhs_random_map;
    std::vector<std::size_t> state_extract;   // base_lp columns forming x_t
    StateSummarySpec summary;
    std::vector<std::string> column_names;    // optional, for reports

    std::size_t state_dim() const { return state_extract.size(); }
    std::size_t num_columns() const { return base_lp.num_vars(); }

    void validate() const {
        base_lp.validate();
        if (linking_matrix.rows() != base_lp.num_rows())
            throw ConfigError("linking matrix row count must equal stage row count");
        if (linking_matrix.cols() != state_dim())
            throw ConfigError("linking matrix column count must equal state dimension");
        for (auto c : state_extract)
            if (c >= base_lp.num_vars()) throw ConfigError("state column out of range");
        for (const auto& e : rhs_random_map)
            if (e.row >= base_lp.num_rows()) throw ConfigError("random rhs row out of range");
    }
};

/// Pre-decision system state: available water per plant and the energy
/// potential phi1 = sum_h r_h s_h.
struct SystemState {
    std::vector<double> available;
    double energy_potential = 0.0;
};

/// Column layout of an instantiated stage LP.
struct StageLayout {
    std::size_t base_columns = 0;
    std::size_t theta = 0;        // epigraph column
    std::size_t base_rows = 0;
    std::size_t cut_rows = 0;
};

inline StageLayout stage_layout(const StageTemplate& tmpl, std::size_t num_cuts) {
    return {tmpl.num_columns(), tmpl.num_columns(), tmpl.base_lp.num_rows(), num_cuts};
}

/// Right-hand side  b + sum random entries - B x_prev.
inline std::vector<double> stage_rhs(const StageTemplate& tmpl, std::span<const double> incoming,
                                     const Realization& xi) {
    if (incoming.size() != tmpl.state_dim())
        throw ConfigError("incoming state has dimension " + std::to_string(incoming.size()) +
                          ", template expects " + std::to_string(tmpl.state_dim()));
    std::vector<double> rhs = tmpl.base_lp.eq_rhs;
    for (const auto& e : tmpl.rhs_random_map) {
        if (e.component >= xi.data.size()) throw ConfigError("realization lacks a random component");
        rhs[e.row] += e.scale * xi.data[e.component];
    }
    for (std::size_t i = 0; i < rhs.size(); ++i)
        for (std::size_t k = 0; k < incoming.size(); ++k)
            rhs[i] -= tmpl.linking_matrix(i, k) * incoming[k];
    return rhs;
}

/// Builds the stage LP for one incoming state and realization. Columns are the
/// template columns, then theta, then one surplus column per cut. Each cut row
/// reads  theta - beta . S x - s_l = alpha_l.
inline LinearProgram instantiate_stage(const StageTemplate& tmpl, std::span<const double> incoming,
                                       const Realization& xi, std::span<const Cut> cuts,
                                       double floor, double discount) {
    const LinearProgram& base = tmpl.base_lp;
    const std::size_t n0 = base.num_vars();
    const std::size_t m0 = base.num_rows();
    const std::size_t n = n0 + 1 + cuts.size();
    const std::size_t m = m0 + cuts.size();
    const std::size_t theta = n0;

    LinearProgram lp;
    lp.objective.assign(n, 0.0);
    lp.var_lower.assign(n, 0.0);
    lp.var_upper.assign(n, kInf);
    std::copy(base.objective.begin(), base.objective.end(), lp.objective.begin());
    std::copy(base.var_lower.begin(), base.var_lower.end(), lp.var_lower.begin());
    std::copy(base.var_upper.begin(), base.var_upper.end(), lp.var_upper.begin());
    lp.objective[theta] = discount;
    lp.var_lower[theta] = floor;

    lp.eq_rhs = stage_rhs(tmpl, incoming, xi);
    lp.eq_rhs.resize(m);
    lp.eq_matrix = DenseMatrix(m, n);
    for (std::size_t i = 0; i < m0; ++i)
        for (std::size_t j = 0; j < n0; ++j) lp.eq_matrix(i, j) = base.eq_matrix(i, j);
    for (std::size_t c = 0; c < cuts.size(); ++c) {
        const Cut& cut = cuts[c];
        if (cut.beta.size() != tmpl.state_dim())
            throw ConfigError("cut dimension does not match the template state dimension");
        const std::size_t row = m0 + c;
        lp.eq_rhs[row] = cut.alpha;
        lp.eq_matrix(row, theta) = 1.0;
        for (std::size_t k = 0; k < cut.beta.size(); ++k)
            lp.eq_matrix(row, tmpl.state_extract[k]) -= cut.beta[k];
        lp.eq_matrix(row, theta + 1 + c) = -1.0;
    }
    return lp;
}

/// Same, taking every cut of one pool section.
inline LinearProgram instantiate_stage(const StageTemplate& tmpl, std::span<const double> incoming,
                                       const Realization& xi, const CutPool& pool,
                                       std::optional<std::size_t> section, double discount) {
    if (section && pool.state_dim() != tmpl.state_dim())
        throw ConfigError("cut pool dimension does not match the template state dimension");
    std::span<const Cut> cuts;
    if (section) cuts = pool.section(*section);
    return instantiate_stage(tmpl, incoming, xi, cuts, pool.floor(), discount);
}

/// Immediate cost c'x of a stage solution (epigraph excluded).
inline double stage_cost(const StageTemplate& tmpl, std::span<const double> primal) {
    double f = 0.0;
    for (std::size_t j = 0; j < tmpl.num_columns(); ++j) f += tmpl.base_lp.objective[j] * primal[j];
    return f;
}

inline std::vector<double> post_decision_state(const StageTemplate& tmpl, std::span<const double> primal) {
    std::vector<double> x(tmpl.state_dim());
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = primal[tmpl.state_extract[k]];
    return x;
}

/// Pre-decision state from carried-over storage and the realization about to act.
inline SystemState make_state(const StageTemplate& tmpl, std::span<const double> storage,
                              const Realization& xi) {
    const auto& spec = tmpl.summary;
    SystemState s;
    s.available.resize(spec.efficiency.size());
    for (std::size_t h = 0; h < spec.efficiency.size(); ++h) {
        double v = spec.inflow_scale * xi.data.at(spec.inflow_component[h]);
        if (spec.storage_slot[h]) v += storage[*spec.storage_slot[h]];
        s.available[h] = std::max(0.0, v);
        s.energy_potential += spec.efficiency[h] * s.available[h];
    }
    return s;
}

/// Pre-decision state of the next stage from an optimal stage solution.
inline SystemState extract_state(const LPSolution& sol, const StageTemplate& tmpl,
                                 const Realization& next) {
    if (!sol.optimal()) throw NumericalError("extract_state needs an optimal stage solution");
    const auto storage = post_decision_state(tmpl, sol.primal);
    return make_state(tmpl, storage, next);
}

}  // namespace msplab
