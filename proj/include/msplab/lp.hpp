#pragma once

// Dense bounded-variable revised simplex.
//
//   minimize    c'x
//   subject to  A x = b,   l <= x <= u
//
// Two phases with one artificial per row, Bland's rule for both the entering
// and the leaving variable, explicit basis inverse refactored periodically.
// Sized for stage subproblems with a few dozen columns.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "msplab/errors.hpp"

namespace msplab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Row-major dense matrix.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    /// Appends a zero row and returns its index.
    std::size_t add_row() {
        data_.resize(data_.size() + cols_, 0.0);
        return rows_++;
    }

    /// Appends a zero column and returns its index.
    std::size_t add_col() {
        std::vector<double> next(rows_ * (cols_ + 1), 0.0);
        for (std::size_t i = 0; i < rows_; ++i)
            std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(i * cols_), cols_,
                        next.begin() + static_cast<std::ptrdiff_t>(i * (cols_ + 1)));
        data_ = std::move(next);
        return cols_++;
    }

    bool operator==(const DenseMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct LinearProgram {
    std::vector<double> objective;
    DenseMatrix eq_matrix;
    std::vector<double> eq_rhs;
    std::vector<double> var_lower;
    std::vector<double> var_upper;

    std::size_t num_vars() const { return objective.size(); }
    std::size_t num_rows() const { return eq_rhs.size(); }

    /// Appends a variable with the given bounds and cost; returns its column.
    std::size_t add_var(double cost, double lower = 0.0, double upper = kInf) {
        objective.push_back(cost);
        var_lower.push_back(lower);
        var_upper.push_back(upper);
        return eq_matrix.add_col();
    }

    /// Appends an equality row with zero coefficients; returns its index.
    std::size_t add_row(double rhs) {
        eq_rhs.push_back(rhs);
        return eq_matrix.add_row();
    }

    /// Throws std::invalid_argument when the dimensions or bounds are inconsistent.
    void validate() const {
        const std::size_t n = objective.size();
        if (eq_matrix.rows() != eq_rhs.size())
            throw std::invalid_argument("eq_matrix rows != eq_rhs length");
        if (eq_matrix.cols() != n && !(eq_matrix.rows() == 0))
            throw std::invalid_argument("eq_matrix cols != objective length");
        if (var_lower.size() != n || var_upper.size() != n)
            throw std::invalid_argument("bound vectors must match objective length");
        for (std::size_t j = 0; j < n; ++j) {
            if (!std::isfinite(var_lower[j]))
                throw std::invalid_argument("variable lower bounds must be finite");
            if (var_lower[j] > var_upper[j])
                throw std::invalid_argument("var_lower > var_upper at column " + std::to_string(j));
        }
    }
};

enum class LPStatus { optimal, infeasible, unbounded };

inline const char* to_string(LPStatus s) {
    switch (s) {
        case LPStatus::optimal: return "optimal";
        case LPStatus::infeasible: return "infeasible";
        case LPStatus::unbounded: return "unbounded";
    }
    return "?";
}

struct LPSolution {
    std::vector<double> primal;
    std::vector<double> duals;  // one per equality row
    double objective = 0.0;
    LPStatus status = LPStatus::infeasible;
    std::size_t pivots = 0;

    bool optimal() const { return status == LPStatus::optimal; }
};

struct SimplexTolerances {
    double feasibility = 1e-7;
    double duality = 1e-6;
    double pivot = 1e-9;
    double optimality = 1e-9;  // reduced-cost threshold, scaled by max |c|
    std::size_t refactor_every = 32;
    std::size_t max_pivots = 100000;
};

namespace detail {

enum class VarState : unsigned char { basic, at_lower, at_upper };

// Working problem in shifted form: A x' = r, 0 <= x' <= u', with an identity
// block of artificials appended after the structural columns.
class BoundedSimplex {
public:
    BoundedSimplex(const LinearProgram& lp, const SimplexTolerances& tol)
        : tol_(tol), m_(lp.num_rows()), n_(lp.num_vars()), total_(n_ + m_),
          a_(m_, total_), rhs_(m_), upper_(total_), sign_(m_, 1.0),
          state_(total_, VarState::at_lower), basis_(m_), x_basic_(m_), binv_(m_, m_) {
        for (std::size_t i = 0; i < m_; ++i) {
            double r = lp.eq_rhs[i];
            for (std::size_t j = 0; j < n_; ++j) r -= lp.eq_matrix(i, j) * lp.var_lower[j];
            sign_[i] = r < 0.0 ? -1.0 : 1.0;
            rhs_[i] = sign_[i] * r;
            for (std::size_t j = 0; j < n_; ++j) a_(i, j) = sign_[i] * lp.eq_matrix(i, j);
            a_(i, n_ + i) = 1.0;
        }
        for (std::size_t j = 0; j < n_; ++j) upper_[j] = lp.var_upper[j] - lp.var_lower[j];
        for (std::size_t i = 0; i < m_; ++i) {
            upper_[n_ + i] = kInf;
            basis_[i] = n_ + i;
            state_[n_ + i] = VarState::basic;
            x_basic_[i] = rhs_[i];
            binv_(i, i) = 1.0;
        }
    }

    // Returns false when the phase hit an unbounded ray.
    bool run(const std::vector<double>& cost) {
        double cmax = 1.0;
        for (double c : cost) cmax = std::max(cmax, std::abs(c));
        const double opt_tol = tol_.optimality * cmax;
        std::vector<double> y(m_), column(m_);
        std::size_t since_refactor = 0;
        for (;;) {
            if (pivots_ >= tol_.max_pivots)
                throw NumericalError("simplex pivot limit exceeded");
            for (std::size_t i = 0; i < m_; ++i) {
                double s = 0.0;
                for (std::size_t k = 0; k < m_; ++k) s += cost[basis_[k]] * binv_(k, i);
                y[i] = s;
            }
            // Bland: lowest-index eligible column enters.
            std::size_t entering = total_;
            for (std::size_t j = 0; j < total_; ++j) {
                if (state_[j] == VarState::basic || upper_[j] <= 0.0) continue;
                double d = cost[j];
                for (std::size_t i = 0; i < m_; ++i) d -= y[i] * a_(i, j);
                if ((state_[j] == VarState::at_lower && d < -opt_tol) ||
                    (state_[j] == VarState::at_upper && d > opt_tol)) {
                    entering = j;
                    break;
                }
            }
            if (entering == total_) return true;

            for (std::size_t i = 0; i < m_; ++i) {
                double s = 0.0;
                for (std::size_t k = 0; k < m_; ++k) s += binv_(i, k) * a_(k, entering);
                column[i] = s;
            }
            const double dir = state_[entering] == VarState::at_lower ? 1.0 : -1.0;

            // Ratio test; ties resolved by the lowest variable index.
            double step = upper_[entering];
            std::size_t blocking_var = std::isfinite(step) ? entering : total_;
            std::size_t leave_row = m_;
            for (std::size_t i = 0; i < m_; ++i) {
                const double alpha = dir * column[i];
                double limit;
                if (alpha > tol_.pivot) {
                    limit = std::max(0.0, x_basic_[i]) / alpha;
                } else if (alpha < -tol_.pivot && std::isfinite(upper_[basis_[i]])) {
                    limit = std::max(0.0, upper_[basis_[i]] - x_basic_[i]) / -alpha;
                } else {
                    continue;
                }
                const double slack = 1e-12 * std::max(1.0, std::abs(step));
                if (limit < step - slack ||
                    (limit <= step + slack && basis_[i] < blocking_var)) {
                    step = limit;
                    blocking_var = basis_[i];
                    leave_row = i;
                }
            }
            if (blocking_var == total_) return false;

            for (std::size_t i = 0; i < m_; ++i) x_basic_[i] -= dir * step * column[i];
            ++pivots_;

            if (leave_row == m_) {
                state_[entering] = state_[entering] == VarState::at_lower ? VarState::at_upper
                                                                          : VarState::at_lower;
                continue;
            }

            const std::size_t leaving = basis_[leave_row];
            state_[leaving] = dir * column[leave_row] > 0.0 ? VarState::at_lower : VarState::at_upper;
            const double entering_value =
                state_[entering] == VarState::at_lower ? step : upper_[entering] - step;
            basis_[leave_row] = entering;
            state_[entering] = VarState::basic;
            x_basic_[leave_row] = entering_value;

            if (++since_refactor >= tol_.refactor_every) {
                refactor();
                since_refactor = 0;
            } else {
                pivot_inverse(leave_row, column);
            }
            for (std::size_t i = 0; i < m_; ++i)
                if (x_basic_[i] < 0.0 && x_basic_[i] > -tol_.feasibility) x_basic_[i] = 0.0;
        }
    }

    double artificial_sum() const {
        double s = 0.0;
        for (std::size_t i = 0; i < m_; ++i)
            if (basis_[i] >= n_) s += x_basic_[i];
        return s;
    }

    // Artificials may stay basic at zero but can never re-enter.
    void fix_artificials() {
        for (std::size_t i = 0; i < m_; ++i) upper_[n_ + i] = 0.0;
        for (std::size_t i = 0; i < m_; ++i)
            if (basis_[i] >= n_) x_basic_[i] = 0.0;
    }

    std::vector<double> shifted_primal() const {
        std::vector<double> x(n_, 0.0);
        for (std::size_t j = 0; j < n_; ++j)
            if (state_[j] == VarState::at_upper) x[j] = upper_[j];
        for (std::size_t i = 0; i < m_; ++i)
            if (basis_[i] < n_) x[basis_[i]] = x_basic_[i];
        return x;
    }

    // Row multipliers of the original (unflipped) rows.
    std::vector<double> duals(const std::vector<double>& cost) const {
        std::vector<double> y(m_);
        for (std::size_t i = 0; i < m_; ++i) {
            double s = 0.0;
            for (std::size_t k = 0; k < m_; ++k) s += cost[basis_[k]] * binv_(k, i);
            y[i] = s * sign_[i];
        }
        return y;
    }

    std::size_t pivots() const { return pivots_; }
    std::size_t structural() const { return n_; }
    std::size_t total() const { return total_; }

private:
    void pivot_inverse(std::size_t r, const std::vector<double>& column) {
        const double p = column[r];
        for (std::size_t k = 0; k < m_; ++k) binv_(r, k) /= p;
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == r || column[i] == 0.0) continue;
            const double f = column[i];
            for (std::size_t k = 0; k < m_; ++k) binv_(i, k) -= f * binv_(r, k);
        }
    }

    // Gauss-Jordan with partial pivoting on the current basis columns, then
    // recompute basic values from the nonbasic bound positions.
    void refactor() {
        DenseMatrix work(m_, 2 * m_);
        for (std::size_t i = 0; i < m_; ++i) {
            for (std::size_t k = 0; k < m_; ++k) work(i, k) = a_(i, basis_[k]);
            work(i, m_ + i) = 1.0;
        }
        for (std::size_t c = 0; c < m_; ++c) {
            std::size_t best = c;
            for (std::size_t i = c + 1; i < m_; ++i)
                if (std::abs(work(i, c)) > std::abs(work(best, c))) best = i;
            if (std::abs(work(best, c)) < 1e-14) throw NumericalError("singular simplex basis");
            if (best != c)
                for (std::size_t k = 0; k < 2 * m_; ++k) std::swap(work(c, k), work(best, k));
            const double p = work(c, c);
            for (std::size_t k = 0; k < 2 * m_; ++k) work(c, k) /= p;
            for (std::size_t i = 0; i < m_; ++i) {
                if (i == c || work(i, c) == 0.0) continue;
                const double f = work(i, c);
                for (std::size_t k = 0; k < 2 * m_; ++k) work(i, k) -= f * work(c, k);
            }
        }
        for (std::size_t i = 0; i < m_; ++i)
            for (std::size_t k = 0; k < m_; ++k) binv_(i, k) = work(i, m_ + k);

        std::vector<double> r = rhs_;
        for (std::size_t j = 0; j < total_; ++j)
            if (state_[j] == VarState::at_upper)
                for (std::size_t i = 0; i < m_; ++i) r[i] -= a_(i, j) * upper_[j];
        for (std::size_t i = 0; i < m_; ++i) {
            double s = 0.0;
            for (std::size_t k = 0; k < m_; ++k) s += binv_(i, k) * r[k];
            x_basic_[i] = s;
        }
    }

    SimplexTolerances tol_;
    std::size_t m_, n_, total_;
    DenseMatrix a_;
    std::vector<double> rhs_, upper_, sign_;
    std::vector<VarState> state_;
    std::vector<std::size_t> basis_;
    std::vector<double> x_basic_;
    DenseMatrix binv_;
    std::size_t pivots_ = 0;
};

}  // namespace detail

/// Solves `lp`. Never throws on infeasible/unbounded input; the status says so.
/// Throws std::invalid_argument on malformed input.
inline LPSolution solve(const LinearProgram& lp, const SimplexTolerances& tol = {}) {
    lp.validate();
    const std::size_t n = lp.num_vars();
    const std::size_t m = lp.num_rows();

    LPSolution out;
    detail::BoundedSimplex simplex(lp, tol);

    std::vector<double> phase1(simplex.total(), 0.0);
    for (std::size_t i = 0; i < m; ++i) phase1[n + i] = 1.0;
    simplex.run(phase1);

    double scale = 1.0;
    for (double b : lp.eq_rhs) scale = std::max(scale, std::abs(b));
    if (simplex.artificial_sum() > tol.feasibility * scale) {
        out.status = LPStatus::infeasible;
        out.pivots = simplex.pivots();
        return out;
    }
    simplex.fix_artificials();

    std::vector<double> phase2(simplex.total(), 0.0);
    std::copy(lp.objective.begin(), lp.objective.end(), phase2.begin());
    if (!simplex.run(phase2)) {
        out.status = LPStatus::unbounded;
        out.pivots = simplex.pivots();
        return out;
    }

    out.primal = simplex.shifted_primal();
    for (std::size_t j = 0; j < n; ++j) out.primal[j] += lp.var_lower[j];
    out.duals = simplex.duals(phase2);
    out.objective = 0.0;
    for (std::size_t j = 0; j < n; ++j) out.objective += lp.objective[j] * out.primal[j];
    out.status = LPStatus::optimal;
    out.pivots = simplex.pivots();
    return out;
}

/// max_i |(A x - b)_i|
inline double primal_residual(const LinearProgram& lp, std::span<const double> x) {
    double worst = 0.0;
    for (std::size_t i = 0; i < lp.num_rows(); ++i) {
        double r = -lp.eq_rhs[i];
        for (std::size_t j = 0; j < lp.num_vars(); ++j) r += lp.eq_matrix(i, j) * x[j];
        worst = std::max(worst, std::abs(r));
    }
    return worst;
}

/// Lagrangian dual value  y'b + sum_j min(d_j l_j, d_j u_j)  with d = c - A'y.
/// Reduced costs below `zero_tol` in magnitude count as zero. Returns -inf when
/// y is dual infeasible (negative reduced cost on an unbounded column).
inline double dual_objective(const LinearProgram& lp, const LPSolution& sol, double zero_tol = 1e-9) {
    double value = 0.0;
    for (std::size_t i = 0; i < lp.num_rows(); ++i) value += sol.duals[i] * lp.eq_rhs[i];
    for (std::size_t j = 0; j < lp.num_vars(); ++j) {
        double d = lp.objective[j];
        for (std::size_t i = 0; i < lp.num_rows(); ++i) d -= sol.duals[i] * lp.eq_matrix(i, j);
        if (std::abs(d) <= zero_tol) continue;
        if (d > 0.0) {
            value += d * lp.var_lower[j];
        } else {
            if (!std::isfinite(lp.var_upper[j])) return -kInf;
            value += d * lp.var_upper[j];
        }
    }
    return value;
}

}  // namespace msplab
