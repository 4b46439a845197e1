#pragma once

// State-to-horizon map T(s) = theta0 + theta1 * phi1(s), piecewise over phi1,
// fitted by segmented least squares; and the epsilon-sufficient horizon and
// suboptimality bound for discounted stationary problems.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "msplab/errors.hpp"

namespace msplab {

struct HorizonPiece {
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    double theta0 = 0.0;
    double theta1 = 0.0;
    double r2 = 1.0;
    std::size_t count = 0;

    bool operator==(const HorizonPiece&) const = default;
};

struct HorizonMap {
    std::vector<HorizonPiece> pieces;
    double r2_avg = 1.0;

    /// theta0 + theta1 * phi1 of the piece containing phi1. Values below the
    /// first piece use the first piece.
    double predict(double phi1) const {
        if (pieces.empty()) throw ConfigError("empty horizon map");
        for (const auto& p : pieces)
            if (phi1 < p.hi) return p.theta0 + p.theta1 * phi1;
        const auto& last = pieces.back();
        return last.theta0 + last.theta1 * phi1;
    }

    void validate() const {
        if (pieces.empty()) throw ConfigError("horizon map has no pieces");
        if (pieces.front().lo != 0.0) throw ConfigError("first piece must start at 0");
        if (!std::isinf(pieces.back().hi)) throw ConfigError("last piece must extend to infinity");
        for (std::size_t k = 0; k + 1 < pieces.size(); ++k)
            if (pieces[k].hi != pieces[k + 1].lo || !(pieces[k].lo < pieces[k].hi))
                throw ConfigError("horizon map pieces must partition [0, inf) in ascending order");
    }

    bool operator==(const HorizonMap&) const = default;
};

inline double predict(const HorizonMap& map, double phi1) { return map.predict(phi1); }

/// Horizon used by a dynamic policy: ceil of the prediction, clamped to [1, tau_max].
inline std::size_t horizon_from_prediction(double prediction, std::size_t tau_max) {
    if (tau_max == 0) throw ConfigError("tau_max must be at least 1");
    if (!std::isfinite(prediction)) return prediction > 0 ? tau_max : 1;
    const double c = std::ceil(prediction - 1e-9);
    if (c <= 1.0) return 1;
    if (c >= static_cast<double>(tau_max)) return tau_max;
    return static_cast<std::size_t>(c);
}

struct HorizonPoint {
    double phi1 = 0.0;
    double tau = 0.0;
};

namespace detail {

struct LineFit {
    double theta0 = 0.0, theta1 = 0.0, sse = 0.0, sst = 0.0;
};

// Least squares on pts[i, j), centered two-pass sums.
inline LineFit fit_line(const std::vector<HorizonPoint>& pts, std::size_t i, std::size_t j) {
    LineFit f;
    const double n = static_cast<double>(j - i);
    double mx = 0.0, my = 0.0;
    for (std::size_t k = i; k < j; ++k) {
        mx += pts[k].phi1;
        my += pts[k].tau;
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = i; k < j; ++k) {
        const double dx = pts[k].phi1 - mx, dy = pts[k].tau - my;
        sxx += dx * dx;
        sxy += dx * dy;
        f.sst += dy * dy;
    }
    f.theta1 = sxx > 0.0 ? sxy / sxx : 0.0;
    f.theta0 = my - f.theta1 * mx;
    for (std::size_t k = i; k < j; ++k) {
        const double e = pts[k].tau - (f.theta0 + f.theta1 * pts[k].phi1);
        f.sse += e * e;
    }
    return f;
}

}  // namespace detail

/// Segmented regression of tau on phi1 with at most `max_pieces` contiguous
/// pieces, each holding at least two points, breaking only between distinct
/// phi1 values (at their midpoint). Minimizes total squared error; among fits
/// within round-off of the best, the one with fewest pieces wins. A piece
/// with constant tau has R^2 = 1. r2_avg weights piece R^2 by point count.
inline HorizonMap fit_horizon_map(std::vector<HorizonPoint> pts, std::size_t max_pieces = 3) {
    if (pts.size() < 2) throw ConfigError("fit_horizon_map needs at least two points");
    if (max_pieces == 0) throw ConfigError("max_pieces must be at least 1");
    for (const auto& p : pts)
        if (!std::isfinite(p.phi1) || !std::isfinite(p.tau)) throw ConfigError("non-finite regression point");
    std::stable_sort(pts.begin(), pts.end(), [](const HorizonPoint& a, const HorizonPoint& b) {
        return a.phi1 < b.phi1 || (a.phi1 == b.phi1 && a.tau < b.tau);
    });
    const std::size_t n = pts.size();
    const double inf = std::numeric_limits<double>::infinity();

    std::vector<std::vector<detail::LineFit>> seg(n + 1, std::vector<detail::LineFit>(n + 1));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 2; j <= n; ++j) seg[i][j] = detail::fit_line(pts, i, j);
    auto can_split = [&](std::size_t i) { return i == 0 || i == n || pts[i - 1].phi1 < pts[i].phi1; };

    // best[k][j]: min SSE covering pts[0, j) with k pieces
    const std::size_t K = std::min(max_pieces, n / 2);
    std::vector<std::vector<double>> best(K + 1, std::vector<double>(n + 1, inf));
    std::vector<std::vector<std::size_t>> from(K + 1, std::vector<std::size_t>(n + 1, 0));
    best[0][0] = 0.0;
    for (std::size_t k = 1; k <= K; ++k)
        for (std::size_t j = 2; j <= n; ++j) {
            if (!can_split(j)) continue;
            for (std::size_t i = 0; i + 2 <= j; ++i) {
                if (!std::isfinite(best[k - 1][i]) || !can_split(i)) continue;
                const double v = best[k - 1][i] + seg[i][j].sse;
                if (v < best[k][j]) {
                    best[k][j] = v;
                    from[k][j] = i;
                }
            }
        }
    double overall = inf;
    for (std::size_t k = 1; k <= K; ++k) overall = std::min(overall, best[k][n]);
    if (!std::isfinite(overall)) throw ConfigError("no admissible segmentation of the regression points");
    const double total_sst = detail::fit_line(pts, 0, n).sst;
    const double slack = 1e-9 * std::max(total_sst, 1.0);
    std::size_t pieces = 1;
    while (!(best[pieces][n] <= overall + slack)) ++pieces;

    std::vector<std::size_t> cuts{n};
    for (std::size_t k = pieces, j = n; k > 0; --k) {
        j = from[k][j];
        cuts.push_back(j);
    }
    std::reverse(cuts.begin(), cuts.end());

    HorizonMap map;
    double weighted = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const std::size_t i = cuts[k], j = cuts[k + 1];
        const auto& f = seg[i][j];
        HorizonPiece p;
        p.lo = k == 0 ? 0.0 : 0.5 * (pts[i - 1].phi1 + pts[i].phi1);
        p.hi = j == n ? inf : 0.5 * (pts[j - 1].phi1 + pts[j].phi1);
        p.theta0 = f.theta0;
        p.theta1 = f.theta1;
        p.count = j - i;
        p.r2 = f.sst > 0.0 ? 1.0 - f.sse / f.sst : 1.0;
        weighted += p.r2 * static_cast<double>(p.count);
        map.pieces.push_back(p);
    }
    map.r2_avg = weighted / static_cast<double>(n);
    return map;
}

/// Total squared error of `map` on the points.
inline double map_sse(const HorizonMap& map, const std::vector<HorizonPoint>& pts) {
    double s = 0.0;
    for (const auto& p : pts) {
        const double e = p.tau - map.predict(p.phi1);
        s += e * e;
    }
    return s;
}

// Map file:
// {"format": 1, "basis": ["1", "phi1"], "r2_avg": x,
//  "pieces": [{"lo", "hi" (null = inf), "theta0", "theta1", "r2", "count"}]}

inline nlohmann::json to_json(const HorizonMap& map) {
    nlohmann::json j{{"format", 1}, {"basis", {"1", "phi1 = sum_h r_h s_h"}}, {"r2_avg", map.r2_avg}};
    j["pieces"] = nlohmann::json::array();
    for (const auto& p : map.pieces) {
        nlohmann::json q{{"lo", p.lo}, {"theta0", p.theta0}, {"theta1", p.theta1}, {"r2", p.r2}, {"count", p.count}};
        q["hi"] = std::isinf(p.hi) ? nlohmann::json(nullptr) : nlohmann::json(p.hi);
        j["pieces"].push_back(q);
    }
    return j;
}

inline HorizonMap horizon_map_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<int>() != 1) throw SchemaError("horizon map: unsupported format");
        HorizonMap map;
        map.r2_avg = j.value("r2_avg", 1.0);
        for (const auto& q : j.at("pieces")) {
            HorizonPiece p;
            p.lo = q.at("lo").get<double>();
            p.hi = q.at("hi").is_null() ? std::numeric_limits<double>::infinity() : q.at("hi").get<double>();
            p.theta0 = q.at("theta0").get<double>();
            p.theta1 = q.at("theta1").get<double>();
            p.r2 = q.value("r2", 1.0);
            p.count = q.value("count", std::size_t{0});
            map.pieces.push_back(p);
        }
        map.validate();
        return map;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("horizon map: ") + e.what());
    } catch (const ConfigError& e) {
        throw SchemaError(std::string("horizon map: ") + e.what());
    }
}

inline void save_horizon_map(const HorizonMap& map, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << to_json(map).dump(2) << "\n";
}

inline HorizonMap load_horizon_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("horizon map " + path + ": " + e.what());
    }
    return horizon_map_from_json(j);
}

// ---------------------------------------------------------------------------
// Horizon bounds.

enum class CostRegime { nonpositive, general };

struct BoundInput {
    double kappa = 1.0;
    double gamma = 0.9;
    double epsilon = 1e-5;
    CostRegime regime = CostRegime::general;
};

/// tau*_eps = log(eps (1 - gamma) / kappa) / log(gamma); 0 when that is <= 0.
inline double epsilon_sufficient_horizon(const BoundInput& b) {
    if (!(b.gamma > 0.0 && b.gamma < 1.0)) throw ConfigError("gamma must lie strictly between 0 and 1");
    if (!(b.kappa > 0.0)) throw ConfigError("kappa must be positive");
    if (!(b.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    const double ratio = b.epsilon * (1.0 - b.gamma) / b.kappa;
    if (ratio >= 1.0) return 0.0;
    return std::log(ratio) / std::log(b.gamma);
}

/// gamma^tau kappa / (1 - gamma), doubled for general-sign costs.
inline double suboptimality_bound(double tau, double gamma, double kappa, CostRegime regime = CostRegime::general) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie strictly between 0 and 1");
    if (tau < 0.0) throw ConfigError("tau must be nonnegative");
    const double base = std::pow(gamma, tau) * kappa / (1.0 - gamma);
    return regime == CostRegime::general ? 2.0 * base : base;
}

}  // namespace msplab
