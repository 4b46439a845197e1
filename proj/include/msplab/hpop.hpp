#pragma once

// Hydrothermal power operation planning instances.
//
// Per stage: reservoir balance for plants with storage, pass-through balance
// for run-of-river plants, one demand row (>= via a surplus column), turbine
// and thermal capacities. State = end-of-stage storage of the reservoirs.

#include <algorithm>
#include <array>
#include <cstddef>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "msplab/errors.hpp"
#include "msplab/lp.hpp"
#include "msplab/model.hpp"

namespace msplab {

struct Reservoir {
    double min_level = 0.0;
    double max_level = 0.0;
    double initial = 0.0;

    bool operator==(const Reservoir&) const = default;
};

struct HydroPlant {
    std::string name;
    double efficiency = 0.0;     // MW per unit of turbined flow
    double max_turbine = 0.0;
    std::optional<Reservoir> reservoir;  // empty for run-of-river
    std::vector<std::size_t> upstream;   // indices into HPOPInstance::hydro
    std::vector<std::size_t> downstream;

    bool operator==(const HydroPlant&) const = default;
};

struct ThermalPlant {
    std::string name;
    double capacity = 0.0;
    double min_output = 0.0;
    double cost = 0.0;

    bool operator==(const ThermalPlant&) const = default;
};

struct HPOPInstance {
    std::vector<HydroPlant> hydro;
    std::vector<ThermalPlant> thermal;
    double demand = 0.0;
    double penalty = 500.0;
    double c0 = 1.0;  // inflow-to-storage scale
    DiscreteProcess inflow;  // data[h] = inflow of hydro[h]

    std::vector<std::size_t> reservoir_plants() const {
        std::vector<std::size_t> out;
        for (std::size_t h = 0; h < hydro.size(); ++h)
            if (hydro[h].reservoir) out.push_back(h);
        return out;
    }

    std::vector<double> initial_storage() const {
        std::vector<double> x;
        for (const auto& p : hydro)
            if (p.reservoir) x.push_back(p.reservoir->initial);
        return x;
    }

    void validate() const {
        const std::size_t n = hydro.size();
        for (std::size_t h = 0; h < n; ++h) {
            const auto& p = hydro[h];
            for (auto m : p.upstream) {
                if (m >= n) throw ConfigError("upstream index out of range for " + p.name);
                const auto& down = hydro[m].downstream;
                if (std::find(down.begin(), down.end(), h) == down.end())
                    throw ConfigError("upstream/downstream sets disagree at " + p.name);
            }
            for (auto m : p.downstream) {
                if (m >= n) throw ConfigError("downstream index out of range for " + p.name);
                const auto& up = hydro[m].upstream;
                if (std::find(up.begin(), up.end(), h) == up.end())
                    throw ConfigError("upstream/downstream sets disagree at " + p.name);
            }
            if (p.reservoir && p.reservoir->min_level > p.reservoir->max_level)
                throw ConfigError("reservoir bounds inverted at " + p.name);
            if (p.max_turbine < 0.0 || p.efficiency < 0.0)
                throw ConfigError("negative turbine data at " + p.name);
        }
        for (const auto& f : thermal)
            if (f.min_output > f.capacity) throw ConfigError("thermal bounds inverted at " + f.name);
        if (inflow.size() == 0) throw ConfigError("instance has no inflow realizations");
        if (inflow[0].data.size() != n)
            throw ConfigError("inflow realizations must carry one value per hydro plant");
    }

    bool operator==(const HPOPInstance&) const = default;
};

/// Column and row indices of the stage LP built by make_stage_template.
/// Columns: storage (reservoirs), turbined, spill, pump-back (all plants),
/// thermal, penalty, demand surplus.
struct HpopLayout {
    std::vector<std::size_t> storage;   // per reservoir plant, in plant order
    std::vector<std::size_t> turbine;   // per plant
    std::vector<std::size_t> spill;
    std::vector<std::size_t> pump;
    std::vector<std::size_t> thermal;
    std::size_t penalty = 0;
    std::size_t surplus = 0;
    std::vector<std::size_t> balance_row;  // per plant
    std::size_t demand_row = 0;
};

inline HpopLayout hpop_layout(const HPOPInstance& inst) {
    HpopLayout L;
    std::size_t col = 0;
    for (std::size_t h = 0; h < inst.hydro.size(); ++h)
        if (inst.hydro[h].reservoir) L.storage.push_back(col++);
    for (std::size_t h = 0; h < inst.hydro.size(); ++h) L.turbine.push_back(col++);
    for (std::size_t h = 0; h < inst.hydro.size(); ++h) L.spill.push_back(col++);
    for (std::size_t h = 0; h < inst.hydro.size(); ++h) L.pump.push_back(col++);
    for (std::size_t f = 0; f < inst.thermal.size(); ++f) L.thermal.push_back(col++);
    L.penalty = col++;
    L.surplus = col++;
    for (std::size_t h = 0; h < inst.hydro.size(); ++h) L.balance_row.push_back(h);
    L.demand_row = inst.hydro.size();
    return L;
}

/// Stage template for one HPOP stage. Pump-back on a plant with no upstream
/// plant in the network has no water source and is fixed at zero.
inline StageTemplate make_stage_template(const HPOPInstance& inst) {
    inst.validate();
    const HpopLayout L = hpop_layout(inst);
    const std::size_t H = inst.hydro.size();
    const std::size_t n = L.surplus + 1;
    const std::size_t m = H + 1;

    StageTemplate t;
    LinearProgram& lp = t.base_lp;
    lp.objective.assign(n, 0.0);
    lp.var_lower.assign(n, 0.0);
    lp.var_upper.assign(n, kInf);
    lp.eq_rhs.assign(m, 0.0);
    lp.eq_matrix = DenseMatrix(m, n);
    t.column_names.resize(n);

    std::size_t slot = 0;
    for (std::size_t h = 0; h < H; ++h) {
        const auto& p = inst.hydro[h];
        const std::size_t row = L.balance_row[h];
        if (p.reservoir) {
            const std::size_t x = L.storage[slot];
            lp.eq_matrix(row, x) = 1.0;
            lp.var_lower[x] = p.reservoir->min_level;
            lp.var_upper[x] = p.reservoir->max_level;
            t.column_names[x] = "storage_" + p.name;
            t.state_extract.push_back(x);
            ++slot;
        }
        lp.eq_matrix(row, L.turbine[h]) += 1.0;
        lp.eq_matrix(row, L.spill[h]) += 1.0;
        lp.eq_matrix(row, L.pump[h]) -= 1.0;
        for (auto u : p.upstream) {
            lp.eq_matrix(row, L.turbine[u]) -= 1.0;
            lp.eq_matrix(row, L.spill[u]) -= 1.0;
        }
        for (auto d : p.downstream) lp.eq_matrix(row, L.pump[d]) += 1.0;

        lp.var_upper[L.turbine[h]] = p.max_turbine;
        if (p.upstream.empty()) lp.var_upper[L.pump[h]] = 0.0;
        t.column_names[L.turbine[h]] = "turbine_" + p.name;
        t.column_names[L.spill[h]] = "spill_" + p.name;
        t.column_names[L.pump[h]] = "pump_" + p.name;

        t.rhs_random_map.push_back({row, h, inst.c0});
        lp.eq_matrix(L.demand_row, L.turbine[h]) = p.efficiency;
    }
    for (std::size_t f = 0; f < inst.thermal.size(); ++f) {
        const auto& g = inst.thermal[f];
        const std::size_t c = L.thermal[f];
        lp.eq_matrix(L.demand_row, c) = 1.0;
        lp.objective[c] = g.cost;
        lp.var_lower[c] = g.min_output;
        lp.var_upper[c] = g.capacity;
        t.column_names[c] = "thermal_" + g.name;
    }
    lp.eq_matrix(L.demand_row, L.penalty) = 1.0;
    lp.objective[L.penalty] = inst.penalty;
    lp.eq_matrix(L.demand_row, L.surplus) = -1.0;
    lp.eq_rhs[L.demand_row] = inst.demand;
    t.column_names[L.penalty] = "penalty";
    t.column_names[L.surplus] = "surplus";

    t.linking_matrix = DenseMatrix(m, t.state_extract.size());
    slot = 0;
    for (std::size_t h = 0; h < H; ++h)
        if (inst.hydro[h].reservoir) t.linking_matrix(L.balance_row[h], slot++) = -1.0;

    t.summary.inflow_scale = inst.c0;
    slot = 0;
    for (std::size_t h = 0; h < H; ++h) {
        t.summary.efficiency.push_back(inst.hydro[h].efficiency);
        t.summary.inflow_component.push_back(h);
        if (inst.hydro[h].reservoir) t.summary.storage_slot.emplace_back(slot++);
        else t.summary.storage_slot.emplace_back(std::nullopt);
    }
    t.validate();
    return t;
}

// ---------------------------------------------------------------------------
// Benchmark presets.

namespace presets {

// Six-plant network, 1-based names h1..h6. Reservoirs at h1, h3, h4.
struct PlantRow {
    double r, qmax;
    bool reservoir;
    double vmax, vmin, x0;
    std::vector<int> up, down;  // 1-based
};

inline const std::array<PlantRow, 6>& plants() {
    static const std::array<PlantRow, 6> rows{{
        {0.18, 220.0, true, 672.0, 0.0, 336.0, {}, {2}},
        {0.35, 585.0, false, 0, 0, 0, {1}, {4}},
        {0.75, 1688.0, true, 17217.0, 0.0, 10330.2, {}, {4}},
        {0.32, 5220.0, true, 2500.0, 0.0, 1250.0, {2, 3}, {6}},
        {0.56, 2028.0, false, 0, 0, 0, {}, {6}},
        {0.15, 1480.0, false, 0, 0, 0, {4, 5}, {}},
    }};
    return rows;
}

inline const std::vector<std::array<double, 7>>& five_realizations() {
    // h1..h6 inflows, probability
    static const std::vector<std::array<double, 7>> rows{
        {245.50, 125.20, 1438.00, 311.00, 16.20, 29.70, 0.20},
        {201.70, 103.90, 1085.30, 221.90, 13.00, 23.60, 0.15},
        {158.00, 82.60, 732.50, 132.70, 9.90, 17.50, 0.30},
        {130.20, 58.60, 488.10, 93.10, 7.00, 10.70, 0.15},
        {102.40, 34.60, 243.60, 53.40, 4.20, 3.90, 0.20},
    };
    return rows;
}

inline const std::vector<std::array<double, 7>>& twelve_realizations() {
    static const std::vector<std::array<double, 7>> rows{
        {245.50, 125.20, 1438.00, 120.00, 16.20, 29.70, 0.09},
        {232.50, 117.00, 1329.50, 111.00, 15.10, 27.40, 0.10},
        {219.40, 108.70, 1220.90, 101.90, 14.00, 25.00, 0.10},
        {206.40, 100.50, 1112.30, 92.90, 12.90, 22.70, 0.09},
        {193.40, 92.30, 1003.70, 83.90, 11.80, 20.30, 0.07},
        {180.40, 84.00, 895.10, 74.80, 10.70, 18.00, 0.06},
        {167.40, 75.80, 786.60, 65.80, 9.70, 15.60, 0.06},
        {154.40, 67.50, 678.00, 56.70, 8.60, 13.30, 0.07},
        {141.40, 59.30, 569.40, 47.70, 7.50, 10.90, 0.09},
        {128.40, 51.10, 460.80, 38.70, 6.40, 8.60, 0.10},
        {115.40, 42.80, 352.20, 29.60, 5.30, 6.20, 0.10},
        {102.40, 34.60, 243.60, 20.60, 4.20, 3.90, 0.09},
    };
    return rows;
}

inline constexpr std::array<double, 5> kDemands{1000.0, 1500.0, 1750.0, 2000.0, 2250.0};

}  // namespace presets

struct HpopPreset {
    int plants = 1;          // 1, 3 or 6
    double demand = 1000.0;
    int realizations = 5;    // 5 or 12
    double c0 = 1.0;
    bool strict = false;     // reject demands outside the benchmark grid
};

/// Benchmark instance. One plant selects h3, three plants select h2..h4.
inline HPOPInstance build_hpop(const HpopPreset& preset) {
    std::vector<int> chosen;
    switch (preset.plants) {
        case 1: chosen = {3}; break;
        case 3: chosen = {2, 3, 4}; break;
        case 6: chosen = {1, 2, 3, 4, 5, 6}; break;
        default: throw ConfigError("unknown plant preset " + std::to_string(preset.plants) + " (use 1, 3 or 6)");
    }
    const std::vector<std::array<double, 7>>* table = nullptr;
    if (preset.realizations == 5) table = &presets::five_realizations();
    else if (preset.realizations == 12) table = &presets::twelve_realizations();
    else throw ConfigError("unknown realization preset " + std::to_string(preset.realizations) + " (use 5 or 12)");
    if (preset.strict &&
        std::find(presets::kDemands.begin(), presets::kDemands.end(), preset.demand) == presets::kDemands.end())
        throw ConfigError("demand " + std::to_string(preset.demand) + " is not a benchmark value");
    if (preset.demand < 0.0) throw ConfigError("demand must be nonnegative");

    HPOPInstance inst;
    inst.demand = preset.demand;
    inst.penalty = 500.0;
    inst.c0 = preset.c0;

    auto local = [&](int plant) -> std::optional<std::size_t> {
        auto it = std::find(chosen.begin(), chosen.end(), plant);
        if (it == chosen.end()) return std::nullopt;
        return static_cast<std::size_t>(it - chosen.begin());
    };
    for (int id : chosen) {
        const auto& row = presets::plants()[static_cast<std::size_t>(id - 1)];
        HydroPlant p;
        p.name = "h" + std::to_string(id);
        p.efficiency = row.r;
        p.max_turbine = row.qmax;
        if (row.reservoir) p.reservoir = Reservoir{row.vmin, row.vmax, row.x0};
        for (int u : row.up)
            if (auto k = local(u)) p.upstream.push_back(*k);
        for (int d : row.down)
            if (auto k = local(d)) p.downstream.push_back(*k);
        inst.hydro.push_back(std::move(p));
    }
    const std::array<double, 4> costs{20.0, 40.0, 80.0, 160.0};
    for (std::size_t f = 0; f < costs.size(); ++f)
        inst.thermal.push_back({"f" + std::to_string(f + 1), 20.0, 0.0, costs[f]});

    std::vector<Realization> reals;
    for (const auto& row : *table) {
        Realization r;
        r.probability = row[6];
        for (int id : chosen) r.data.push_back(row[static_cast<std::size_t>(id - 1)]);
        reals.push_back(std::move(r));
    }
    inst.inflow = DiscreteProcess(std::move(reals));
    inst.validate();
    return inst;
}

// ---------------------------------------------------------------------------
// Instance files (JSON, "format": 1).
//
// {
//   "format": 1,
//   "hydro":   [{"name", "efficiency", "max_turbine",
//                "reservoir": {"min", "max", "initial"} | null,
//                "upstream": [idx], "downstream": [idx]}],
//   "thermal": [{"name", "capacity", "min", "cost"}],
//   "demand": d, "penalty": c_p, "c0": 1.0,
//   "inflow": {"realizations": [[per-plant inflow]], "probabilities": [p]}
// }

inline nlohmann::json to_json(const HPOPInstance& inst) {
    using nlohmann::json;
    json j;
    j["format"] = 1;
    j["hydro"] = json::array();
    for (const auto& p : inst.hydro) {
        json h{{"name", p.name}, {"efficiency", p.efficiency}, {"max_turbine", p.max_turbine},
               {"upstream", p.upstream}, {"downstream", p.downstream}};
        if (p.reservoir)
            h["reservoir"] = {{"min", p.reservoir->min_level}, {"max", p.reservoir->max_level},
                              {"initial", p.reservoir->initial}};
        else
            h["reservoir"] = nullptr;
        j["hydro"].push_back(h);
    }
    j["thermal"] = json::array();
    for (const auto& f : inst.thermal)
        j["thermal"].push_back({{"name", f.name}, {"capacity", f.capacity}, {"min", f.min_output}, {"cost", f.cost}});
    j["demand"] = inst.demand;
    j["penalty"] = inst.penalty;
    j["c0"] = inst.c0;
    json reals = json::array(), probs = json::array();
    for (const auto& r : inst.inflow.realizations()) {
        reals.push_back(r.data);
        probs.push_back(r.probability);
    }
    j["inflow"] = {{"realizations", reals}, {"probabilities", probs}};
    return j;
}

inline HPOPInstance instance_from_json(const nlohmann::json& j) {
    auto need = [](const nlohmann::json& obj, const char* key) -> const nlohmann::json& {
        if (!obj.is_object() || !obj.contains(key))
            throw SchemaError(std::string("instance file: missing '") + key + "'");
        return obj.at(key);
    };
    try {
        if (need(j, "format").get<int>() != 1) throw SchemaError("instance file: unsupported format");
        HPOPInstance inst;
        for (const auto& h : need(j, "hydro")) {
            HydroPlant p;
            p.name = h.value("name", std::string("h") + std::to_string(inst.hydro.size() + 1));
            p.efficiency = need(h, "efficiency").get<double>();
            p.max_turbine = need(h, "max_turbine").get<double>();
            if (h.contains("reservoir") && !h.at("reservoir").is_null()) {
                const auto& r = h.at("reservoir");
                p.reservoir = Reservoir{r.value("min", 0.0), need(r, "max").get<double>(),
                                        need(r, "initial").get<double>()};
            }
            p.upstream = h.value("upstream", std::vector<std::size_t>{});
            p.downstream = h.value("downstream", std::vector<std::size_t>{});
            inst.hydro.push_back(std::move(p));
        }
        for (const auto& f : need(j, "thermal")) {
            ThermalPlant t;
            t.name = f.value("name", std::string("f") + std::to_string(inst.thermal.size() + 1));
            t.capacity = need(f, "capacity").get<double>();
            t.min_output = f.value("min", 0.0);
            t.cost = need(f, "cost").get<double>();
            inst.thermal.push_back(std::move(t));
        }
        inst.demand = need(j, "demand").get<double>();
        inst.penalty = j.value("penalty", 500.0);
        inst.c0 = j.value("c0", 1.0);
        const auto& inflow = need(j, "inflow");
        const auto& reals = need(inflow, "realizations");
        const auto& probs = need(inflow, "probabilities");
        if (!reals.is_array() || !probs.is_array() || reals.size() != probs.size())
            throw SchemaError("instance file: realizations and probabilities must be arrays of equal length");
        std::vector<Realization> rs;
        for (std::size_t k = 0; k < reals.size(); ++k) {
            Realization r;
            r.data = reals[k].get<std::vector<double>>();
            r.probability = probs[k].get<double>();
            rs.push_back(std::move(r));
        }
        if (inst.hydro.empty() && !rs.empty())
            for (auto& r : rs)
                if (!r.data.empty()) throw SchemaError("instance file: inflow data without hydro plants");
        inst.inflow = DiscreteProcess(std::move(rs));
        inst.validate();
        return inst;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("instance file: ") + e.what());
    } catch (const ConfigError& e) {
        throw SchemaError(std::string("instance file: ") + e.what());
    }
}

inline void save_instance(const HPOPInstance& inst, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << to_json(inst).dump(2) << "\n";
    if (!out) throw IoError("write failed: " + path);
}

inline HPOPInstance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("instance file " + path + " is not valid JSON: " + e.what());
    }
    return instance_from_json(j);
}

}  // namespace msplab
