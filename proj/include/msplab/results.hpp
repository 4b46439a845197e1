#pragma once

// Per-roll simulation results, the delimited result table and its sidecar
// manifest.
//
// Table layout (comma separated, header row first):
//   t,tau,jbar,iterations,stage_cost,cum_avg,wall_ms
//   1,8,500,612,53000,53000,40.2
//   ...
//   summary,,,<total iterations>,<z_bar>,<z_bar>,<total wall ms>
// wall_ms is the only nondeterministic column.

#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "msplab/errors.hpp"

namespace msplab {

inline constexpr const char* kToolVersion = "0.1.0";

struct RollRecord {
    std::size_t t = 0;
    std::size_t tau = 0;
    std::size_t jbar = 0;
    std::size_t iterations = 0;
    double stage_cost = 0.0;
    double cum_avg = 0.0;
    double wall_ms = 0.0;
};

struct SimulationResult {
    std::vector<RollRecord> rolls;
    double z_bar = 0.0;
    double total_seconds = 0.0;
    double cost_mean = 0.0;
    double cost_std = 0.0;

    std::vector<double> stage_costs() const {
        std::vector<double> c;
        for (const auto& r : rolls) c.push_back(r.stage_cost);
        return c;
    }
    std::vector<std::size_t> horizons() const {
        std::vector<std::size_t> h;
        for (const auto& r : rolls) h.push_back(r.tau);
        return h;
    }
    std::size_t total_iterations() const {
        std::size_t n = 0;
        for (const auto& r : rolls) n += r.iterations;
        return n;
    }
};

/// Long-run average (1/T) sum f_t, summed in roll order.
inline double long_run_average(const std::vector<double>& costs) {
    if (costs.empty()) return 0.0;
    double s = 0.0;
    for (double c : costs) s += c;
    return s / static_cast<double>(costs.size());
}

/// Appends a roll and keeps the running average.
inline void record_roll(SimulationResult& res, RollRecord rec, double& running_sum) {
    running_sum += rec.stage_cost;
    rec.t = res.rolls.size() + 1;
    rec.cum_avg = running_sum / static_cast<double>(rec.t);
    res.rolls.push_back(rec);
}

/// Fills z_bar, mean and std from the roll trace.
inline void finalize(SimulationResult& res) {
    const auto c = res.stage_costs();
    res.z_bar = long_run_average(c);
    res.cost_mean = res.z_bar;
    double var = 0.0;
    for (double v : c) var += (v - res.cost_mean) * (v - res.cost_mean);
    res.cost_std = c.size() > 1 ? std::sqrt(var / static_cast<double>(c.size() - 1)) : 0.0;
}

struct RunManifest {
    std::string command;
    std::string instance;
    std::string policy;
    std::map<std::string, std::uint64_t> seeds;
    std::map<std::string, std::string> overrides;
    std::string output_dir;
    std::string version = kToolVersion;
    std::map<std::string, double> summary;  // z_bar, gap, ... ; filled by the writer

    bool operator==(const RunManifest&) const = default;
};

inline nlohmann::json to_json(const RunManifest& m) {
    return {{"command", m.command}, {"instance", m.instance}, {"policy", m.policy},
            {"seeds", m.seeds},     {"overrides", m.overrides}, {"output_dir", m.output_dir},
            {"version", m.version}, {"summary", m.summary}};
}

inline RunManifest manifest_from_json(const nlohmann::json& j) {
    try {
        RunManifest m;
        m.command = j.at("command").get<std::string>();
        m.instance = j.value("instance", std::string{});
        m.policy = j.value("policy", std::string{});
        m.seeds = j.value("seeds", std::map<std::string, std::uint64_t>{});
        m.overrides = j.value("overrides", std::map<std::string, std::string>{});
        m.output_dir = j.value("output_dir", std::string{});
        m.version = j.value("version", std::string{});
        m.summary = j.value("summary", std::map<std::string, double>{});
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("manifest: ") + e.what());
    }
}

inline std::string manifest_path(const std::string& table_path) { return table_path + ".manifest.json"; }

inline void save_manifest(const RunManifest& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << to_json(m).dump(2) << "\n";
}

inline RunManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("manifest " + path + ": " + e.what());
    }
    return manifest_from_json(j);
}

inline void write_result_table(std::ostream& out, const SimulationResult& res) {
    out << "t,tau,jbar,iterations,stage_cost,cum_avg,wall_ms\n" << std::setprecision(17);
    for (const auto& r : res.rolls)
        out << r.t << ',' << r.tau << ',' << r.jbar << ',' << r.iterations << ',' << r.stage_cost << ','
            << r.cum_avg << ',' << std::setprecision(6) << r.wall_ms << std::setprecision(17) << '\n';
    out << "summary,,," << res.total_iterations() << ',' << res.z_bar << ',' << res.z_bar << ','
        << std::setprecision(6) << res.total_seconds * 1000.0 << '\n';
}

/// Writes the table and its manifest (with z_bar, std and wall time added).
inline void save_result(const SimulationResult& res, RunManifest manifest, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    write_result_table(out, res);
    if (!out) throw IoError("write failed: " + path);
    manifest.summary["z_bar"] = res.z_bar;
    manifest.summary["cost_std"] = res.cost_std;
    manifest.summary["rolls"] = static_cast<double>(res.rolls.size());
    save_manifest(manifest, manifest_path(path));
}

inline SimulationResult read_result_table(std::istream& in) {
    SimulationResult res;
    std::string line;
    if (!std::getline(in, line) || line.rfind("t,tau,jbar,iterations,stage_cost,cum_avg,wall_ms", 0) != 0)
        throw SchemaError("result table: missing header");
    bool summary = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 7) throw SchemaError("result table: expected 7 fields in '" + line + "'");
        try {
            if (f[0] == "summary") {
                res.z_bar = std::stod(f[4]);
                res.total_seconds = std::stod(f[6]) / 1000.0;
                summary = true;
                continue;
            }
            RollRecord r;
            r.t = std::stoul(f[0]);
            r.tau = std::stoul(f[1]);
            r.jbar = std::stoul(f[2]);
            r.iterations = std::stoul(f[3]);
            r.stage_cost = std::stod(f[4]);
            r.cum_avg = std::stod(f[5]);
            r.wall_ms = std::stod(f[6]);
            res.rolls.push_back(r);
        } catch (const std::logic_error&) {
            throw SchemaError("result table: bad number in '" + line + "'");
        }
    }
    if (!summary) throw SchemaError("result table: missing summary row");
    return res;
}

inline SimulationResult load_result(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return read_result_table(in);
}

/// (z - z_ref) / z_ref
inline double relative_gap(double z, double z_ref) {
    if (z_ref == 0.0) return z == 0.0 ? 0.0 : std::copysign(INFINITY, z);
    return (z - z_ref) / z_ref;
}

}  // namespace msplab
