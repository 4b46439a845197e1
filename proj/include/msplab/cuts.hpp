#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "msplab/errors.hpp"

namespace msplab {

/// Affine minorant  beta . x + alpha  of an expected cost-to-go function.
struct Cut {
    std::vector<double> beta;
    double alpha = 0.0;
    std::size_t birth_iteration = 0;

    double evaluate(std::span<const double> x) const {
        double v = alpha;
        for (std::size_t i = 0; i < beta.size(); ++i) v += beta[i] * x[i];
        return v;
    }

    bool operator==(const Cut&) const = default;
};

/// Outer approximations of expected cost-to-go functions, one section per
/// approximated function. For a horizon-T problem section k approximates the
/// function of stage k + 2; a stationary model uses a single section.
class CutPool {
public:
    CutPool() = default;
    CutPool(std::size_t sections, std::size_t state_dim, double floor = 0.0)
        : dim_(state_dim), floor_(floor), sections_(sections) {}

    std::size_t num_sections() const { return sections_.size(); }
    std::size_t state_dim() const { return dim_; }
    double floor() const { return floor_; }

    const std::vector<Cut>& section(std::size_t k) const { return sections_.at(k); }

    std::size_t total_cuts() const {
        std::size_t n = 0;
        for (const auto& s : sections_) n += s.size();
        return n;
    }

    /// max(floor, max_l beta_l . x + alpha_l) over section k.
    double value(std::size_t k, std::span<const double> x) const {
        double v = floor_;
        for (const Cut& c : sections_.at(k)) v = std::max(v, c.evaluate(x));
        return v;
    }

    void add(std::size_t k, Cut cut) {
        if (cut.beta.size() != dim_)
            throw ConfigError("cut dimension " + std::to_string(cut.beta.size()) +
                              " does not match pool state dimension " + std::to_string(dim_));
        sections_.at(k).push_back(std::move(cut));
    }

    /// Inserts an empty section at the front. Turns the pool of a horizon-T
    /// problem into a valid starting pool for horizon T + 1, since the k-th
    /// section of both covers the same number of remaining stages counted
    /// from the end.
    void extend_front() { sections_.insert(sections_.begin(), std::vector<Cut>{}); }

    bool operator==(const CutPool&) const = default;

private:
    std::size_t dim_ = 0;
    double floor_ = 0.0;
    std::vector<std::vector<Cut>> sections_;
};

// Snapshot layout (plain text, whitespace separated, '#' starts a comment line):
//
//   msplab-cuts 1
//   sections <S> dim <D> floor <F>
//   section <k> cuts <M>
//   <alpha> <beta_1> ... <beta_D> <birth_iteration>      (M lines)
//   ...
//
// Numbers are written with 17 significant digits so a load reproduces the
// pool bit for bit.

inline void write_cut_pool(std::ostream& out, const CutPool& pool) {
    out << "msplab-cuts 1\n";
    out << std::setprecision(17);
    out << "sections " << pool.num_sections() << " dim " << pool.state_dim() << " floor "
        << pool.floor() << "\n";
    for (std::size_t k = 0; k < pool.num_sections(); ++k) {
        const auto& cuts = pool.section(k);
        out << "section " << k << " cuts " << cuts.size() << "\n";
        for (const Cut& c : cuts) {
            out << c.alpha;
            for (double b : c.beta) out << ' ' << b;
            out << ' ' << c.birth_iteration << "\n";
        }
    }
}

inline CutPool read_cut_pool(std::istream& in) {
    std::string line;
    std::stringstream body;
    while (std::getline(in, line))
        if (!line.empty() && line[0] != '#') body << line << '\n';

    auto expect = [&](const char* word) {
        std::string tok;
        if (!(body >> tok) || tok != word)
            throw SchemaError(std::string("cut snapshot: expected '") + word + "', got '" + tok + "'");
    };
    expect("msplab-cuts");
    int version = 0;
    if (!(body >> version) || version != 1) throw SchemaError("cut snapshot: unsupported version");
    std::size_t sections = 0, dim = 0;
    double floor = 0.0;
    expect("sections");
    body >> sections;
    expect("dim");
    body >> dim;
    expect("floor");
    if (!(body >> floor)) throw SchemaError("cut snapshot: malformed header");

    CutPool pool(sections, dim, floor);
    for (std::size_t k = 0; k < sections; ++k) {
        std::size_t index = 0, count = 0;
        expect("section");
        body >> index;
        expect("cuts");
        if (!(body >> count) || index != k) throw SchemaError("cut snapshot: malformed section header");
        for (std::size_t c = 0; c < count; ++c) {
            Cut cut;
            cut.beta.resize(dim);
            body >> cut.alpha;
            for (double& b : cut.beta) body >> b;
            body >> cut.birth_iteration;
            if (!body) throw SchemaError("cut snapshot: truncated cut row");
            pool.add(k, std::move(cut));
        }
    }
    return pool;
}

inline void save_cut_pool(const std::string& path, const CutPool& pool) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    write_cut_pool(out, pool);
    if (!out) throw IoError("write failed: " + path);
}

inline CutPool load_cut_pool(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return read_cut_pool(in);
}

}  // namespace msplab
