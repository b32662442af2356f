#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "atoms.hpp"
#include "dyadic.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "sparse.hpp"
#include "weights.hpp"

namespace wharm::io {

using json = nlohmann::ordered_json;

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline json grid_to_json(const Grid& g) {
    return json{{"dim", g.dim()},
                {"halfwidth", g.halfwidth()},
                {"points_per_axis", g.points_per_axis()},
                {"domain", to_string(g.domain())}};
}

inline Grid grid_from_json(const json& j) {
    return Grid(j.at("dim").get<int>(), j.at("halfwidth").get<double>(), j.at("points_per_axis").get<int>(),
                domain_from_string(j.value("domain", std::string("full"))));
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParameterError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParameterError("cannot write '" + path + "'");
    out << text;
}

// CSV: index columns then value, one grid point per line.
inline std::string to_csv(const GridFunction& f) {
    const Grid& g = f.grid();
    std::string s = g.dim() == 1 ? "i0,value\n" : "i0,i1,value\n";
    for (std::size_t k = 0; k < f.size(); ++k) {
        Index i = g.index(k);
        s += std::to_string(i[0]) + ",";
        if (g.dim() == 2) s += std::to_string(i[1]) + ",";
        s += fmt(f[k]) + "\n";
    }
    return s;
}

inline GridFunction from_csv(const std::string& text, const Grid& g) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    std::vector<double> v(g.size());
    std::vector<char> seen(g.size(), 0);
    std::size_t count = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tok;
        std::vector<std::string> parts;
        while (std::getline(ls, tok, ',')) parts.push_back(tok);
        if (static_cast<int>(parts.size()) != g.dim() + 1) throw SizeError("bad CSV row '" + line + "'");
        Index i{std::stoi(parts[0]), g.dim() == 2 ? std::stoi(parts[1]) : 0};
        for (int a = 0; a < g.dim(); ++a)
            if (i[a] < 0 || i[a] >= g.axis_count(a)) throw SizeError("CSV index out of range in '" + line + "'");
        std::size_t k = g.flat(i);
        if (seen[k]) throw SizeError("duplicate CSV index in '" + line + "'");
        seen[k] = 1;
        v[k] = std::stod(parts.back());
        ++count;
    }
    if (count != g.size()) throw SizeError("CSV holds " + std::to_string(count) + " points, grid has " + std::to_string(g.size()));
    return GridFunction(g, std::move(v));
}

// JSON header next to a little-endian float64 column in <stem>.bin.
inline void save_json_bin(const GridFunction& f, const std::string& json_path) {
    std::string bin = json_path.substr(0, json_path.rfind('.')) + ".bin";
    std::string base = bin.substr(bin.find_last_of('/') + 1);
    json h{{"grid", grid_to_json(f.grid())}, {"count", f.size()}, {"dtype", "float64-le"}, {"data", base}};
    write_text(json_path, h.dump(2) + "\n");
    std::ofstream out(bin, std::ios::binary);
    if (!out) throw ParameterError("cannot write '" + bin + "'");
    out.write(reinterpret_cast<const char*>(f.values().data()), static_cast<std::streamsize>(f.size() * sizeof(double)));
}

inline GridFunction load_json_bin(const std::string& json_path) {
    json h = json::parse(read_text(json_path));
    Grid g = grid_from_json(h.at("grid"));
    if (h.at("count").get<std::size_t>() != g.size()) throw SizeError("header count does not match grid");
    std::string dir = json_path.find('/') == std::string::npos ? "" : json_path.substr(0, json_path.find_last_of('/') + 1);
    std::string raw = read_text(dir + h.at("data").get<std::string>());
    if (raw.size() != g.size() * sizeof(double)) throw SizeError("binary column has the wrong length");
    std::vector<double> v(g.size());
    std::memcpy(v.data(), raw.data(), raw.size());
    return GridFunction(g, std::move(v));
}

// Every byte a grid-function file pulls in: the CSV, or the JSON header followed by its column.
inline std::string referenced_bytes(const std::string& path) {
    std::string text = read_text(path);
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") return text;
    std::string dir = path.find('/') == std::string::npos ? "" : path.substr(0, path.find_last_of('/') + 1);
    return text + read_text(dir + json::parse(text).at("data").get<std::string>());
}

// Loads CSV (needs the target grid) or JSON+bin by extension.
inline GridFunction load_grid_function(const std::string& path, const Grid& g) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") return from_csv(read_text(path), g);
    GridFunction f = load_json_bin(path);
    f.check_same(GridFunction(g));
    return f;
}

inline WeightSpec weight_spec_from_json(const json& j) {
    WeightSpec s;
    s.kind = j.value("kind", s.kind);
    s.value = j.value("value", s.value);
    s.alpha = j.value("alpha", s.alpha);
    s.delta = j.value("delta", s.delta);
    s.axis = j.value("axis", s.axis);
    if (j.contains("center")) {
        auto c = j.at("center").get<std::vector<double>>();
        for (std::size_t a = 0; a < c.size() && a < 2; ++a) s.center[a] = c[a];
    }
    s.file = j.value("file", s.file);
    s.cell_average = j.value("cell_average", s.cell_average);
    return s;
}

inline json weight_spec_to_json(const WeightSpec& s) {
    json j{{"kind", s.kind}};
    if (s.kind == "constant") j["value"] = s.value;
    if (s.kind == "power" || s.kind == "one-sided") {
        j["alpha"] = s.alpha;
        if (s.kind == "power") j["axis"] = s.axis;
        j["center"] = {s.center[0], s.center[1]};
    }
    if (s.kind == "exp_bmo") j["delta"] = s.delta;
    if (s.kind == "grid" || s.kind == "exp_bmo") j["file"] = s.file;
    if (s.cell_average) j["cell_average"] = true;
    return j;
}

inline WeightFactory file_weight_factory() {
    return WeightFactory([](const std::string& path, const Grid& g) { return load_grid_function(path, g); });
}

inline json lattice_to_json(const DyadicLattice& lat) {
    json cubes = json::array();
    for (const auto& q : lat.cubes()) {
        json c{{"id", q.id}, {"generation", q.generation}, {"start", {q.start[0], q.start[1]}}, {"cells", q.cells},
               {"sidelength", q.sidelength}, {"parent", q.parent}};
        if (q.wraps) c["wraps"] = true;
        cubes.push_back(c);
    }
    return json{{"grid", grid_to_json(lat.grid())},
                {"max_generation", lat.max_generation()},
                {"shift", {to_string(lat.shift()[0]), to_string(lat.shift()[1])}},
                {"cubes", cubes}};
}

inline std::string haar_to_csv(const HaarCoefficients& hc, const DyadicLattice& lat) {
    std::string s = "cube,generation,signature,coefficient\n";
    for (const auto& q : lat.cubes()) {
        if (q.cells < 2) continue;
        for (int e = 0; e < hc.signatures(); ++e)
            s += std::to_string(q.id) + "," + std::to_string(q.generation) + "," + std::to_string(e) + "," +
                 fmt(hc(q.id, e)) + "\n";
    }
    return s;
}

// Carriers as runs [first cell, length, fraction] of consecutive cells sharing a fraction.
inline json sparse_to_json(const SparseCollection& S) {
    json cubes = json::array();
    for (std::size_t k = 0; k < S.cubes.size(); ++k) {
        json runs = json::array();
        const auto& c = S.carriers[k];
        for (std::size_t i = 0; i < c.size();) {
            std::size_t j = i;
            while (j + 1 < c.size() && c[j + 1].first == c[j].first + 1 && c[j + 1].second == c[i].second) ++j;
            runs.push_back({c[i].first, j - i + 1, c[i].second});
            i = j + 1;
        }
        cubes.push_back({{"id", S.cubes[k]}, {"carrier", runs}});
    }
    return json{{"eta", S.eta}, {"cubes", cubes}};
}

inline json decomposition_to_json(const AtomicDecomposition& D) {
    json atoms = json::array();
    for (const auto& a : D.atoms) {
        atoms.push_back({{"k", a.k},
                         {"cube", a.cube},
                         {"lambda", a.lambda},
                         {"valid", a.report.valid()},
                         {"outside_mass", a.report.outside_mass},
                         {"max_moment", a.report.max_moment},
                         {"norm", a.report.norm},
                         {"bound", a.report.bound},
                         {"rescale", a.report.rescale}});
    }
    return json{{"k_min", D.k_min},
                {"k_max", D.k_max},
                {"reproducing_constant", D.reproducing_constant},
                {"symbol_range", {D.symbol_min, D.symbol_max}},
                {"lambda_sum", D.lambda_sum},
                {"square_l1w", D.square_l1w},
                {"level_sum", D.level_sum},
                {"residual_l1w", D.residual_l1w},
                {"f_l1w", D.f_l1w},
                {"max_atom_mean", D.max_atom_mean},
                {"nesting_ok", D.nesting_ok},
                {"unassigned_cubes", D.unassigned_cubes},
                {"atoms", atoms}};
}

}  // namespace wharm::io
