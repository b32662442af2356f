#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dyadic.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "squarefn.hpp"
#include "stats.hpp"
#include "weights.hpp"

namespace wharm {

enum class BmoKind {
    ClassicalW,
    ClassicalWr,
    CarlesonHaar,
    CarlesonHeatFree,
    CarlesonHeatNeumann,
    UnweightedHalf,
    OddExtensionHalf,
    EvenExtensionHalf
};

struct BmoFlavor {
    BmoKind kind = BmoKind::ClassicalW;
    double r = 1.0;                  // ClassicalWr exponent
    std::optional<double> p;         // companion exponent: r must lie in [1, p']

    static BmoFlavor classical() { return {BmoKind::ClassicalW, 1.0, std::nullopt}; }
    static BmoFlavor classical_r(double r, std::optional<double> p = std::nullopt) {
        BmoFlavor f{BmoKind::ClassicalWr, r, p};
        f.validate();
        return f;
    }
    static BmoFlavor of(BmoKind k) { return {k, 1.0, std::nullopt}; }

    void validate() const {
        if (kind != BmoKind::ClassicalWr) return;
        if (!(r >= 1.0)) throw ParameterError("r must be >= 1");
        if (p) {
            double pp = *p / (*p - 1.0);
            if (r > pp * (1.0 + 1e-12)) throw ParameterError("r exceeds p'");
        }
    }
};

inline const char* to_string(BmoKind k) {
    switch (k) {
    case BmoKind::ClassicalW: return "classical-w";
    case BmoKind::ClassicalWr: return "classical-wr";
    case BmoKind::CarlesonHaar: return "carleson-haar";
    case BmoKind::CarlesonHeatFree: return "carleson-heat-free";
    case BmoKind::CarlesonHeatNeumann: return "carleson-heat-neumann";
    case BmoKind::UnweightedHalf: return "unweighted-half";
    case BmoKind::OddExtensionHalf: return "odd-ext";
    case BmoKind::EvenExtensionHalf: return "even-ext";
    }
    return "?";
}

inline BmoKind bmo_kind_from_string(const std::string& s) {
    for (BmoKind k : {BmoKind::ClassicalW, BmoKind::ClassicalWr, BmoKind::CarlesonHaar, BmoKind::CarlesonHeatFree,
                      BmoKind::CarlesonHeatNeumann, BmoKind::UnweightedHalf, BmoKind::OddExtensionHalf,
                      BmoKind::EvenExtensionHalf})
        if (s == to_string(k)) return k;
    throw ParameterError("unknown BMO flavor '" + s + "'");
}

struct CarlesonOptions {
    int per_octave = 8;
    int min_cells = 4;        // P and Q range over cubes with at least this many cells per side
    bool upper_only = false;  // restrict P (hence Q) to the upper half-space
};

struct BmoResult {
    double value = 0.0;
    int lattice = -1;
    int cube = -1;
};

namespace detail {

inline void keep_max(BmoResult& r, double v, int lat, int cube) {
    if (v > r.value) {
        r.value = v;
        r.lattice = lat;
        r.cube = cube;
    }
}

// sup_Q (1/w(Q)) sum_Q |f - <f>_Q|^r w^{1-r} h^n, before the 1/r power. w == nullptr means w = 1.
inline BmoResult classical_sup(const GridFunction& f, const Weight* w, double r, const LatticeSet& lats,
                               const std::function<bool(const DyadicLattice&, const DyadicCube&)>& admit = {}) {
    BmoResult res;
    const double hv = f.grid().cell_volume();
    for (std::size_t l = 0; l < lats.size(); ++l) {
        const auto& lat = lats[l];
        check_compatible(f, lat);
        auto sums = lat.cube_sums(f.values());
        const std::vector<double>* mass = w ? &w->mass_table(lat) : nullptr;
        for (const auto& q : lat.cubes()) {
            if (q.wraps) continue;
            if (admit && !admit(lat, q)) continue;
            const double mean = sums[q.id] / static_cast<double>(lat.cell_count(q));
            double acc = 0;
            lat.for_each_cell(q, [&](std::size_t c, Index) {
                double d = std::abs(f[c] - mean);
                if (r == 1.0)
                    acc += d;
                else
                    acc += std::pow(d, r) * (w ? std::pow((*w)[c], 1.0 - r) : 1.0);
            });
            double wq = mass ? (*mass)[q.id] : lat.volume(q);
            keep_max(res, acc * hv / wq, static_cast<int>(l), q.id);
        }
    }
    return res;
}

}  // namespace detail

// Carleson energies |G_t f|^2 on the grid, supplied per Whitney time.
using EnergyField = std::function<std::vector<double>(double t)>;

// sup_P ( (1/w(P)) sum_{Q in D(P)} sum_{t in slab(Q)} dlog t^n/w(Q) sum_{y in Q} E_t(y) h^n )^{1/2}
inline BmoResult carleson_heat_sup(const EnergyField& energy, const Weight& w, const LatticeSet& lats,
                                   const CarlesonOptions& o) {
    const Grid& g = w.grid();
    const int n = g.dim();
    const double hv = g.cell_volume();
    const double dlog = std::log(2.0) / o.per_octave;
    int gmax = 0;
    for (const auto& lat : lats) gmax = std::max(gmax, lat.max_generation());
    // generation g (side ell_g) uses t = ell_g 2^{-j/M}, j = 0..M-1
    const int base = lats.empty() ? 0 : lats.front().base_cells();
    std::vector<std::vector<std::vector<double>>> E;  // [generation][j] -> field
    std::vector<int> usable;
    for (int gen = 0; gen <= gmax; ++gen) {
        int cells = base >> gen;
        if (cells < o.min_cells) break;
        usable.push_back(gen);
        double ell = cells * g.cell_width();
        std::vector<std::vector<double>> per;
        for (int j = 0; j < o.per_octave; ++j) per.push_back(energy(ell * std::exp2(-static_cast<double>(j) / o.per_octave)));
        E.push_back(std::move(per));
    }
    BmoResult res;
    for (std::size_t l = 0; l < lats.size(); ++l) {
        const auto& lat = lats[l];
        check_compatible(w.function(), lat);
        const auto& mass = w.mass_table(lat);
        std::vector<double> T(lat.size(), 0.0);
        for (int gen = static_cast<int>(usable.size()) - 1; gen >= 0; --gen) {
            int cells = lat.base_cells() >> gen;
            double ell = cells * g.cell_width();
            for (int id = lat.generation_begin(gen); id < lat.generation_end(gen); ++id) {
                const auto& q = lat.cube(id);
                double c = 0;
                for (int j = 0; j < o.per_octave; ++j) {
                    double t = ell * std::exp2(-static_cast<double>(j) / o.per_octave);
                    double s = 0;
                    const auto& ej = E[gen][j];
                    lat.for_each_cell(q, [&](std::size_t cell, Index) { s += ej[cell]; });
                    c += dlog * std::pow(t, n) * s * hv;
                }
                T[id] = c / mass[id];
                if (gen + 1 < static_cast<int>(usable.size()))
                    for (int ch : lat.children(id)) T[id] += T[ch];
            }
        }
        for (int gen = 0; gen < static_cast<int>(usable.size()); ++gen)
            for (int id = lat.generation_begin(gen); id < lat.generation_end(gen); ++id) {
                const auto& q = lat.cube(id);
                if (q.wraps) continue;
                if (o.upper_only) {
                    int a = g.dim() - 1;
                    if (q.start[a] < g.points_per_axis() / 2) continue;
                }
                detail::keep_max(res, std::sqrt(T[id] / mass[id]), static_cast<int>(l), id);
            }
    }
    return res;
}

inline EnergyField free_energy(const GridFunction& f) {
    auto F = std::make_shared<GeneratorFields>(f, Generator::HeatQt);
    return [F](double t) { return detail::squared(F->at(t)); };
}

inline EnergyField neumann_energy(const GridFunction& f) {
    auto up = std::make_shared<GeneratorFields>(side_even(f, Side::Upper), Generator::HeatQt);
    auto lo = std::make_shared<GeneratorFields>(side_even(f, Side::Lower), Generator::HeatQt);
    return [up, lo](double t) { return detail::neumann_energy(*up, *lo, t); };
}

inline BmoResult carleson_haar_sup(const GridFunction& f, const Weight& w, const LatticeSet& lats) {
    BmoResult res;
    for (std::size_t l = 0; l < lats.size(); ++l) {
        const auto& lat = lats[l];
        check_compatible(f, lat);
        auto hc = haar_coefficients(f, lat);
        const auto& mass = w.mass_table(lat);
        std::vector<double> T(lat.size(), 0.0);
        for (int gen = lat.max_generation(); gen >= 0; --gen)
            for (int id = lat.generation_begin(gen); id < lat.generation_end(gen); ++id) {
                const auto& q = lat.cube(id);
                T[id] = hc.sum_squares(id) * lat.volume(q) / mass[id];
                for (int ch : lat.children(id)) T[id] += T[ch];
            }
        for (const auto& q : lat.cubes()) {
            if (q.wraps) continue;
            detail::keep_max(res, std::sqrt(T[q.id] / mass[q.id]), static_cast<int>(l), q.id);
        }
    }
    return res;
}

// The grid a flavor evaluates on, given the grid of f.
inline Grid bmo_evaluation_grid(BmoKind k, const Grid& fg) {
    switch (k) {
    case BmoKind::UnweightedHalf:
        if (fg.is_full()) throw DomainError("unweighted-half needs a half-space function");
        return fg;
    case BmoKind::OddExtensionHalf:
    case BmoKind::EvenExtensionHalf:
        if (fg.is_full()) throw DomainError("extension flavors need a half-space function");
        return fg.full();
    default:
        if (!fg.is_full()) throw DomainError("flavor needs a FullSpace function");
        return fg;
    }
}

inline BmoResult bmo_norm_detail(const GridFunction& f, const Weight& w, const BmoFlavor& flavor,
                                 const LatticeSet& lats, const CarlesonOptions& o = {}) {
    flavor.validate();
    bmo_evaluation_grid(flavor.kind, f.grid());
    switch (flavor.kind) {
    case BmoKind::ClassicalW: return detail::classical_sup(f, &w, 1.0, lats);
    case BmoKind::ClassicalWr: {
        BmoResult r = detail::classical_sup(f, &w, flavor.r, lats);
        r.value = std::pow(r.value, 1.0 / flavor.r);
        return r;
    }
    case BmoKind::CarlesonHaar: return carleson_haar_sup(f, w, lats);
    case BmoKind::CarlesonHeatFree: return carleson_heat_sup(free_energy(f), w, lats, o);
    case BmoKind::CarlesonHeatNeumann: return carleson_heat_sup(neumann_energy(f), w, lats, o);
    case BmoKind::UnweightedHalf: return detail::classical_sup(f, nullptr, 1.0, lats);
    case BmoKind::OddExtensionHalf: return detail::classical_sup(extend_odd(f), nullptr, 1.0, lats);
    case BmoKind::EvenExtensionHalf: {
        GridFunction fe = extend_even(f);
        Side s = f.grid().domain() == Domain::UpperHalf ? Side::Upper : Side::Lower;
        Weight we = w.grid().is_full() ? side_even(w, s) : Weight(extend_even(w.function()));
        return detail::classical_sup(fe, &we, 1.0, lats);
    }
    }
    return {};
}

inline double bmo_norm(const GridFunction& f, const Weight& w, const BmoFlavor& flavor, const LatticeSet& lats,
                       const CarlesonOptions& o = {}) {
    return bmo_norm_detail(f, w, flavor, lats, o).value;
}

// Semigroup Carleson norm attached to the reflected Neumann Laplacian.
inline double bmo_deltaN_norm(const GridFunction& f, const Weight& w, const LatticeSet& lats,
                              const CarlesonOptions& o = {}) {
    return bmo_norm(f, w, BmoFlavor::of(BmoKind::CarlesonHeatNeumann), lats, o);
}

// (||f_{+,e}||, ||f_{-,e}||) in the free semigroup Carleson norm with weights w_{+,e}, w_{-,e}.
inline std::pair<double, double> bmo_deltaN_sides(const GridFunction& f, const Weight& w, const LatticeSet& lats,
                                                  const CarlesonOptions& o = {}) {
    auto flav = BmoFlavor::of(BmoKind::CarlesonHeatFree);
    return {bmo_norm(side_even(f, Side::Upper), side_even(w, Side::Upper), flav, lats, o),
            bmo_norm(side_even(f, Side::Lower), side_even(w, Side::Lower), flav, lats, o)};
}

// Dyadic BMO over D(Q0) of one lattice: sup_{Q in D(Q0)} (1/w(Q)) sum_Q |f - <f>_Q| h^n. w == nullptr: unweighted.
inline double dyadic_bmo_on(const GridFunction& f, const Weight* w, const DyadicLattice& lat, int root) {
    LatticeSet one{lat};
    return detail::classical_sup(f, w, 1.0, one,
                                 [&](const DyadicLattice& L, const DyadicCube& q) { return L.contains(root, q.id); })
        .value;
}

struct JnInstance {
    GridFunction b;
    Weight w;
    double p = 2.0;
    double r = 2.0;
};

struct JnRow {
    double norm_w = 0;
    double norm_wr = 0;
    double rho = 0;
    double ap = 0;
    double predictor = 0;
    bool rho_at_least_one = true;
};

struct JnReport {
    std::vector<JnRow> rows;
    FittedConstant fit;  // rho / [w]_{A^p}^{max(1, 1/(p-1))}
    bool all_rho_at_least_one = true;
};

inline JnReport john_nirenberg_report(const std::vector<JnInstance>& suite, const LatticeSet& lats) {
    JnReport rep;
    for (const auto& in : suite) {
        BmoFlavor fr = BmoFlavor::classical_r(in.r, in.p);
        JnRow row;
        row.norm_w = bmo_norm(in.b, in.w, BmoFlavor::classical(), lats);
        if (row.norm_w == 0.0) continue;  // constants carry no information
        row.norm_wr = bmo_norm(in.b, in.w, fr, lats);
        row.rho = row.norm_wr / row.norm_w;
        row.ap = ap_constant(in.w, in.p, lats).value;
        row.predictor = std::pow(row.ap, std::max(1.0, 1.0 / (in.p - 1.0)));
        row.rho_at_least_one = row.rho >= 1.0 - 1e-14;
        rep.all_rho_at_least_one = rep.all_rho_at_least_one && row.rho_at_least_one;
        rep.rows.push_back(row);
    }
    std::vector<double> ratios;
    for (const auto& r : rep.rows) ratios.push_back(r.rho / r.predictor);
    rep.fit = fit_constant(ratios);
    return rep;
}

}  // namespace wharm
