#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"

namespace wharm {

enum class Shift { None, Third, TwoThirds };

inline const char* to_string(Shift s) {
    switch (s) {
    case Shift::None: return "none";
    case Shift::Third: return "third";
    case Shift::TwoThirds: return "two_thirds";
    }
    return "?";
}

inline Shift shift_from_string(const std::string& s) {
    if (s == "none") return Shift::None;
    if (s == "third") return Shift::Third;
    if (s == "two_thirds") return Shift::TwoThirds;
    throw ParameterError("unknown shift '" + s + "'");
}

using ShiftTuple = std::array<Shift, 2>;

struct DyadicCube {
    int id = 0;
    int generation = 0;
    Index index{0, 0};
    Index start{0, 0};  // first cell per axis, before periodic wrap
    int cells = 1;      // side length in cells
    double sidelength = 0.0;
    ShiftTuple shift{Shift::None, Shift::None};
    bool wraps = false;  // crosses the box edge (only possible in shifted lattices)
    int parent = -1;
};

// Complete dyadic tree over a grid. The base generation tiles the box with cubes of
// side min(axis counts); on half grids in n=2 that gives two roots.
class DyadicLattice {
public:
    DyadicLattice() = default;

    DyadicLattice(const Grid& grid, int max_generation, ShiftTuple shift = {Shift::None, Shift::None})
        : grid_(grid), max_gen_(max_generation), shift_(shift) {
        if (max_generation < 0) throw ParameterError("max_generation must be >= 0");
        int n = grid.dim();
        base_cells_ = grid.axis_count(0);
        for (int a = 0; a < n; ++a) base_cells_ = std::min(base_cells_, grid.axis_count(a));
        if (max_generation > 30 || base_cells_ % (1 << max_generation) != 0)
            throw GridAlignmentError("2^" + std::to_string(max_generation) + " does not divide " +
                                     std::to_string(base_cells_) + " cells");
        for (int a = 0; a < n; ++a) {
            if (grid.axis_count(a) % base_cells_ != 0)
                throw GridAlignmentError("axis count not a multiple of the base cube");
            roots_[a] = grid.axis_count(a) / base_cells_;
            offset_[a] = shift_cells(shift[a], base_cells_);
        }
        if (n == 1) shift_[1] = Shift::None;
        const double h = grid.cell_width();
        for (int g = 0; g <= max_gen_; ++g) {
            gen_offset_.push_back(static_cast<int>(cubes_.size()));
            int cells = base_cells_ >> g;
            Index cnt = per_axis(g);
            int total = cnt[0] * (n == 2 ? cnt[1] : 1);
            for (int f = 0; f < total; ++f) {
                DyadicCube q;
                q.id = static_cast<int>(cubes_.size());
                q.generation = g;
                q.index = n == 2 ? Index{f / cnt[1], f % cnt[1]} : Index{f, 0};
                q.cells = cells;
                q.sidelength = cells * h;
                q.shift = shift_;
                for (int a = 0; a < n; ++a) {
                    q.start[a] = (offset_[a] + q.index[a] * cells) % grid.axis_count(a);
                    if (q.start[a] + cells > grid.axis_count(a)) q.wraps = true;
                }
                if (g > 0) q.parent = id_of(g - 1, {q.index[0] / 2, q.index[1] / 2});
                cubes_.push_back(q);
            }
        }
        gen_offset_.push_back(static_cast<int>(cubes_.size()));
    }

    static int shift_cells(Shift s, int base) {
        switch (s) {
        case Shift::None: return 0;
        case Shift::Third: return base / 3;
        case Shift::TwoThirds: return (2 * base) / 3;
        }
        return 0;
    }

    const Grid& grid() const { return grid_; }
    int max_generation() const { return max_gen_; }
    ShiftTuple shift() const { return shift_; }
    int base_cells() const { return base_cells_; }
    const std::vector<DyadicCube>& cubes() const { return cubes_; }
    const DyadicCube& cube(int id) const { return cubes_[id]; }
    std::size_t size() const { return cubes_.size(); }
    int generation_begin(int g) const { return gen_offset_[g]; }
    int generation_end(int g) const { return gen_offset_[g + 1]; }

    Index per_axis(int g) const {
        Index c{roots_[0] << g, grid_.dim() == 2 ? (roots_[1] << g) : 1};
        return c;
    }

    int id_of(int g, const Index& idx) const {
        Index c = per_axis(g);
        int f = grid_.dim() == 2 ? idx[0] * c[1] + idx[1] : idx[0];
        return gen_offset_[g] + f;
    }

    std::vector<int> children(int id) const {
        const DyadicCube& q = cubes_[id];
        std::vector<int> out;
        if (q.generation >= max_gen_) return out;
        if (grid_.dim() == 1) {
            out = {id_of(q.generation + 1, {2 * q.index[0], 0}), id_of(q.generation + 1, {2 * q.index[0] + 1, 0})};
        } else {
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    out.push_back(id_of(q.generation + 1, {2 * q.index[0] + a, 2 * q.index[1] + b}));
        }
        return out;
    }

    // Q contains P (or equals it).
    bool contains(int q_id, int p_id) const {
        const DyadicCube& q = cubes_[q_id];
        const DyadicCube& p = cubes_[p_id];
        if (p.generation < q.generation) return false;
        int d = p.generation - q.generation;
        for (int a = 0; a < grid_.dim(); ++a)
            if ((p.index[a] >> d) != q.index[a]) return false;
        return true;
    }

    // Cube of generation g containing a grid cell.
    int cube_of_cell(int g, std::size_t flat) const {
        Index i = grid_.index(flat);
        Index idx{0, 0};
        int cells = base_cells_ >> g;
        for (int a = 0; a < grid_.dim(); ++a) {
            int c = grid_.axis_count(a);
            int r = ((i[a] - offset_[a]) % c + c) % c;
            idx[a] = r / cells;
        }
        return id_of(g, idx);
    }

    // Visit cells of a cube in fixed order (first axis outer), with cube-local indices.
    template <class F>
    void for_each_cell(const DyadicCube& q, F&& fn) const {
        const int n = grid_.dim();
        const int c0 = grid_.axis_count(0);
        if (n == 1) {
            for (int k = 0; k < q.cells; ++k) fn(static_cast<std::size_t>((q.start[0] + k) % c0), Index{k, 0});
            return;
        }
        const int c1 = grid_.axis_count(1);
        for (int k = 0; k < q.cells; ++k) {
            int i0 = (q.start[0] + k) % c0;
            for (int l = 0; l < q.cells; ++l) {
                int i1 = (q.start[1] + l) % c1;
                fn(static_cast<std::size_t>(i0) * c1 + i1, Index{k, l});
            }
        }
    }

    std::vector<std::size_t> cells_of(const DyadicCube& q) const {
        std::vector<std::size_t> out;
        out.reserve(cell_count(q));
        for_each_cell(q, [&](std::size_t f, Index) { out.push_back(f); });
        return out;
    }

    std::size_t cell_count(const DyadicCube& q) const {
        return grid_.dim() == 2 ? static_cast<std::size_t>(q.cells) * q.cells : q.cells;
    }

    double volume(const DyadicCube& q) const { return std::pow(q.sidelength, grid_.dim()); }

    // Sum of values over every cube, as exact cell sums in fixed order.
    std::vector<double> cube_sums(const std::vector<double>& v) const {
        std::vector<double> out(cubes_.size(), 0.0);
        for (const auto& q : cubes_) {
            double s = 0;
            for_each_cell(q, [&](std::size_t f, Index) { s += v[f]; });
            out[q.id] = s;
        }
        return out;
    }

    // Cube lies inside one half-space of a FullSpace grid (never straddles x_n = 0).
    bool on_one_side(const DyadicCube& q) const {
        if (!grid_.is_full() || q.wraps) return false;
        int a = grid_.dim() - 1;
        int half = grid_.points_per_axis() / 2;
        return q.start[a] + q.cells <= half || q.start[a] >= half;
    }

private:
    Grid grid_;
    int max_gen_ = 0;
    ShiftTuple shift_{Shift::None, Shift::None};
    int base_cells_ = 1;
    Index roots_{1, 1};
    Index offset_{0, 0};
    std::vector<DyadicCube> cubes_;
    std::vector<int> gen_offset_;
};

using LatticeSet = std::vector<DyadicLattice>;

// Unshifted lattice plus every per-axis combination of the 1/3 and 2/3 shifts.
inline LatticeSet standard_lattices(const Grid& grid, int max_generation) {
    LatticeSet out;
    const Shift all[3] = {Shift::None, Shift::Third, Shift::TwoThirds};
    if (grid.dim() == 1) {
        for (Shift s : all) out.emplace_back(grid, max_generation, ShiftTuple{s, Shift::None});
    } else {
        for (Shift s0 : all)
            for (Shift s1 : all) out.emplace_back(grid, max_generation, ShiftTuple{s0, s1});
    }
    return out;
}

// Deepest generation whose cubes still have at least min_cells cells per side.
inline int max_generation_for(const Grid& grid, int min_cells = 1) {
    int base = grid.axis_count(0);
    for (int a = 0; a < grid.dim(); ++a) base = std::min(base, grid.axis_count(a));
    int g = 0;
    while (base % (2 << g) == 0 && (base >> (g + 1)) >= min_cells) ++g;
    return g;
}

// Haar signatures as bitmasks: bit a set means the non-cancellative factor 1_I on axis a.
inline std::vector<int> haar_signatures(int dim) {
    if (dim == 1) return {0};
    return {0, 1, 2};
}

// Value of h_Q^eps at a cube-local cell (unnormalized sign pattern).
inline double haar_sign(int dim, int sig, const Index& local, int cells) {
    double s = 1.0;
    for (int a = 0; a < dim; ++a) {
        if (sig & (1 << a)) continue;
        s *= local[a] < cells / 2 ? 1.0 : -1.0;
    }
    return s;
}

class HaarCoefficients {
public:
    HaarCoefficients() = default;
    HaarCoefficients(std::size_t cubes, int nsig) : nsig_(nsig), c_(cubes * nsig, 0.0) {}
    double operator()(int cube, int sig_pos) const { return c_[static_cast<std::size_t>(cube) * nsig_ + sig_pos]; }
    double& operator()(int cube, int sig_pos) { return c_[static_cast<std::size_t>(cube) * nsig_ + sig_pos]; }
    int signatures() const { return nsig_; }
    std::size_t cubes() const { return nsig_ ? c_.size() / nsig_ : 0; }
    double sum_squares(int cube) const {
        double s = 0;
        for (int e = 0; e < nsig_; ++e) s += (*this)(cube, e) * (*this)(cube, e);
        return s;
    }

private:
    int nsig_ = 0;
    std::vector<double> c_;
};

inline void check_compatible(const GridFunction& f, const DyadicLattice& lat) {
    if (!f.grid().same_as(lat.grid())) throw GridAlignmentError("function grid does not match lattice grid");
}

// <f, h_Q^eps> by exact cell sums. Single-cell cubes carry no Haar functions (coefficient 0).
inline HaarCoefficients haar_coefficients(const GridFunction& f, const DyadicLattice& lat) {
    check_compatible(f, lat);
    const int n = lat.grid().dim();
    const auto sigs = haar_signatures(n);
    const double hv = lat.grid().cell_volume();
    HaarCoefficients hc(lat.size(), static_cast<int>(sigs.size()));
    for (const auto& q : lat.cubes()) {
        if (q.cells < 2) continue;
        const double norm = 1.0 / std::sqrt(lat.volume(q));
        std::array<double, 3> acc{0, 0, 0};
        lat.for_each_cell(q, [&](std::size_t c, Index loc) {
            for (std::size_t e = 0; e < sigs.size(); ++e) acc[e] += f[c] * haar_sign(n, sigs[e], loc, q.cells);
        });
        for (std::size_t e = 0; e < sigs.size(); ++e) hc(q.id, static_cast<int>(e)) = acc[e] * norm * hv;
    }
    return hc;
}

// The Haar function h_Q^eps sampled on the grid.
inline GridFunction haar_function(const DyadicLattice& lat, int cube, int sig) {
    const auto& q = lat.cube(cube);
    if (q.cells < 2) throw ParameterError("single-cell cube has no Haar function");
    GridFunction h(lat.grid());
    const double norm = 1.0 / std::sqrt(lat.volume(q));
    lat.for_each_cell(q, [&](std::size_t c, Index loc) { h[c] = haar_sign(lat.grid().dim(), sig, loc, q.cells) * norm; });
    return h;
}

// mean + sum_Q sum_eps c h_Q^eps, restricted to the base cubes.
inline GridFunction haar_synthesize(const HaarCoefficients& hc, const DyadicLattice& lat, double mean) {
    const int n = lat.grid().dim();
    const auto sigs = haar_signatures(n);
    GridFunction f(lat.grid(), mean);
    for (const auto& q : lat.cubes()) {
        if (q.cells < 2) continue;
        const double norm = 1.0 / std::sqrt(lat.volume(q));
        lat.for_each_cell(q, [&](std::size_t c, Index loc) {
            double s = 0;
            for (std::size_t e = 0; e < sigs.size(); ++e)
                s += hc(q.id, static_cast<int>(e)) * haar_sign(n, sigs[e], loc, q.cells);
            f[c] += s * norm;
        });
    }
    return f;
}

inline void require_positive(const std::vector<double>& w) {
    for (double x : w)
        if (!(x > 0) || !std::isfinite(x)) throw WeightError("weight must be strictly positive and finite");
}

// Dyadic weighted maximal function over the non-wrapping cubes of a lattice.
inline GridFunction weighted_maximal(const GridFunction& g, const GridFunction& w, const DyadicLattice& lat) {
    check_compatible(g, lat);
    g.check_same(w);
    require_positive(w.values());
    std::vector<double> gw(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) gw[i] = std::abs(g[i]) * w[i];
    auto num = lat.cube_sums(gw);
    auto den = lat.cube_sums(w.values());
    GridFunction m(g.grid(), 0.0);
    for (const auto& q : lat.cubes()) {
        if (q.wraps) continue;
        double avg = num[q.id] / den[q.id];
        lat.for_each_cell(q, [&](std::size_t c, Index) { m[c] = std::max(m[c], avg); });
    }
    return m;
}

}  // namespace wharm
