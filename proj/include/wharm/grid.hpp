#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "errors.hpp"

namespace wharm {

enum class Domain { FullSpace, UpperHalf, LowerHalf };
enum class Side { Upper, Lower };

using Point = std::array<double, 2>;
using Index = std::array<int, 2>;

inline const char* to_string(Domain d) {
    switch (d) {
    case Domain::FullSpace: return "full";
    case Domain::UpperHalf: return "upper";
    case Domain::LowerHalf: return "lower";
    }
    return "?";
}

inline Domain domain_from_string(const std::string& s) {
    if (s == "full") return Domain::FullSpace;
    if (s == "upper") return Domain::UpperHalf;
    if (s == "lower") return Domain::LowerHalf;
    throw ParameterError("unknown domain '" + s + "'");
}

inline Domain half_domain(Side s) {
    return s == Side::Upper ? Domain::UpperHalf : Domain::LowerHalf;
}

// Uniform cell-centred grid on [-L, L]^n, or on its upper/lower half in the
// last coordinate. Storage is row-major with the last axis fastest.
class Grid {
public:
    Grid() = default;

    Grid(int dim, double halfwidth, int points_per_axis, Domain domain = Domain::FullSpace)
        : dim_(dim), L_(halfwidth), N_(points_per_axis), domain_(domain) {
        if (dim != 1 && dim != 2) throw ParameterError("dim must be 1 or 2");
        if (!(halfwidth > 0) || !std::isfinite(halfwidth))
            throw ParameterError("halfwidth must be positive");
        if (points_per_axis < 2 || points_per_axis % 2 != 0)
            throw ParameterError("points_per_axis must be even and >= 2");
    }

    int dim() const { return dim_; }
    double halfwidth() const { return L_; }
    int points_per_axis() const { return N_; }
    Domain domain() const { return domain_; }
    double cell_width() const { return 2.0 * L_ / N_; }
    double cell_volume() const { return std::pow(cell_width(), dim_); }
    bool is_full() const { return domain_ == Domain::FullSpace; }

    int axis_count(int axis) const {
        if (axis == dim_ - 1 && !is_full()) return N_ / 2;
        return N_;
    }

    // Offset of this grid's local last-axis index inside the full-space index range.
    int last_offset() const { return domain_ == Domain::UpperHalf ? N_ / 2 : 0; }

    std::size_t size() const {
        std::size_t s = 1;
        for (int a = 0; a < dim_; ++a) s *= static_cast<std::size_t>(axis_count(a));
        return s;
    }

    // x_k = (k + 1/2 - N/2) h: the half-integer factor is exact, so x -> -x is exact.
    double coord_full(int k) const { return (k + 0.5 - 0.5 * N_) * cell_width(); }

    double coord(int axis, int k) const {
        if (axis == dim_ - 1) k += last_offset();
        return coord_full(k);
    }

    Index index(std::size_t flat) const {
        if (dim_ == 1) return {static_cast<int>(flat), 0};
        int nl = axis_count(1);
        return {static_cast<int>(flat / nl), static_cast<int>(flat % nl)};
    }

    std::size_t flat(const Index& i) const {
        if (dim_ == 1) return static_cast<std::size_t>(i[0]);
        return static_cast<std::size_t>(i[0]) * axis_count(1) + i[1];
    }

    Point point(std::size_t f) const {
        Index i = index(f);
        if (dim_ == 1) return {coord(0, i[0]), 0.0};
        return {coord(0, i[0]), coord(1, i[1])};
    }

    // Last coordinate of a point, x_n.
    double last_coord(std::size_t f) const {
        Index i = index(f);
        return coord(dim_ - 1, i[dim_ - 1]);
    }

    Grid full() const { return Grid(dim_, L_, N_, Domain::FullSpace); }
    Grid half(Side s) const { return Grid(dim_, L_, N_, half_domain(s)); }

    // Index of x~ = (x', -x_n) on a FullSpace grid.
    std::size_t reflect(std::size_t f) const {
        if (!is_full()) throw DomainError("reflection needs a FullSpace grid");
        Index i = index(f);
        i[dim_ - 1] = N_ - 1 - i[dim_ - 1];
        return flat(i);
    }

    // Map a local flat index to the matching flat index on the full grid.
    std::size_t to_full(std::size_t f) const {
        if (is_full()) return f;
        Index i = index(f);
        i[dim_ - 1] += last_offset();
        return full().flat(i);
    }

    bool same_as(const Grid& o) const {
        return dim_ == o.dim_ && L_ == o.L_ && N_ == o.N_ && domain_ == o.domain_;
    }
    bool operator==(const Grid& o) const { return same_as(o); }

private:
    int dim_ = 1;
    double L_ = 1.0;
    int N_ = 2;
    Domain domain_ = Domain::FullSpace;
};

class GridFunction {
public:
    GridFunction() = default;
    explicit GridFunction(const Grid& g, double fill = 0.0) : grid_(g), values_(g.size(), fill) {}
    GridFunction(const Grid& g, std::vector<double> v) : grid_(g), values_(std::move(v)) {
        if (values_.size() != grid_.size())
            throw SizeError("value count " + std::to_string(values_.size()) + " != grid size " +
                            std::to_string(grid_.size()));
        for (double x : values_)
            if (!std::isfinite(x)) throw RangeError("non-finite grid value");
    }

    template <class F>
    static GridFunction sample(const Grid& g, F&& fn) {
        std::vector<double> v(g.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(g.point(i));
        return GridFunction(g, std::move(v));
    }

    const Grid& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }

    double integral() const {
        double s = 0;
        for (double x : values_) s += x;
        return s * grid_.cell_volume();
    }

    double lp_norm(double p) const {
        double s = 0;
        for (double x : values_) s += std::pow(std::abs(x), p);
        return std::pow(s * grid_.cell_volume(), 1.0 / p);
    }

    double max_abs() const {
        double m = 0;
        for (double x : values_) m = std::max(m, std::abs(x));
        return m;
    }

    GridFunction& operator+=(const GridFunction& o) {
        check_same(o);
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
        return *this;
    }
    GridFunction& operator-=(const GridFunction& o) {
        check_same(o);
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
        return *this;
    }
    GridFunction& operator*=(double c) {
        for (double& x : values_) x *= c;
        return *this;
    }

    friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
    friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
    friend GridFunction operator*(GridFunction a, double c) { return a *= c; }
    friend GridFunction operator*(double c, GridFunction a) { return a *= c; }

    // Pointwise product.
    friend GridFunction operator*(const GridFunction& a, const GridFunction& b) {
        a.check_same(b);
        GridFunction r(a.grid_);
        for (std::size_t i = 0; i < a.size(); ++i) r.values_[i] = a.values_[i] * b.values_[i];
        return r;
    }

    void check_same(const GridFunction& o) const {
        if (!grid_.same_as(o.grid_)) throw GridAlignmentError("grid functions live on different grids");
    }

private:
    Grid grid_;
    std::vector<double> values_;
};

inline GridFunction restrict_to(const GridFunction& f, Side side) {
    const Grid& g = f.grid();
    if (!g.is_full()) throw DomainError("restrict needs a FullSpace function");
    Grid h = g.half(side);
    std::vector<double> v(h.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f[h.to_full(i)];
    return GridFunction(h, std::move(v));
}

namespace detail {
inline GridFunction extend(const GridFunction& f, double sign) {
    const Grid& g = f.grid();
    if (g.is_full()) throw DomainError("extension needs a half-space function");
    Grid full = g.full();
    std::vector<double> v(full.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        std::size_t j = g.to_full(i);
        v[j] = f[i];
        v[full.reflect(j)] = sign * f[i];
    }
    return GridFunction(full, std::move(v));
}
}  // namespace detail

inline GridFunction extend_even(const GridFunction& f) { return detail::extend(f, 1.0); }
inline GridFunction extend_odd(const GridFunction& f) { return detail::extend(f, -1.0); }

// g(x) = f(x~) on a FullSpace grid.
inline GridFunction reflect(const GridFunction& f) {
    const Grid& g = f.grid();
    GridFunction r(g);
    for (std::size_t i = 0; i < g.size(); ++i) r[i] = f[g.reflect(i)];
    return r;
}

// f_{side,e}: even extension of the restriction to one side.
inline GridFunction side_even(const GridFunction& f, Side s) { return extend_even(restrict_to(f, s)); }

}  // namespace wharm
