#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include "dyadic.hpp"
#include "errors.hpp"
#include "grid.hpp"

namespace wharm {

// Strictly positive grid function with lazily cached cube masses w(Q) = sum_Q w h^n.
class Weight {
public:
    Weight() = default;
    explicit Weight(GridFunction v) : v_(std::move(v)), cache_(std::make_shared<Cache>()) {
        require_positive(v_.values());
    }

    static Weight constant(const Grid& g, double c = 1.0) { return Weight(GridFunction(g, c)); }

    const GridFunction& function() const { return v_; }
    const std::vector<double>& values() const { return v_.values(); }
    const Grid& grid() const { return v_.grid(); }
    double operator[](std::size_t i) const { return v_[i]; }
    std::size_t size() const { return v_.size(); }

    Weight pow(double e) const {
        GridFunction r(v_.grid());
        for (std::size_t i = 0; i < size(); ++i) r[i] = std::pow(v_[i], e);
        return Weight(std::move(r));
    }

    double min() const {
        double m = std::numeric_limits<double>::infinity();
        for (double x : values()) m = std::min(m, x);
        return m;
    }

    const std::vector<double>& mass_table(const DyadicLattice& lat) const {
        check_compatible(v_, lat);
        auto key = std::make_tuple(lat.max_generation(), static_cast<int>(lat.shift()[0]),
                                   static_cast<int>(lat.shift()[1]));
        std::lock_guard<std::mutex> lock(cache_->mu);
        auto it = cache_->tables.find(key);
        if (it != cache_->tables.end()) return *it->second;
        auto t = std::make_shared<std::vector<double>>(lat.cube_sums(v_.values()));
        const double hv = grid().cell_volume();
        for (double& x : *t) x *= hv;
        return *cache_->tables.emplace(key, t).first->second;
    }

    double mass(const DyadicLattice& lat, int cube) const { return mass_table(lat)[cube]; }

private:
    struct Cache {
        std::mutex mu;
        std::map<std::tuple<int, int, int>, std::shared_ptr<std::vector<double>>> tables;
    };
    GridFunction v_;
    std::shared_ptr<Cache> cache_;
};

inline Weight side_even(const Weight& w, Side s) { return Weight(side_even(w.function(), s)); }

// |t|^a averaged over [lo, hi] (interval not containing 0 in its interior).
inline double power_cell_average(double lo, double hi, double a) {
    auto F = [a](double t) { return std::copysign(std::pow(std::abs(t), a + 1.0) / (a + 1.0), t); };
    return (F(hi) - F(lo)) / (hi - lo);
}

struct WeightSpec {
    std::string kind = "constant";  // constant | power | one-sided | grid | exp_bmo
    double value = 1.0;
    double alpha = 0.0;
    double delta = 1.0;
    int axis = -1;  // power: -1 radial, otherwise the coordinate used
    Point center{0.0, 0.0};
    std::string file;
    bool cell_average = false;  // exact cell averages instead of centre samples
};

class WeightFactory {
public:
    // Reads a grid function for kinds "grid" and "exp_bmo".
    using Loader = std::function<GridFunction(const std::string&, const Grid&)>;
    explicit WeightFactory(Loader loader = {}) : loader_(std::move(loader)) {}

    Weight make(const Grid& g, const WeightSpec& s) const {
        const int n = g.dim();
        const double h = g.cell_width();
        if (s.kind == "constant") {
            if (!(s.value > 0)) throw WeightError("constant weight must be positive");
            return Weight::constant(g, s.value);
        }
        if (s.kind == "power" || s.kind == "one-sided") {
            if (s.alpha <= -1.0 && s.cell_average) throw ParameterError("cell averages need alpha > -1");
            int axis = s.kind == "one-sided" ? n - 1 : s.axis;
            if (axis >= n) throw ParameterError("power weight axis out of range");
            if (axis < 0 && n == 2 && s.cell_average)
                throw ParameterError("radial power weight has no closed-form cell average in n=2");
            GridFunction v(g);
            for (std::size_t i = 0; i < g.size(); ++i) {
                Point x = g.point(i);
                double t;
                if (axis < 0 && n == 2)
                    t = std::hypot(x[0] - s.center[0], x[1] - s.center[1]);
                else {
                    int a = axis < 0 ? 0 : axis;
                    t = x[a] - s.center[a];
                }
                if (s.kind == "one-sided" && x[n - 1] < 0) {
                    v[i] = 1.0;
                    continue;
                }
                if (s.cell_average && (axis >= 0 || n == 1))
                    v[i] = power_cell_average(t - 0.5 * h, t + 0.5 * h, s.alpha);
                else
                    v[i] = std::pow(std::abs(t), s.alpha);
            }
            return Weight(std::move(v));
        }
        if (s.kind == "grid" || s.kind == "exp_bmo") {
            if (!loader_) throw ParameterError("no loader configured for weight files");
            GridFunction f = loader_(s.file, g);
            f.check_same(GridFunction(g));
            if (s.kind == "grid") return Weight(std::move(f));
            return exp_of(f, s.delta);
        }
        throw ParameterError("unknown weight kind '" + s.kind + "'");
    }

    static Weight exp_of(const GridFunction& b, double delta) {
        if (!(delta > 0)) throw ParameterError("delta must be positive");
        GridFunction v(b.grid());
        for (std::size_t i = 0; i < b.size(); ++i) {
            double e = delta * b[i];
            if (e > 700.0 || e < -700.0) throw RangeError("exp overflow at delta = " + std::to_string(delta));
            v[i] = std::exp(e);
        }
        return Weight(std::move(v));
    }

private:
    Loader loader_;
};

inline Weight make_weight(const Grid& g, const WeightSpec& s) { return WeightFactory().make(g, s); }

struct ApResult {
    double value = 1.0;
    int lattice = -1;
    int cube = -1;
    std::vector<double> per_lattice;
};

namespace detail {
inline void check_p(double p) {
    if (!(p > 1.0) || !std::isfinite(p)) throw ParameterError("p must lie in (1, inf)");
}
}  // namespace detail

// sup_Q <w>_Q <w^{-1/(p-1)}>_Q^{p-1} over the non-wrapping cubes of every lattice.
inline ApResult ap_constant(const Weight& w, double p, const LatticeSet& lats) {
    detail::check_p(p);
    require_positive(w.values());
    std::vector<double> dual(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) dual[i] = std::pow(w[i], -1.0 / (p - 1.0));
    ApResult r;
    r.value = 0.0;
    for (std::size_t l = 0; l < lats.size(); ++l) {
        const auto& lat = lats[l];
        check_compatible(w.function(), lat);
        auto s1 = lat.cube_sums(w.values());
        auto s2 = lat.cube_sums(dual);
        double best = 0.0;
        for (const auto& q : lat.cubes()) {
            if (q.wraps) continue;
            double c = static_cast<double>(lat.cell_count(q));
            double v = (s1[q.id] / c) * std::pow(s2[q.id] / c, p - 1.0);
            if (v > best) best = v;
            if (v > r.value) {
                r.value = v;
                r.lattice = static_cast<int>(l);
                r.cube = q.id;
            }
        }
        r.per_lattice.push_back(best);
    }
    return r;
}

inline ApResult a1_constant(const Weight& w, const LatticeSet& lats) {
    require_positive(w.values());
    ApResult r;
    r.value = 0.0;
    for (std::size_t l = 0; l < lats.size(); ++l) {
        const auto& lat = lats[l];
        auto s1 = lat.cube_sums(w.values());
        double best = 0.0;
        for (const auto& q : lat.cubes()) {
            if (q.wraps) continue;
            double mn = std::numeric_limits<double>::infinity();
            lat.for_each_cell(q, [&](std::size_t c, Index) { mn = std::min(mn, w[c]); });
            double v = s1[q.id] / static_cast<double>(lat.cell_count(q)) / mn;
            best = std::max(best, v);
            if (v > r.value) {
                r.value = v;
                r.lattice = static_cast<int>(l);
                r.cube = q.id;
            }
        }
        r.per_lattice.push_back(best);
    }
    return r;
}

// [w_{+,e}]_{A^p} + [w_{-,e}]_{A^p}; lattices live on the FullSpace grid of w.
inline double ap_deltaN_constant(const Weight& w, double p, const LatticeSet& lats) {
    if (!w.grid().is_full()) throw DomainError("ap_deltaN_constant needs a FullSpace weight");
    return ap_constant(side_even(w, Side::Upper), p, lats).value +
           ap_constant(side_even(w, Side::Lower), p, lats).value;
}

// Axis-aligned box of grid cells, in local indices of the weight's grid.
struct CellBox {
    Index start{0, 0};
    Index extent{1, 1};
};

inline void check_box(const Grid& g, const CellBox& b) {
    for (int a = 0; a < g.dim(); ++a)
        if (b.extent[a] < 1 || b.start[a] < 0 || b.start[a] + b.extent[a] > g.axis_count(a))
            throw DomainError("box outside the grid");
}

template <class F>
void for_each_box_cell(const Grid& g, const CellBox& b, F&& fn) {
    if (g.dim() == 1) {
        for (int k = 0; k < b.extent[0]; ++k) fn(static_cast<std::size_t>(b.start[0] + k));
        return;
    }
    for (int k = 0; k < b.extent[0]; ++k)
        for (int l = 0; l < b.extent[1]; ++l) fn(g.flat({b.start[0] + k, b.start[1] + l}));
}

// Box of cells covering [lo, hi] on every axis (coordinates must sit on cell edges).
inline CellBox box_from_interval(const Grid& g, const std::array<double, 2>& lo, const std::array<double, 2>& hi) {
    CellBox b;
    const double h = g.cell_width();
    for (int a = 0; a < g.dim(); ++a) {
        double origin = (a == g.dim() - 1 && g.domain() == Domain::UpperHalf) ? 0.0 : -g.halfwidth();
        double s = (lo[a] - origin) / h;
        double e = (hi[a] - lo[a]) / h;
        if (std::abs(s - std::round(s)) > 1e-9 || std::abs(e - std::round(e)) > 1e-9)
            throw GridAlignmentError("box edges are not on cell boundaries");
        b.start[a] = static_cast<int>(std::lround(s));
        b.extent[a] = static_cast<int>(std::lround(e));
    }
    check_box(g, b);
    return b;
}

inline double box_mass(const Weight& w, const CellBox& b) {
    check_box(w.grid(), b);
    double s = 0;
    for_each_box_cell(w.grid(), b, [&](std::size_t c) { s += w[c]; });
    return s * w.grid().cell_volume();
}

inline double ap_quotient(const Weight& w, double p, const CellBox& b) {
    detail::check_p(p);
    check_box(w.grid(), b);
    double s1 = 0, s2 = 0, c = 0;
    for_each_box_cell(w.grid(), b, [&](std::size_t i) {
        s1 += w[i];
        s2 += std::pow(w[i], -1.0 / (p - 1.0));
        c += 1.0;
    });
    return (s1 / c) * std::pow(s2 / c, p - 1.0);
}

inline double ap_deltaN_quotient(const Weight& w, double p, const CellBox& b) {
    return ap_quotient(side_even(w, Side::Upper), p, b) + ap_quotient(side_even(w, Side::Lower), p, b);
}

// w(2Q)/w(Q), 2Q sharing the centre of Q.
inline double doubling_ratio(const Weight& w, const CellBox& q) {
    check_box(w.grid(), q);
    CellBox d;
    for (int a = 0; a < w.grid().dim(); ++a) {
        if (q.extent[a] % 2 != 0) throw ParameterError("doubling needs an even cell extent");
        d.start[a] = q.start[a] - q.extent[a] / 2;
        d.extent[a] = 2 * q.extent[a];
    }
    try {
        check_box(w.grid(), d);
    } catch (const DomainError&) {
        throw DomainError("2Q leaves the grid box");
    }
    return box_mass(w, d) / box_mass(w, q);
}

struct WeightTriple {
    Weight mu;
    Weight lambda;
    double p = 2.0;
    Weight nu;

    WeightTriple(Weight m, Weight l, double pp) : mu(std::move(m)), lambda(std::move(l)), p(pp) {
        detail::check_p(p);
        mu.function().check_same(lambda.function());
        GridFunction v(mu.grid());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::pow(mu[i], 1.0 / p) * std::pow(lambda[i], -1.0 / p);
        nu = Weight(std::move(v));
    }

    double p_prime() const { return p / (p - 1.0); }
    Weight lambda_prime() const { return lambda.pow(-1.0 / (p - 1.0)); }
};

// max over cubes of (mu(B)/|B|)^{1/p} (lambda'(B)/|B|)^{1/p'} / (nu(B)/|B|).
inline double bloom_chain_constant(const WeightTriple& t, const LatticeSet& lats) {
    Weight lp = t.lambda_prime();
    double best = 0.0;
    for (const auto& lat : lats) {
        const auto& m = t.mu.mass_table(lat);
        const auto& l = lp.mass_table(lat);
        const auto& v = t.nu.mass_table(lat);
        for (const auto& q : lat.cubes()) {
            if (q.wraps) continue;
            double vol = lat.volume(q);
            double lhs = std::pow(m[q.id] / vol, 1.0 / t.p) * std::pow(l[q.id] / vol, 1.0 / t.p_prime());
            best = std::max(best, lhs / (v[q.id] / vol));
        }
    }
    return best;
}

inline Weight exp_log_bridge(const GridFunction& b, double delta) { return WeightFactory::exp_of(b, delta); }

inline GridFunction log_weight(const Weight& w) {
    GridFunction r(w.grid());
    for (std::size_t i = 0; i < w.size(); ++i) r[i] = std::log(w[i]);
    return r;
}

struct BridgeSearch {
    double delta = 0.0;  // largest delta found with ap_deltaN <= threshold
    std::vector<std::pair<double, double>> curve;  // (delta, ap_deltaN)
};

// Bisection for the largest delta in (0, delta_max] keeping [e^{delta b}]_{A^p_{Delta_N}} <= threshold.
inline BridgeSearch bridge_delta_search(const GridFunction& b, double p, const LatticeSet& lats, double threshold = 100.0,
                                        double delta_max = 2.0, int iterations = 30) {
    BridgeSearch out;
    auto eval = [&](double d) {
        double v;
        try {
            v = ap_deltaN_constant(exp_log_bridge(b, d), p, lats);
        } catch (const RangeError&) {
            v = std::numeric_limits<double>::infinity();
        }
        out.curve.emplace_back(d, v);
        return v;
    };
    if (eval(delta_max) <= threshold) {
        out.delta = delta_max;
        return out;
    }
    double lo = 0.0, hi = delta_max;
    for (int i = 0; i < iterations; ++i) {
        double mid = 0.5 * (lo + hi);
        if (eval(mid) <= threshold)
            lo = mid;
        else
            hi = mid;
    }
    out.delta = lo;
    return out;
}

}  // namespace wharm
