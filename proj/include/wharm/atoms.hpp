#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <utility>
#include <vector>

#include "dyadic.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "kernels.hpp"
#include "squarefn.hpp"
#include "weights.hpp"

namespace wharm {

// Axis-aligned cube given by center and half side; periodic supports measure distance on the torus.
struct AtomSupport {
    Point center{0.0, 0.0};
    double radius = 0.0;
    bool periodic = false;

    static AtomSupport of(const DyadicLattice& lat, const DyadicCube& q, double dilation = 1.0, bool periodic = false) {
        const Grid& g = lat.grid();
        AtomSupport s;
        for (int a = 0; a < g.dim(); ++a) {
            int k0 = q.start[a];
            double lo = g.coord(a, 0) - 0.5 * g.cell_width() + k0 * g.cell_width();
            s.center[a] = lo + 0.5 * q.sidelength;
        }
        s.radius = 0.5 * dilation * q.sidelength;
        s.periodic = periodic;
        return s;
    }

    double offset(const Grid& g, int axis, double x) const {
        double d = x - center[axis];
        if (periodic) {
            const double P = 2.0 * g.halfwidth();
            d -= P * std::round(d / P);
        }
        return d;
    }

    bool contains(const Grid& g, const Point& x) const {
        const double slack = 1e-9 * g.cell_width();
        for (int a = 0; a < g.dim(); ++a)
            if (std::abs(offset(g, a, x[a])) > radius + slack) return false;
        return true;
    }
};

struct AtomReport {
    double outside_mass = 0;   // sum of |a| h^n outside the support
    bool support_ok = true;
    double max_moment = 0;     // worst |moment| / (||a||_1 l^|alpha|)
    bool moments_ok = true;
    double norm = 0;           // ||a||_{L^p_w}
    double bound = 0;          // w(Q)^{1/p - 1}
    bool norm_ok = true;
    double rescale = 1.0;      // factor bringing the norm under the bound (1 if already fine)
    bool valid() const { return support_ok && moments_ok && norm_ok; }
};

inline AtomReport check_atom(const GridFunction& a, const AtomSupport& supp, double p, int beta, const Weight& w) {
    detail::check_p(p);
    if (beta < 0) throw ParameterError("beta must be >= 0");
    a.check_same(w.function());
    const Grid& g = a.grid();
    const double hv = g.cell_volume();
    const int n = g.dim();
    AtomReport r;
    double l1 = 0, lp = 0, wq = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        Point x = g.point(i);
        double v = std::abs(a[i]);
        l1 += v * hv;
        if (supp.contains(g, x))
            wq += w[i] * hv;
        else
            r.outside_mass += v * hv;
        lp += std::pow(v, p) * w[i] * hv;
    }
    r.support_ok = r.outside_mass == 0.0;
    const double ell = 2.0 * supp.radius;
    for (int o0 = 0; o0 <= beta; ++o0) {
        for (int o1 = 0; o1 <= (n == 2 ? beta - o0 : 0); ++o1) {
            double m = 0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                if (a[i] == 0.0) continue;
                Point x = g.point(i);
                double mono = std::pow(supp.offset(g, 0, x[0]), o0);
                if (n == 2) mono *= std::pow(supp.offset(g, 1, x[1]), o1);
                m += a[i] * mono * hv;
            }
            double scale = l1 * std::pow(ell, o0 + o1);
            double rel = scale > 0 ? std::abs(m) / scale : 0.0;
            r.max_moment = std::max(r.max_moment, rel);
            if (rel > 1e-10) r.moments_ok = false;
        }
    }
    r.norm = std::pow(lp, 1.0 / p);
    r.bound = wq > 0 ? std::pow(wq, 1.0 / p - 1.0) : 0.0;
    r.norm_ok = r.norm <= r.bound * (1.0 + 1e-9);
    if (!r.norm_ok && r.norm > 0) r.rescale = r.bound / r.norm;
    return r;
}

struct Atom {
    int k = 0;
    int cube = -1;  // maximal cube Q-bar of the level set
    double lambda = 0;
    AtomSupport support;
    GridFunction values;
    AtomReport report;
};

struct DecompositionOptions {
    double p = 2.0;
    int beta = 0;
    int per_octave = 8;
    double t_min_cells = 0.125;   // finest synthesis time in cells
    double t_max_box = 2.0;       // coarsest synthesis time in units of the box width 2L
};

struct AtomicDecomposition {
    DyadicLattice lattice;
    std::vector<Atom> atoms;
    GridFunction square;             // S f used for the level sets
    GridFunction residual;           // f - sum lambda a
    int k_min = 0, k_max = 0;
    double reproducing_constant = 0;  // continuous constant c
    double symbol_min = 0, symbol_max = 0;  // range of c times the discrete reproducing symbol
    double lambda_sum = 0;
    double square_l1w = 0;           // ||S f||_{L^1_w}
    double level_sum = 0;            // sum_k 2^k w(Omega_k)
    double residual_l1w = 0;
    double f_l1w = 0;
    double max_atom_mean = 0;        // max |int a| / ||a||_1
    double max_support_excess = 0;   // max outside mass / ||a||_1
    bool nesting_ok = true;          // Omega_{k+1} in Omega_k in tilde Omega_k
    int unassigned_cubes = 0;
};

namespace detail {

// 1 / int_0^inf psi(u) m(u) du/u for the radial generator profile m.
inline double reproducing_constant(Generator gen) {
    auto m = [&](double u) {
        switch (gen) {
        case Generator::HeatQt: return u * u * std::exp(-u * u);
        case Generator::PhiLoG: return std::numbers::sqrt2 * u * u * std::exp(-0.5 * u * u);
        default: throw ParameterError("atomic decomposition supports the heat and phi-log generators");
        }
    };
    double s = 0, du = 1e-4;
    for (double x = -25.0; x < 4.0; x += du) {
        double u = std::exp(x + 0.5 * du);
        s += psi_multiplier(u) * m(u) * du;
    }
    return 1.0 / s;
}

// Row of the periodized cell stencil of psi(t sqrt(Delta)) by signed offset d in [0, N).
inline std::vector<std::pair<int, double>> periodic_psi_row(double t, double h, int N) {
    std::vector<std::pair<int, double>> row;
    const double reach = t + h;
    const int mmax = static_cast<int>(std::ceil(reach / (N * h))) + 1;
    for (int d = 0; d < N; ++d) {
        double s = 0;
        for (int m = -mmax; m <= mmax; ++m) {
            double off = (d + static_cast<double>(m) * N) * h;
            if (std::abs(off) < reach) s += psi_cell_kernel(off, t, h);
        }
        if (s != 0.0) row.emplace_back(d, s);
    }
    return row;
}

}  // namespace detail

// Level-set atomic decomposition of f through the Calderon reproducing formula
// f = c int psi(t sqrt(Delta)) G_t f dt/t, split into Whitney pieces Q x (l/2, l].
inline AtomicDecomposition atomic_decompose(const GridFunction& f, Generator gen, const Weight& w,
                                            const DecompositionOptions& o = {}) {
    const Grid& g = f.grid();
    if (g.dim() != 1 || !g.is_full()) throw ParameterError("atomic decomposition is implemented for n=1 on the full line");
    f.check_same(w.function());
    require_positive(w.values());
    detail::check_p(o.p);
    const double c = detail::reproducing_constant(gen);
    const int N = g.points_per_axis();
    const double h = g.cell_width(), L = g.halfwidth();

    AtomicDecomposition D{DyadicLattice(g, max_generation_for(g, 1)), {}, area_function(f, gen, ConeKind::Free, TimeGrid::standard(g)),
                          GridFunction(g)};
    const DyadicLattice& lat = D.lattice;
    D.reproducing_constant = c;
    const GridFunction& S = D.square;

    double smax = 0, smin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < S.size(); ++i) {
        smax = std::max(smax, S[i]);
        if (S[i] > 0) smin = std::min(smin, S[i]);
    }
    if (!(smax > 0)) throw DecompositionError("square function vanishes: f is below the grid resolution");
    D.k_max = static_cast<int>(std::ceil(std::log2(smax))) - 1;
    D.k_min = std::max(static_cast<int>(std::floor(std::log2(smin))) - 1, D.k_max - 60);
    const int K = D.k_max - D.k_min + 1;

    const auto& wmass = w.mass_table(lat);
    std::vector<std::vector<char>> omega(K, std::vector<char>(g.size())), tilde(K);
    std::vector<std::vector<double>> in_mass(K);
    for (int k = 0; k < K; ++k) {
        const double thr = std::exp2(D.k_min + k);
        std::vector<double> ind(g.size()), wind(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            omega[k][i] = S[i] > thr;
            ind[i] = omega[k][i];
            wind[i] = ind[i] * w[i] * h;
            if (omega[k][i]) D.level_sum += std::exp2(D.k_min + k) * w[i] * h;
        }
        in_mass[k] = lat.cube_sums(wind);
        GridFunction M = weighted_maximal(GridFunction(g, ind), w.function(), lat);
        tilde[k].resize(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) tilde[k][i] = M[i] > 0.5;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (omega[k][i] && !tilde[k][i]) D.nesting_ok = false;
            if (k > 0 && omega[k][i] && !omega[k - 1][i]) D.nesting_ok = false;
        }
    }

    // B_k membership: largest k with w(Q n Omega_k) > w(Q)/2; Q-bar the maximal cube of tilde Omega_k above Q.
    std::vector<int> kq(lat.size(), -1), qbar(lat.size(), -1);
    auto inside = [&](int id, const std::vector<char>& m) {
        bool all = true;
        lat.for_each_cell(lat.cube(id), [&](std::size_t cell, Index) { all = all && m[cell]; });
        return all;
    };
    for (const auto& q : lat.cubes()) {
        for (int k = K - 1; k >= 0; --k)
            if (in_mass[k][q.id] > 0.5 * wmass[q.id]) {
                kq[q.id] = k;
                break;
            }
        if (kq[q.id] < 0) {
            ++D.unassigned_cubes;
            continue;
        }
        int top = q.id;
        while (lat.cube(top).parent >= 0 && inside(lat.cube(top).parent, tilde[kq[q.id]])) top = lat.cube(top).parent;
        qbar[q.id] = top;
    }

    // synthesis times t_m = t_max 2^{-m/M} down to t_min; each t goes to the generation with l/2 < t <= l
    std::vector<double> times;
    const double dlog = std::log(2.0) / o.per_octave;
    const double tmax = o.t_max_box * 2.0 * L, tmin = o.t_min_cells * h;
    for (int m = 0;; ++m) {
        double t = tmax * std::exp2(-static_cast<double>(m) / o.per_octave);
        if (t < tmin * (1.0 - 1e-12)) break;
        times.push_back(t);
    }
    const int G = lat.max_generation();

    // The cell stencil of psi(t sqrt(Delta)) is the exact kernel smoothed over cells, so its symbol is not psi(t|xi|).
    // Dividing f by the discrete reproducing symbol sum_t dlog P_t(xi) m(t|xi|) makes the synthesis exact.
    std::vector<std::vector<std::pair<int, double>>> rows;
    std::vector<double> symbol(N, 0.0);
    {
        std::vector<double> cosk(N);
        for (int j = 0; j < N; ++j) cosk[j] = std::cos(2.0 * std::numbers::pi * j / N);
        for (double t : times) {
            rows.push_back(detail::periodic_psi_row(t, h, N));
            for (int k = 1; k < N; ++k) {
                double P = 0;
                for (auto [d, a] : rows.back()) P += a * cosk[(static_cast<long long>(k) * d) % N];
                Frequency q;
                q.k[0] = k < N / 2 ? k : k - N;
                q.xi[0] = std::numbers::pi * q.k[0] / L;
                symbol[k] += dlog * P * generator_symbol(gen, t, q, 1, N).real();
            }
        }
    }
    D.symbol_min = std::numeric_limits<double>::infinity();
    for (int k = 1; k < N; ++k) {
        D.symbol_min = std::min(D.symbol_min, c * symbol[k]);
        D.symbol_max = std::max(D.symbol_max, c * symbol[k]);
    }
    if (!(D.symbol_min > 0)) throw DecompositionError("discrete reproducing symbol is not positive");
    GridFunction fn = Spectrum(f).apply([&](const Frequency& q) {
        int k = q.k[0] < 0 ? q.k[0] + N : q.k[0];
        return k == 0 ? 0.0 : 1.0 / symbol[k];
    });

    std::map<std::pair<int, int>, std::size_t> slot;
    std::vector<std::vector<double>> acc;
    std::vector<double> total(g.size(), 0.0);
    GeneratorFields F(fn, gen);
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
        const double t = times[ti];
        int gen_t = 0;
        while (gen_t < G && t <= 0.5 * lat.cube(lat.generation_begin(gen_t)).sidelength * (1.0 + 1e-12)) ++gen_t;
        GridFunction Ft = F.at(t);
        const auto& row = rows[ti];
        const double wgt = dlog;
        for (int id = lat.generation_begin(gen_t); id < lat.generation_end(gen_t); ++id) {
            if (kq[id] < 0) continue;
            auto key = std::make_pair(kq[id], qbar[id]);
            auto it = slot.find(key);
            if (it == slot.end()) {
                it = slot.emplace(key, acc.size()).first;
                acc.emplace_back(g.size(), 0.0);
            }
            std::vector<double>& out = acc[it->second];
            lat.for_each_cell(lat.cube(id), [&](std::size_t j, Index) {
                const double v = wgt * Ft[j];
                if (v == 0.0) return;
                for (auto [d, a] : row) {
                    std::size_t i = (j + static_cast<std::size_t>(d)) % static_cast<std::size_t>(N);
                    out[i] += a * v;
                }
            });
        }
    }

    for (auto& [key, idx] : slot) {
        Atom at;
        at.k = D.k_min + key.first;
        at.cube = key.second;
        at.lambda = std::exp2(at.k) * wmass[at.cube];
        at.support = AtomSupport::of(lat, lat.cube(at.cube), 3.0, true);
        std::vector<double> v = acc[idx];
        double l1 = 0, mean = 0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            total[i] += v[i];
            l1 += std::abs(v[i]) * h;
            mean += v[i] * h;
            v[i] /= at.lambda;
        }
        at.values = GridFunction(g, std::move(v));
        at.report = check_atom(at.values, at.support, o.p, o.beta, w);
        if (l1 > 0) {
            D.max_atom_mean = std::max(D.max_atom_mean, std::abs(mean) / l1);
            D.max_support_excess = std::max(D.max_support_excess, at.report.outside_mass * at.lambda / l1);
        }
        D.lambda_sum += at.lambda;
        D.atoms.push_back(std::move(at));
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
        D.residual[i] = f[i] - total[i];
        D.residual_l1w += std::abs(D.residual[i]) * w[i] * h;
        D.f_l1w += std::abs(f[i]) * w[i] * h;
        D.square_l1w += S[i] * w[i] * h;
    }
    if (D.atoms.empty()) throw DecompositionError("no level set produced an atom");
    return D;
}

}  // namespace wharm
