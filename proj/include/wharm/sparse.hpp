#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "bmo.hpp"
#include "dyadic.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "weights.hpp"

namespace wharm {

struct StoppingFamily {
    int parent = -1;
    double alpha = 2.0;
    double parent_average = 0.0;
    std::vector<int> selected;  // maximal R in D(Q0) with <|g|>_R > alpha <|g|>_{Q0}
};

// Calderon-Zygmund stopping cubes of |g| below Q0.
inline StoppingFamily cz_stopping(const GridFunction& g, const DyadicLattice& lat, int q0, double alpha) {
    if (!(alpha > 1.0)) throw ParameterError("alpha must exceed 1");
    check_compatible(g, lat);
    std::vector<double> a(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) a[i] = std::abs(g[i]);
    auto sums = lat.cube_sums(a);
    auto avg = [&](int id) { return sums[id] / static_cast<double>(lat.cell_count(lat.cube(id))); };
    StoppingFamily fam;
    fam.parent = q0;
    fam.alpha = alpha;
    fam.parent_average = avg(q0);
    const double thr = alpha * fam.parent_average;
    std::vector<int> stack = lat.children(q0);
    std::reverse(stack.begin(), stack.end());
    while (!stack.empty()) {
        int id = stack.back();
        stack.pop_back();
        if (avg(id) > thr) {
            fam.selected.push_back(id);
            continue;
        }
        auto ch = lat.children(id);
        for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
    }
    // invariants: alpha<g>_{Q0} < <g>_R <= 2^n alpha <g>_{Q0}, sum |R| <= |Q0|/alpha
    const double cap = std::pow(2.0, lat.grid().dim()) * thr;
    double cells = 0;
    for (int id : fam.selected) {
        double v = avg(id);
        if (!(v > thr) || v > cap * (1.0 + 1e-12)) throw std::logic_error("stopping-family average bound violated");
        cells += static_cast<double>(lat.cell_count(lat.cube(id)));
    }
    if (cells * alpha > static_cast<double>(lat.cell_count(lat.cube(q0))) * (1.0 + 1e-12))
        throw std::logic_error("stopping-family mass bound violated");
    return fam;
}

struct SparseCollection {
    std::shared_ptr<const DyadicLattice> lattice;
    std::vector<int> cubes;
    // Carrier of each cube as (cell, fraction) pairs; recursion-built carriers are 0/1 masks.
    std::vector<std::vector<std::pair<std::size_t, double>>> carriers;
    double eta = 1.0;

    std::size_t size() const { return cubes.size(); }
};

using ChildrenRule = std::function<std::vector<int>(int cube)>;

inline SparseCollection build_sparse_from_recursion(const ChildrenRule& rule, std::shared_ptr<const DyadicLattice> lat,
                                                    int q0, double alpha) {
    if (!(alpha > 1.0)) throw ParameterError("alpha must exceed 1");
    SparseCollection S;
    S.lattice = lat;
    S.eta = 1.0 - 1.0 / alpha;
    std::vector<int> queue{q0};
    std::vector<char> covered(lat->grid().size());
    bool any_children = false;
    for (std::size_t k = 0; k < queue.size(); ++k) {
        int id = queue[k];
        const auto& q = lat->cube(id);
        std::vector<int> ch = q.generation < lat->max_generation() ? rule(id) : std::vector<int>{};
        double mass = 0;
        for (int c : ch) {
            if (c == id || !lat->contains(id, c)) throw SparsityError("cube " + std::to_string(c) + " is not a strict subcube of " + std::to_string(id));
            mass += static_cast<double>(lat->cell_count(lat->cube(c)));
        }
        if (mass * alpha > static_cast<double>(lat->cell_count(q)) * (1.0 + 1e-12))
            throw SparsityError("children of cube " + std::to_string(id) + " exceed |Q|/alpha");
        std::fill(covered.begin(), covered.end(), 0);
        for (int c : ch) {
            lat->for_each_cell(lat->cube(c), [&](std::size_t cell, Index) {
                if (covered[cell]) throw SparsityError("overlapping children under cube " + std::to_string(id));
                covered[cell] = 1;
            });
        }
        std::vector<std::pair<std::size_t, double>> carrier;
        lat->for_each_cell(q, [&](std::size_t cell, Index) {
            if (!covered[cell]) carrier.emplace_back(cell, 1.0);
        });
        S.cubes.push_back(id);
        S.carriers.push_back(std::move(carrier));
        if (!ch.empty()) any_children = true;
        for (int c : ch) queue.push_back(c);
    }
    if (!any_children) S.eta = 1.0;
    return S;
}

inline SparseCollection cz_sparse(const GridFunction& w, std::shared_ptr<const DyadicLattice> lat, int q0, double alpha = 2.0) {
    return build_sparse_from_recursion([&](int id) { return cz_stopping(w, *lat, id, alpha).selected; }, lat, q0, alpha);
}

// Carriers pairwise disjoint and |E_Q| >= eta |Q| (fractions summed).
inline bool verify_sparse(const SparseCollection& S, double tol = 1e-12) {
    const auto& lat = *S.lattice;
    std::vector<double> used(lat.grid().size(), 0.0);
    for (std::size_t k = 0; k < S.cubes.size(); ++k) {
        double m = 0;
        for (auto [cell, fr] : S.carriers[k]) {
            used[cell] += fr;
            m += fr;
            if (used[cell] > 1.0 + tol) return false;
        }
        if (m < S.eta * static_cast<double>(lat.cell_count(lat.cube(S.cubes[k]))) * (1.0 - tol)) return false;
    }
    return true;
}

// max_{Q in S} sum_{P in S, P subset Q} |P| / |Q|.
inline double carleson_constant(const std::vector<int>& cubes, const DyadicLattice& lat) {
    double best = 0;
    for (int q : cubes) {
        double s = 0;
        for (int p : cubes)
            if (lat.contains(q, p)) s += static_cast<double>(lat.cell_count(lat.cube(p)));
        best = std::max(best, s / static_cast<double>(lat.cell_count(lat.cube(q))));
    }
    return best;
}

// Greedy bottom-up carriers with eta = 1/Lambda; empty result when some cube cannot be served.
inline std::optional<SparseCollection> sparse_from_carleson(const std::vector<int>& cubes,
                                                            std::shared_ptr<const DyadicLattice> lat, double Lambda,
                                                            double tol = 1e-12) {
    if (!(Lambda >= 1.0)) throw ParameterError("Lambda must be >= 1");
    std::vector<int> order = cubes;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        int ga = lat->cube(a).generation, gb = lat->cube(b).generation;
        return ga != gb ? ga > gb : a < b;
    });
    const double eta = 1.0 / Lambda;
    std::vector<double> claimed(lat->grid().size(), 0.0);
    SparseCollection S;
    S.lattice = lat;
    S.eta = eta;
    for (int id : order) {
        const auto& q = lat->cube(id);
        double need = eta * static_cast<double>(lat->cell_count(q));
        std::vector<std::pair<std::size_t, double>> carrier;
        lat->for_each_cell(q, [&](std::size_t cell, Index) {
            if (need <= 0) return;
            double take = std::min(1.0 - claimed[cell], need);
            if (take <= 0) return;
            claimed[cell] += take;
            need -= take;
            carrier.emplace_back(cell, take);
        });
        if (need > tol * static_cast<double>(lat->cell_count(q))) return std::nullopt;
        S.cubes.push_back(id);
        S.carriers.push_back(std::move(carrier));
    }
    return S;
}

inline GridFunction sparse_operator_apply(const SparseCollection& S, const GridFunction& f) {
    const auto& lat = *S.lattice;
    check_compatible(f, lat);
    GridFunction out(f.grid());
    for (int id : S.cubes) {
        const auto& q = lat.cube(id);
        double s = 0;
        lat.for_each_cell(q, [&](std::size_t c, Index) { s += f[c]; });
        double mean = s / static_cast<double>(lat.cell_count(q));
        lat.for_each_cell(q, [&](std::size_t c, Index) { out[c] += mean; });
    }
    return out;
}

inline Eigen::MatrixXd sparse_operator_matrix(const SparseCollection& S) {
    const auto& lat = *S.lattice;
    const std::size_t m = lat.grid().size();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
    for (int id : S.cubes) {
        auto cells = lat.cells_of(lat.cube(id));
        double v = 1.0 / static_cast<double>(cells.size());
        for (std::size_t i : cells)
            for (std::size_t j : cells) A(i, j) += v;
    }
    return A;
}

// ||A_S||_{L^2(w) -> L^2(w)}
inline double sparse_operator_norm(const SparseCollection& S, const Weight& w) {
    Eigen::MatrixXd A = sparse_operator_matrix(S);
    for (Eigen::Index i = 0; i < A.rows(); ++i) A.row(i) *= std::sqrt(w[i]);
    for (Eigen::Index j = 0; j < A.cols(); ++j) A.col(j) /= std::sqrt(w[j]);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(A);
    return svd.singularValues()[0];
}

struct GoodFunction {
    GridFunction a;
    StoppingFamily family;
    double max_mean_error = 0;   // max |<a>_Q - <b>_Q| over Q not inside E, relative to max|b|
    double max_haar_error = 0;   // same for Haar coefficients, relative to max|b| sqrt|Q|
    double bmo_a = 0;            // unweighted dyadic BMO of a on D(Q0)
    double bmo_b = 0;            // weighted dyadic BMO of b on D(Q0)
    double bound = 0;            // 2 alpha <w>_{Q0} ||b||
    bool bound_holds = false;
};

// a = 1_{Q0} b - sum_R (b - <b>_R) 1_R for the stopping cubes R of w.
inline GoodFunction bmo_good_function(const GridFunction& b, const Weight& w, const DyadicLattice& lat, int q0,
                                      double alpha = 2.0, double rel_tol = 1e-9) {
    GoodFunction out;
    out.family = cz_stopping(w.function(), lat, q0, alpha);
    GridFunction a(b.grid());
    lat.for_each_cell(lat.cube(q0), [&](std::size_t c, Index) { a[c] = b[c]; });
    std::vector<char> in_e(b.size(), 0);
    for (int r : out.family.selected) {
        const auto& R = lat.cube(r);
        double s = 0;
        lat.for_each_cell(R, [&](std::size_t c, Index) { s += b[c]; });
        double mean = s / static_cast<double>(lat.cell_count(R));
        lat.for_each_cell(R, [&](std::size_t c, Index) {
            a[c] = mean;
            in_e[c] = 1;
        });
    }
    out.a = a;
    const double scale = std::max(b.max_abs(), 1e-300);
    auto sb = lat.cube_sums(b.values());
    auto sa = lat.cube_sums(a.values());
    auto hb = haar_coefficients(b, lat);
    auto ha = haar_coefficients(a, lat);
    for (const auto& q : lat.cubes()) {
        if (!lat.contains(q0, q.id)) continue;
        bool inside = true;
        lat.for_each_cell(q, [&](std::size_t c, Index) { inside = inside && in_e[c]; });
        if (inside) continue;
        double cnt = static_cast<double>(lat.cell_count(q));
        out.max_mean_error = std::max(out.max_mean_error, std::abs(sa[q.id] - sb[q.id]) / cnt / scale);
        for (int e = 0; e < hb.signatures(); ++e)
            out.max_haar_error = std::max(out.max_haar_error,
                                          std::abs(ha(q.id, e) - hb(q.id, e)) / (scale * std::sqrt(lat.volume(q))));
    }
    out.bmo_a = dyadic_bmo_on(a, nullptr, lat, q0);
    out.bmo_b = dyadic_bmo_on(b, &w, lat, q0);
    out.bound = 2.0 * alpha * out.family.parent_average * out.bmo_b;
    out.bound_holds = out.bmo_a <= out.bound * (1.0 + rel_tol);
    return out;
}

// Sparse family of the pairing argument: children of Q are the maximal cubes inside E_b u E_f,
// with E_b from <w> > 2 alpha <w>_Q and E_f from <|f|> > 2 alpha <|f|>_Q.
inline SparseCollection pairing_sparse(const GridFunction& f, const Weight& w, std::shared_ptr<const DyadicLattice> lat,
                                       int q0, double alpha = 2.0) {
    auto rule = [&](int id) {
        std::vector<char> mark(lat->grid().size(), 0);
        for (int r : cz_stopping(w.function(), *lat, id, 2.0 * alpha).selected)
            lat->for_each_cell(lat->cube(r), [&](std::size_t c, Index) { mark[c] = 1; });
        double s = 0;
        lat->for_each_cell(lat->cube(id), [&](std::size_t c, Index) { s += std::abs(f[c]); });
        if (s > 0)
            for (int r : cz_stopping(f, *lat, id, 2.0 * alpha).selected)
                lat->for_each_cell(lat->cube(r), [&](std::size_t c, Index) { mark[c] = 1; });
        std::vector<int> out, stack = lat->children(id);
        std::reverse(stack.begin(), stack.end());
        while (!stack.empty()) {
            int q = stack.back();
            stack.pop_back();
            bool all = true, any = false;
            lat->for_each_cell(lat->cube(q), [&](std::size_t c, Index) {
                all = all && mark[c];
                any = any || mark[c];
            });
            if (all) {
                out.push_back(q);
            } else if (any) {
                auto ch = lat->children(q);
                for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
            }
        }
        return out;
    };
    return build_sparse_from_recursion(rule, lat, q0, alpha);
}

struct PairingCheck {
    double lhs = 0;  // sum_Q |<b,h>| |<f,h>| over D(Q0)
    double rhs = 0;  // ||b||_{BMO_D(w)} sum_{Q in S} <|f|>_Q w(Q)
    double ratio = 0;
};

inline PairingCheck pairing_bound(const GridFunction& b, const GridFunction& f, const Weight& w,
                                  std::shared_ptr<const DyadicLattice> lat, int q0, double alpha = 2.0) {
    PairingCheck pc;
    auto hb = haar_coefficients(b, *lat);
    auto hf = haar_coefficients(f, *lat);
    for (const auto& q : lat->cubes()) {
        if (!lat->contains(q0, q.id)) continue;
        for (int e = 0; e < hb.signatures(); ++e) pc.lhs += std::abs(hb(q.id, e)) * std::abs(hf(q.id, e));
    }
    SparseCollection S = pairing_sparse(f, w, lat, q0, alpha);
    const auto& mass = w.mass_table(*lat);
    double s = 0;
    for (int id : S.cubes) {
        double a = 0;
        lat->for_each_cell(lat->cube(id), [&](std::size_t c, Index) { a += std::abs(f[c]); });
        s += a / static_cast<double>(lat->cell_count(lat->cube(id))) * mass[id];
    }
    pc.rhs = dyadic_bmo_on(b, &w, *lat, q0) * s;
    pc.ratio = pc.rhs > 0 ? pc.lhs / pc.rhs : 0.0;
    return pc;
}

}  // namespace wharm
