// One PASS/FAIL line per acceptance criterion; exit status is the number of failures.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "wharm/atoms.hpp"
#include "wharm/harness.hpp"
#include "wharm/kernels.hpp"
#include "wharm/sparse.hpp"
#include "wharm/squarefn.hpp"

using namespace wharm;
using harness::json;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

GridFunction random_function(const Grid& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(-1, 1);
    GridFunction f(g);
    for (std::size_t i = 0; i < g.size(); ++i) f[i] = U(rng);
    return f;
}

GridFunction random_positive(const Grid& g, std::mt19937_64& rng, double spread) {
    std::uniform_real_distribution<double> U(-spread, spread);
    GridFunction w(g);
    for (std::size_t i = 0; i < g.size(); ++i) w[i] = std::exp(U(rng));
    return w;
}

double on_side_diff(const GridFunction& a, const GridFunction& b, Side s) {
    double d = 0;
    const Grid& g = a.grid();
    for (std::size_t i = 0; i < g.size(); ++i)
        if ((g.last_coord(i) > 0) == (s == Side::Upper)) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

double cell_average(const GridFunction& f, const DyadicLattice& lat, int id) {
    double s = 0;
    for (auto c : lat.cells_of(lat.cube(id))) s += f[c];
    return s / static_cast<double>(lat.cell_count(lat.cube(id)));
}

// ---- 1: structural identities

Outcome semigroup_reflection() {
    std::mt19937_64 rng(101);
    double worst = 0;
    for (int n : {1, 2}) {
        Grid full(n, 1.0, n == 1 ? 256 : 32);
        for (Side s : {Side::Upper, Side::Lower}) {
            auto f = random_function(full.half(s), rng);
            for (double t : {1e-3, 1e-2, 0.1}) {
                auto a = apply(OperatorHandle::semigroup(Family::Neumann, t), f);
                auto b = restrict_to(apply(OperatorHandle::semigroup(Family::Free, t), extend_even(f)), s);
                worst = std::max(worst, (a - b).max_abs());
            }
        }
    }
    return {worst <= 1e-10, "max_abs_err=" + num(worst)};
}

Outcome riesz_reduction() {
    std::mt19937_64 rng(102);
    double wn = 0, wd = 0;
    for (int n : {1, 2}) {
        Grid full(n, 1.0, n == 1 ? 256 : 32);
        for (Side s : {Side::Upper, Side::Lower}) {
            auto f = random_function(full.half(s), rng);
            for (int j = 1; j <= n; ++j) {
                auto free = [&](const GridFunction& u) {
                    return restrict_to(apply(OperatorHandle::riesz(Family::Free, j), u), s);
                };
                wn = std::max(wn, (apply(OperatorHandle::riesz(Family::Neumann, j), f) - free(extend_even(f))).max_abs());
                wd = std::max(wd, (apply(OperatorHandle::riesz(Family::Dirichlet, j), f) - free(extend_odd(f))).max_abs());
            }
        }
    }
    return {wn <= 1e-10 && wd <= 1e-10, "neumann_err=" + num(wn) + " dirichlet_err=" + num(wd)};
}

Outcome commutator_reduction() {
    std::mt19937_64 rng(103);
    double worst = 0;
    for (int n : {1, 2}) {
        Grid full(n, 1.0, n == 1 ? 256 : 32);
        for (int k = 0; k < 3; ++k) {
            auto b = random_function(full, rng), f = random_function(full, rng);
            for (int l = 1; l <= n; ++l) {
                auto lhs = commutator_apply(b, OperatorHandle::riesz(Family::Neumann, l), f);
                auto rhs = commutator_apply(side_even(b, Side::Upper), OperatorHandle::riesz(Family::Free, l),
                                            side_even(f, Side::Upper));
                worst = std::max(worst, on_side_diff(lhs, rhs, Side::Upper));
            }
        }
    }
    return {worst <= 1e-10, "max_abs_err=" + num(worst)};
}

Outcome square_function_identity() {
    std::mt19937_64 rng(104);
    double worst = 0, lo = 1e300, hi = 0;
    for (int n : {1, 2}) {
        Grid g(n, 1.0, n == 1 ? 256 : 32);
        auto f = random_function(g, rng);
        auto tg = TimeGrid::standard(g);
        auto sn = area_function(f, Generator::HeatQt, ConeKind::Neumann, tg);
        for (Side s : {Side::Upper, Side::Lower}) {
            auto se = area_function(side_even(f, s), Generator::HeatQt, ConeKind::Free, tg);
            for (std::size_t i = 0; i < g.size(); ++i) {
                if ((g.last_coord(i) > 0) != (s == Side::Upper) || se[i] == 0) continue;
                double r = sn[i] / se[i];
                lo = std::min(lo, r);
                hi = std::max(hi, r);
                worst = std::max(worst, std::abs(r / (std::numbers::sqrt2 / 2) - 1));
            }
        }
    }
    return {worst <= 1e-8, "max_rel_err=" + num(worst) + " S_N/S(f_e) in [" + num(lo) + ", " + num(hi) +
                               "] (sqrt2/2=" + num(std::numbers::sqrt2 / 2) + ")"};
}

Outcome heaviside_locality() {
    std::mt19937_64 rng(105);
    double worst = 0;
    for (int n : {1, 2}) {
        Grid g(n, 1.0, n == 1 ? 256 : 32);
        auto f = random_function(g, rng), f2 = f;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (g.last_coord(i) < 0) f2[i] += 10.0 * std::cos(3.0 * static_cast<double>(i));
        std::vector<OperatorHandle> ops{OperatorHandle::semigroup(Family::Neumann, 0.01),
                                        OperatorHandle::semigroup(Family::Dirichlet, 0.01)};
        for (int j = 1; j <= n; ++j) {
            ops.push_back(OperatorHandle::riesz(Family::Neumann, j));
            ops.push_back(OperatorHandle::riesz(Family::Dirichlet, j));
        }
        for (const auto& op : ops) worst = std::max(worst, on_side_diff(apply(op, f), apply(op, f2), Side::Upper));
        auto tg = TimeGrid::standard(g);
        auto a = area_function(f, Generator::HeatQt, ConeKind::Neumann, tg);
        auto b = area_function(f2, Generator::HeatQt, ConeKind::Neumann, tg);
        worst = std::max(worst, on_side_diff(a, b, Side::Upper));
    }
    // pointwise: reflected kernels vanish across the boundary
    std::uniform_real_distribution<double> U(0.01, 1);
    double cross = 0;
    for (int s = 0; s < 200; ++s) {
        Point x{U(rng) - 0.5, U(rng)}, y{U(rng) - 0.5, -U(rng)};
        for (const char* name : {"heat-neumann", "heat-dirichlet", "riesz-neumann-1", "riesz-dirichlet-2"})
            cross = std::max(cross, std::abs(eval_kernel(kernel_from_string(name, 2, 0.05), x, y)));
    }
    return {worst <= 1e-12 && cross == 0.0, "max_abs_change=" + num(worst) + " cross_kernel=" + num(cross)};
}

// ---- 2: oracles

Outcome ap_vs_scan() {
    std::mt19937_64 rng(201);
    double worst = 0;
    for (int n : {1, 2})
        for (int k = 0; k < 10; ++k) {
            Grid g(n, 1.0, n == 1 ? 64 : 16);
            auto lats = standard_lattices(g, max_generation_for(g));
            Weight w(random_positive(g, rng, 1.5));
            for (double p : {1.5, 2.0, 3.0}) {
                double brute = 0;
                for (const auto& lat : lats)
                    for (const auto& q : lat.cubes()) {
                        if (q.wraps) continue;
                        double a = 0, b = 0, c = 0;
                        for (auto i : lat.cells_of(q)) {
                            a += w[i];
                            b += std::pow(w[i], -1.0 / (p - 1.0));
                            c += 1;
                        }
                        brute = std::max(brute, (a / c) * std::pow(b / c, p - 1.0));
                    }
                worst = std::max(worst, std::abs(ap_constant(w, p, lats).value / brute - 1));
            }
        }
    return {worst <= 1e-12, "max_rel_err=" + num(worst)};
}

Outcome stopping_vs_scan() {
    std::mt19937_64 rng(202);
    int mismatches = 0, total = 0;
    for (int k = 0; k < 100; ++k) {
        int n = k % 2 ? 2 : 1;
        Grid g(n, 1.0, n == 1 ? 64 : 16);
        DyadicLattice lat(g, max_generation_for(g));
        auto w = random_positive(g, rng, 3.0);
        int q0 = static_cast<int>(rng() % lat.generation_end(1));
        double alpha = 1.5 + (k % 3);
        double thr = 0;
        for (auto c : lat.cells_of(lat.cube(q0))) thr += w[c];
        thr = alpha * thr / static_cast<double>(lat.cell_count(lat.cube(q0)));
        std::vector<int> brute;
        for (const auto& q : lat.cubes()) {
            if (q.id == q0 || !lat.contains(q0, q.id) || !(cell_average(w, lat, q.id) > thr)) continue;
            bool maximal = true;
            for (const auto& p : lat.cubes())
                if (p.id != q.id && p.id != q0 && lat.contains(q0, p.id) && lat.contains(p.id, q.id) &&
                    cell_average(w, lat, p.id) > thr)
                    maximal = false;
            if (maximal) brute.push_back(q.id);
        }
        auto got = cz_stopping(w, lat, q0, alpha).selected;
        std::sort(got.begin(), got.end());
        std::sort(brute.begin(), brute.end());
        mismatches += got != brute;
        ++total;
    }
    return {mismatches == 0, std::to_string(mismatches) + "/" + std::to_string(total) + " mismatching families"};
}

Outcome sparse_carleson() {
    std::mt19937_64 rng(203);
    int bad = 0, total = 0;
    double worst = 0;
    for (int n : {1, 2}) {
        Grid g(n, 1.0, n == 1 ? 64 : 64);
        auto lat = std::make_shared<const DyadicLattice>(g, 6);
        for (int k = 0; k < 25; ++k) {
            // Carleson -> sparse on arbitrary families
            std::bernoulli_distribution B(0.1 + 0.8 * (k % 5) / 4.0);
            std::vector<int> cubes;
            for (const auto& q : lat->cubes())
                if (B(rng)) cubes.push_back(q.id);
            if (cubes.empty()) continue;
            double Lambda = carleson_constant(cubes, *lat);
            auto S = sparse_from_carleson(cubes, lat, Lambda);
            ++total;
            if (!S || !verify_sparse(*S) || std::abs(S->eta * Lambda - 1) > 1e-14) {
                ++bad;
                continue;
            }
            // sparse -> Carleson, on the certified family and on a stopping family
            worst = std::max(worst, carleson_constant(S->cubes, *lat) * S->eta - 1);
            auto cz = cz_sparse(random_positive(g, rng, 2.0), lat, 0, 2.0);
            if (!verify_sparse(cz)) ++bad;
            worst = std::max(worst, carleson_constant(cz.cubes, *lat) * cz.eta - 1);
        }
    }
    return {bad == 0 && worst <= 1e-12, std::to_string(bad) + "/" + std::to_string(total) +
                                            " failed certifications, max(Lambda*eta - 1)=" + num(worst)};
}

Outcome haar_parseval() {
    std::mt19937_64 rng(204);
    double worst = 0;
    for (int n : {1, 2}) {
        Grid g(n, 1.3, n == 1 ? 1024 : 64);
        auto lats = standard_lattices(g, max_generation_for(g, 2));
        auto f = random_function(g, rng);
        for (const auto& lat : lats) {
            if (lat.shift() != ShiftTuple{Shift::None, Shift::None}) continue;
            auto hc = haar_coefficients(f, lat);
            double mean = f.integral() / std::pow(2.0 * g.halfwidth(), n), sum = 0;
            for (std::size_t q = 0; q < hc.cubes(); ++q) sum += hc.sum_squares(static_cast<int>(q));
            GridFunction c = f - GridFunction(g, mean);
            double e = (c * c).integral();
            worst = std::max(worst, std::abs(sum - e) / e);
        }
    }
    return {worst <= 1e-10, "max_rel_err=" + num(worst)};
}

Outcome qt_finite_difference() {
    std::mt19937_64 rng(205);
    std::uniform_real_distribution<double> U(-1, 1);
    double worst = 0;
    for (int n : {1, 2})
        for (int s = 0; s < 500; ++s) {
            Point x{U(rng), n == 2 ? U(rng) : 0.0}, y{U(rng), n == 2 ? U(rng) : 0.0};
            double t = 0.1 + 0.5 * (U(rng) + 1);
            double s0 = t * t, d = 1e-5 * s0;
            double fd = -t * t * (heat_free(x, y, s0 + d, n) - heat_free(x, y, s0 - d, n)) / (2 * d);
            double q = eval_qt(x, y, t, n);
            worst = std::max(worst, std::abs(q - fd) / std::max(std::abs(q), 1e-3 * std::pow(t, -n)));
        }
    return {worst <= 1e-6, "max_rel_err=" + num(worst)};
}

// ---- 3: inequalities

Outcome john_nirenberg() {
    auto r = harness::run("john-nirenberg", json{{"seed", 7}, {"instances", 200}});
    const auto& s = r.summary;
    double min_rho = 1e300;
    for (const auto& row : r.rows) min_rho = std::min(min_rho, row["rho"].get<double>());
    return {r.pass, "instances=" + std::to_string(r.rows.size()) + " min_rho=" + num(min_rho) +
                        " fitted_C=" + num(s["fit"]["fitted"].get<double>()) +
                        " holdout_max=" + num(s["fit"]["holdout_max"].get<double>())};
}

Outcome sparse_a2() {
    std::mt19937_64 rng(301);
    Grid g(1, 1.0, 128);
    auto lat = std::make_shared<const DyadicLattice>(g, 7);
    auto lats = standard_lattices(g, 7);
    std::uniform_real_distribution<double> A(-0.8, 0.8);
    std::vector<double> ratios;
    for (int k = 0; k < 50; ++k) {
        double a = A(rng);
        Weight w(GridFunction::sample(g, [&](Point x) { return std::pow(std::abs(x[0]), a); }));
        auto S = cz_sparse(random_positive(g, rng, 3.0), lat, 0);
        ratios.push_back(sparse_operator_norm(S, w) * S.eta / ap_constant(w, 2.0, lats).value);
    }
    auto fit = fit_constant(ratios);
    return {fit.holds, "fitted_C=" + num(fit.fitted) + " holdout_max=" + num(fit.holdout_max)};
}

Outcome good_function() {
    std::mt19937_64 rng(302);
    std::normal_distribution<double> N01;
    int bad = 0;
    double worst = 0;
    for (int k = 0; k < 100; ++k) {
        int n = k % 4 == 3 ? 2 : 1;
        Grid g(n, 1.0, n == 1 ? 128 : 16);
        DyadicLattice lat(g, max_generation_for(g));
        Weight w(random_positive(g, rng, 2.0));
        GridFunction b(g);
        for (std::size_t i = 0; i < g.size(); ++i) b[i] = N01(rng);
        int q0 = static_cast<int>(rng() % lat.generation_end(1));
        auto gf = bmo_good_function(b, w, lat, q0, 2.0, 1e-9);
        bad += !gf.bound_holds;
        worst = std::max(worst, gf.bmo_a / gf.bound);
    }
    return {bad == 0, std::to_string(bad) + "/100 violations, max ||a||/(2 alpha <w> ||b||)=" + num(worst)};
}

Outcome stopping_bounds() {
    std::mt19937_64 rng(303);
    int bad = 0;
    for (int k = 0; k < 200; ++k) {
        int n = k % 2 ? 2 : 1;
        Grid g(n, 1.0, n == 1 ? 128 : 32);
        DyadicLattice lat(g, max_generation_for(g));
        auto w = random_positive(g, rng, 3.0);
        int q0 = static_cast<int>(rng() % lat.generation_end(2));
        double alpha = 1.5 + (k % 4) * 0.5;
        auto fam = cz_stopping(w, lat, q0, alpha);
        const double a0 = cell_average(w, lat, q0);
        std::size_t cells = 0;
        for (int r : fam.selected) {
            double ar = cell_average(w, lat, r);
            if (!(ar > alpha * a0) || !(ar <= std::pow(2.0, n) * alpha * a0 * (1 + 1e-14))) ++bad;
            cells += lat.cell_count(lat.cube(r));
        }
        if (alpha * static_cast<double>(cells) > static_cast<double>(lat.cell_count(lat.cube(q0)))) ++bad;
    }
    return {bad == 0, std::to_string(bad) + " violations over 200 families"};
}

// ---- 4: bands

Outcome commutator_band() {
    auto r = harness::run("two-weight-commutator",
                          json{{"seed", 3}, {"grid", {{"dim", 1}, {"halfwidth", 1.0}, {"points_per_axis", 256}}},
                               {"p", 2.0}, {"instances", 50}, {"band_limit", 50.0}});
    std::string d;
    for (const auto& pj : r.summary["pairs"])
        d += "[" + num(pj["lo"].get<double>()) + ", " + num(pj["hi"].get<double>()) + "] ";
    const auto& c = r.summary["combined"];
    d += "combined C/c=" + num(c["spread"].get<double>());
    return {r.pass && c["pass"].get<bool>(), d};
}

Outcome flavor_bands() {
    auto r = harness::run("bmo-coincidence",
                          json{{"seed", 4}, {"grid", {{"dim", 1}, {"halfwidth", 1.0}, {"points_per_axis", 256}}},
                               {"p", 2.0}, {"instances", 50}, {"band_limit", 50.0}});
    std::string d;
    for (const auto& pj : r.summary["pairs"]) d += pj["pair"].get<std::string>() + " C/c=" + num(pj["spread"].get<double>()) + " ";
    return {r.pass, d};
}

// ---- 5: counterexamples

Outcome non_doubling() {
    // w = x^{1/2} on x > 0, 1 below; Q_b = [b/16, 11b/16], 2Q_b = [-b/4, b]
    double worst = 0, ratio = 0;
    for (double b = 0.5; b >= 1.0 / 4096; b /= 2) {
        Grid g(1, b, 32);
        WeightSpec s;
        s.kind = "one-sided";
        s.alpha = 0.5;
        s.cell_average = true;
        Weight w = make_weight(g, s);
        CellBox q = box_from_interval(g, {b / 16, 0}, {11 * b / 16, 0});
        double wq = (2.0 / 3.0) * (std::pow(11 * b / 16, 1.5) - std::pow(b / 16, 1.5));
        double w2q = b / 4 + (2.0 / 3.0) * std::pow(b, 1.5);
        ratio = doubling_ratio(w, q);
        worst = std::max(worst, std::abs(ratio - w2q / wq) / (w2q / wq));
    }
    return {ratio > 10 && worst <= 1e-8, "ratio_at_b=2^-12=" + num(ratio) + " max_rel_err=" + num(worst)};
}

Outcome one_sided_contrast() {
    auto quotients = [](double a) {
        const int N = 2 * static_cast<int>(std::lround(a * 32));
        Grid g(1, a, N);
        WeightSpec s;
        s.kind = "one-sided";
        s.alpha = 0.5;
        Weight w = make_weight(g, s);
        CellBox box{{0, 0}, {N, 1}};
        return std::pair{ap_quotient(w, 2.0, box), ap_deltaN_quotient(w, 2.0, box)};
    };
    std::string d = "classical:";
    std::vector<double> cl, dn;
    for (double a : {1.0, 2.0, 4.0, 8.0}) {
        auto [c, n] = quotients(a);
        cl.push_back(c);
        dn.push_back(n);
        d += " " + num(c);
    }
    bool increasing = true;
    for (std::size_t i = 1; i < cl.size(); ++i) increasing = increasing && cl[i] > cl[i - 1];
    double spread = *std::max_element(dn.begin(), dn.end()) / *std::min_element(dn.begin(), dn.end()) - 1;
    d += " deltaN spread=" + num(spread) + " | a=8..64 classical:";
    for (double a : {8.0, 16.0, 32.0, 64.0}) d += " " + num(quotients(a).first);
    return {increasing && spread <= 0.05, d};
}

Outcome dirichlet_counterexample() {
    auto rows = harness::dirichlet_sweep("log", 1.0, {128, 256, 512, 1024});
    auto v = harness::dirichlet_verdict(rows, 0.5, 2.0);
    std::string d = "odd_bmo:";
    for (const auto& r : rows) d += " " + num(r.odd_bmo);
    d += " min_increment=" + num(v.min_odd_increment) + " commutator_spread=" + num(v.commutator_spread);
    return {v.pass, d};
}

// ---- 6

Outcome determinism() {
    const json g1{{"dim", 1}, {"halfwidth", 1.0}, {"points_per_axis", 64}};
    std::vector<std::pair<std::string, json>> cfgs{
        {"two-weight-commutator", {{"seed", 5}, {"grid", g1}, {"instances", 6}}},
        {"riesz-ap-characterization", {{"refinements", {32, 64}}, {"contrast_boxes", {1, 2}}}},
        {"dirichlet-counterexample", {{"refinements", {32, 64, 128}}}},
        {"bmo-coincidence", {{"seed", 5}, {"grid", g1}, {"instances", 12}}},
        {"john-nirenberg", {{"seed", 5}, {"grid", g1}, {"instances", 20}}}};
    int differ = 0;
    for (const auto& [name, cfg] : cfgs) {
        auto a = harness::run(name, cfg), b = harness::run(name, cfg);
        differ += a.to_json().dump() != b.to_json().dump() || a.to_csv() != b.to_csv();
    }
    return {differ == 0, std::to_string(differ) + "/" + std::to_string(cfgs.size()) + " experiments differ on re-run"};
}

}  // namespace

int main() {
    const std::vector<std::tuple<std::string, std::string, std::function<Outcome()>>> criteria{
        {"1.1", "semigroup reflection identity", semigroup_reflection},
        {"1.2", "Neumann/Dirichlet Riesz reduction", riesz_reduction},
        {"1.3", "commutator reduction", commutator_reduction},
        {"1.4", "S_N = (sqrt2/2) S(f_e) pointwise", square_function_identity},
        {"1.5", "Heaviside locality", heaviside_locality},
        {"2.1", "A^p constant vs exhaustive scan", ap_vs_scan},
        {"2.2", "CZ stopping vs brute-force maximality", stopping_vs_scan},
        {"2.3", "sparse <=> Carleson", sparse_carleson},
        {"2.4", "Haar Parseval", haar_parseval},
        {"2.5", "q_t closed form vs finite differences", qt_finite_difference},
        {"3.1", "John-Nirenberg rho >= 1 and fitted bound", john_nirenberg},
        {"3.2", "sparse operator A2 bound", sparse_a2},
        {"3.3", "good-function BMO bound", good_function},
        {"3.4", "stopping-family bounds", stopping_bounds},
        {"4.1", "two-weight commutator band", commutator_band},
        {"4.2", "BMO flavor-pair bands", flavor_bands},
        {"5.1", "one-sided weight is not doubling", non_doubling},
        {"5.2", "classical vs Delta_N A^p contrast", one_sided_contrast},
        {"5.3", "Dirichlet commutator counterexample", dirichlet_counterexample},
        {"6", "determinism", determinism}};
    int failures = 0;
    for (const auto& [id, name, fn] : criteria) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += !o.pass;
        std::printf("%s %-4s %-42s %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id.c_str(), name.c_str(), o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures;
}
