#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "dyadic.hpp"
#include "errors.hpp"
#include "fft.hpp"
#include "grid.hpp"
#include "kernels.hpp"
#include "weights.hpp"

namespace wharm {

// HeatQt: t^2 Delta e^{-t^2 Delta}; Psi: psi(t sqrt Delta);
// PhiGaussDeriv: sqrt2 * derivative of a Gaussian (n=1); PhiLoG: sqrt2 * Laplacian of a Gaussian.
enum class Generator { HeatQt, Psi, PhiGaussDeriv, PhiLoG };
enum class ConeKind { Free, Neumann };

inline const char* to_string(Generator g) {
    switch (g) {
    case Generator::HeatQt: return "heat";
    case Generator::Psi: return "psi";
    case Generator::PhiGaussDeriv: return "phi-gauss";
    case Generator::PhiLoG: return "phi-log";
    }
    return "?";
}

inline Generator generator_from_string(const std::string& s) {
    if (s == "heat") return Generator::HeatQt;
    if (s == "psi") return Generator::Psi;
    if (s == "phi-gauss") return Generator::PhiGaussDeriv;
    if (s == "phi-log") return Generator::PhiLoG;
    throw ParameterError("unknown generator '" + s + "'");
}

// Symbol of the generator at t*|xi| (PhiGaussDeriv uses the signed 1-d frequency).
inline cplx generator_symbol(Generator g, double t, const Frequency& q, int n, int N) {
    const double r = t * q.norm(n);
    switch (g) {
    case Generator::HeatQt: return r * r * std::exp(-r * r);
    case Generator::Psi: return psi_multiplier(r);
    case Generator::PhiLoG: return std::numbers::sqrt2 * r * r * std::exp(-0.5 * r * r);
    case Generator::PhiGaussDeriv: {
        if (q.nyquist(0, N)) return 0.0;
        double s = t * q.xi[0];
        return cplx(0.0, std::numbers::sqrt2 * s * std::exp(-0.5 * s * s));
    }
    }
    return 0.0;
}

// int_0^inf |m(s)|^2 ds/s for the radial profile of each generator.
inline double generator_constant(Generator g) {
    switch (g) {
    case Generator::HeatQt: return 0.125;
    case Generator::PhiLoG: return 1.0;
    case Generator::PhiGaussDeriv: return 1.0;
    case Generator::Psi: {
        // psi decays like 1/s, so integrate on a log grid far into the tail and add the tail mean.
        double sum = 0, du = 1e-3;
        for (double u = -20.0; u < 12.0; u += du) {
            double s = std::exp(u + 0.5 * du);
            double v = psi_multiplier(s);
            sum += v * v * du;
        }
        // tail beyond e^12: <psi^2> ~ (2 sin(s/2) - sin s)^2/s^2, mean of the square is 5/2
        double s1 = std::exp(12.0);
        sum += 2.5 / (2.0 * s1 * s1);
        return sum;
    }
    }
    return 1.0;
}

struct TimeGrid {
    std::vector<double> t;
    double dlog = std::log(2.0) / 8.0;
    int per_octave = 8;

    static TimeGrid geometric(double t_min, double t_max, int per_octave = 8) {
        if (!(t_min > 0) || !(t_max >= t_min)) throw ParameterError("time grid needs 0 < t_min <= t_max");
        if (per_octave < 1) throw ParameterError("per_octave must be >= 1");
        TimeGrid g;
        g.per_octave = per_octave;
        g.dlog = std::log(2.0) / per_octave;
        for (int m = 0;; ++m) {
            double t = t_min * std::exp2(static_cast<double>(m) / per_octave);
            if (t > t_max * (1.0 + 1e-12)) break;
            g.t.push_back(t);
        }
        return g;
    }

    // Default: t from 2h to L.
    static TimeGrid standard(const Grid& g, int per_octave = 8) {
        return geometric(2.0 * g.cell_width(), g.halfwidth(), per_octave);
    }

    void validate(const Grid& g) const {
        if (t.empty()) throw ParameterError("empty time grid");
        if (t.front() < g.cell_width() * (1.0 - 1e-12)) throw ParameterError("t_min below the cell width");
        if (t.back() > 2.0 * g.halfwidth() * (1.0 + 1e-12)) throw ParameterError("t_max above the box width");
    }
};

// G_t f for a fixed generator, reusing one forward transform.
class GeneratorFields {
public:
    GeneratorFields(const GridFunction& f, Generator g) : spec_(f), gen_(g) {
        if (g == Generator::PhiGaussDeriv && f.grid().dim() != 1)
            throw ParameterError("the Gaussian-derivative generator is implemented in n=1");
    }
    GridFunction at(double t) const {
        const int n = spec_.grid().dim(), N = spec_.grid().points_per_axis();
        return spec_.apply([&](const Frequency& q) { return generator_symbol(gen_, t, q, n, N); });
    }
    const Grid& grid() const { return spec_.grid(); }

private:
    Spectrum spec_;
    Generator gen_;
};

namespace detail {

inline int cone_reach(double t, double h) {
    int d = static_cast<int>(std::floor(t / h));
    while (d >= 0 && d * h >= t) --d;
    return d;
}

// acc(x) += scale * sum_{|x-y|<t, y allowed} E(y) h^n. side_split restricts y to x's side.
inline void add_cone_sums(const Grid& g, const std::vector<double>& E, double t, double scale, bool side_split,
                          std::vector<double>& acc) {
    const double h = g.cell_width();
    const double hv = g.cell_volume();
    const int N = g.points_per_axis();
    const int d = cone_reach(t, h);
    if (g.dim() == 1) {
        // prefix sums restarted at the boundary when sides are split, so each side only sees itself
        std::vector<double> P(N + 1, 0.0);
        for (int i = 0; i < N; ++i) P[i + 1] = (side_split && i == N / 2 ? 0.0 : P[i]) + E[i];
        for (int i = 0; i < N; ++i) {
            int lo = std::max(0, i - d), hi = std::min(N - 1, i + d);
            if (side_split) {
                if (i >= N / 2) lo = std::max(lo, N / 2);
                else hi = std::min(hi, N / 2 - 1);
            }
            if (lo > hi) continue;
            double base = (side_split && lo == N / 2) ? 0.0 : P[lo];
            acc[i] += scale * (P[hi + 1] - base) * hv;
        }
        return;
    }
    // n=2: prefix sums along the first axis for each column of the last axis
    std::vector<double> P(static_cast<std::size_t>(N) * (N + 1), 0.0);
    for (int c = 0; c < N; ++c) {
        double* row = &P[static_cast<std::size_t>(c) * (N + 1)];
        for (int i = 0; i < N; ++i) row[i + 1] = row[i] + E[static_cast<std::size_t>(i) * N + c];
    }
    std::vector<int> halfw(2 * d + 1);
    for (int e = -d; e <= d; ++e) {
        int c = d;
        while (c >= 0 && (static_cast<double>(c) * c + static_cast<double>(e) * e) * h * h >= t * t) --c;
        halfw[e + d] = c;
    }
    for (int i0 = 0; i0 < N; ++i0) {
        for (int i1 = 0; i1 < N; ++i1) {
            double s = 0;
            for (int e = -d; e <= d; ++e) {
                int c1 = i1 + e;
                if (c1 < 0 || c1 >= N) continue;
                if (side_split && ((i1 >= N / 2) != (c1 >= N / 2))) continue;
                int w = halfw[e + d];
                if (w < 0) continue;
                int lo = std::max(0, i0 - w), hi = std::min(N - 1, i0 + w);
                const double* row = &P[static_cast<std::size_t>(c1) * (N + 1)];
                s += row[hi + 1] - row[lo];
            }
            acc[static_cast<std::size_t>(i0) * N + i1] += scale * s * hv;
        }
    }
}

inline std::vector<double> squared(const GridFunction& f) {
    std::vector<double> e(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) e[i] = f[i] * f[i];
    return e;
}

// |G^N_t f|^2 on the full grid: each side uses the even extension of that side.
inline std::vector<double> neumann_energy(const GeneratorFields& up, const GeneratorFields& lo, double t) {
    GridFunction a = up.at(t), b = lo.at(t);
    const Grid& g = a.grid();
    std::vector<double> e(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        double v = g.last_coord(i) > 0 ? a[i] : b[i];
        e[i] = v * v;
    }
    return e;
}

}  // namespace detail

inline GridFunction area_function(const GridFunction& f, Generator gen, ConeKind cone, const TimeGrid& tg) {
    if (!f.grid().is_full()) {
        if (cone != ConeKind::Neumann) throw DomainError("half-space input needs the Neumann cone");
        Side s = f.grid().domain() == Domain::UpperHalf ? Side::Upper : Side::Lower;
        return restrict_to(area_function(extend_even(f), gen, cone, tg), s);
    }
    const Grid& g = f.grid();
    tg.validate(g);
    const int n = g.dim();
    std::vector<double> acc(g.size(), 0.0);
    if (cone == ConeKind::Free) {
        GeneratorFields F(f, gen);
        for (double t : tg.t) detail::add_cone_sums(g, detail::squared(F.at(t)), t, tg.dlog / std::pow(t, n), false, acc);
    } else {
        GeneratorFields up(side_even(f, Side::Upper), gen), lo(side_even(f, Side::Lower), gen);
        for (double t : tg.t)
            detail::add_cone_sums(g, detail::neumann_energy(up, lo, t), t, tg.dlog / std::pow(t, n), true, acc);
    }
    GridFunction S(g);
    for (std::size_t i = 0; i < g.size(); ++i) S[i] = std::sqrt(acc[i]);
    return S;
}

// G*(h)(x)^2 = sum_m dlog/t^n sum_y (t/(t+|x-y|))^lambda |G_t h(y)|^2 h^n over the whole box.
inline GridFunction g_star(const GridFunction& hfun, Generator gen, double lambda_exponent, const TimeGrid& tg) {
    const Grid& g = hfun.grid();
    if (!g.is_full()) throw DomainError("g_star needs a FullSpace function");
    tg.validate(g);
    const int n = g.dim(), N = g.points_per_axis();
    const double h = g.cell_width(), hv = g.cell_volume();
    GeneratorFields F(hfun, gen);
    std::vector<double> acc(g.size(), 0.0);
    for (double t : tg.t) {
        std::vector<double> E = detail::squared(F.at(t));
        const double scale = tg.dlog / std::pow(t, n) * hv;
        if (n == 1) {
            std::vector<double> wt(N);
            for (int d = 0; d < N; ++d) wt[d] = std::pow(t / (t + d * h), lambda_exponent);
            for (int i = 0; i < N; ++i) {
                double s = 0;
                for (int j = 0; j < N; ++j) s += wt[std::abs(i - j)] * E[j];
                acc[i] += scale * s;
            }
        } else {
            std::vector<double> wt(static_cast<std::size_t>(N) * N);
            for (int a = 0; a < N; ++a)
                for (int b = 0; b < N; ++b)
                    wt[static_cast<std::size_t>(a) * N + b] = std::pow(t / (t + h * std::hypot(a, b)), lambda_exponent);
            for (int i0 = 0; i0 < N; ++i0)
                for (int i1 = 0; i1 < N; ++i1) {
                    double s = 0;
                    for (int j0 = 0; j0 < N; ++j0) {
                        const double* wr = &wt[static_cast<std::size_t>(std::abs(i0 - j0)) * N];
                        const double* er = &E[static_cast<std::size_t>(j0) * N];
                        for (int j1 = 0; j1 < N; ++j1) s += wr[std::abs(i1 - j1)] * er[j1];
                    }
                    acc[static_cast<std::size_t>(i0) * N + i1] += scale * s;
                }
        }
    }
    GridFunction out(g);
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = std::sqrt(acc[i]);
    return out;
}

// S(x)^2 = sum_Q sum_eps |<f,h_Q^eps>|^2 1_{2Q}(x)/|Q|, 2Q clipped to the box.
inline GridFunction haar_square_function(const GridFunction& f, const DyadicLattice& lat) {
    check_compatible(f, lat);
    auto hc = haar_coefficients(f, lat);
    const Grid& g = lat.grid();
    std::vector<double> acc(g.size(), 0.0);
    for (const auto& q : lat.cubes()) {
        if (q.cells < 2 || q.wraps) continue;
        double e = hc.sum_squares(q.id) / lat.volume(q);
        if (e == 0.0) continue;
        CellBox b;
        for (int a = 0; a < g.dim(); ++a) {
            int lo = std::max(0, q.start[a] - q.cells / 2);
            int hi = std::min(g.axis_count(a), q.start[a] + q.cells + q.cells / 2);
            b.start[a] = lo;
            b.extent[a] = hi - lo;
        }
        for_each_box_cell(g, b, [&](std::size_t c) { acc[c] += e; });
    }
    GridFunction S(g);
    for (std::size_t i = 0; i < g.size(); ++i) S[i] = std::sqrt(acc[i]);
    return S;
}

enum class HardyFlavor { Classical, HeatFree, HeatNeumann, HaarWavelet };

struct HardyOptions {
    Generator phi = Generator::PhiLoG;  // used by Classical
    int max_generation = -1;            // HaarWavelet lattice depth; -1 = down to 2-cell cubes
};

inline GridFunction hardy_square_function(const GridFunction& f, HardyFlavor flavor, const TimeGrid& tg,
                                          const HardyOptions& o = {}) {
    switch (flavor) {
    case HardyFlavor::Classical: return area_function(f, o.phi, ConeKind::Free, tg);
    case HardyFlavor::HeatFree: return area_function(f, Generator::HeatQt, ConeKind::Free, tg);
    case HardyFlavor::HeatNeumann: return area_function(f, Generator::HeatQt, ConeKind::Neumann, tg);
    case HardyFlavor::HaarWavelet: {
        int G = o.max_generation >= 0 ? o.max_generation : max_generation_for(f.grid(), 2);
        return haar_square_function(f, DyadicLattice(f.grid(), G));
    }
    }
    return f;
}

inline double weighted_l1(const GridFunction& s, const Weight& w) {
    s.check_same(w.function());
    double acc = 0;
    for (std::size_t i = 0; i < s.size(); ++i) acc += s[i] * w[i];
    return acc * s.grid().cell_volume();
}

inline double hardy_norm(const GridFunction& f, HardyFlavor flavor, const Weight& w, const TimeGrid& tg,
                         const HardyOptions& o = {}) {
    require_positive(w.values());
    return weighted_l1(hardy_square_function(f, flavor, tg, o), w);
}

}  // namespace wharm
