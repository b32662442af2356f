#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "errors.hpp"
#include "grid.hpp"

namespace wharm {

enum class KernelFamily { HeatFree, HeatNeumann, HeatDirichlet, RieszFree, RieszNeumann, RieszDirichlet, Qt };

struct KernelSpec {
    KernelFamily family = KernelFamily::HeatFree;
    int dim = 1;
    double t = 1.0;
    int j = 1;  // Riesz component, 1-based

    bool is_riesz() const {
        return family == KernelFamily::RieszFree || family == KernelFamily::RieszNeumann ||
               family == KernelFamily::RieszDirichlet;
    }
    bool is_heat() const {
        return family == KernelFamily::HeatFree || family == KernelFamily::HeatNeumann ||
               family == KernelFamily::HeatDirichlet;
    }
    bool reflected() const {
        return family == KernelFamily::HeatNeumann || family == KernelFamily::HeatDirichlet ||
               family == KernelFamily::RieszNeumann || family == KernelFamily::RieszDirichlet;
    }
    // +1 Neumann, -1 Dirichlet
    double reflection_sign() const {
        return (family == KernelFamily::HeatDirichlet || family == KernelFamily::RieszDirichlet) ? -1.0 : 1.0;
    }

    void validate() const {
        if (dim != 1 && dim != 2) throw ParameterError("kernel dim must be 1 or 2");
        if (is_riesz()) {
            if (j < 1 || j > dim) throw ParameterError("Riesz component out of range");
        } else if (!(t > 0) || !std::isfinite(t)) {
            throw ParameterError("t must be positive");
        }
    }
};

// Parses heat-free, heat-neumann, heat-dirichlet, riesz-free-j, riesz-neumann-j, riesz-dirichlet-j, qt.
inline KernelSpec kernel_from_string(const std::string& s, int dim, double t) {
    KernelSpec k;
    k.dim = dim;
    k.t = t;
    auto riesz = [&](const std::string& prefix, KernelFamily f) {
        if (s.rfind(prefix, 0) != 0) return false;
        k.family = f;
        k.j = std::stoi(s.substr(prefix.size()));
        return true;
    };
    if (s == "heat-free") k.family = KernelFamily::HeatFree;
    else if (s == "heat-neumann") k.family = KernelFamily::HeatNeumann;
    else if (s == "heat-dirichlet") k.family = KernelFamily::HeatDirichlet;
    else if (s == "qt") k.family = KernelFamily::Qt;
    else if (!riesz("riesz-free-", KernelFamily::RieszFree) && !riesz("riesz-neumann-", KernelFamily::RieszNeumann) &&
             !riesz("riesz-dirichlet-", KernelFamily::RieszDirichlet))
        throw ParameterError("unknown kernel '" + s + "'");
    k.validate();
    return k;
}

inline double riesz_constant(int n) {
    // Gamma((n+1)/2) / pi^{(n+1)/2}
    return std::tgamma(0.5 * (n + 1)) / std::pow(std::numbers::pi, 0.5 * (n + 1));
}

namespace detail {
inline double sq_dist(const Point& x, const Point& y, int n) {
    double s = 0;
    for (int a = 0; a < n; ++a) s += (x[a] - y[a]) * (x[a] - y[a]);
    return s;
}
inline Point mirror(const Point& y, int n) {
    Point r = y;
    r[n - 1] = -r[n - 1];
    return r;
}
inline bool same_side(const Point& x, const Point& y, int n) { return x[n - 1] * y[n - 1] >= 0; }
}  // namespace detail

inline double heat_free(const Point& x, const Point& y, double t, int n) {
    return std::pow(4.0 * std::numbers::pi * t, -0.5 * n) * std::exp(-detail::sq_dist(x, y, n) / (4.0 * t));
}

// -C_n (x_j - y_j) / |x - y|^{n+1}
inline double riesz_free(const Point& x, const Point& y, int j, int n) {
    double r2 = detail::sq_dist(x, y, n);
    if (r2 == 0.0) throw SingularityError("Riesz kernel evaluated on the diagonal");
    return -riesz_constant(n) * (x[j - 1] - y[j - 1]) / std::pow(r2, 0.5 * (n + 1));
}

// q_t = -t^2 d/ds p_s |_{s=t^2} = (4 pi)^{-n/2} t^{-n} e^{-r^2/4t^2} (n/2 - r^2/4t^2)
inline double eval_qt(const Point& x, const Point& y, double t, int n = 1) {
    if (!(t > 0)) throw ParameterError("t must be positive");
    double u = detail::sq_dist(x, y, n) / (4.0 * t * t);
    return std::pow(4.0 * std::numbers::pi, -0.5 * n) * std::pow(t, -n) * std::exp(-u) * (0.5 * n - u);
}

// Reflected part only: the Riesz term evaluated at y~. Finite even when x = y.
inline double riesz_reflected_term(const KernelSpec& k, const Point& x, const Point& y) {
    return k.reflection_sign() * riesz_free(x, detail::mirror(y, k.dim), k.j, k.dim);
}

inline double eval_kernel(const KernelSpec& k, const Point& x, const Point& y) {
    k.validate();
    const int n = k.dim;
    switch (k.family) {
    case KernelFamily::HeatFree: return heat_free(x, y, k.t, n);
    case KernelFamily::Qt: return eval_qt(x, y, k.t, n);
    case KernelFamily::RieszFree: return riesz_free(x, y, k.j, n);
    case KernelFamily::HeatNeumann:
    case KernelFamily::HeatDirichlet:
        if (!detail::same_side(x, y, n)) return 0.0;
        return heat_free(x, y, k.t, n) + k.reflection_sign() * heat_free(x, detail::mirror(y, n), k.t, n);
    case KernelFamily::RieszNeumann:
    case KernelFamily::RieszDirichlet:
        if (!detail::same_side(x, y, n)) return 0.0;
        if (detail::sq_dist(x, y, n) == 0.0) throw SingularityError("Riesz kernel evaluated on the diagonal");
        return riesz_free(x, y, k.j, n) + riesz_reflected_term(k, x, y);
    }
    return 0.0;
}

// psi(s) = (2 sin(s/2) - sin s) / s, with the series s^2/8 - s^4/128 near 0.
inline double psi_multiplier(double s) {
    if (s < 0) s = -s;
    if (s < 1e-4) return s * s / 8.0 - s * s * s * s / 128.0;
    return (2.0 * std::sin(0.5 * s) - std::sin(s)) / s;
}

// Spatial kernel of psi(t sqrt(Delta)) in n=1: (1/2t)(1_{|x|<t/2} - 1_{t/2<|x|<t}).
inline double psi_kernel_1d(double x, double t) {
    double a = std::abs(x);
    if (a < 0.5 * t) return 0.5 / t;
    if (a < t) return -0.5 / t;
    return 0.0;
}

// (1/h) int_cell_i int_cell_j K(x - y) for the psi kernel, cells offset by s = (i - j) h.
// Equals (1/h) int_{-h}^{h} (h - |tau|) K(s + tau) d tau, computed piecewise exactly.
inline double psi_cell_kernel(double s, double t, double h) {
    auto tri = [&](double a, double b) {
        // int over [a,b] of (h - |x - s|) restricted to |x - s| <= h
        double lo = std::max(a, s - h), hi = std::min(b, s + h);
        if (hi <= lo) return 0.0;
        auto G = [&](double x) {
            double u = x - s;
            return u <= 0 ? h * u + 0.5 * u * u : h * u - 0.5 * u * u;
        };
        return G(hi) - G(lo);
    };
    double c = 0.5 / t;
    double v = c * tri(-0.5 * t, 0.5 * t) - c * tri(-t, -0.5 * t) - c * tri(0.5 * t, t);
    return v / h;
}

struct SmoothnessReport {
    int samples = 0;
    double size_constant = 0;        // heat: max |K| t^{n/2} e^{c r^2/t}; Riesz: max |K| |x-y|^n
    double gaussian_c = 0;           // c used in the Gaussian size bound
    double smoothness_constant = 0;  // heat: Hoelder-type ratio; Riesz: |K(x,y)-K(x',y)| |x-y|^{n+1}/|x-x'|
};

// Random same-side triples (x, x', y) with |x - x'| <= |x - y|/2 in [-1,1]^n.
inline SmoothnessReport check_kernel_smoothness(const KernelSpec& k, int samples, unsigned long long seed,
                                                double gaussian_c = 0.125) {
    k.validate();
    if (samples <= 0) throw ParameterError("samples must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const int n = k.dim;
    SmoothnessReport r;
    r.samples = samples;
    r.gaussian_c = gaussian_c;
    for (int s = 0; s < samples; ++s) {
        Point x{U(rng), n == 2 ? U(rng) : 0.0}, y{U(rng), n == 2 ? U(rng) : 0.0};
        if (k.reflected()) y[n - 1] = std::copysign(y[n - 1], x[n - 1]);
        double d = std::sqrt(detail::sq_dist(x, y, n));
        if (d < 1e-6) continue;
        Point xp = x;
        for (int a = 0; a < n; ++a) xp[a] += 0.5 * d * U(rng) / std::sqrt(static_cast<double>(n));
        if (k.reflected() && xp[n - 1] * x[n - 1] <= 0) xp[n - 1] = x[n - 1];
        double dx = std::sqrt(detail::sq_dist(x, xp, n));
        double kxy = eval_kernel(k, x, y);
        if (k.is_riesz()) {
            r.size_constant = std::max(r.size_constant, std::abs(kxy) * std::pow(d, n));
            if (dx > 0) {
                double diff = std::abs(kxy - eval_kernel(k, xp, y));
                r.smoothness_constant = std::max(r.smoothness_constant, diff * std::pow(d, n + 1) / dx);
            }
        } else {
            double st = std::sqrt(k.t);
            double tn = std::pow(k.t, 0.5 * n);
            r.size_constant = std::max(r.size_constant, std::abs(kxy) * tn * std::exp(gaussian_c * d * d / k.t));
            if (dx > 0) {
                double diff = std::abs(kxy - eval_kernel(k, xp, y));
                // |x-x'|/(sqrt t + |x-y|) * sqrt t / (sqrt t + |x-y|)^{n+1}
                double bound = (dx / (st + d)) * st / std::pow(st + d, n + 1);
                r.smoothness_constant = std::max(r.smoothness_constant, diff / bound);
            }
        }
    }
    return r;
}

}  // namespace wharm
