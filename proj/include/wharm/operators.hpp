#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "errors.hpp"
#include "fft.hpp"
#include "grid.hpp"
#include "kernels.hpp"
#include "weights.hpp"

namespace wharm {

enum class OpKind { Identity, Semigroup, QtOp, PsiOp, Riesz, Commutator };
enum class Family { Free, Neumann, Dirichlet };
enum class Backend { Quadrature, FourierMultiplier };

inline const char* to_string(Family f) {
    switch (f) {
    case Family::Free: return "free";
    case Family::Neumann: return "neumann";
    case Family::Dirichlet: return "dirichlet";
    }
    return "?";
}

inline const char* to_string(Backend b) { return b == Backend::Quadrature ? "quadrature" : "fourier"; }

struct OperatorHandle {
    OpKind kind = OpKind::Identity;
    Family family = Family::Free;
    Backend backend = Backend::Quadrature;
    double t = 0.0;
    int j = 1;
    std::shared_ptr<const GridFunction> b;
    std::shared_ptr<const OperatorHandle> inner;

    static OperatorHandle identity() { return {}; }
    static OperatorHandle semigroup(Family f, double t, Backend be = Backend::Quadrature) {
        OperatorHandle h;
        h.kind = OpKind::Semigroup;
        h.family = f;
        h.t = t;
        h.backend = be;
        h.validate();
        return h;
    }
    static OperatorHandle qt(double t, Backend be = Backend::FourierMultiplier, Family f = Family::Free) {
        OperatorHandle h;
        h.kind = OpKind::QtOp;
        h.t = t;
        h.backend = be;
        h.family = f;
        h.validate();
        return h;
    }
    static OperatorHandle psi(double t, Backend be = Backend::FourierMultiplier) {
        OperatorHandle h;
        h.kind = OpKind::PsiOp;
        h.t = t;
        h.backend = be;
        h.validate();
        return h;
    }
    static OperatorHandle riesz(Family f, int j, Backend be = Backend::Quadrature) {
        OperatorHandle h;
        h.kind = OpKind::Riesz;
        h.family = f;
        h.j = j;
        h.backend = be;
        h.validate();
        return h;
    }
    static OperatorHandle commutator(GridFunction b, const OperatorHandle& inner) {
        OperatorHandle h;
        h.kind = OpKind::Commutator;
        h.b = std::make_shared<const GridFunction>(std::move(b));
        h.inner = std::make_shared<const OperatorHandle>(inner);
        h.validate();
        return h;
    }

    void validate() const {
        if (kind == OpKind::Semigroup || kind == OpKind::QtOp || kind == OpKind::PsiOp) {
            if (!(t > 0) || !std::isfinite(t)) throw ParameterError("t must be positive");
        }
        if (kind == OpKind::Commutator && (!inner || inner->kind != OpKind::Riesz || !b))
            throw ParameterError("commutator needs a Riesz inner operator and a symbol b");
        if (kind == OpKind::PsiOp && family != Family::Free) throw ParameterError("psi operator is free-space only");
    }

    KernelSpec kernel(int dim) const {
        KernelSpec k;
        k.dim = dim;
        k.t = t;
        k.j = j;
        if (kind == OpKind::Riesz) {
            k.family = family == Family::Free      ? KernelFamily::RieszFree
                       : family == Family::Neumann ? KernelFamily::RieszNeumann
                                                   : KernelFamily::RieszDirichlet;
        } else if (kind == OpKind::Semigroup) {
            k.family = family == Family::Free      ? KernelFamily::HeatFree
                       : family == Family::Neumann ? KernelFamily::HeatNeumann
                                                   : KernelFamily::HeatDirichlet;
        } else {
            k.family = KernelFamily::Qt;
        }
        return k;
    }
};

namespace detail {

inline cplx multiplier_value(const OperatorHandle& op, const Frequency& q, int n, int N) {
    const double r = q.norm(n);
    switch (op.kind) {
    case OpKind::Semigroup: return std::exp(-op.t * r * r);
    case OpKind::QtOp: {
        double s = op.t * op.t * r * r;
        return s * std::exp(-s);
    }
    case OpKind::PsiOp: return psi_multiplier(op.t * r);
    case OpKind::Riesz: {
        int a = op.j - 1;
        if (r == 0.0 || q.nyquist(a, N)) return 0.0;
        return cplx(0.0, q.xi[a] / r);
    }
    default: break;
    }
    throw BackendError("operator has no multiplier");
}

// Kernel entry K(x_i, y_j) for one quadrature sum; Riesz diagonals keep only the reflected part.
inline double quadrature_entry(const OperatorHandle& op, const KernelSpec& k, const Point& x, const Point& y,
                               bool diagonal) {
    const int n = k.dim;
    if (op.kind == OpKind::QtOp) {
        double v = eval_qt(x, y, op.t, n);
        if (op.family == Family::Free) return v;
        if (x[n - 1] * y[n - 1] < 0) return 0.0;
        double s = op.family == Family::Neumann ? 1.0 : -1.0;
        return v + s * eval_qt(x, detail::mirror(y, n), op.t, n);
    }
    if (k.is_riesz() && diagonal) {
        if (!k.reflected()) return 0.0;
        return riesz_reflected_term(k, x, y);
    }
    return eval_kernel(k, x, y);
}

}  // namespace detail

namespace detail {

inline GridFunction apply_quadrature(const OperatorHandle& op, const GridFunction& f) {
    const Grid& g = f.grid();
    const int n = g.dim();
    const double hv = g.cell_volume();
    GridFunction out(g);
    if (op.kind == OpKind::PsiOp) {
        if (n != 1) throw BackendError("psi quadrature is implemented in n=1");
        const double h = g.cell_width();
        const int span = static_cast<int>(std::ceil(op.t / h)) + 1;
        std::vector<double> stencil(2 * span + 1);
        for (int d = -span; d <= span; ++d) stencil[d + span] = psi_cell_kernel(d * h, op.t, h);
        const int m = static_cast<int>(g.size());
        for (int i = 0; i < m; ++i) {
            double s = 0;
            for (int d = -span; d <= span; ++d) {
                int jx = i - d;
                if (jx < 0 || jx >= m) continue;
                s += stencil[d + span] * f[jx];
            }
            out[i] = s;
        }
        return out;
    }
    const KernelSpec k = op.kernel(n);
    std::vector<Point> pts(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) pts[i] = g.point(i);
    for (std::size_t i = 0; i < g.size(); ++i) {
        double s = 0;
        for (std::size_t jx = 0; jx < g.size(); ++jx) {
            if (f[jx] == 0.0) continue;
            s += quadrature_entry(op, k, pts[i], pts[jx], i == jx) * f[jx];
        }
        out[i] = s * hv;
    }
    return out;
}

}  // namespace detail

inline GridFunction apply(const OperatorHandle& op, const GridFunction& f);

inline GridFunction commutator_apply(const GridFunction& b, const OperatorHandle& riesz_op, const GridFunction& f) {
    if (riesz_op.kind != OpKind::Riesz) throw ParameterError("commutator needs a Riesz operator");
    b.check_same(f);
    GridFunction tf = apply(riesz_op, f);
    GridFunction tbf = apply(riesz_op, b * f);
    GridFunction out(f.grid());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = b[i] * tf[i] - tbf[i];
    return out;
}

inline GridFunction apply(const OperatorHandle& op, const GridFunction& f) {
    op.validate();
    if (op.kind == OpKind::Riesz) op.kernel(f.grid().dim()).validate();
    switch (op.kind) {
    case OpKind::Identity: return f;
    case OpKind::Commutator: return commutator_apply(*op.b, *op.inner, f);
    default: break;
    }
    if (op.backend == Backend::FourierMultiplier) {
        if (op.family != Family::Free || !f.grid().is_full())
            throw BackendError("Fourier multipliers are only available for free operators on FullSpace grids");
        const int n = f.grid().dim(), N = f.grid().points_per_axis();
        return Spectrum(f).apply([&](const Frequency& q) { return detail::multiplier_value(op, q, n, N); });
    }
    return detail::apply_quadrature(op, f);
}

struct DenseCap {
    std::size_t max_points_1d = 512;
    std::size_t max_points_2d = 64 * 64;
};

inline void check_dense_size(const Grid& g, const DenseCap& cap = {}) {
    std::size_t lim = g.dim() == 1 ? cap.max_points_1d : cap.max_points_2d;
    if (g.size() > lim)
        throw SizeError("dense matrix over cap: " + std::to_string(g.size()) + " points > " + std::to_string(lim));
}

// Matrix M with (op f)_i = sum_j M_ij f_j.
inline Eigen::MatrixXd assemble_matrix(const OperatorHandle& op, const Grid& g, const DenseCap& cap = {}) {
    check_dense_size(g, cap);
    op.validate();
    if (op.kind == OpKind::Riesz) op.kernel(g.dim()).validate();
    const std::size_t m = g.size();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m, m);
    if (op.kind == OpKind::Identity) return Eigen::MatrixXd::Identity(m, m);
    if (op.kind == OpKind::Commutator) {
        Eigen::MatrixXd T = assemble_matrix(*op.inner, g, cap);
        const GridFunction& b = *op.b;
        if (!b.grid().same_as(g)) throw GridAlignmentError("commutator symbol lives on another grid");
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t jx = 0; jx < m; ++jx) M(i, jx) = (b[i] - b[jx]) * T(i, jx);
        return M;
    }
    if (op.backend == Backend::FourierMultiplier || op.kind == OpKind::PsiOp) {
        GridFunction e(g);
        for (std::size_t jx = 0; jx < m; ++jx) {
            e[jx] = 1.0;
            GridFunction col = apply(op, e);
            for (std::size_t i = 0; i < m; ++i) M(i, jx) = col[i];
            e[jx] = 0.0;
        }
        return M;
    }
    const KernelSpec k = op.kernel(g.dim());
    const double hv = g.cell_volume();
    for (std::size_t i = 0; i < m; ++i) {
        Point x = g.point(i);
        for (std::size_t jx = 0; jx < m; ++jx) M(i, jx) = detail::quadrature_entry(op, k, x, g.point(jx), i == jx) * hv;
    }
    return M;
}

enum class NormMethod { SvdExact, IterativeAscent };

struct AscentOptions {
    int restarts = 10;
    int max_iterations = 500;
    double tolerance = 1e-8;
    unsigned long long seed = 12345;
};

struct NormCertificate {
    double value = 0.0;
    NormMethod method = NormMethod::SvdExact;
    bool converged = true;
    int iterations = 0;  // total over restarts
    int best_restart = -1;
    unsigned long long seed = 0;
};

namespace detail {
inline Eigen::VectorXd duality_map(const Eigen::VectorXd& y, double p) {
    Eigen::VectorXd r(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) r[i] = std::copysign(std::pow(std::abs(y[i]), p - 1.0), y[i]);
    return r;
}
inline double lp(const Eigen::VectorXd& y, double p) {
    double s = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) s += std::pow(std::abs(y[i]), p);
    return std::pow(s, 1.0 / p);
}
}  // namespace detail

// Largest ratio ||A x||_p / ||x||_p by Boyd's nonlinear power iteration.
inline NormCertificate ascent_norm(const Eigen::MatrixXd& A, double p, const AscentOptions& o) {
    NormCertificate c;
    c.method = NormMethod::IterativeAscent;
    c.seed = o.seed;
    c.converged = true;
    const double pp = p / (p - 1.0);
    std::mt19937_64 rng(o.seed);
    std::normal_distribution<double> N01(0.0, 1.0);
    for (int r = 0; r < o.restarts; ++r) {
        Eigen::VectorXd x(A.cols());
        for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = N01(rng);
        x /= detail::lp(x, p);
        double prev = 0.0, cur = 0.0;
        bool conv = false;
        int it = 0;
        for (; it < o.max_iterations; ++it) {
            Eigen::VectorXd y = A * x;
            cur = detail::lp(y, p);
            if (cur == 0.0) break;
            if (it > 0 && std::abs(cur - prev) <= o.tolerance * cur) {
                conv = true;
                ++it;
                break;
            }
            prev = cur;
            Eigen::VectorXd z = A.transpose() * detail::duality_map(y, p);
            if (z.norm() == 0.0) break;
            x = detail::duality_map(z, pp);
            x /= detail::lp(x, p);
        }
        c.iterations += it;
        if (!conv) c.converged = false;
        if (cur > c.value) {
            c.value = cur;
            c.best_restart = r;
        }
    }
    return c;
}

// ||op : L^p_mu -> L^p_lambda|| of the discretized operator.
inline NormCertificate weighted_operator_norm(const OperatorHandle& op, const Weight& mu, const Weight& lambda, double p,
                                              NormMethod method, const AscentOptions& opts = {},
                                              const DenseCap& cap = {}) {
    mu.function().check_same(lambda.function());
    if (!(p > 1.0)) throw ParameterError("p must exceed 1");
    if (method == NormMethod::SvdExact && p != 2.0) throw ParameterError("SvdExact requires p = 2");
    Eigen::MatrixXd A = assemble_matrix(op, mu.grid(), cap);
    const std::size_t m = mu.size();
    for (std::size_t i = 0; i < m; ++i) A.row(i) *= std::pow(lambda[i], 1.0 / p);
    for (std::size_t jx = 0; jx < m; ++jx) A.col(jx) *= std::pow(mu[jx], -1.0 / p);
    if (method == NormMethod::SvdExact) {
        NormCertificate c;
        c.method = NormMethod::SvdExact;
        Eigen::BDCSVD<Eigen::MatrixXd> svd(A);
        c.value = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
        return c;
    }
    return ascent_norm(A, p, opts);
}

}  // namespace wharm
