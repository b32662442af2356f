#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "wharm/operators.hpp"

using namespace wharm;

namespace {

GridFunction random_function(const Grid& g, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1, 1);
    std::vector<double> v(g.size());
    for (double& x : v) x = U(rng);
    return GridFunction(g, std::move(v));
}

// Second Hermite function: smooth, mean zero and first moment zero.
GridFunction hermite2(const Grid& g, double sigma) {
    return GridFunction::sample(g, [&](Point x) {
        double u = x[0] / sigma;
        return (u * u - 1.0) * std::exp(-0.5 * u * u);
    });
}

double max_diff(const GridFunction& a, const GridFunction& b) { return (a - b).max_abs(); }

}  // namespace

TEST(Semigroup, PeriodicHeatPreservesConstants) {
    for (int n : {1, 2}) {
        Grid g(n, 1.0, 32);
        auto out = apply(OperatorHandle::semigroup(Family::Free, 0.3, Backend::FourierMultiplier), GridFunction(g, 1.5));
        for (double v : out.values()) EXPECT_NEAR(v, 1.5, 1e-14);
    }
}

TEST(Semigroup, PropertyInMultiplierSpace) {
    Grid g(2, 1.0, 32);
    auto f = random_function(g, 1);
    auto S = [&](double t, const GridFunction& u) {
        return apply(OperatorHandle::semigroup(Family::Free, t, Backend::FourierMultiplier), u);
    };
    EXPECT_LE(max_diff(S(0.01, S(0.02, f)), S(0.03, f)), 1e-8);
}

TEST(Semigroup, NeumannAndDirichletReduceToExtensions) {
    for (int n : {1, 2}) {
        Grid full(n, 1.0, n == 1 ? 64 : 16);
        for (Side s : {Side::Upper, Side::Lower}) {
            auto f = random_function(full.half(s), 2 + n);
            for (double t : {0.005, 0.05}) {
                auto neu = apply(OperatorHandle::semigroup(Family::Neumann, t), f);
                auto ref = restrict_to(apply(OperatorHandle::semigroup(Family::Free, t), extend_even(f)), s);
                EXPECT_LE(max_diff(neu, ref), 1e-10);
                auto dir = apply(OperatorHandle::semigroup(Family::Dirichlet, t), f);
                auto refo = restrict_to(apply(OperatorHandle::semigroup(Family::Free, t), extend_odd(f)), s);
                EXPECT_LE(max_diff(dir, refo), 1e-10);
            }
        }
    }
}

TEST(Riesz, HilbertOfCosineIsMinusSine) {
    Grid g(1, 1.0, 256);
    auto f = GridFunction::sample(g, [](Point x) { return std::cos(std::numbers::pi * x[0]); });
    auto out = apply(OperatorHandle::riesz(Family::Free, 1, Backend::FourierMultiplier), f);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(out[i], -std::sin(std::numbers::pi * g.point(i)[0]), 1e-8);
}

TEST(Riesz, QuadratureConvergesToTheMultiplier) {
    // discrepancy halves per doubling (within 25%) on data with two vanishing moments
    std::vector<double> d;
    for (int N : {64, 128, 256, 512}) {
        Grid g(1, 1.0, N);
        auto f = hermite2(g, 0.1);
        auto a = apply(OperatorHandle::riesz(Family::Free, 1, Backend::Quadrature), f);
        auto b = apply(OperatorHandle::riesz(Family::Free, 1, Backend::FourierMultiplier), f);
        d.push_back((a - b).lp_norm(2));
    }
    for (std::size_t k = 1; k < d.size(); ++k) {
        EXPECT_GE(d[k] / d[k - 1], 0.5 * 0.75);
        EXPECT_LE(d[k] / d[k - 1], 0.5 * 1.25);
    }
}

TEST(Riesz, NeumannAndDirichletReduceToExtensions) {
    for (int n : {1, 2}) {
        Grid full(n, 1.0, n == 1 ? 64 : 16);
        for (Side s : {Side::Upper, Side::Lower}) {
            auto f = random_function(full.half(s), 10 + n);
            for (int j = 1; j <= n; ++j) {
                auto neu = apply(OperatorHandle::riesz(Family::Neumann, j), f);
                auto ref = restrict_to(apply(OperatorHandle::riesz(Family::Free, j), extend_even(f)), s);
                EXPECT_LE(max_diff(neu, ref), 1e-10);
                auto dir = apply(OperatorHandle::riesz(Family::Dirichlet, j), f);
                auto refo = restrict_to(apply(OperatorHandle::riesz(Family::Free, j), extend_odd(f)), s);
                EXPECT_LE(max_diff(dir, refo), 1e-10);
            }
        }
    }
}

TEST(Riesz, FullSpaceNeumannIgnoresTheOtherSide) {
    Grid g(1, 1.0, 64);
    auto f = random_function(g, 20);
    auto f2 = f;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.last_coord(i) < 0) f2[i] += 5.0 * std::sin(7.0 * i);
    auto a = apply(OperatorHandle::riesz(Family::Neumann, 1), f);
    auto b = apply(OperatorHandle::riesz(Family::Neumann, 1), f2);
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.last_coord(i) > 0) EXPECT_LE(std::abs(a[i] - b[i]), 1e-12);
}

TEST(Qt, QuadratureMatchesMultiplier) {
    Grid g(1, 2.0, 512);
    auto f = GridFunction::sample(g, [](Point x) { return std::exp(-x[0] * x[0] / 0.02); });
    for (double t : {0.05, 0.1}) {
        auto a = apply(OperatorHandle::qt(t, Backend::Quadrature), f);
        auto b = apply(OperatorHandle::qt(t, Backend::FourierMultiplier), f);
        EXPECT_LE(max_diff(a, b), 1e-3 * b.max_abs());
    }
}

TEST(Psi, CellStencilMatchesMultiplier) {
    Grid g(1, 2.0, 1024);
    auto f = GridFunction::sample(g, [](Point x) { return std::exp(-x[0] * x[0] / 0.05); });
    for (double t : {0.1, 0.3}) {
        auto a = apply(OperatorHandle::psi(t, Backend::Quadrature), f);
        auto b = apply(OperatorHandle::psi(t, Backend::FourierMultiplier), f);
        EXPECT_LE(max_diff(a, b), 1e-3 * b.max_abs());
    }
}

TEST(Operators, BackendAndParameterErrors) {
    Grid g(1, 1.0, 16);
    EXPECT_THROW(apply(OperatorHandle::semigroup(Family::Neumann, 0.1, Backend::FourierMultiplier), GridFunction(g)),
                 BackendError);
    EXPECT_THROW(apply(OperatorHandle::riesz(Family::Free, 1, Backend::FourierMultiplier), GridFunction(g.half(Side::Upper))),
                 BackendError);
    EXPECT_THROW(OperatorHandle::semigroup(Family::Free, 0.0), ParameterError);
    EXPECT_THROW(OperatorHandle::commutator(GridFunction(g), OperatorHandle::identity()), ParameterError);
    EXPECT_THROW(apply(OperatorHandle::riesz(Family::Free, 2), GridFunction(g)), ParameterError);
}

TEST(Commutator, ConstantSymbolVanishes) {
    Grid g(1, 1.0, 64);
    auto f = random_function(g, 30);
    auto R = OperatorHandle::riesz(Family::Neumann, 1);
    // a power of two scales exactly, so the cancellation is bit-exact
    EXPECT_EQ(commutator_apply(GridFunction(g, 2.0), R, f).max_abs(), 0.0);
    EXPECT_LE(commutator_apply(GridFunction(g, 0.7), R, f).max_abs(), 1e-13);
}

TEST(Commutator, NeumannReducesToEvenExtensions) {
    for (int n : {1, 2}) {
        Grid full(n, 1.0, n == 1 ? 64 : 16);
        auto b = random_function(full, 40 + n), f = random_function(full, 50 + n);
        for (int l = 1; l <= n; ++l) {
            auto lhs = restrict_to(commutator_apply(b, OperatorHandle::riesz(Family::Neumann, l), f), Side::Upper);
            auto rhs = restrict_to(commutator_apply(side_even(b, Side::Upper), OperatorHandle::riesz(Family::Free, l),
                                                    side_even(f, Side::Upper)),
                                   Side::Upper);
            EXPECT_LE(max_diff(lhs, rhs), 1e-10);
        }
    }
}

TEST(Commutator, ParityOfTheHilbertCommutator) {
    Grid g(1, 1.0, 64);
    auto b = GridFunction::sample(g, [](Point x) { return std::cos(3 * x[0]) + x[0] * x[0]; });
    auto f = GridFunction::sample(g, [](Point x) { return std::exp(-4 * x[0] * x[0]); });
    auto c = commutator_apply(b, OperatorHandle::riesz(Family::Free, 1), f);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(c[g.reflect(i)], -c[i], 1e-10);
}

TEST(Commutator, ReflectionEquivariance) {
    Grid full(2, 1.0, 16);
    auto b = side_even(random_function(full, 60), Side::Upper), f = side_even(random_function(full, 61), Side::Upper);
    auto c1 = commutator_apply(b, OperatorHandle::riesz(Family::Free, 1), f);
    auto c2 = commutator_apply(b, OperatorHandle::riesz(Family::Free, 2), f);
    for (std::size_t i = 0; i < full.size(); ++i) {
        EXPECT_NEAR(c1[full.reflect(i)], c1[i], 1e-10);
        EXPECT_NEAR(c2[full.reflect(i)], -c2[i], 1e-10);
    }
}

TEST(Commutator, HandleMatchesDirectApplication) {
    Grid g(1, 1.0, 32);
    auto b = random_function(g, 70), f = random_function(g, 71);
    auto R = OperatorHandle::riesz(Family::Neumann, 1);
    auto C = OperatorHandle::commutator(b, R);
    EXPECT_LE(max_diff(apply(C, f), commutator_apply(b, R, f)), 1e-14);
    Eigen::MatrixXd M = assemble_matrix(C, g);
    Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(f.values().data(), f.size());
    Eigen::VectorXd out = M * v;
    auto ref = apply(C, f);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(out[i], ref[i], 1e-12);
}

TEST(Norm, IdentityIsOne) {
    Grid g(1, 1.0, 32);
    Weight w(GridFunction::sample(g, [](Point x) { return 1.0 + x[0] * x[0]; }));
    EXPECT_NEAR(weighted_operator_norm(OperatorHandle::identity(), w, w, 2.0, NormMethod::SvdExact).value, 1.0, 1e-14);
    auto c = weighted_operator_norm(OperatorHandle::identity(), w, w, 3.0, NormMethod::IterativeAscent);
    EXPECT_NEAR(c.value, 1.0, 1e-12);
    EXPECT_EQ(c.method, NormMethod::IterativeAscent);
    EXPECT_THROW(weighted_operator_norm(OperatorHandle::identity(), w, w, 3.0, NormMethod::SvdExact), ParameterError);
}

TEST(Norm, HilbertMultiplierIsUnitary) {
    Grid g(1, 1.0, 256);
    Weight one = Weight::constant(g);
    double v = weighted_operator_norm(OperatorHandle::riesz(Family::Free, 1, Backend::FourierMultiplier), one, one, 2.0,
                                      NormMethod::SvdExact)
                   .value;
    EXPECT_NEAR(v, 1.0, 1e-6);
}

TEST(Norm, AscentIsACertifiedLowerBound) {
    Grid g(1, 1.0, 32);
    Weight one = Weight::constant(g);
    AscentOptions o;
    for (unsigned s = 0; s < 50; ++s) {
        auto C = OperatorHandle::commutator(random_function(g, 100 + s), OperatorHandle::riesz(Family::Neumann, 1));
        double svd = weighted_operator_norm(C, one, one, 2.0, NormMethod::SvdExact).value;
        o.seed = 1000 + s;
        auto a = weighted_operator_norm(C, one, one, 2.0, NormMethod::IterativeAscent, o);
        EXPECT_LE(a.value, svd + 1e-9);
        EXPECT_GE(a.value, 0.95 * svd);
        EXPECT_EQ(a.seed, o.seed);
    }
}

TEST(Norm, DenseCapIsEnforced) {
    Grid g(1, 1.0, 1024);
    Weight one = Weight::constant(g);
    EXPECT_THROW(weighted_operator_norm(OperatorHandle::riesz(Family::Free, 1), one, one, 2.0, NormMethod::SvdExact),
                 SizeError);
}
