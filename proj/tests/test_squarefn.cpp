#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "wharm/squarefn.hpp"
#include "wharm/stats.hpp"

using namespace wharm;

namespace {

GridFunction random_function(const Grid& g, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1, 1);
    std::vector<double> v(g.size());
    for (double& x : v) x = U(rng);
    return GridFunction(g, std::move(v));
}

GridFunction bump(const Grid& g, double c, double sigma) {
    return GridFunction::sample(g, [&](Point x) {
        double r2 = 0;
        for (int a = 0; a < g.dim(); ++a) r2 += (x[a] - c) * (x[a] - c);
        return std::exp(-0.5 * r2 / (sigma * sigma));
    });
}

// A few random Haar functions on cubes with at least min_cells cells.
GridFunction haar_sum(const DyadicLattice& lat, int terms, int min_cells, std::mt19937_64& rng) {
    std::vector<int> pool;
    for (const auto& q : lat.cubes())
        if (q.cells >= min_cells && !q.wraps) pool.push_back(q.id);
    std::uniform_real_distribution<double> U(-1, 1);
    GridFunction b(lat.grid());
    for (int k = 0; k < terms; ++k) {
        int id = pool[rng() % pool.size()];
        b += haar_function(lat, id, 0) * (U(rng) * std::sqrt(lat.volume(lat.cube(id))));
    }
    return b;
}

double rel_max(const GridFunction& a, const GridFunction& b) { return (a - b).max_abs() / b.max_abs(); }

}  // namespace

TEST(TimeGrid, GeometricLayoutAndValidation) {
    auto tg = TimeGrid::geometric(0.1, 0.8, 4);
    ASSERT_EQ(tg.t.size(), 13u);
    EXPECT_NEAR(tg.t.back(), 0.8, 1e-14);
    EXPECT_NEAR(tg.dlog, std::log(2.0) / 4, 1e-16);
    Grid g(1, 1.0, 64);
    auto st = TimeGrid::standard(g);
    EXPECT_NEAR(st.t.front(), 2 * g.cell_width(), 1e-15);
    EXPECT_THROW(TimeGrid::geometric(0.01, 0.5).validate(g), ParameterError);
    EXPECT_THROW(TimeGrid::geometric(0.1, 2.5).validate(g), ParameterError);
    EXPECT_THROW(TimeGrid::geometric(0.0, 1.0), ParameterError);
}

TEST(Area, ZeroInZeroOut) {
    for (int n : {1, 2}) {
        Grid g(n, 1.0, 32);
        auto tg = TimeGrid::standard(g);
        for (auto cone : {ConeKind::Free, ConeKind::Neumann})
            EXPECT_EQ(area_function(GridFunction(g), Generator::HeatQt, cone, tg).max_abs(), 0.0);
        EXPECT_EQ(g_star(GridFunction(g), Generator::HeatQt, 3 * n, tg).max_abs(), 0.0);
        EXPECT_EQ(hardy_norm(GridFunction(g), HardyFlavor::HaarWavelet, Weight::constant(g), tg), 0.0);
    }
}

TEST(Area, PositiveHomogeneity) {
    Grid g(2, 1.0, 32);
    auto f = random_function(g, 1);
    auto tg = TimeGrid::standard(g);
    for (auto cone : {ConeKind::Free, ConeKind::Neumann}) {
        auto s = area_function(f, Generator::HeatQt, cone, tg);
        auto s2 = area_function(f * -2.0, Generator::HeatQt, cone, tg);
        for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(s2[i], 2.0 * s[i]);
        auto s3 = area_function(f * 0.3, Generator::HeatQt, cone, tg);
        for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(s3[i], 0.3 * s[i], 1e-14 * s[i]);
    }
}

TEST(Area, L2NormMatchesTheMultiplierIntegral) {
    // ||S f||_2^2 = |B_1| int |m(t|xi|)|^2 dt/t ||f||_2^2 with |B_1| = 2 in one dimension
    Grid g(1, 16.0, 1024);
    auto f = bump(g, 0.0, 1.0);
    auto tg = TimeGrid::geometric(2 * g.cell_width(), g.halfwidth());
    for (auto gen : {Generator::HeatQt, Generator::PhiLoG, Generator::PhiGaussDeriv}) {
        double ratio = area_function(f, gen, ConeKind::Free, tg).lp_norm(2) / f.lp_norm(2);
        double oracle = std::sqrt(2.0 * generator_constant(gen));
        EXPECT_NEAR(ratio, oracle, 0.1 * oracle) << to_string(gen);
    }
}

TEST(Area, NormsConvergeWhenTheTimeGridIsRefined) {
    Grid g(1, 4.0, 512);
    auto f = bump(g, 0.3, 0.2);
    Weight one = Weight::constant(g);
    double a = weighted_l1(area_function(f, Generator::HeatQt, ConeKind::Free, TimeGrid::standard(g, 8)), one);
    double b = weighted_l1(area_function(f, Generator::HeatQt, ConeKind::Free, TimeGrid::standard(g, 16)), one);
    EXPECT_NEAR(a, b, 0.02 * b);
}

TEST(Area, NeumannConeSitsBetweenTheExtensionBounds) {
    // (sqrt2/2) S(f_{+,e}) <= S_N(f) <= S(f_{+,e}) on the upper side, and likewise below
    for (int n : {1, 2}) {
        Grid g(n, 1.0, n == 1 ? 256 : 32);
        auto f = random_function(g, 10 + n);
        auto tg = TimeGrid::standard(g);
        auto sn = area_function(f, Generator::HeatQt, ConeKind::Neumann, tg);
        for (Side s : {Side::Upper, Side::Lower}) {
            auto se = area_function(side_even(f, s), Generator::HeatQt, ConeKind::Free, tg);
            for (std::size_t i = 0; i < g.size(); ++i) {
                if ((g.last_coord(i) > 0) != (s == Side::Upper)) continue;
                EXPECT_GE(sn[i], std::numbers::sqrt2 / 2 * se[i] * (1 - 1e-12));
                EXPECT_LE(sn[i], se[i] * (1 + 1e-12));
            }
        }
    }
}

TEST(Area, NeumannConeIgnoresTheFarSide) {
    Grid g(2, 1.0, 32);
    auto f = random_function(g, 20), f2 = f;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.last_coord(i) < 0) f2[i] = 10.0 * std::cos(static_cast<double>(i));
    auto tg = TimeGrid::standard(g);
    auto a = area_function(f, Generator::HeatQt, ConeKind::Neumann, tg);
    auto b = area_function(f2, Generator::HeatQt, ConeKind::Neumann, tg);
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.last_coord(i) > 0) EXPECT_NEAR(a[i], b[i], 1e-12 * (1 + a[i]));
}

TEST(Area, HalfSpaceInputUsesTheEvenExtension) {
    Grid g(1, 1.0, 128);
    auto f = random_function(g.half(Side::Upper), 30);
    auto tg = TimeGrid::standard(g);
    auto a = area_function(f, Generator::HeatQt, ConeKind::Neumann, tg);
    auto b = restrict_to(area_function(extend_even(f), Generator::HeatQt, ConeKind::Neumann, tg), Side::Upper);
    EXPECT_EQ(a.values(), b.values());
    EXPECT_THROW(area_function(f, Generator::HeatQt, ConeKind::Free, tg), DomainError);
    EXPECT_THROW(area_function(GridFunction(Grid(2, 1.0, 8)), Generator::PhiGaussDeriv, ConeKind::Free,
                               TimeGrid::standard(Grid(2, 1.0, 8))),
                 ParameterError);
}

TEST(GStar, DominatesTheAreaFunction) {
    for (int n : {1, 2}) {
        Grid g(n, 1.0, n == 1 ? 128 : 16);
        auto f = random_function(g, 40 + n);
        auto tg = TimeGrid::standard(g);
        auto s = area_function(f, Generator::HeatQt, ConeKind::Free, tg);
        for (double lambda : {3.0 * n, 4.0 * n}) {
            auto gs = g_star(f, Generator::HeatQt, lambda, tg);
            double c = std::pow(2.0, -lambda / 2);
            for (std::size_t i = 0; i < g.size(); ++i) EXPECT_GE(gs[i], c * s[i] * (1 - 1e-6));
        }
    }
}

TEST(GStar, WeightedBoundHasAFittedConstant) {
    Grid g(1, 1.0, 128);
    auto tg = TimeGrid::standard(g);
    std::mt19937_64 rng(50);
    std::vector<double> ratios;
    const double p = 2.0, pp = p / (p - 1.0);
    for (int k = 0; k < 20; ++k) {
        auto h = random_function(g, 60 + k);
        std::uniform_real_distribution<double> A(-0.4, 0.4);
        double a = A(rng);
        Weight w(GridFunction::sample(g, [&](Point x) { return std::pow(std::abs(x[0]), a); }));
        Weight wp = w.pow(1.0 - pp);
        auto gs = g_star(h, Generator::HeatQt, 3.0, tg);
        double num = 0, den = 0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            num += std::pow(gs[i], pp) * wp[i];
            den += std::pow(std::abs(h[i]), pp) * wp[i];
        }
        ratios.push_back(std::pow(num / den, 1.0 / pp));
    }
    auto fit = fit_constant(ratios);
    EXPECT_TRUE(fit.holds) << fit.fitted << " " << fit.holdout_max;
    EXPECT_GT(fit.fitted, 0.0);
}

TEST(Hardy, HaarSquareFunctionVanishesOnlyOnConstants) {
    Grid g(1, 1.0, 64);
    auto tg = TimeGrid::standard(g);
    EXPECT_EQ(hardy_square_function(GridFunction(g, 4.0), HardyFlavor::HaarWavelet, tg).max_abs(), 0.0);
    auto f = GridFunction(g, 4.0);
    f[10] += 1e-3;
    EXPECT_GT(hardy_square_function(f, HardyFlavor::HaarWavelet, tg).max_abs(), 0.0);
}

TEST(Hardy, HaarSquareFunctionUsesClippedDoubles) {
    Grid g(1, 1.0, 16);
    DyadicLattice lat(g, 3);
    // one Haar function on the generation-1 cube [0, 8): 2Q covers cells [-4, 12) clipped to [0, 12)
    int id = lat.generation_begin(1);
    auto f = haar_function(lat, id, 0);
    auto s = haar_square_function(f, lat);
    double v = 1.0 / std::sqrt(lat.volume(lat.cube(id)));
    for (int i = 0; i < 16; ++i) EXPECT_NEAR(s[i], i < 12 ? v : 0.0, 1e-14);
}

TEST(Hardy, HeatAndClassicalFlavorsAreEquivalent) {
    Grid g(1, 1.0, 256);
    DyadicLattice lat(g, max_generation_for(g, 1));
    auto tg = TimeGrid::standard(g);
    Weight w(GridFunction::sample(g, [](Point x) { return std::pow(std::abs(x[0]), 0.3); }));
    std::mt19937_64 rng(70);
    Band band;
    for (int k = 0; k < 50; ++k) {
        auto f = haar_sum(lat, 6, 8, rng);
        band.add(hardy_norm(f, HardyFlavor::HeatFree, w, tg) / hardy_norm(f, HardyFlavor::Classical, w, tg));
    }
    EXPECT_TRUE(band.finite());
    EXPECT_LE(band.spread(), 20.0);
}

TEST(Hardy, NeumannNormSitsBetweenTheSideNorms) {
    Grid g(1, 1.0, 256);
    auto tg = TimeGrid::standard(g);
    Weight w(GridFunction::sample(g, [](Point x) { return 1.0 + 0.5 * std::sin(3 * x[0]); }));
    for (unsigned s = 0; s < 5; ++s) {
        auto f = random_function(g, 80 + s);
        double n = hardy_norm(f, HardyFlavor::HeatNeumann, w, tg);
        double sides = 0;
        for (Side sd : {Side::Upper, Side::Lower}) {
            auto se = area_function(side_even(f, sd), Generator::HeatQt, ConeKind::Free, tg);
            auto half = restrict_to(se, sd);
            auto wh = restrict_to(w.function(), sd);
            for (std::size_t i = 0; i < half.size(); ++i) sides += half[i] * wh[i] * g.cell_volume();
        }
        EXPECT_GE(n, std::numbers::sqrt2 / 2 * sides * (1 - 1e-12));
        EXPECT_LE(n, sides * (1 + 1e-12));
    }
}

TEST(Generators, NamesRoundTrip) {
    for (auto gen : {Generator::HeatQt, Generator::Psi, Generator::PhiGaussDeriv, Generator::PhiLoG})
        EXPECT_EQ(generator_from_string(to_string(gen)), gen);
    EXPECT_THROW(generator_from_string("mexican-hat"), ParameterError);
    EXPECT_NEAR(generator_constant(Generator::HeatQt), 0.125, 0);
    // psi: int_0^inf psi(s)^2 ds/s by a plain trapezoid on a finer log grid
    double sum = 0, du = 2e-4;
    for (double u = -20; u < 14; u += du) {
        double v = psi_multiplier(std::exp(u));
        sum += v * v * du;
    }
    EXPECT_NEAR(generator_constant(Generator::Psi), sum, 1e-3 * sum);
}
