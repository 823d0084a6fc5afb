#include <cmath>

#include <gtest/gtest.h>

#include "generators.hpp"

using namespace jumpcalc;

namespace {

IntensityModel unit_model() { return IntensityModel::homogeneous(1.0, 1.0, JumpLaw({{1.0, 1.0}})); }

PredictableIntegrand quadratic_integrand()
{
    return {"quadratic",
            [](PointConfiguration const& past, double s, int, double) {
                return 2.0 * static_cast<double>(past.count_before(s)) + 2.0 * (1.0 - s) + 1.0;
            },
            {}};
}

PredictableIntegrand capped_count()
{
    return {"capped",
            [](PointConfiguration const& past, double s, int, double) {
                return std::min(static_cast<double>(past.count_before(s)), 5.0);
            },
            {}};
}

PredictableIntegrand smooth_integrand(double a, double b)
{
    return {"smooth",
            [=](PointConfiguration const& past, double s, int j, double z) {
                double last = past.empty() ? 0.0 : past.atoms().back().time;
                return std::sin(a * s + j) * z + b * last * last + static_cast<double>(past.size());
            },
            {}};
}

double charlier3(double x, double a)
{
    return x * (x - 1.0) * (x - 2.0) - 3.0 * a * x * (x - 1.0) + 3.0 * a * a * x - a * a * a;
}

} // namespace

TEST(Skorohod, IndicatorExample)
{
    IntensityModel m = IntensityModel::homogeneous(2.0, 1.0, JumpLaw({{1.0, 1.0}}));
    PointConfiguration mu(2.0, {{0.2, 0, 1.0}, {0.5, 0, 1.0}, {0.9, 0, 1.0}, {1.5, 0, 1.0}});
    EXPECT_NEAR(skorohod_pathwise(indicator_integrand({0.0, 1.0}), mu, m), 2.0, 1e-14);
}

TEST(Skorohod, ZeroIntegrand)
{
    gen::Rng rng(1);
    for (int i = 0; i < 50; ++i)
        EXPECT_EQ(skorohod_pathwise(zero_integrand(), gen::configuration(rng), unit_model()), 0.0);
}

TEST(Skorohod, QuadraticClaimTelescopesPerPath)
{
    auto h = quadratic_integrand();
    for (std::uint64_t i = 0; i < 2000; ++i) {
        auto mu = sample_path(unit_model(), {1, i});
        double n = static_cast<double>(mu.size());
        EXPECT_NEAR(skorohod_pathwise(h, mu, unit_model()), n * n - 2.0, 1e-10);
    }
}

TEST(Skorohod, IndicatorIsCompensatedCountPerPath)
{
    gen::Rng rng(2);
    for (int trial = 0; trial < 300; ++trial) {
        auto m = gen::model(rng);
        auto B = gen::window(rng);
        int asset = gen::integer(rng, -1, m.asset_count() - 1);
        auto mu = sample_path(m, {2, static_cast<std::uint64_t>(trial)});
        double exact = static_cast<double>(count(mu, B, asset)) - m.measure(B, asset);
        EXPECT_NEAR(skorohod_pathwise(indicator_integrand(B, asset), mu, m), exact, 1e-12);
    }
}

TEST(Skorohod, RemovalCheckAgreesForPredictableIntegrands)
{
    SkorohodOptions opts;
    opts.check_removal = true;
    for (std::uint64_t i = 0; i < 200; ++i) {
        auto mu = sample_path(unit_model(), {3, i});
        EXPECT_NO_THROW((void)skorohod_pathwise(smooth_integrand(1.0, 2.0), mu, unit_model(), opts));
    }
}

TEST(Skorohod, IntegrandOnlySeesTheStrictPast)
{
    PredictableIntegrand spy{"spy",
                             [](PointConfiguration const& past, double s, int, double) {
                                 for (auto const& a : past.atoms())
                                     if (!(a.time < s))
                                         ADD_FAILURE() << "atom at " << a.time << " visible at s=" << s;
                                 return 1.0;
                             },
                             {}};
    for (std::uint64_t i = 0; i < 200; ++i)
        (void)skorohod_pathwise(spy, sample_path(unit_model(), {4, i}), unit_model());
}

TEST(Skorohod, GridValuesAreIncrements)
{
    auto h = smooth_integrand(2.0, 1.0);
    std::vector<double> grid{0.0, 0.2, 0.55, 1.0};
    for (std::uint64_t i = 0; i < 100; ++i) {
        auto mu = sample_path(unit_model(), {5, i});
        auto v = skorohod_on_grid(h, mu, unit_model(), grid);
        EXPECT_EQ(v.front(), 0.0);
        EXPECT_NEAR(v.back(), skorohod_pathwise(h, mu, unit_model()), 1e-12);
    }
    EXPECT_THROW((void)skorohod_on_grid(h, PointConfiguration(1.0), unit_model(), std::vector<double>{0.5, 0.2}),
                 std::invalid_argument);
}

TEST(Skorohod, EstimatedIntegrandWithExactValuesMatches)
{
    auto h = quadratic_integrand();
    EstimatedIntegrand e{"wrapped",
                         [&](PointConfiguration const& past, double s, int j, double z) {
                             return Estimate{h(past, s, j, z), 0.0};
                         },
                         {}};
    for (std::uint64_t i = 0; i < 100; ++i) {
        auto mu = sample_path(unit_model(), {6, i});
        double n = static_cast<double>(mu.size());
        auto v = skorohod_on_grid(e, mu, unit_model(), std::vector<double>{1.0}, {kFixedGauss, false}).front();
        EXPECT_NEAR(v.value, n * n - 2.0, 1e-10);
        EXPECT_EQ(v.variance, 0.0);
    }
}

TEST(IntegralsProperty, SkorohodIsLinearPerPath)
{
    gen::Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        auto m = gen::model(rng);
        auto mu = sample_path(m, {7, static_cast<std::uint64_t>(trial)});
        auto h1 = smooth_integrand(gen::uniform(rng, 0, 3), gen::uniform(rng, -1, 1));
        auto h2 = indicator_integrand(gen::window(rng));
        double a = gen::uniform(rng, -2, 2), b = gen::uniform(rng, -2, 2);
        PredictableIntegrand combo{"combo",
                                   [&](PointConfiguration const& p, double s, int j, double z) {
                                       return a * h1(p, s, j, z) + b * h2(p, s, j, z);
                                   },
                                   h2.breakpoints};
        double lhs = skorohod_pathwise(combo, mu, m);
        double rhs = a * skorohod_pathwise(h1, mu, m) + b * skorohod_pathwise(h2, mu, m);
        EXPECT_NEAR(lhs, rhs, 1e-10 * (1.0 + std::abs(lhs)));
    }
}

TEST(IntegralsProperty, MeanZeroForPredictableIntegrands)
{
    gen::Rng rng(8);
    auto m = gen::model(rng);
    std::vector<PredictableIntegrand> hs{capped_count(), smooth_integrand(1.5, 0.5), quadratic_integrand()};
    for (auto const& h : hs) {
        std::size_t const n = 20000;
        std::vector<double> d(n);
        for (std::size_t i = 0; i < n; ++i)
            d[i] = skorohod_pathwise(h, sample_path(m, {8, i}), m);
        auto s = summarize(d);
        EXPECT_LT(std::abs(s.mean), 3.0 * s.se()) << h.label;
    }
}

TEST(WienerIto, OrderOneIsCompensatedCount)
{
    TimeWindow B{0.1, 0.7};
    for (std::uint64_t i = 0; i < 200; ++i) {
        auto mu = sample_path(unit_model(), {9, i});
        double exact = static_cast<double>(count(mu, B)) - 0.6;
        EXPECT_NEAR(multiple_wiener_ito(indicator_kernel(1, B), mu, unit_model()), exact, 1e-12);
    }
}

TEST(WienerIto, ProductFormulaOrderTwo)
{
    TimeWindow B{0.0, 0.6};
    for (std::uint64_t i = 0; i < 500; ++i) {
        auto mu = sample_path(unit_model(), {10, i});
        double n = static_cast<double>(count(mu, B));
        EXPECT_NEAR(multiple_wiener_ito(indicator_kernel(2, B), mu, unit_model()), (n - 0.6) * (n - 0.6) - n, 1e-10);
    }
}

TEST(WienerIto, OrderTwoMatchesOffDiagonalExpansion)
{
    // g(x, y) = t_x t_y: I_2 = sum_{i != k} t_i t_k - 2 sum_i t_i int s ds + (int s ds)^2.
    SymmetricKernel g{2,
                      [](std::span<Atom const> ys) {
                          double p = 1.0;
                          for (auto const& y : ys)
                              p *= y.time;
                          return p;
                      },
                      {}};
    for (std::uint64_t i = 0; i < 300; ++i) {
        auto mu = sample_path(unit_model(), {11, i});
        double s1 = 0.0, s2 = 0.0;
        for (auto const& a : mu.atoms()) {
            s1 += a.time;
            s2 += a.time * a.time;
        }
        double exact = s1 * s1 - s2 - s1 + 0.25;
        EXPECT_NEAR(multiple_wiener_ito(g, mu, unit_model()), exact, 1e-10);
    }
}

TEST(WienerIto, OrderThreeIsCharlier)
{
    TimeWindow B{0.2, 0.9};
    IntensityModel m = IntensityModel::homogeneous(1.0, 2.0, JumpLaw({{1.0, 1.0}}));
    for (std::uint64_t i = 0; i < 200; ++i) {
        auto mu = sample_path(m, {12, i});
        double n = static_cast<double>(count(mu, B));
        EXPECT_NEAR(multiple_wiener_ito(indicator_kernel(3, B), mu, m), charlier3(n, 1.4), 1e-9);
    }
}

TEST(WienerIto, OrderAboveThreeRejected)
{
    EXPECT_THROW((void)multiple_wiener_ito(indicator_kernel(4, {0.0, 1.0}), PointConfiguration(1.0), unit_model()),
                 std::invalid_argument);
}

TEST(WienerIto, KernelsAreSymmetric)
{
    gen::Rng rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        auto B = gen::window(rng);
        int order = gen::integer(rng, 1, 3);
        auto g = indicator_kernel(order, B);
        std::vector<Atom> ys;
        for (int k = 0; k < order; ++k)
            ys.push_back(gen::atom(rng, 1.0));
        double base = g.evaluate(ys);
        std::shuffle(ys.begin(), ys.end(), rng);
        EXPECT_EQ(g.evaluate(ys), base);
    }
}

TEST(WienerIto, ChaosOrthogonalityAndIsometry)
{
    TimeWindow B{0.0, 0.6};
    std::size_t const n = 20000;
    std::vector<double> i1i2(n), i2sq(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto mu = sample_path(unit_model(), {14, i});
        double a = multiple_wiener_ito(indicator_kernel(1, B), mu, unit_model());
        double b = multiple_wiener_ito(indicator_kernel(2, B), mu, unit_model());
        i1i2[i] = a * b;
        i2sq[i] = b * b;
    }
    auto x = summarize(i1i2);
    auto y = summarize(i2sq);
    EXPECT_LT(std::abs(x.mean), 3.0 * x.se());
    EXPECT_LT(std::abs(y.mean - 2.0 * 0.36), 3.0 * y.se());
}

TEST(Isometry, IndicatorHasUnitVariance)
{
    auto r = estimate_isometry(indicator_integrand({0.0, 1.0}), unit_model(), 20000, {15, 0});
    EXPECT_LT(std::abs(r.std_gap), 3.0);
    EXPECT_EQ(r.rhs, 1.0);
    EXPECT_LT(std::abs(r.lhs - 1.0), 3.0 * r.se_lhs);
}

TEST(Isometry, ZeroIntegrandIsExactlyZero)
{
    auto r = estimate_isometry(zero_integrand(), unit_model(), 100, {16, 0});
    EXPECT_EQ(r.lhs, 0.0);
    EXPECT_EQ(r.rhs, 0.0);
    EXPECT_EQ(r.std_gap, 0.0);
}

TEST(Isometry, CappedCount)
{
    auto r = estimate_isometry(capped_count(), unit_model(), 20000, {17, 0});
    EXPECT_LT(std::abs(r.std_gap), 3.0);
    EXPECT_EQ(r.n_paths, 20000u);
    EXPECT_EQ(r.seed, 17u);
}

TEST(Isometry, RejectsTooFewPaths)
{
    EXPECT_THROW((void)estimate_isometry(capped_count(), unit_model(), 1, {1, 0}), std::invalid_argument);
}

TEST(Covariance, SelfPairReducesToIsometryBitExact)
{
    auto h = capped_count();
    auto copy = capped_count();
    auto a = estimate_isometry(h, unit_model(), 3000, {18, 0});
    auto b = estimate_covariance(h, copy, unit_model(), 3000, {18, 0});
    EXPECT_EQ(std::bit_cast<std::uint64_t>(a.lhs), std::bit_cast<std::uint64_t>(b.lhs));
    EXPECT_EQ(std::bit_cast<std::uint64_t>(a.rhs), std::bit_cast<std::uint64_t>(b.rhs));
}

TEST(Covariance, DisjointSupports)
{
    auto r = estimate_covariance(indicator_integrand({0.0, 0.5}), indicator_integrand({std::nextafter(0.5, 1.0), 1.0}),
                                 unit_model(), 20000, {19, 0});
    EXPECT_EQ(r.rhs, 0.0);
    EXPECT_LT(std::abs(r.std_gap), 3.0);
}

TEST(Covariance, Bilinearity)
{
    auto h = capped_count();
    auto g = smooth_integrand(2.0, 1.0);
    PredictableIntegrand sum{"sum", [&](PointConfiguration const& p, double s, int j, double z) { return h(p, s, j, z) + g(p, s, j, z); }, {}};
    SeedStream st{20, 0};
    auto hh = estimate_covariance(h, h, unit_model(), 2000, st);
    auto gg = estimate_covariance(g, g, unit_model(), 2000, st);
    auto hg = estimate_covariance(h, g, unit_model(), 2000, st);
    auto ss = estimate_covariance(sum, sum, unit_model(), 2000, st);
    EXPECT_NEAR(ss.lhs, hh.lhs + gg.lhs + 2.0 * hg.lhs, 1e-9 * (1.0 + std::abs(ss.lhs)));
    EXPECT_NEAR(ss.rhs, hh.rhs + gg.rhs + 2.0 * hg.rhs, 1e-9 * (1.0 + std::abs(ss.rhs)));
}

TEST(Duality, ExponentialAgainstIndicator)
{
    auto g = exponential_functional(unit_model(), {{0.0, 1.0}, kAllAssets}, 1.0);
    auto r = estimate_duality(g, indicator_integrand({0.0, 1.0}), unit_model(), 20000, {21, 0});
    EXPECT_LT(std::abs(r.std_gap), 3.0);
    // Both sides equal E D g lambda = (e^-1 - 1) E g.
    double exact = (std::exp(-1.0) - 1.0) * std::exp(std::exp(-1.0) - 1.0);
    EXPECT_LT(std::abs(r.lhs - exact), 3.0 * r.se_lhs);
}

TEST(Duality, BlackBoxDifferenceAgreesWithClosedForm)
{
    auto g = exponential_functional(unit_model(), {{0.2, 0.9}, kAllAssets}, 0.7);
    auto h = capped_count();
    auto a = estimate_duality(g, h, unit_model(), 500, {22, 0});
    auto b = estimate_duality(g.without_oracles(), h, unit_model(), 500, {22, 0});
    EXPECT_NEAR(a.lhs, b.lhs, 1e-12);
    EXPECT_EQ(a.rhs, b.rhs);
}

TEST(Duality, ConstantClaim)
{
    Functional c{"constant", [](PointConfiguration const&) { return 2.0; }, {}, {}};
    auto r = estimate_duality(c, capped_count(), unit_model(), 20000, {23, 0});
    EXPECT_EQ(r.lhs, 0.0);
    EXPECT_LT(std::abs(r.rhs), 3.0 * r.se_rhs);
}

TEST(Duality, ZeroIntegrand)
{
    auto g = exponential_functional(unit_model(), {{0.0, 1.0}, kAllAssets}, 1.0);
    auto r = estimate_duality(g, zero_integrand(), unit_model(), 100, {24, 0});
    EXPECT_EQ(r.lhs, 0.0);
    EXPECT_EQ(r.rhs, 0.0);
}

TEST(Estimators, WorkerCountDoesNotChangeResults)
{
    auto a = estimate_isometry(capped_count(), unit_model(), 3000, {25, 0}, {1, {}});
    auto b = estimate_isometry(capped_count(), unit_model(), 3000, {25, 0}, {4, {}});
    EXPECT_EQ(std::bit_cast<std::uint64_t>(a.lhs), std::bit_cast<std::uint64_t>(b.lhs));
    EXPECT_EQ(std::bit_cast<std::uint64_t>(a.std_gap), std::bit_cast<std::uint64_t>(b.std_gap));
}

TEST(Zeta, UnitIntegrandIsCompensatedJumpSum)
{
    IntensityModel m(1.0, {{RateFunction::constant(1.5), JumpLaw({{2.0, 0.5}, {-1.0, 0.5}})}});
    auto market = MarketModel::unit(m);
    for (std::uint64_t i = 0; i < 200; ++i) {
        auto mu = sample_path(m, {26, i});
        double jumps = 0.0;
        for (auto const& a : mu.atoms())
            jumps += a.jump;
        double exact = jumps - 1.5 * 0.5;
        EXPECT_NEAR(integral_against_zeta(asset_indicator_portfolio(), mu, market), exact, 1e-12);
        EXPECT_NEAR(zeta(market, mu, 1.0), exact, 1e-12);
    }
}

TEST(Zeta, SingleJumpIsCountMinusOne)
{
    auto market = MarketModel::unit(unit_model());
    for (std::uint64_t i = 0; i < 200; ++i) {
        auto mu = sample_path(unit_model(), {27, i});
        EXPECT_NEAR(integral_against_zeta(asset_indicator_portfolio(), mu, market), static_cast<double>(mu.size()) - 1.0,
                    1e-12);
    }
}

TEST(Zeta, PathDependentKappaMatchesSkorohod)
{
    IntensityModel m(1.0, {{RateFunction::constant(1.0), JumpLaw({{1.0, 0.5}, {-2.0, 0.5}})}});
    auto market = MarketModel::separable(m, {KappaFactor::count_dependent(0.8, 0.5, 0, 3)});
    Portfolio h{"h", [](PointConfiguration const& past, double s, int) { return 1.0 + s * static_cast<double>(past.count_before(s)); }, {}};
    for (std::uint64_t i = 0; i < 200; ++i) {
        auto mu = sample_path(m, {28, i});
        PredictableIntegrand hk{"hk",
                                [&](PointConfiguration const& past, double s, int j, double z) {
                                    return h(past, s, j) * market.kappa(past, s, j, z);
                                },
                                {}};
        EXPECT_NEAR(integral_against_zeta(h, mu, market), skorohod_pathwise(hk, mu, m), 1e-11);
    }
}

TEST(Zeta, SplitAtAnyTimeIsAdditive)
{
    gen::Rng rng(29);
    auto market = MarketModel::unit(unit_model());
    Portfolio h{"h", [](PointConfiguration const& past, double s, int) { return std::cos(3.0 * s) + static_cast<double>(past.size()); }, {}};
    for (std::uint64_t i = 0; i < 200; ++i) {
        auto mu = sample_path(unit_model(), {29, i});
        double t = gen::uniform(rng, 0.0, 1.0);
        auto v = integral_against_zeta_on_grid(h, mu, market, std::vector<double>{t, 1.0});
        double direct = integral_against_zeta(h, mu, market);
        EXPECT_NEAR(v[1], direct, 1e-12);
        Portfolio early{"early", [&](PointConfiguration const& p, double s, int j) { return s <= t ? h(p, s, j) : 0.0; }, {t}};
        Portfolio late{"late", [&](PointConfiguration const& p, double s, int j) { return s > t ? h(p, s, j) : 0.0; }, {t}};
        EXPECT_NEAR(integral_against_zeta(early, mu, market) + integral_against_zeta(late, mu, market), direct, 1e-12);
    }
}
