#include <cmath>

#include <gtest/gtest.h>

#include "generators.hpp"

using namespace jumpcalc;

namespace {

IntensityModel unit_model() { return IntensityModel::homogeneous(1.0, 1.0, JumpLaw({{1.0, 1.0}})); }

CountWindow whole() { return {{0.0, 1.0}, kAllAssets}; }

Functional square_count() { return count_polynomial(unit_model(), whole(), {0.0, 0.0, 1.0}); }

Functional exponential() { return exponential_functional(unit_model(), whole(), 1.0); }

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

} // namespace

TEST(ClarkOcone, LinearClaimIsExactForAnyInnerCount)
{
    IntensityModel m(1.0, {{RateFunction({0.0, 0.5}, {1.0, 2.0}), JumpLaw({{1.0, 0.5}, {-0.5, 0.5}})}});
    auto f = linear_functional(m, {{0.2, 0.8}, kAllAssets}, 1.5, true);
    auto rep = clark_ocone_decompose(f, m, 2000, 1, {1, 0});
    EXPECT_LT(rep.max_abs_oracle_residual, 1e-10);
    for (double r : rep.residual)
        EXPECT_NEAR(r, 0.0, 1e-10);
    EXPECT_LT(rep.ratio, 1e-16);
    EXPECT_TRUE(rep.mean_from_oracle);
}

TEST(ClarkOcone, SquareCount)
{
    auto rep = clark_ocone_decompose(square_count(), unit_model(), 20000, 1, {2, 0});
    EXPECT_LT(rep.max_abs_oracle_residual, 1e-8);
    EXPECT_EQ(rep.mean_f, 2.0);
    std::vector<double> dev(rep.f.size());
    for (std::size_t i = 0; i < dev.size(); ++i)
        dev[i] = (rep.f[i] - 2.0) * (rep.f[i] - 2.0);
    auto s = summarize(dev);
    EXPECT_LT(std::abs(rep.var_f - 11.0), 3.0 * s.se());
}

TEST(ClarkOcone, SquareCountMcIntegrandIsUnbiased)
{
    auto rep = clark_ocone_decompose(square_count().without_oracles(), unit_model(), 5000, 4, {3, 0});
    EXPECT_FALSE(rep.mean_from_oracle);
    auto r = summarize(rep.residual);
    EXPECT_LT(std::abs(r.mean), 3.0 * std::sqrt(r.se() * r.se() + rep.mean_f_se * rep.mean_f_se));
}

TEST(ClarkOcone, ExponentialResidualRatioAtLargeInnerCount)
{
    auto rep = clark_ocone_decompose(exponential(), unit_model(), 1000, 1000, {4, 0});
    EXPECT_LT(rep.ratio, 0.02);
    EXPECT_LT(rep.max_abs_oracle_residual, 1e-8);
    EXPECT_EQ(rep.non_finite_points, 0u);
}

TEST(ClarkOcone, ResidualVarianceDecaysLikeInverseInnerCount)
{
    std::vector<double> ms{10.0, 100.0, 1000.0}, vars;
    for (double M : ms)
        vars.push_back(clark_ocone_decompose(exponential(), unit_model(), 1000, static_cast<std::size_t>(M), {5, 0})
                           .var_residual);
    EXPECT_NEAR(loglog_slope(ms, vars), -1.0, 0.2);
}

TEST(ClarkOcone, InnerNoiseTracksResidual)
{
    auto rep = clark_ocone_decompose(exponential(), unit_model(), 2000, 20, {6, 0});
    auto noise = summarize(rep.inner_noise);
    EXPECT_NEAR(rep.var_residual / noise.mean, 1.0, 0.25);
}

TEST(ClarkOcone, WorkersDoNotChangeResult)
{
    auto a = clark_ocone_decompose(exponential(), unit_model(), 200, 30, {7, 0}, {1, {}});
    auto b = clark_ocone_decompose(exponential(), unit_model(), 200, 30, {7, 0}, {3, {}});
    ASSERT_EQ(a.residual.size(), b.residual.size());
    for (std::size_t i = 0; i < a.residual.size(); ++i)
        EXPECT_TRUE(same_bits(a.residual[i], b.residual[i]));
    EXPECT_TRUE(same_bits(a.ratio, b.ratio));
}

TEST(ClarkOcone, ConstantClaimHasZeroRatio)
{
    Functional c{"constant", [](PointConfiguration const&) { return 3.0; }, {}, {}};
    auto rep = clark_ocone_decompose(c, unit_model(), 50, 5, {8, 0});
    EXPECT_EQ(rep.var_f, 0.0);
    EXPECT_EQ(rep.ratio, 0.0);
    for (double r : rep.residual)
        EXPECT_EQ(r, 0.0);
}

TEST(ClarkOcone, Errors)
{
    EXPECT_THROW((void)clark_ocone_decompose(exponential(), unit_model(), 1, 5, {1, 0}), std::invalid_argument);
    EXPECT_THROW((void)clark_ocone_decompose(exponential(), unit_model(), 10, 0, {1, 0}), std::invalid_argument);
}

TEST(RepresentationProperty, RatioBoundedAndOracleExactForIntegerPolynomials)
{
    gen::Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        auto m = gen::model(rng, 1);
        auto w = gen::window(rng);
        std::vector<double> coef{gen::uniform(rng, -1, 1), gen::uniform(rng, -1, 1), gen::uniform(rng, -1, 1)};
        auto f = count_polynomial(m, {w, kAllAssets}, coef);
        auto rep = clark_ocone_decompose(f, m, 200, 3, {9, static_cast<std::uint64_t>(trial)});
        EXPECT_GE(rep.ratio, 0.0);
        EXPECT_LT(rep.max_abs_oracle_residual, 1e-8 * (1.0 + rep.var_f));
    }
}

TEST(ConditionalExpectation, ExactAtHorizon)
{
    auto f = exponential();
    for (std::uint64_t i = 0; i < 50; ++i) {
        auto mu = sample_path(unit_model(), {10, i});
        auto c = conditional_expectation_mc(f, mu, 1.0, unit_model(), 7, {11, i});
        EXPECT_EQ(c.value, f(mu));
        EXPECT_EQ(c.standard_error, 0.0);
    }
}

TEST(ConditionalExpectation, LinearClaimClosedForm)
{
    IntensityModel m = IntensityModel::homogeneous(1.0, 2.0, JumpLaw({{1.0, 1.0}}));
    CountWindow B{{0.2, 0.9}, kAllAssets};
    auto f = linear_functional(m, B, 1.0, false);
    std::size_t fails = 0;
    for (std::uint64_t i = 0; i < 40; ++i) {
        auto mu = sample_path(m, {12, i});
        double t = 0.1 + 0.02 * static_cast<double>(i);
        double known = static_cast<double>(B.count(restrict_upto(mu, t)));
        double exact = known + 2.0 * std::max(0.0, 0.9 - std::max(0.2, t));
        auto c = conditional_expectation_mc(f, mu, t, m, 4000, {13, i});
        if (std::abs(c.value - exact) > 3.0 * c.standard_error + 1e-12)
            ++fails;
    }
    EXPECT_LE(fails, 2u);
}

TEST(ConditionalExpectation, KnownClaimIsReturnedExactly)
{
    auto f = count_polynomial(unit_model(), {{0.0, 0.4}, kAllAssets}, {1.0, 2.0, -1.0});
    for (std::uint64_t i = 0; i < 50; ++i) {
        auto mu = sample_path(unit_model(), {14, i});
        for (double t : {0.4, 0.6, 0.99}) {
            auto c = conditional_expectation_mc(f, mu, t, unit_model(), 3, {15, i});
            EXPECT_EQ(c.value, f(mu));
        }
    }
}

TEST(ConditionalExpectation, TowerProperty)
{
    auto f = exponential();
    std::size_t const n = 4000;
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto mu = sample_path(unit_model(), {16, i});
        v[i] = conditional_expectation_mc(f, mu, 0.5, unit_model(), 10, {17, i}).value;
    }
    auto s = summarize(v);
    EXPECT_LT(std::abs(s.mean - *f.oracles.mean), 3.0 * s.se());
}

TEST(ConditionalExpectation, Errors)
{
    PointConfiguration mu(1.0);
    EXPECT_THROW((void)conditional_expectation_mc(exponential(), mu, 0.5, unit_model(), 0, {1, 0}),
                 std::invalid_argument);
    EXPECT_THROW((void)conditional_expectation_mc(exponential(), mu, 1.5, unit_model(), 5, {1, 0}), std::out_of_range);
    EXPECT_THROW((void)conditional_expectation_mc(exponential(), mu, -0.1, unit_model(), 5, {1, 0}), std::out_of_range);
}

TEST(Martingale, OracleIntegrand)
{
    std::vector<double> grid{0.0, 0.25, 0.5, 0.75, 1.0};
    auto rep = martingale_representation_check(exponential(), unit_model(), grid, 2000, 100, {18, 0});
    ASSERT_EQ(rep.points.size(), grid.size());
    EXPECT_TRUE(rep.integrand_from_oracle);
    for (auto const& p : rep.points) {
        EXPECT_LT(std::abs(p.mean_std_gap), 3.0) << p.t;
        EXPECT_LT(std::abs(p.representation_std_gap), 3.0) << p.t;
    }
    EXPECT_LT(std::abs(rep.points.back().representation_gap), 1e-10);
}

TEST(Martingale, MonteCarloIntegrand)
{
    std::vector<double> grid{0.0, 0.5, 1.0};
    MartingaleOptions opts;
    opts.source = IntegrandSource::monte_carlo;
    auto rep = martingale_representation_check(square_count(), unit_model(), grid, 500, 50, {19, 0}, opts);
    EXPECT_FALSE(rep.integrand_from_oracle);
    for (auto const& p : rep.points) {
        EXPECT_LT(std::abs(p.mean_std_gap), 3.0) << p.t;
        EXPECT_LT(std::abs(p.representation_std_gap), 3.0) << p.t;
    }
}

TEST(Martingale, Errors)
{
    std::vector<double> grid{0.0, 1.0};
    EXPECT_THROW((void)martingale_representation_check(exponential(), unit_model(), grid, 1, 5, {1, 0}),
                 std::invalid_argument);
    EXPECT_THROW((void)martingale_representation_check(exponential(), unit_model(), grid, 10, 0, {1, 0}),
                 std::invalid_argument);
}
