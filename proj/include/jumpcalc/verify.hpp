#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "config.hpp"
#include "functionals.hpp"
#include "hedging.hpp"
#include "integrals.hpp"
#include "intensity.hpp"
#include "market.hpp"
#include "parallel.hpp"
#include "representation.hpp"
#include "stats.hpp"

namespace jumpcalc {

struct VerifyCheck
{
    IdentityReport row;
    /// Exact identities are judged on `max_error`, statistical ones on std_gap.
    bool exact = false;
    bool pass = false;
    double max_error = 0.0;
    double bound = 0.0;
    std::string detail;
};

struct VerifySettings
{
    std::size_t paths = 4000;
    std::size_t inner = 200;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    double tolerance = 3.0;
};

namespace detail {

inline SeedStream check_stream(std::uint64_t seed, std::string const& name) { return {seed, fnv1a(name)}; }

inline VerifyCheck exact_check(std::string identity, std::vector<double> const& lhs, std::vector<double> const& rhs,
                               double bound, SeedStream stream)
{
    VerifyCheck c;
    c.row = paired_report(std::move(identity), lhs, rhs, stream);
    c.row.std_gap = 0.0;
    c.exact = true;
    c.bound = bound;
    for (std::size_t i = 0; i < lhs.size(); ++i)
        c.max_error = std::max(c.max_error, std::abs(lhs[i] - rhs[i]));
    c.pass = c.max_error < bound;
    return c;
}

inline VerifyCheck stat_check(IdentityReport row, double tolerance)
{
    VerifyCheck c;
    c.row = std::move(row);
    c.pass = std::abs(c.row.std_gap) < tolerance;
    return c;
}

inline IdentityReport single_row(std::string identity, double lhs, double rhs, double se_lhs, double se_rhs,
                                 std::size_t n, std::uint64_t seed)
{
    IdentityReport r;
    r.identity = std::move(identity);
    r.lhs = lhs;
    r.rhs = rhs;
    r.se_lhs = se_lhs;
    r.se_rhs = se_rhs;
    r.se_gap = std::sqrt(se_lhs * se_lhs + se_rhs * se_rhs);
    r.std_gap = standardized(lhs - rhs, r.se_gap);
    r.n_paths = n;
    r.seed = seed;
    return r;
}

inline std::string fmt_t(double t) { return fmt::format("{:g}", t); }

} // namespace detail

/// The identity suite: exact pathwise identities, then statistical ones
/// judged at |std_gap| < tolerance. Every check draws from its own stream
/// derived from the seed and the check name.
inline std::vector<VerifyCheck> run_verify_suite(VerifySettings const& st)
{
    using namespace detail;
    std::vector<VerifyCheck> out;
    std::size_t const N = st.paths;
    std::size_t const M = st.inner;
    double const tol = st.tolerance;
    EstimatorOptions est{st.workers, {}};

    auto unit = IntensityModel::homogeneous(1.0, 1.0, JumpLaw({{1.0, 1.0}}));
    auto pm1 = IntensityModel::homogeneous(1.0, 1.0, JumpLaw({{1.0, 0.5}, {-1.0, 0.5}}));
    auto market_pm1 = MarketModel::unit(pm1);
    auto market_single = MarketModel::unit(unit);
    CountWindow whole{{0.0, 1.0}, kAllAssets};

    auto quadratic = count_polynomial(unit, whole, {0.0, 0.0, 1.0});
    auto linear = linear_functional(unit, whole);
    auto expo = exponential_functional(unit, whole, 1.0);
    auto quad_integrand = oracle_clark_integrand(quadratic);
    PredictableIntegrand capped{"capped_count",
                                [](PointConfiguration const& past, double, int, double) {
                                    return std::min(static_cast<double>(past.size()), 5.0);
                                },
                                {}};

    // Exact pathwise identities.
    {
        auto stream = check_stream(st.seed, "pathwise_indicator");
        TimeWindow B{0.2, 0.7};
        auto h = indicator_integrand(B);
        std::vector<double> lhs(N), rhs(N);
        parallel_for(N, st.workers, [&](std::size_t i) {
            auto mu = sample_path(unit, stream.child(std::uint64_t{i}));
            lhs[i] = skorohod_pathwise(h, mu, unit);
            rhs[i] = static_cast<double>(count(mu, B)) - unit.measure(B);
        });
        out.push_back(exact_check("pathwise_indicator", lhs, rhs, 1e-12, stream));
    }
    {
        auto stream = check_stream(st.seed, "clark_ocone_quadratic");
        std::vector<double> lhs(N), rhs(N);
        parallel_for(N, st.workers, [&](std::size_t i) {
            auto mu = sample_path(unit, stream.child(std::uint64_t{i}));
            lhs[i] = quadratic(mu) - *quadratic.oracles.mean;
            rhs[i] = skorohod_pathwise(quad_integrand, mu, unit);
        });
        out.push_back(exact_check("clark_ocone_quadratic", lhs, rhs, 1e-10, stream));
    }
    {
        auto stream = check_stream(st.seed, "clark_ocone_linear_mc");
        auto mc_only = linear;
        mc_only.oracles.clark_integrand = nullptr;
        auto rep = clark_ocone_decompose(mc_only, unit, std::max<std::size_t>(N / 4, 2), 1, stream, {st.workers, {}});
        std::vector<double> lhs(rep.f.size()), rhs(rep.f.size());
        for (std::size_t i = 0; i < rep.f.size(); ++i) {
            lhs[i] = rep.f[i] - rep.mean_f;
            rhs[i] = rep.delta[i];
        }
        out.push_back(exact_check("clark_ocone_linear_mc", lhs, rhs, 1e-10, stream));
    }
    {
        auto stream = check_stream(st.seed, "product_formula_i2");
        TimeWindow B{0.0, 0.6};
        auto g = indicator_kernel(2, B);
        std::vector<double> lhs(N), rhs(N);
        parallel_for(N, st.workers, [&](std::size_t i) {
            auto mu = sample_path(unit, stream.child(std::uint64_t{i}));
            double n = static_cast<double>(count(mu, B));
            lhs[i] = multiple_wiener_ito(g, mu, unit);
            rhs[i] = (n - unit.measure(B)) * (n - unit.measure(B)) - n;
        });
        out.push_back(exact_check("product_formula_i2", lhs, rhs, 1e-10, stream));
    }
    {
        auto stream = check_stream(st.seed, "value_process_additivity");
        auto h = asset_indicator_portfolio();
        std::array<double, 5> grid{0.1, 0.3, 0.5, 0.9, 1.0};
        std::vector<double> lhs(N), rhs(N);
        parallel_for(N, st.workers, [&](std::size_t i) {
            auto mu = sample_path(unit, stream.child(std::uint64_t{i}));
            double end = 1.0;
            lhs[i] = value_process(h, market_single, mu, grid, 0.0).back();
            rhs[i] = value_process(h, market_single, mu, std::span<double const>(&end, 1), 0.0).back();
        });
        out.push_back(exact_check("value_process_additivity", lhs, rhs, 1e-12, stream));
    }

    // Isometry, covariance, mean zero, duality.
    {
        auto ind = indicator_integrand({0.0, 1.0});
        std::vector<std::pair<std::string, PredictableIntegrand const*>> corpus{
            {"isometry_indicator", &ind}, {"isometry_capped_count", &capped}, {"isometry_quadratic_integrand", &quad_integrand}};
        for (auto const& [name, h] : corpus) {
            auto r = estimate_isometry(*h, unit, N, check_stream(st.seed, name), est);
            r.identity = name;
            out.push_back(stat_check(r, tol));
        }
    }
    {
        auto r = estimate_covariance(indicator_integrand({0.0, 0.5}), indicator_integrand({std::nextafter(0.5, 1.0), 1.0}),
                                     unit, N, check_stream(st.seed, "covariance_disjoint"), est, "covariance_disjoint");
        out.push_back(stat_check(r, tol));
    }
    {
        auto stream = check_stream(st.seed, "mean_zero_capped");
        std::vector<double> lhs(N), rhs(N, 0.0);
        parallel_for(N, st.workers, [&](std::size_t i) {
            lhs[i] = skorohod_pathwise(capped, sample_path(unit, stream.child(std::uint64_t{i})), unit);
        });
        out.push_back(stat_check(paired_report("mean_zero_capped", lhs, rhs, stream), tol));
    }
    {
        auto r = estimate_duality(expo, indicator_integrand({0.0, 1.0}), unit, N,
                                  check_stream(st.seed, "duality_exponential"), est);
        r.identity = "duality_exponential";
        out.push_back(stat_check(r, tol));
    }

    // Chaos orthogonality.
    {
        auto stream = check_stream(st.seed, "chaos");
        TimeWindow B{0.0, 0.6};
        auto g1 = indicator_kernel(1, B);
        auto g2 = indicator_kernel(2, B);
        std::vector<double> i1i2(N), i2sq(N), zero(N, 0.0), norm(N, 2.0 * unit.measure(B) * unit.measure(B));
        parallel_for(N, st.workers, [&](std::size_t i) {
            auto mu = sample_path(unit, stream.child(std::uint64_t{i}));
            double a = multiple_wiener_ito(g1, mu, unit);
            double b = multiple_wiener_ito(g2, mu, unit);
            i1i2[i] = a * b;
            i2sq[i] = b * b;
        });
        out.push_back(stat_check(paired_report("chaos_i1_i2", i1i2, zero, stream), tol));
        out.push_back(stat_check(paired_report("chaos_i2_isometry", i2sq, norm, stream), tol));
    }

    // Monte Carlo Clark integrand against its closed form.
    {
        auto stream = check_stream(st.seed, "clark_mc_exponential");
        PointConfiguration mu(1.0, {{0.15, 0, 1.0}, {0.4, 0, 1.0}, {0.8, 0, 1.0}});
        std::size_t const inner = 10 * M;
        auto f = expo.without_oracles();
        for (int k = 1; k <= 9; ++k) {
            double s = 0.1 * k;
            auto e = clark_integrand_mc(f, mu, s, 0, 1.0, unit, inner, stream.child(s));
            double exact = expo.oracles.clark_integrand(restrict_before(mu, s), Atom{s, 0, 1.0});
            auto row = single_row("clark_mc_exponential_s" + fmt_t(s), e.value, exact, e.standard_error, 0.0, inner,
                                  st.seed);
            out.push_back(stat_check(row, tol));
        }
    }

    // Martingale property and truncated representation.
    {
        std::array<double, 5> grid{0.0, 0.25, 0.5, 0.75, 1.0};
        auto rep = martingale_representation_check(quadratic, unit, grid, N, M,
                                                   check_stream(st.seed, "martingale"), {st.workers});
        for (auto const& p : rep.points) {
            out.push_back(stat_check(single_row("martingale_mean_t" + fmt_t(p.t), p.mean_m, rep.mean_f, p.se_m, 0.0, N,
                                                st.seed),
                                     tol));
            out.push_back(stat_check(single_row("martingale_representation_t" + fmt_t(p.t), p.representation_gap, 0.0,
                                                p.representation_se, 0.0, N, st.seed),
                                     tol));
        }
    }

    // Minimal-variance hedge on the +-1 market.
    auto square_pm1 = terminal_payoff(market_pm1, "square");
    {
        HedgeOptions ho;
        ho.workers = st.workers;
        ho.strategy = terminal_square_hedge(market_pm1);
        auto rep = hedge_error(square_pm1, market_pm1, N, M, check_stream(st.seed, "hedge_pm1_exact"), ho);
        out.push_back(stat_check(single_row("hedge_error_variance_exact", rep.hedge_error_var, 1.0, rep.hedge_error_se,
                                            0.0, N, st.seed),
                                 tol));
        auto py = single_row("pythagoras", rep.var_f, rep.hedge_integral_var + summarize(rep.residual).variance, 0.0,
                             0.0, N, st.seed);
        py.std_gap = rep.pythagoras_std_gap;
        out.push_back(stat_check(py, tol));
        for (auto const& p : rep.panel) {
            auto row = single_row("orthogonality_" + p.label, p.correlation, 0.0, p.correlation_se, 0.0, N, st.seed);
            out.push_back(stat_check(row, tol));
        }
        for (auto const& p : rep.panel) {
            auto row = single_row("dominance_" + p.label, rep.hedge_error_var, p.competitor_error, rep.hedge_error_se,
                                  p.competitor_se, N, st.seed);
            auto c = stat_check(row, tol);
            c.pass = row.std_gap < tol;
            c.detail = "one-sided";
            out.push_back(c);
        }
    }
    {
        std::size_t const n = std::max<std::size_t>(N / 10, 2);
        HedgeOptions ho;
        ho.workers = st.workers;
        ho.panel = false;
        auto rep = hedge_error(square_pm1, market_pm1, n, M, check_stream(st.seed, "hedge_pm1_mc"), ho);
        out.push_back(stat_check(single_row("hedge_error_variance_mc", rep.hedge_error_var, 1.0 + rep.mean_inner_noise,
                                            rep.hedge_error_se, 0.0, n, st.seed),
                                 tol));
    }

    // Perfect-hedge characterization.
    {
        std::array<double, 3> grid{0.25, 0.5, 0.75};
        std::size_t const n = std::max<std::size_t>(N / 40, 2);
        PerfectHedgeOptions po{st.workers, tol, 0.95};
        auto single = perfect_hedge_check(terminal_payoff(market_single, "square"), market_single, grid, n, M,
                                          check_stream(st.seed, "perfect_single"), po);
        VerifyCheck a;
        a.row = single_row("perfect_hedge_single", single.fraction_passing, single.threshold, 0.0, 0.0, n, st.seed);
        a.row.std_gap = 0.0;
        a.pass = single.perfect;
        a.detail = single.perfect ? "PASS" : "FAIL";
        out.push_back(a);

        auto pm = perfect_hedge_check(square_pm1, market_pm1, grid, n, M, check_stream(st.seed, "perfect_pm1"), po);
        VerifyCheck b;
        double violated = pm.points ? static_cast<double>(pm.violations) / static_cast<double>(pm.points) : 0.0;
        b.row = single_row("perfect_hedge_pm1_violations", violated, 0.5, 0.0, 0.0, n, st.seed);
        b.row.std_gap = 0.0;
        b.pass = !pm.perfect && violated > 0.5;
        b.detail = pm.perfect ? "PASS" : "FAIL";
        out.push_back(b);

        std::size_t const nh = std::max<std::size_t>(N / 10, 2);
        HedgeOptions ho;
        ho.workers = st.workers;
        ho.panel = false;
        auto rep = hedge_error(terminal_payoff(market_single, "square"), market_single, nh, M,
                               check_stream(st.seed, "hedge_single_mc"), ho);
        VerifyCheck c;
        c.row = single_row("perfect_hedge_single_error_ratio", rep.hedge_error_var, 1e-2 * rep.var_f,
                           rep.hedge_error_se, 0.0, nh, st.seed);
        c.row.std_gap = 0.0;
        c.pass = rep.hedge_error_var < 1e-2 * rep.var_f;
        out.push_back(c);
    }
    return out;
}

} // namespace jumpcalc
