#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "integrals.hpp"
#include "intensity.hpp"
#include "malliavin.hpp"
#include "market.hpp"
#include "parallel.hpp"
#include "representation.hpp"
#include "rng.hpp"
#include "stats.hpp"

namespace jumpcalc {

/// J(mu, s, j, .): the law on jump sizes with weights proportional to
/// kappa(mu, s, j, z_k)^2 nu_j({z_k}).
struct KernelLaw
{
    std::vector<JumpAtom> atoms;
    /// The normalizer vanished; atoms then hold the normalized nu_j.
    bool degenerate = false;
};

[[nodiscard]] inline KernelLaw kernel_disintegration(MarketModel const& market, PointConfiguration const& mu, double s,
                                                     int asset)
{
    auto past = restrict_before(mu, s);
    auto const& law = market.intensity().asset(asset).jumps;
    KernelLaw k;
    double total = 0.0;
    for (auto const& z : law.atoms()) {
        double kap = market.kappa(past, s, asset, z.size);
        k.atoms.push_back({z.size, kap * kap * z.weight});
        total += kap * kap * z.weight;
    }
    if (total > 0.0) {
        for (auto& a : k.atoms)
            a.weight /= total;
    } else {
        k.degenerate = true;
        for (std::size_t i = 0; i < k.atoms.size(); ++i)
            k.atoms[i].weight = law.atoms()[i].weight / law.total_mass();
    }
    return k;
}

/// Minimal-variance hedge h_f(mu, s, j) from the strict past.
///
/// Separable kappa = kappa_j z:
///   h_f = kappa_j^+ (int z^2 nu_j)^{-1} sum_k w_k z_k E[D_(s,j,z_k) f | past].
/// General kappa:
///   h_f = (sum_k w_k kappa_k^2)^+ sum_k w_k kappa_k E[D_(s,j,z_k) f | past].
/// The conditional expectations share their inner futures, and the standard
/// error is that of the combined per-sample value.
[[nodiscard]] inline ClarkEstimate hedge_integrand_from_past(Functional const& f, MarketModel const& market,
                                                             PointConfiguration const& past, double s, int asset,
                                                             std::size_t inner, SeedStream stream)
{
    auto const& model = market.intensity();
    auto const& law = model.asset(asset).jumps;
    auto const atoms = law.atoms();
    std::vector<double> zs(atoms.size());
    std::vector<double> coef(atoms.size());
    double scale = 0.0;
    if (market.is_separable()) {
        double kj = market.factor(past, s, asset);
        scale = gen_inverse(kj) / law.moment(2);
        for (std::size_t k = 0; k < atoms.size(); ++k)
            coef[k] = atoms[k].weight * atoms[k].size;
    } else {
        double denom = 0.0;
        for (std::size_t k = 0; k < atoms.size(); ++k) {
            double kap = market.kappa(past, s, asset, atoms[k].size);
            coef[k] = atoms[k].weight * kap;
            denom += atoms[k].weight * kap * kap;
        }
        scale = gen_inverse(denom);
    }
    for (std::size_t k = 0; k < atoms.size(); ++k)
        zs[k] = atoms[k].size;
    if (scale == 0.0) {
        ClarkEstimate e;
        e.inner_samples = inner;
        return e;
    }

    if (f.oracles.clark_integrand) {
        double v = 0.0;
        for (std::size_t k = 0; k < atoms.size(); ++k)
            v += coef[k] * f.oracles.clark_integrand(past, Atom{s, asset, zs[k]});
        ClarkEstimate e;
        e.value = scale * v;
        return e;
    }

    detail::RunningMean acc;
    for_each_inner_difference(f, past, s, asset, zs, model, inner, stream, [&](std::span<double const> d) {
        double v = 0.0;
        for (std::size_t k = 0; k < d.size(); ++k)
            v += coef[k] * d[k];
        acc.add(scale * v);
    });
    return acc.result(inner);
}

[[nodiscard]] inline ClarkEstimate hedge_integrand(Functional const& f, MarketModel const& market,
                                                   PointConfiguration const& mu, double s, int asset,
                                                   std::size_t inner, SeedStream stream)
{
    return hedge_integrand_from_past(f, market, restrict_before(mu, s), s, asset, inner, stream);
}

/// The minimal-variance hedge of f as a portfolio for the path whose
/// stream is `path_stream`; every evaluation point gets its own inner
/// stream.
inline EstimatedPortfolio hedge_portfolio(Functional const& f, MarketModel const& market, std::size_t inner,
                                          SeedStream path_stream)
{
    EstimatedPortfolio h;
    h.label = "h_f";
    h.breakpoints = f.breakpoints;
    h.evaluate = [&f, &market, inner, path_stream](PointConfiguration const& past, double s, int j) {
        return hedge_integrand_from_past(f, market, past, s, j, inner,
                                         point_stream(path_stream, stream_tags::hedge, s, j))
            .as_estimate();
    };
    return h;
}

/// The fixed set of eight test strategies used for orthogonality checks:
/// window indicators for the first and last asset, a buy-and-hold of every
/// asset, and three state-dependent strategies.
inline std::vector<Portfolio> orthogonality_panel(MarketModel const& market)
{
    double const T = market.intensity().horizon();
    int const last = market.intensity().asset_count() - 1;
    auto shared = std::make_shared<MarketModel const>(market);
    std::vector<Portfolio> panel;
    auto window = [&](std::string label, int asset, TimeWindow w) {
        auto p = asset_indicator_portfolio(asset, w);
        p.label = std::move(label);
        panel.push_back(std::move(p));
    };
    window("first_asset_early", 0, {0.0, 0.5 * T});
    window("first_asset_late", 0, {std::nextafter(0.5 * T, T), T});
    window("last_asset_early", last, {0.0, 0.5 * T});
    window("last_asset_late", last, {std::nextafter(0.5 * T, T), T});
    window("all_assets", kAllAssets, {0.0, T});
    panel.push_back({"zeta_past",
                     [shared](PointConfiguration const& past, double s, int) {
                         return zeta(*shared, past.prefix(past.count_before(s)), s);
                     },
                     {}});
    panel.push_back({"zeta_past_late",
                     [shared, T](PointConfiguration const& past, double s, int) {
                         return s > 0.5 * T ? zeta(*shared, past.prefix(past.count_before(s)), s) : 0.0;
                     },
                     {0.5 * T}});
    panel.push_back({"capped_count",
                     [](PointConfiguration const& past, double s, int) {
                         return std::min(static_cast<double>(past.count_before(s)), 5.0);
                     },
                     {}});
    return panel;
}

struct PanelResult
{
    std::string label;
    /// corr(X', int h dzeta)
    double correlation = 0.0;
    double correlation_se = 0.0;
    /// E (f - E f - int h dzeta)^2 using the panel strategy as the hedge.
    double competitor_error = 0.0;
    double competitor_se = 0.0;
};

struct HedgeReport
{
    std::string label;
    double mean_f = 0.0;
    double mean_f_se = 0.0;
    bool mean_from_oracle = false;
    std::vector<double> f;
    std::vector<double> hedge_integral;
    std::vector<double> residual;
    /// Per path: variance of the hedge integral due to inner sampling.
    std::vector<double> inner_noise;

    double var_f = 0.0;
    /// E X'^2 with X' = f - E f - int h_f dzeta.
    double hedge_error_var = 0.0;
    double hedge_error_se = 0.0;
    double hedge_integral_var = 0.0;
    double mean_inner_noise = 0.0;
    /// (var_f - hedge_integral_var - var(X')) / se.
    double pythagoras_std_gap = 0.0;
    /// Empirical minimizer c of E (f - c - int h_f dzeta)^2.
    double optimal_intercept = 0.0;
    std::vector<PanelResult> panel;
    std::size_t untradeable_points = 0;
    std::size_t n_paths = 0;
    std::size_t inner_samples = 0;
};

struct HedgeOptions
{
    unsigned workers = 1;
    bool panel = true;
    /// Hedge with this strategy instead of the estimated h_f.
    std::optional<Portfolio> strategy;
    QuadratureOptions quadrature{};
};

/// Runs the minimal-variance hedge of f over N paths and reports the
/// hedging error, its orthogonality to the test panel and the variance
/// split. E f comes from the claim's closed form when present, otherwise
/// from a separate pass over 10 N paths.
inline HedgeReport hedge_error(Functional const& f, MarketModel const& market, std::size_t paths, std::size_t inner,
                               SeedStream stream, HedgeOptions const& opts = {})
{
    if (paths < 2)
        throw std::invalid_argument("hedge_error: at least two paths required");
    if (inner == 0 && !opts.strategy)
        throw std::invalid_argument("hedge_error: inner sample count M must be positive");
    auto const& model = market.intensity();
    HedgeReport rep;
    rep.label = f.label;
    rep.n_paths = paths;
    rep.inner_samples = inner;
    auto mean = detail::claim_mean(f, model, paths, stream, opts.workers);
    rep.mean_f = mean.value;
    rep.mean_f_se = mean.se;
    rep.mean_from_oracle = mean.from_oracle;

    auto panel = opts.panel ? orthogonality_panel(market) : std::vector<Portfolio>{};
    rep.f.resize(paths);
    rep.hedge_integral.resize(paths);
    rep.residual.resize(paths);
    rep.inner_noise.resize(paths);
    std::vector<std::vector<double>> panel_integrals(panel.size(), std::vector<double>(paths));
    std::vector<std::size_t> untradeable(paths, 0);
    QuadratureOptions quad = opts.quadrature;
    if (!opts.strategy)
        quad.rule = QuadratureOptions::Rule::fixed_gauss;

    parallel_for(paths, opts.workers, [&](std::size_t i) {
        auto path_stream = stream.child(std::uint64_t{i});
        auto mu = sample_path(model, path_stream);
        double fv = f(mu);
        Estimate integral;
        if (opts.strategy) {
            integral.value = integral_against_zeta(*opts.strategy, mu, market, quad);
        } else {
            auto h = hedge_portfolio(f, market, inner, path_stream);
            auto inner_eval = h.evaluate;
            h.evaluate = [&, inner_eval](PointConfiguration const& past, double s, int j) {
                if (market.is_separable() && market.factor(past, s, j) == 0.0)
                    ++untradeable[i];
                return inner_eval(past, s, j);
            };
            integral = integral_against_zeta(h, mu, market, quad);
        }
        rep.f[i] = fv;
        rep.hedge_integral[i] = integral.value;
        rep.inner_noise[i] = integral.variance;
        rep.residual[i] = fv - rep.mean_f - integral.value;
        for (std::size_t p = 0; p < panel.size(); ++p)
            panel_integrals[p][i] = integral_against_zeta(panel[p], mu, market, opts.quadrature);
    });

    auto sf = summarize(rep.f);
    rep.var_f = sf.variance;
    auto sq = summarize_squares(rep.residual);
    rep.hedge_error_var = sq.mean;
    rep.hedge_error_se = sq.se();
    auto sh = summarize(rep.hedge_integral);
    rep.hedge_integral_var = sh.variance;
    rep.mean_inner_noise = summarize(rep.inner_noise).mean;
    std::vector<double> intercept(paths);
    for (std::size_t i = 0; i < paths; ++i)
        intercept[i] = rep.f[i] - rep.hedge_integral[i];
    rep.optimal_intercept = summarize(intercept).mean;
    for (auto u : untradeable)
        rep.untradeable_points += u;

    // Var f - Var(int h dzeta) - Var X' = 2 Cov(int h dzeta, X'), tested per path.
    std::vector<double> cross(paths);
    auto sr = summarize(rep.residual);
    for (std::size_t i = 0; i < paths; ++i)
        cross[i] = 2.0 * (rep.hedge_integral[i] - sh.mean) * (rep.residual[i] - sr.mean);
    auto sc = summarize(cross);
    rep.pythagoras_std_gap = standardized(sc.mean, sc.se());

    for (std::size_t p = 0; p < panel.size(); ++p) {
        PanelResult pr;
        pr.label = panel[p].label;
        pr.correlation = correlation(rep.residual, panel_integrals[p]);
        pr.correlation_se = correlation_se(rep.residual, panel_integrals[p]);
        std::vector<double> err(paths);
        for (std::size_t i = 0; i < paths; ++i)
            err[i] = rep.f[i] - rep.mean_f - panel_integrals[p][i];
        auto se = summarize_squares(err);
        pr.competitor_error = se.mean;
        pr.competitor_se = se.se();
        rep.panel.push_back(std::move(pr));
    }
    return rep;
}

struct PerfectHedgeReport
{
    bool perfect = false;
    double fraction_passing = 0.0;
    std::size_t points = 0;
    std::size_t violations = 0;
    /// Minimum passing fraction for a PASS verdict.
    double threshold = 0.95;
};

struct PerfectHedgeOptions
{
    unsigned workers = 1;
    double tolerance = 3.0;
    double threshold = 0.95;
};

/// Tests E[D_(s,j,z) f | eta_{s-}] = kappa(s, j, z) h(s, j) at sampled
/// (path, s, j): estimates the conditional expectation at every atom z_k of
/// nu_j and checks each residual e_k - h_f kappa_k against tolerance * its
/// standard error. The verdict is PASS when at least `threshold` of the
/// sampled points pass.
inline PerfectHedgeReport perfect_hedge_check(Functional const& f, MarketModel const& market,
                                              std::span<double const> s_grid, std::size_t paths, std::size_t inner,
                                              SeedStream stream, PerfectHedgeOptions const& opts = {})
{
    if (inner == 0)
        throw std::invalid_argument("perfect_hedge_check: inner sample count M must be positive");
    auto const& model = market.intensity();
    int const d = model.asset_count();
    std::size_t const per_path = s_grid.size() * static_cast<std::size_t>(d);
    std::vector<char> pass(paths * per_path, 0);

    parallel_for(paths, opts.workers, [&](std::size_t i) {
        auto path_stream = stream.child(std::uint64_t{i});
        auto mu = sample_path(model, path_stream);
        for (std::size_t g = 0; g < s_grid.size(); ++g)
            for (int j = 0; j < d; ++j) {
                double s = s_grid[g];
                auto past = restrict_before(mu, s);
                auto atoms = model.asset(j).jumps.atoms();
                std::size_t K = atoms.size();
                std::vector<double> zs(K), kap(K), w(K);
                double denom = 0.0;
                for (std::size_t k = 0; k < K; ++k) {
                    zs[k] = atoms[k].size;
                    w[k] = atoms[k].weight;
                    kap[k] = market.kappa(past, s, j, zs[k]);
                    denom += w[k] * kap[k] * kap[k];
                }
                double inv = gen_inverse(denom);
                std::vector<detail::RunningMean> resid(K), level(K);
                for_each_inner_difference(
                    f, past, s, j, zs, model, inner, point_stream(path_stream, stream_tags::proportionality, s, j),
                    [&](std::span<double const> diff) {
                        double ratio = 0.0;
                        for (std::size_t k = 0; k < K; ++k)
                            ratio += w[k] * kap[k] * diff[k];
                        ratio *= inv;
                        for (std::size_t k = 0; k < K; ++k) {
                            resid[k].add(diff[k] - ratio * kap[k]);
                            level[k].add(diff[k]);
                        }
                    });
                bool ok = true;
                for (std::size_t k = 0; k < K; ++k) {
                    auto r = resid[k].result(inner);
                    auto l = level[k].result(inner);
                    double slack = 1e-12 * (1.0 + std::abs(l.value));
                    if (r.non_finite || std::abs(r.value) > opts.tolerance * r.standard_error + slack)
                        ok = false;
                }
                pass[i * per_path + g * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)] = ok ? 1 : 0;
            }
    });

    PerfectHedgeReport rep;
    rep.threshold = opts.threshold;
    rep.points = pass.size();
    for (char p : pass)
        if (!p)
            ++rep.violations;
    rep.fraction_passing = rep.points ? 1.0 - static_cast<double>(rep.violations) / static_cast<double>(rep.points) : 1.0;
    rep.perfect = rep.fraction_passing >= opts.threshold;
    return rep;
}

/// Closed-form minimal-variance hedge of zeta_T^2 (all assets) in a market
/// with constant separable kappa_j z:
///   h(s, j) = 2 zeta_{s-} + kappa_j int z^3 nu_j / int z^2 nu_j.
inline Portfolio terminal_square_hedge(MarketModel const& market)
{
    if (!market.deterministic())
        throw std::invalid_argument("terminal_square_hedge: kappa must be constant and separable");
    auto shared = std::make_shared<MarketModel const>(market);
    std::vector<double> shift;
    PointConfiguration none;
    for (int j = 0; j < market.intensity().asset_count(); ++j) {
        auto const& law = market.intensity().asset(j).jumps;
        shift.push_back(market.factor(none, 0.0, j) * law.moment(3) / law.moment(2));
    }
    return {"terminal_square_hedge",
            [shared, shift](PointConfiguration const& past, double s, int j) {
                return 2.0 * zeta(*shared, past.prefix(past.count_before(s)), s) + shift[static_cast<std::size_t>(j)];
            },
            {}};
}

/// V_t = V0 + int_{[0,t]} h dzeta on the ascending grid.
inline std::vector<double> value_process(Portfolio const& h, MarketModel const& market, PointConfiguration const& mu,
                                         std::span<double const> grid, double initial_value,
                                         QuadratureOptions const& quad = {})
{
    auto v = integral_against_zeta_on_grid(h, mu, market, grid, quad);
    for (auto& x : v)
        x += initial_value;
    return v;
}

} // namespace jumpcalc
