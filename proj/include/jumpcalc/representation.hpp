#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "integrals.hpp"
#include "intensity.hpp"
#include "malliavin.hpp"
#include "parallel.hpp"
#include "point_measure.hpp"
#include "rng.hpp"
#include "stats.hpp"

namespace jumpcalc {

/// Stream keys separating the uses of one path stream.
namespace stream_tags {
inline constexpr std::uint64_t clark = 0x436c61726b000001ULL;
inline constexpr std::uint64_t conditional = 0x436f6e6400000002ULL;
inline constexpr std::uint64_t mean_pass = 0x4d65616e00000003ULL;
inline constexpr std::uint64_t hedge = 0x4865646765000004ULL;
inline constexpr std::uint64_t proportionality = 0x50726f7000000005ULL;
} // namespace stream_tags

/// Stream for the inner estimate at evaluation point (s, j, z) of a path.
/// Keyed by the point itself, so it does not depend on evaluation order.
[[nodiscard]] inline SeedStream point_stream(SeedStream path, std::uint64_t tag, double s, int asset, double jump = 0.0)
{
    return path.child(tag).child(s).child(std::uint64_t(static_cast<std::int64_t>(asset))).child(jump);
}

enum class IntegrandSource
{
    /// Closed form when the claim has one, inner Monte Carlo otherwise.
    automatic,
    oracle,
    monte_carlo,
};

/// The closed-form Clark integrand of f as a predictable integrand.
inline PredictableIntegrand oracle_clark_integrand(Functional const& f)
{
    if (!f.oracles.clark_integrand)
        throw std::invalid_argument("claim '" + f.label + "' has no closed-form Clark integrand");
    auto oracle = f.oracles.clark_integrand;
    return {f.label + ":clark_oracle",
            [oracle](PointConfiguration const& past, double s, int j, double z) { return oracle(past, Atom{s, j, z}); },
            f.breakpoints};
}

/// s -> E[D_(s,j,z) f | eta_{s-}] estimated by future resampling with M
/// inner samples at every evaluation point of the path whose stream is
/// `path_stream`. Each point is estimated independently.
inline EstimatedIntegrand mc_clark_integrand(Functional const& f, IntensityModel const& model, std::size_t inner,
                                             SeedStream path_stream)
{
    return {f.label + ":clark_mc",
            [&f, &model, inner, path_stream](PointConfiguration const& past, double s, int j, double z) {
                return clark_integrand_from_past(f, past, Atom{s, j, z}, model, inner,
                                                 point_stream(path_stream, stream_tags::clark, s, j, z))
                    .as_estimate();
            },
            f.breakpoints};
}

namespace detail {

/// E f(eta) over a dedicated pass of `paths` fresh paths.
inline SampleSummary mean_pass(Functional const& f, IntensityModel const& model, std::size_t paths, SeedStream stream,
                               unsigned workers)
{
    std::vector<double> v(paths);
    auto s = stream.child(stream_tags::mean_pass);
    parallel_for(paths, workers, [&](std::size_t i) { v[i] = f(sample_path(model, s.child(std::uint64_t{i}))); });
    return summarize(v);
}

struct ClaimMean
{
    double value = 0.0;
    double se = 0.0;
    bool from_oracle = false;
};

/// Oracle when present, otherwise a pass over 10 N paths.
inline ClaimMean claim_mean(Functional const& f, IntensityModel const& model, std::size_t paths, SeedStream stream,
                            unsigned workers)
{
    if (f.oracles.mean)
        return {*f.oracles.mean, 0.0, true};
    auto s = mean_pass(f, model, 10 * paths, stream, workers);
    return {s.mean, s.se(), false};
}

inline bool use_oracle(Functional const& f, IntegrandSource source)
{
    if (source == IntegrandSource::oracle && !f.oracles.clark_integrand)
        throw std::invalid_argument("claim '" + f.label + "' has no closed-form Clark integrand");
    return source == IntegrandSource::oracle
        || (source == IntegrandSource::automatic && static_cast<bool>(f.oracles.clark_integrand));
}

} // namespace detail

struct DecompositionReport
{
    std::string label;
    double mean_f = 0.0;
    double mean_f_se = 0.0;
    bool mean_from_oracle = false;
    std::vector<double> f;
    /// delta of the Monte Carlo integrand.
    std::vector<double> delta;
    /// f - E f - delta.
    std::vector<double> residual;
    /// Same residual with the closed-form integrand; empty without one.
    std::vector<double> oracle_residual;
    /// Per path: variance of delta due to inner sampling.
    std::vector<double> inner_noise;
    double var_f = 0.0;
    double var_residual = 0.0;
    double ratio = 0.0;
    double max_abs_oracle_residual = 0.0;
    std::size_t non_finite_points = 0;
    std::size_t n_paths = 0;
    std::size_t inner_samples = 0;
};

struct DecomposeOptions
{
    unsigned workers = 1;
    QuadratureOptions quadrature{};
};

/// f(eta) = E f + delta(h_f) path by path, with h_f estimated at every atom
/// and quadrature node by clark_integrand_mc.
inline DecompositionReport clark_ocone_decompose(Functional const& f, IntensityModel const& model, std::size_t paths,
                                                 std::size_t inner, SeedStream stream,
                                                 DecomposeOptions const& opts = {})
{
    if (paths < 2)
        throw std::invalid_argument("clark_ocone_decompose: at least two paths required");
    if (inner == 0)
        throw std::invalid_argument("clark_ocone_decompose: inner sample count M must be positive");
    DecompositionReport rep;
    rep.label = f.label;
    rep.n_paths = paths;
    rep.inner_samples = inner;
    auto mean = detail::claim_mean(f, model, paths, stream, opts.workers);
    rep.mean_f = mean.value;
    rep.mean_f_se = mean.se;
    rep.mean_from_oracle = mean.from_oracle;

    bool const has_oracle = static_cast<bool>(f.oracles.clark_integrand);
    std::optional<PredictableIntegrand> oracle;
    if (has_oracle)
        oracle = oracle_clark_integrand(f);
    rep.f.resize(paths);
    rep.delta.resize(paths);
    rep.residual.resize(paths);
    rep.inner_noise.resize(paths);
    if (has_oracle)
        rep.oracle_residual.resize(paths);
    std::vector<std::size_t> bad(paths, 0);
    SkorohodOptions mc_opts{kFixedGauss, false};
    SkorohodOptions exact_opts{opts.quadrature, false};

    parallel_for(paths, opts.workers, [&](std::size_t i) {
        auto path_stream = stream.child(std::uint64_t{i});
        auto mu = sample_path(model, path_stream);
        double fv = f(mu);
        EstimatedIntegrand h{f.label, [&](PointConfiguration const& past, double s, int j, double z) {
                                 auto e = clark_integrand_from_past(f, past, Atom{s, j, z}, model, inner,
                                                                    point_stream(path_stream, stream_tags::clark, s, j, z));
                                 if (e.non_finite)
                                     ++bad[i];
                                 return e.as_estimate();
                             },
                             f.breakpoints};
        Estimate d = skorohod_pathwise(h, mu, model, mc_opts);
        rep.f[i] = fv;
        rep.delta[i] = d.value;
        rep.inner_noise[i] = d.variance;
        rep.residual[i] = fv - mean.value - d.value;
        if (oracle)
            rep.oracle_residual[i] = fv - mean.value - skorohod_pathwise(*oracle, mu, model, exact_opts);
    });

    rep.var_f = summarize(rep.f).variance;
    rep.var_residual = summarize(rep.residual).variance;
    rep.ratio = rep.var_f > 0.0 ? rep.var_residual / rep.var_f : 0.0;
    for (double r : rep.oracle_residual)
        rep.max_abs_oracle_residual = std::max(rep.max_abs_oracle_residual, std::abs(r));
    for (auto b : bad)
        rep.non_finite_points += b;
    return rep;
}

/// E[f(eta) | eta_t = mu_t] as the mean of f(mu_t + nu_i) over M futures
/// nu_i ~ Pi^t (sample i on stream.child(i)). Exact at t = horizon.
[[nodiscard]] inline ClarkEstimate conditional_expectation_mc(Functional const& f, PointConfiguration const& mu,
                                                              double t, IntensityModel const& model,
                                                              std::size_t inner, SeedStream stream)
{
    if (inner == 0)
        throw std::invalid_argument("conditional_expectation_mc: inner sample count M must be positive");
    double const horizon = model.horizon();
    if (!(t >= 0.0) || t > horizon)
        throw std::out_of_range("conditional_expectation_mc: t outside [0, horizon]");
    auto known = mu.atoms().first(mu.count_upto(t));
    if (t == horizon) {
        ClarkEstimate e;
        e.inner_samples = inner;
        e.value = f(PointConfiguration::from_sorted(horizon, {known.begin(), known.end()}));
        if (!std::isfinite(e.value)) {
            e.value = 0.0;
            e.non_finite = true;
        }
        return e;
    }
    detail::RunningMean acc;
    std::vector<Atom> future;
    PointConfiguration scratch;
    for (std::size_t i = 0; i < inner; ++i) {
        future.clear();
        sample_future_into(model, t, stream.child(std::uint64_t{i}), future);
        ConfigurationBuilder::compose(scratch, known, std::nullopt, future, horizon);
        acc.add(f(scratch));
    }
    return acc.result(inner);
}

struct MartingalePoint
{
    double t = 0.0;
    /// Mean over paths of M_t, its SE, and (mean - E f) / SE.
    double mean_m = 0.0;
    double se_m = 0.0;
    double mean_std_gap = 0.0;
    /// Mean over paths of M_t - E f - delta(1_[0,t] h), its SE and standardized gap.
    double representation_gap = 0.0;
    double representation_se = 0.0;
    double representation_std_gap = 0.0;
};

struct MartingaleReport
{
    std::string label;
    double mean_f = 0.0;
    double mean_f_se = 0.0;
    bool integrand_from_oracle = false;
    std::vector<MartingalePoint> points;
    std::size_t n_paths = 0;
    std::size_t inner_samples = 0;
};

struct MartingaleOptions
{
    unsigned workers = 1;
    IntegrandSource source = IntegrandSource::automatic;
    QuadratureOptions quadrature{};
};

/// Compares M_t - E f with delta(1_[0,t] h_f) on the ascending t-grid, and
/// the mean of M_t with E f.
inline MartingaleReport martingale_representation_check(Functional const& f, IntensityModel const& model,
                                                        std::span<double const> grid, std::size_t paths,
                                                        std::size_t inner, SeedStream stream,
                                                        MartingaleOptions const& opts = {})
{
    if (paths < 2)
        throw std::invalid_argument("martingale_representation_check: at least two paths required");
    if (inner == 0)
        throw std::invalid_argument("martingale_representation_check: inner sample count M must be positive");
    MartingaleReport rep;
    rep.label = f.label;
    rep.n_paths = paths;
    rep.inner_samples = inner;
    auto mean = detail::claim_mean(f, model, paths, stream, opts.workers);
    rep.mean_f = mean.value;
    rep.mean_f_se = mean.se;
    bool const oracle = detail::use_oracle(f, opts.source);
    rep.integrand_from_oracle = oracle;

    std::size_t const G = grid.size();
    std::vector<double> m(paths * G), gap(paths * G);
    parallel_for(paths, opts.workers, [&](std::size_t i) {
        auto path_stream = stream.child(std::uint64_t{i});
        auto mu = sample_path(model, path_stream);
        std::vector<double> delta(G);
        if (oracle) {
            auto d = skorohod_on_grid(oracle_clark_integrand(f), mu, model, grid, {opts.quadrature, false});
            delta.assign(d.begin(), d.end());
        } else {
            auto d = skorohod_on_grid(mc_clark_integrand(f, model, inner, path_stream), mu, model, grid,
                                      {kFixedGauss, false});
            for (std::size_t g = 0; g < G; ++g)
                delta[g] = d[g].value;
        }
        for (std::size_t g = 0; g < G; ++g) {
            auto c = conditional_expectation_mc(f, mu, grid[g], model, inner,
                                                point_stream(path_stream, stream_tags::conditional, grid[g], 0));
            m[i * G + g] = c.value;
            gap[i * G + g] = c.value - mean.value - delta[g];
        }
    });

    std::vector<double> col_m(paths), col_gap(paths);
    for (std::size_t g = 0; g < G; ++g) {
        for (std::size_t i = 0; i < paths; ++i) {
            col_m[i] = m[i * G + g];
            col_gap[i] = gap[i * G + g];
        }
        auto sm = summarize(col_m);
        auto sg = summarize(col_gap);
        MartingalePoint p;
        p.t = grid[g];
        p.mean_m = sm.mean;
        p.se_m = std::sqrt(sm.se() * sm.se() + mean.se * mean.se);
        p.mean_std_gap = standardized(sm.mean - mean.value, p.se_m);
        p.representation_gap = sg.mean;
        // Floor for the t = horizon point, where the gap is pure roundoff.
        double const roundoff = 1e-12 * (1.0 + std::abs(mean.value));
        p.representation_se = std::max(std::sqrt(sg.se() * sg.se() + mean.se * mean.se), roundoff);
        p.representation_std_gap = standardized(sg.mean, p.representation_se);
        rep.points.push_back(p);
    }
    return rep;
}

} // namespace jumpcalc
