#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "intensity.hpp"
#include "malliavin.hpp"
#include "parallel.hpp"
#include "point_measure.hpp"
#include "quadrature.hpp"
#include "rng.hpp"
#include "stats.hpp"

namespace jumpcalc {

/// h(mu, s, j, z) that depends on mu only through mu_{s-}. The evaluator is
/// always handed the already restricted configuration `past`, so reading
/// the future is impossible by construction.
template <class Value = double>
struct BasicPredictableIntegrand
{
    std::string label;
    std::function<Value(PointConfiguration const& past, double s, int asset, double jump)> evaluate;
    /// Deterministic times where s -> h may be discontinuous.
    std::vector<double> breakpoints;

    Value operator()(PointConfiguration const& past, double s, int asset, double jump) const
    {
        return evaluate(past, s, asset, jump);
    }
};

using PredictableIntegrand = BasicPredictableIntegrand<double>;
using EstimatedIntegrand = BasicPredictableIntegrand<Estimate>;

/// h(mu, s, j, z) for a full configuration mu.
template <class Value>
Value evaluate_at(BasicPredictableIntegrand<Value> const& h, PointConfiguration const& mu, double s, int asset,
                  double jump)
{
    return h(restrict_before(mu, s), s, asset, jump);
}

/// 1{s in window, asset matches}.
inline PredictableIntegrand indicator_integrand(TimeWindow window, int asset = kAllAssets)
{
    return {"indicator",
            [=](PointConfiguration const&, double s, int j, double) {
                return window.contains(s) && (asset == kAllAssets || asset == j) ? 1.0 : 0.0;
            },
            {window.lo, window.hi}};
}

inline PredictableIntegrand zero_integrand()
{
    return {"zero", [](PointConfiguration const&, double, int, double) { return 0.0; }, {}};
}

struct SkorohodOptions
{
    QuadratureOptions quadrature{};
    /// Also evaluates h(mu - delta_a, a) through remove_atom and checks it
    /// against h(mu_{a-}, a).
    bool check_removal = false;
};

/// Shared engine of every pathwise integral against the compensated
/// process. Returns, for each t of the ascending `grid`,
///   sum_{atoms a, a.time <= t} jump_term(mu_{a-}, a) - int_0^t drift(mu_{s-}, s) ds,
/// where drift is the compensator density. Grid points are quadrature
/// breakpoints, so the value at t' minus the value at t is exactly the
/// integral over (t, t'].
template <class Value, class JumpTerm, class Drift>
std::vector<Value> pathwise_on_grid(IntensityModel const& model, PointConfiguration const& mu, JumpTerm&& jump_term,
                                    Drift&& drift, std::span<double const> breakpoints,
                                    std::span<double const> grid, QuadratureOptions const& quad)
{
    std::vector<Value> out;
    out.reserve(grid.size());
    if (grid.empty())
        return out;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        if (!(grid[g] >= 0.0) || grid[g] > model.horizon())
            throw std::out_of_range("integration grid point outside [0, horizon]");
        if (g > 0 && grid[g] < grid[g - 1])
            throw std::invalid_argument("integration grid must be ascending");
    }
    std::vector<double> extra(breakpoints.begin(), breakpoints.end());
    extra.insert(extra.end(), grid.begin(), grid.end());
    auto pts = time_pieces(model, mu, extra, 0.0, grid.back());

    auto atoms = mu.atoms();
    std::size_t next_atom = 0;
    std::size_t next_piece = 0;
    Value acc{};
    for (double t : grid) {
        for (; next_atom < atoms.size() && atoms[next_atom].time <= t; ++next_atom) {
            auto const& a = atoms[next_atom];
            acc += jump_term(mu.prefix(mu.count_before(a.time)), a);
        }
        for (; next_piece + 1 < pts.size() && pts[next_piece + 1] <= t; ++next_piece) {
            double lo = pts[next_piece];
            double hi = pts[next_piece + 1];
            PointConfiguration past = mu.prefix(mu.count_upto(lo));
            acc -= integrate_piece<Value>([&](double s) -> Value { return drift(past, s); }, lo, hi, quad);
        }
        out.push_back(acc);
    }
    return out;
}

/// delta(1_{[0,t]} h) for every t in the ascending grid.
template <class Value>
std::vector<Value> skorohod_on_grid(BasicPredictableIntegrand<Value> const& h, PointConfiguration const& mu,
                                    IntensityModel const& model, std::span<double const> grid,
                                    SkorohodOptions const& opts = {})
{
    auto jump_term = [&](PointConfiguration const& past, Atom const& a) -> Value {
        Value v = h(past, a.time, a.asset, a.jump);
        if (opts.check_removal) {
            auto it = std::find(mu.atoms().begin(), mu.atoms().end(), a);
            auto removed = remove_atom(mu, static_cast<std::size_t>(it - mu.atoms().begin())).first;
            Value w = h(restrict_before(removed, a.time), a.time, a.asset, a.jump);
            if (value_of(w) != value_of(v))
                throw std::logic_error("integrand '" + h.label + "' is not predictable at t="
                                       + std::to_string(a.time));
        }
        return v;
    };
    return pathwise_on_grid<Value>(model, mu, jump_term, compensator_density<Value>(model, h), h.breakpoints, grid,
                                   opts.quadrature);
}

/// Kabanov-Skorohod integral of a predictable h along the path mu:
///   delta(h) = sum_{a in mu} h(mu - delta_a, a) - int h(mu, y) lambda(dy),
/// where h(mu - delta_a, a) = h(mu_{a-}, a) by predictability.
template <class Value>
Value skorohod_pathwise(BasicPredictableIntegrand<Value> const& h, PointConfiguration const& mu,
                        IntensityModel const& model, SkorohodOptions const& opts = {})
{
    double const end = model.horizon();
    return skorohod_on_grid(h, mu, model, std::span<double const>(&end, 1), opts).front();
}

// ---------------------------------------------------------------------------
// Multiple Wiener-Ito integrals

/// Symmetric g(y_1, ..., y_n) in L^2(lambda^n), n <= 3.
struct SymmetricKernel
{
    int order = 1;
    std::function<double(std::span<Atom const>)> evaluate;
    std::vector<double> breakpoints;
};

/// prod_i c(y_i) with c = 1_{window x asset}.
inline SymmetricKernel indicator_kernel(int order, TimeWindow window, int asset = kAllAssets)
{
    return {order,
            [=](std::span<Atom const> ys) {
                for (auto const& y : ys)
                    if (!window.contains(y.time) || (asset != kAllAssets && asset != y.asset))
                        return 0.0;
                return 1.0;
            },
            {window.lo, window.hi}};
}

inline constexpr int kMaxWienerItoOrder = 3;

namespace detail {

/// Ordered iterated integral J_k over {y_1 < ... < y_k < end} of
/// g(y_1, ..., y_k, bound...) against the compensated process.
inline double ordered_integral(SymmetricKernel const& g, std::vector<Atom> const& bound, int k,
                               PointConfiguration const& mu, IntensityModel const& model, double end,
                               QuadratureOptions const& quad)
{
    if (k == 0)
        return g.evaluate(bound);
    PredictableIntegrand inner{"wiener_ito_level",
                               [&](PointConfiguration const& past, double s, int j, double z) {
                                   std::vector<Atom> b;
                                   b.reserve(bound.size() + 1);
                                   b.push_back({s, j, z});
                                   b.insert(b.end(), bound.begin(), bound.end());
                                   return ordered_integral(g, b, k - 1, past, model, s, quad);
                               },
                               g.breakpoints};
    SkorohodOptions opts{quad, false};
    return skorohod_on_grid(inner, mu, model, std::span<double const>(&end, 1), opts).front();
}

} // namespace detail

/// I_n(g) = n! * delta(y -> J_{n-1}^{<y}(g(., y))) evaluated pathwise,
/// where J_k^{<t} is the iterated integral over the simplex below t.
inline double multiple_wiener_ito(SymmetricKernel const& g, PointConfiguration const& mu, IntensityModel const& model,
                                  QuadratureOptions const& quad = {})
{
    if (g.order < 0 || g.order > kMaxWienerItoOrder)
        throw std::invalid_argument("multiple_wiener_ito: order " + std::to_string(g.order) + " unsupported (max "
                                    + std::to_string(kMaxWienerItoOrder) + ")");
    double factorial = 1.0;
    for (int k = 2; k <= g.order; ++k)
        factorial *= k;
    return factorial * detail::ordered_integral(g, {}, g.order, mu, model, model.horizon(), quad);
}

// ---------------------------------------------------------------------------
// Statistical identity estimators

/// One row of the identity report: `identity,lhs,rhs,se_lhs,se_rhs,std_gap,n_paths,seed`.
/// std_gap is (lhs - rhs) divided by the standard error of the per-path
/// difference, which accounts for lhs and rhs being computed on the same paths.
struct IdentityReport
{
    std::string identity;
    double lhs = 0.0;
    double rhs = 0.0;
    double se_lhs = 0.0;
    double se_rhs = 0.0;
    double se_gap = 0.0;
    double std_gap = 0.0;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
};

struct EstimatorOptions
{
    unsigned workers = 1;
    QuadratureOptions quadrature{};
};

namespace detail {

inline IdentityReport paired_report(std::string identity, std::vector<double> const& lhs,
                                    std::vector<double> const& rhs, SeedStream stream)
{
    std::vector<double> diff(lhs.size());
    for (std::size_t i = 0; i < lhs.size(); ++i)
        diff[i] = lhs[i] - rhs[i];
    auto l = summarize(lhs);
    auto r = summarize(rhs);
    auto d = summarize(diff);
    IdentityReport rep;
    rep.identity = std::move(identity);
    rep.lhs = l.mean;
    rep.rhs = r.mean;
    rep.se_lhs = l.se();
    rep.se_rhs = r.se();
    rep.se_gap = d.se();
    rep.std_gap = standardized(l.mean - r.mean, d.se());
    rep.n_paths = lhs.size();
    rep.seed = stream.seed;
    return rep;
}

} // namespace detail

/// E delta(h) delta(h2) against E int h h2 dlambda over N paths (path i on
/// stream.child(i)).
inline IdentityReport estimate_covariance(PredictableIntegrand const& h, PredictableIntegrand const& h2,
                                          IntensityModel const& model, std::size_t paths, SeedStream stream,
                                          EstimatorOptions const& opts = {}, std::string identity = "covariance")
{
    if (paths < 2)
        throw std::invalid_argument("estimator needs at least two paths");
    PredictableIntegrand product{h.label + "*" + h2.label,
                                 [&](PointConfiguration const& past, double s, int j, double z) {
                                     return h(past, s, j, z) * h2(past, s, j, z);
                                 },
                                 h.breakpoints};
    product.breakpoints.insert(product.breakpoints.end(), h2.breakpoints.begin(), h2.breakpoints.end());
    SkorohodOptions sk{opts.quadrature, false};
    std::vector<double> lhs(paths), rhs(paths);
    parallel_for(paths, opts.workers, [&](std::size_t i) {
        auto mu = sample_path(model, stream.child(std::uint64_t{i}));
        double d1 = skorohod_pathwise(h, mu, model, sk);
        double d2 = &h == &h2 ? d1 : skorohod_pathwise(h2, mu, model, sk);
        lhs[i] = d1 * d2;
        rhs[i] = compensator_integral(model, product, mu, product.breakpoints, opts.quadrature);
    });
    return detail::paired_report(std::move(identity), lhs, rhs, stream);
}

/// E delta(h)^2 against E int h^2 dlambda.
inline IdentityReport estimate_isometry(PredictableIntegrand const& h, IntensityModel const& model, std::size_t paths,
                                        SeedStream stream, EstimatorOptions const& opts = {})
{
    return estimate_covariance(h, h, model, paths, stream, opts, "isometry");
}

/// E int D_y g(eta) h(eta, y) lambda(dy) against E g(eta) delta(h).
/// D_y g(mu) is deterministic given mu and is computed exactly (closed form
/// or two evaluations), so no inner sampling is involved.
inline IdentityReport estimate_duality(Functional const& g, PredictableIntegrand const& h, IntensityModel const& model,
                                       std::size_t paths, SeedStream stream, EstimatorOptions const& opts = {})
{
    if (paths < 2)
        throw std::invalid_argument("estimator needs at least two paths");
    std::vector<double> breaks = g.breakpoints;
    breaks.insert(breaks.end(), h.breakpoints.begin(), h.breakpoints.end());
    SkorohodOptions sk{opts.quadrature, false};
    std::vector<double> lhs(paths), rhs(paths);
    parallel_for(paths, opts.workers, [&](std::size_t i) {
        auto mu = sample_path(model, stream.child(std::uint64_t{i}));
        // Not predictable in y: D_y g reads the whole path, h reads the past.
        auto integrand = [&](PointConfiguration const& past, double s, int j, double z) {
            double hv = h(past, s, j, z);
            return hv == 0.0 ? 0.0 : exact_difference(g, mu, Atom{s, j, z}) * hv;
        };
        lhs[i] = compensator_integral(model, integrand, mu, breaks, opts.quadrature);
        rhs[i] = g(mu) * skorohod_pathwise(h, mu, model, sk);
    });
    return detail::paired_report("duality", lhs, rhs, stream);
}

} // namespace jumpcalc
