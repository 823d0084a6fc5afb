#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "intensity.hpp"
#include "malliavin.hpp"
#include "point_measure.hpp"

namespace jumpcalc {

/// A window B = [lo, hi] x asset-selector on which counts mu(B) are taken.
struct CountWindow
{
    TimeWindow time{0.0, 1.0};
    int asset = kAllAssets;

    [[nodiscard]] bool contains(Atom const& a) const noexcept
    {
        return time.contains(a.time) && (asset == kAllAssets || asset == a.asset);
    }
    [[nodiscard]] std::size_t count(PointConfiguration const& mu) const { return jumpcalc::count(mu, time, asset); }
    /// lambda(B intersected with (after, horizon]).
    [[nodiscard]] double measure_after(IntensityModel const& model, double after) const
    {
        return model.measure({std::max(time.lo, after), time.hi}, asset);
    }
};

/// Monomial coef * prod_i x_i^{exponents[i]}.
struct PolynomialTerm
{
    double coef = 1.0;
    std::vector<int> exponents;
};

namespace detail {

/// Stirling numbers of the second kind S(m, k), 0 <= k <= m <= max_m.
inline std::vector<std::vector<double>> stirling2(int max_m)
{
    std::vector<std::vector<double>> s(static_cast<std::size_t>(max_m + 1),
                                       std::vector<double>(static_cast<std::size_t>(max_m + 1), 0.0));
    s[0][0] = 1.0;
    for (int m = 1; m <= max_m; ++m)
        for (int k = 1; k <= m; ++k)
            s[m][k] = k * s[m - 1][k] + s[m - 1][k - 1];
    return s;
}

/// E (c + F)^e for F ~ Poisson(theta), via Touchard polynomials.
inline double shifted_poisson_moment(double c, double theta, int e)
{
    auto s = stirling2(e);
    double total = 0.0;
    double binom = 1.0;
    for (int m = 0; m <= e; ++m) {
        double poisson_moment = 0.0;
        for (int k = 0; k <= m; ++k)
            poisson_moment += s[m][k] * std::pow(theta, k);
        total += binom * std::pow(c, e - m) * poisson_moment;
        binom = binom * (e - m) / (m + 1);
    }
    return total;
}

inline bool windows_disjoint(std::vector<CountWindow> const& w)
{
    for (std::size_t a = 0; a < w.size(); ++a)
        for (std::size_t b = a + 1; b < w.size(); ++b) {
            bool assets_overlap = w[a].asset == kAllAssets || w[b].asset == kAllAssets || w[a].asset == w[b].asset;
            bool times_overlap = std::min(w[a].time.hi, w[b].time.hi) > std::max(w[a].time.lo, w[b].time.lo);
            if (assets_overlap && times_overlap)
                return false;
        }
    return true;
}

inline std::vector<double> window_breaks(std::vector<CountWindow> const& w)
{
    std::vector<double> b;
    for (auto const& x : w) {
        b.push_back(x.time.lo);
        b.push_back(x.time.hi);
    }
    return b;
}

} // namespace detail

/// f(mu) = coef * sum_{atoms a in B} (jump_weighted ? a.jump : 1).
inline Functional linear_functional(IntensityModel const& model, CountWindow window, double coef = 1.0,
                                    bool jump_weighted = false)
{
    auto g = [=](Atom const& a) {
        return window.contains(a) ? coef * (jump_weighted ? a.jump : 1.0) : 0.0;
    };
    Functional f;
    f.label = jump_weighted ? "linear_jump" : "linear";
    f.evaluate = [g](PointConfiguration const& mu) {
        double s = 0.0;
        for (auto const& a : mu.atoms())
            s += g(a);
        return s;
    };
    f.breakpoints = detail::window_breaks({window});
    double mean = 0.0;
    double second = 0.0;
    for (int j = 0; j < model.asset_count(); ++j) {
        if (window.asset != kAllAssets && window.asset != j)
            continue;
        auto const& as = model.asset(j);
        double time_mass = as.rate.integral(std::max(0.0, window.time.lo), std::min(window.time.hi, model.horizon()));
        int k1 = jump_weighted ? 1 : 0;
        int k2 = jump_weighted ? 2 : 0;
        mean += coef * time_mass * as.jumps.moment(k1);
        second += coef * coef * time_mass * as.jumps.moment(k2);
    }
    f.oracles.mean = mean;
    f.oracles.variance = second;
    f.oracles.difference = [g](PointConfiguration const&, Atom const& a) { return g(a); };
    f.oracles.clark_integrand = [g](PointConfiguration const&, Atom const& a) { return g(a); };
    return f;
}

/// f(mu) = p(mu(B_1), ..., mu(B_k)). Mean, variance and Clark integrand
/// closed forms are attached when the windows are pairwise disjoint (the
/// counts are then independent Poisson variables).
inline Functional count_polynomial(IntensityModel const& model, std::vector<CountWindow> windows,
                                   std::vector<PolynomialTerm> terms)
{
    for (auto const& t : terms)
        if (t.exponents.size() != windows.size())
            throw std::invalid_argument("count_polynomial: every term needs one exponent per window");
    auto p = [terms](std::vector<double> const& x) {
        double v = 0.0;
        for (auto const& t : terms) {
            double m = t.coef;
            for (std::size_t i = 0; i < x.size(); ++i)
                m *= std::pow(x[i], t.exponents[i]);
            v += m;
        }
        return v;
    };
    auto counts = [windows](PointConfiguration const& mu) {
        std::vector<double> c(windows.size());
        for (std::size_t i = 0; i < windows.size(); ++i)
            c[i] = static_cast<double>(windows[i].count(mu));
        return c;
    };

    Functional f;
    f.label = "count_polynomial";
    f.evaluate = [p, counts](PointConfiguration const& mu) { return p(counts(mu)); };
    f.breakpoints = detail::window_breaks(windows);
    f.oracles.difference = [p, counts, windows](PointConfiguration const& mu, Atom const& a) {
        auto c = counts(mu);
        auto d = c;
        for (std::size_t i = 0; i < windows.size(); ++i)
            if (windows[i].contains(a))
                d[i] += 1.0;
        return p(d) - p(c);
    };
    if (!detail::windows_disjoint(windows))
        return f;

    // E p(offset + F) with F_i ~ Poisson(theta_i) independent.
    auto expect = [](std::vector<PolynomialTerm> const& ts, std::vector<double> const& offset,
                     std::vector<double> const& theta) {
        double v = 0.0;
        for (auto const& t : ts) {
            double m = t.coef;
            for (std::size_t i = 0; i < offset.size(); ++i)
                m *= detail::shifted_poisson_moment(offset[i], theta[i], t.exponents[i]);
            v += m;
        }
        return v;
    };
    std::vector<double> zeros(windows.size(), 0.0);
    std::vector<double> full(windows.size());
    for (std::size_t i = 0; i < windows.size(); ++i)
        full[i] = windows[i].measure_after(model, 0.0);
    double mean = expect(terms, zeros, full);
    std::vector<PolynomialTerm> squared;
    for (auto const& a : terms)
        for (auto const& b : terms) {
            PolynomialTerm t{a.coef * b.coef, a.exponents};
            for (std::size_t i = 0; i < t.exponents.size(); ++i)
                t.exponents[i] += b.exponents[i];
            squared.push_back(std::move(t));
        }
    f.oracles.mean = mean;
    f.oracles.variance = expect(squared, zeros, full) - mean * mean;

    auto const horizon_model = std::make_shared<IntensityModel const>(model);
    f.oracles.clark_integrand = [=](PointConfiguration const& past, Atom const& at) {
        auto const strict_past = past.prefix(past.count_before(at.time));
        std::vector<double> n(windows.size()), theta(windows.size());
        for (std::size_t i = 0; i < windows.size(); ++i) {
            n[i] = static_cast<double>(windows[i].count(strict_past));
            theta[i] = windows[i].measure_after(*horizon_model, at.time);
        }
        auto bumped = n;
        for (std::size_t i = 0; i < windows.size(); ++i)
            if (windows[i].contains(at))
                bumped[i] += 1.0;
        return expect(terms, bumped, theta) - expect(terms, n, theta);
    };
    return f;
}

/// Univariate polynomial sum_k coefficients[k] * mu(B)^k.
inline Functional count_polynomial(IntensityModel const& model, CountWindow window, std::vector<double> coefficients)
{
    std::vector<PolynomialTerm> terms;
    for (std::size_t k = 0; k < coefficients.size(); ++k)
        if (coefficients[k] != 0.0)
            terms.push_back({coefficients[k], {static_cast<int>(k)}});
    return count_polynomial(model, std::vector<CountWindow>{window}, std::move(terms));
}

/// f(mu) = exp(-c mu(B)), i.e. exp(-int u dmu) with u = c 1_B.
inline Functional exponential_functional(IntensityModel const& model, CountWindow window, double c = 1.0)
{
    double const factor = std::exp(-c) - 1.0;
    double const lam = window.measure_after(model, 0.0);
    Functional f;
    f.label = "exponential";
    f.evaluate = [=](PointConfiguration const& mu) { return std::exp(-c * static_cast<double>(window.count(mu))); };
    f.breakpoints = detail::window_breaks({window});
    double mean = std::exp(factor * lam);
    f.oracles.mean = mean;
    f.oracles.variance = std::exp((std::exp(-2.0 * c) - 1.0) * lam) - mean * mean;
    f.oracles.difference = [=](PointConfiguration const& mu, Atom const& a) {
        return window.contains(a) ? std::exp(-c * static_cast<double>(window.count(mu))) * factor : 0.0;
    };
    auto const m = std::make_shared<IntensityModel const>(model);
    f.oracles.clark_integrand = [=](PointConfiguration const& past, Atom const& at) {
        if (!window.contains(at))
            return 0.0;
        auto n = static_cast<double>(window.count(past.prefix(past.count_before(at.time))));
        return factor * std::exp(-c * n) * std::exp(factor * window.measure_after(*m, at.time));
    };
    return f;
}

} // namespace jumpcalc
