#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "integrals.hpp"
#include "intensity.hpp"
#include "malliavin.hpp"
#include "point_measure.hpp"

namespace jumpcalc {

/// a^+ = 1/a for a != 0, and 0 for a = 0.
[[nodiscard]] constexpr double gen_inverse(double a) noexcept { return a != 0.0 ? 1.0 / a : 0.0; }

/// Predictable per-asset size factor kappa_j(mu, s) of a separable market,
/// kappa(mu, s, j, z) = kappa_j(mu, s) * z.
struct KappaFactor
{
    std::string label;
    std::function<double(PointConfiguration const& past, double s)> evaluate;
    /// Set when the factor does not depend on (mu, s).
    std::optional<double> constant;

    static KappaFactor constant_factor(double c)
    {
        return {"constant", [c](PointConfiguration const&, double) { return c; }, c};
    }

    /// c * (1 + slope * min(mu_{s-}({asset}), cap)).
    static KappaFactor count_dependent(double c, double slope, int asset, int cap = 5)
    {
        return {"count_dependent",
                [=](PointConfiguration const& past, double s) {
                    auto p = past.prefix(past.count_before(s));
                    auto n = static_cast<double>(count(p, {0.0, s}, asset));
                    return c * (1.0 + slope * std::min(n, static_cast<double>(cap)));
                },
                std::nullopt};
    }
};

/// Pure-jump market driven by eta: the event (s, j, z) moves the price of
/// asset j by kappa(eta_{s-}, s, j, z).
class MarketModel
{
  public:
    using GeneralKappa = std::function<double(PointConfiguration const& past, double s, int asset, double jump)>;

    static MarketModel separable(IntensityModel intensity, std::vector<KappaFactor> factors,
                                 std::vector<double> breakpoints = {})
    {
        if (static_cast<int>(factors.size()) != intensity.asset_count())
            throw std::invalid_argument("MarketModel: one kappa factor per asset required");
        MarketModel m(std::move(intensity));
        m.factors_ = std::move(factors);
        m.breakpoints_ = std::move(breakpoints);
        return m;
    }

    /// kappa_j = 1 for every asset.
    static MarketModel unit(IntensityModel intensity)
    {
        std::vector<KappaFactor> f(static_cast<std::size_t>(intensity.asset_count()), KappaFactor::constant_factor(1.0));
        return separable(std::move(intensity), std::move(f));
    }

    static MarketModel general(IntensityModel intensity, GeneralKappa kappa, std::vector<double> breakpoints = {})
    {
        MarketModel m(std::move(intensity));
        m.general_ = std::move(kappa);
        m.breakpoints_ = std::move(breakpoints);
        return m;
    }

    [[nodiscard]] IntensityModel const& intensity() const noexcept { return *intensity_; }
    [[nodiscard]] bool is_separable() const noexcept { return !general_; }
    [[nodiscard]] std::span<double const> breakpoints() const noexcept { return breakpoints_; }

    /// True when kappa does not depend on the path.
    [[nodiscard]] bool deterministic() const noexcept
    {
        return is_separable()
            && std::all_of(factors_.begin(), factors_.end(), [](auto const& f) { return f.constant.has_value(); });
    }

    /// kappa_j(past, s); separable markets only.
    [[nodiscard]] double factor(PointConfiguration const& past, double s, int asset) const
    {
        if (!is_separable())
            throw std::logic_error("MarketModel::factor: market is not separable");
        auto const& f = factors_.at(static_cast<std::size_t>(asset));
        return f.constant ? *f.constant : f.evaluate(past, s);
    }

    [[nodiscard]] double kappa(PointConfiguration const& past, double s, int asset, double jump) const
    {
        if (general_)
            return general_(past, s, asset, jump);
        return factor(past, s, asset) * jump;
    }

    /// r_j(s) * sum_k w_k kappa(past, s, j, z_k): the compensator density of
    /// a unit position in asset j.
    [[nodiscard]] double drift_density(PointConfiguration const& past, double s, int asset) const
    {
        auto const& as = intensity_->asset(asset);
        double r = as.rate(s);
        if (r == 0.0)
            return 0.0;
        if (is_separable()) {
            double m1 = as.jumps.moment(1);
            return m1 == 0.0 ? 0.0 : r * factor(past, s, asset) * m1;
        }
        double acc = 0.0;
        for (auto const& z : as.jumps.atoms())
            acc += z.weight * general_(past, s, asset, z.size);
        return r * acc;
    }

    /// The same market with kappa replaced by c * kappa.
    [[nodiscard]] MarketModel scaled(double c) const
    {
        MarketModel m = *this;
        if (general_) {
            auto g = general_;
            m.general_ = [g, c](PointConfiguration const& p, double s, int j, double z) { return c * g(p, s, j, z); };
        } else {
            for (auto& f : m.factors_) {
                auto e = f.evaluate;
                f.evaluate = [e, c](PointConfiguration const& p, double s) { return c * e(p, s); };
                if (f.constant)
                    f.constant = c * *f.constant;
            }
        }
        return m;
    }

  private:
    explicit MarketModel(IntensityModel intensity)
        : intensity_(std::make_shared<IntensityModel const>(std::move(intensity)))
    {
    }

    std::shared_ptr<IntensityModel const> intensity_;
    std::vector<KappaFactor> factors_;
    GeneralKappa general_;
    std::vector<double> breakpoints_;
};

/// A predictable trading strategy h(mu, s, j): the position held in asset
/// j at time s, read from the strict past.
template <class Value = double>
struct BasicPortfolio
{
    std::string label;
    std::function<Value(PointConfiguration const& past, double s, int asset)> evaluate;
    std::vector<double> breakpoints;

    Value operator()(PointConfiguration const& past, double s, int asset) const { return evaluate(past, s, asset); }
};

using Portfolio = BasicPortfolio<double>;
using EstimatedPortfolio = BasicPortfolio<Estimate>;

/// int_{[0,t]} h dzeta for every t of the ascending grid: the pathwise
/// integral of (s, j, z) -> h(s, j) kappa(s, j, z) against the compensated
/// process, evaluating h once per (s, j). Assets whose drift density is
/// exactly zero contribute no compensator term and h is not evaluated there.
template <class Value>
std::vector<Value> integral_against_zeta_on_grid(BasicPortfolio<Value> const& h, PointConfiguration const& mu,
                                                 MarketModel const& market, std::span<double const> grid,
                                                 QuadratureOptions const& quad = {})
{
    auto const& model = market.intensity();
    auto jump_term = [&](PointConfiguration const& past, Atom const& a) -> Value {
        double k = market.kappa(past, a.time, a.asset, a.jump);
        return h(past, a.time, a.asset) * k;
    };
    auto drift = [&](PointConfiguration const& past, double s) -> Value {
        Value acc{};
        for (int j = 0; j < model.asset_count(); ++j) {
            double d = market.drift_density(past, s, j);
            if (d != 0.0)
                acc += h(past, s, j) * d;
        }
        return acc;
    };
    std::vector<double> breaks = h.breakpoints;
    breaks.insert(breaks.end(), market.breakpoints().begin(), market.breakpoints().end());
    return pathwise_on_grid<Value>(model, mu, jump_term, drift, breaks, grid, quad);
}

/// int h dzeta over [0, horizon].
template <class Value>
Value integral_against_zeta(BasicPortfolio<Value> const& h, PointConfiguration const& mu, MarketModel const& market,
                            QuadratureOptions const& quad = {})
{
    double const end = market.intensity().horizon();
    return integral_against_zeta_on_grid(h, mu, market, std::span<double const>(&end, 1), quad).front();
}

inline Portfolio asset_indicator_portfolio(int asset = kAllAssets, TimeWindow window = {0.0, HUGE_VAL})
{
    return {"indicator",
            [=](PointConfiguration const&, double s, int j) {
                return window.contains(s) && (asset == kAllAssets || asset == j) ? 1.0 : 0.0;
            },
            std::isfinite(window.hi) ? std::vector<double>{window.lo, window.hi} : std::vector<double>{window.lo}};
}

/// zeta_t({asset}) (all assets for kAllAssets): the discounted price
/// process. Closed form for path-independent kappa.
[[nodiscard]] inline double zeta(MarketModel const& market, PointConfiguration const& mu, double t,
                                 int asset = kAllAssets)
{
    auto const& model = market.intensity();
    if (market.deterministic()) {
        PointConfiguration none;
        double jumps = 0.0;
        for (auto const& a : mu.atoms()) {
            if (a.time > t)
                break;
            if (asset == kAllAssets || a.asset == asset)
                jumps += market.factor(none, a.time, a.asset) * a.jump;
        }
        double comp = 0.0;
        for (int j = 0; j < model.asset_count(); ++j)
            if (asset == kAllAssets || asset == j) {
                auto const& as = model.asset(j);
                comp += market.factor(none, 0.0, j) * as.jumps.moment(1) * as.rate.integral(0.0, std::min(t, model.horizon()));
            }
        return jumps - comp;
    }
    return integral_against_zeta_on_grid(asset_indicator_portfolio(asset), mu, market, std::span<double const>(&t, 1))
        .front();
}

/// phi(zeta_T) for phi in {identity, square, call, put}.
inline Functional terminal_payoff(MarketModel const& market, std::string const& payoff, double strike = 0.0,
                                  int asset = kAllAssets)
{
    std::function<double(double)> phi;
    if (payoff == "identity")
        phi = [](double x) { return x; };
    else if (payoff == "square")
        phi = [](double x) { return x * x; };
    else if (payoff == "call")
        phi = [strike](double x) { return std::max(x - strike, 0.0); };
    else if (payoff == "put")
        phi = [strike](double x) { return std::max(strike - x, 0.0); };
    else
        throw std::invalid_argument("terminal_payoff: unknown payoff '" + payoff + "'");

    auto m = std::make_shared<MarketModel const>(market);
    double const horizon = market.intensity().horizon();
    Functional f;
    f.label = "terminal_" + payoff;
    f.evaluate = [m, phi, horizon, asset](PointConfiguration const& mu) { return phi(zeta(*m, mu, horizon, asset)); };
    f.breakpoints.assign(market.breakpoints().begin(), market.breakpoints().end());
    if (market.deterministic()) {
        // E zeta_T = 0 and E zeta_T^2 = int kappa^2 dlambda.
        auto const& model = market.intensity();
        PointConfiguration none;
        double second = 0.0;
        for (int j = 0; j < model.asset_count(); ++j)
            if (asset == kAllAssets || asset == j) {
                double c = market.factor(none, 0.0, j);
                second += c * c * model.asset(j).jumps.moment(2) * model.asset(j).rate.integral(0.0, horizon);
            }
        if (payoff == "identity")
            f.oracles.mean = 0.0;
        else if (payoff == "square")
            f.oracles.mean = second;
    }
    return f;
}

} // namespace jumpcalc
