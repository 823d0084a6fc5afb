#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "point_measure.hpp"
#include "quadrature.hpp"
#include "rng.hpp"

namespace jumpcalc {

struct JumpAtom
{
    double size = 1.0;
    double weight = 1.0;

    friend bool operator==(JumpAtom const&, JumpAtom const&) = default;
};

/// Finite discrete jump-size measure nu_j = sum_k weight_k * delta_{size_k}.
class JumpLaw
{
  public:
    JumpLaw() = default;

    explicit JumpLaw(std::vector<JumpAtom> atoms) : atoms_(std::move(atoms))
    {
        if (atoms_.empty())
            throw std::invalid_argument("JumpLaw: at least one atom required");
        for (auto const& a : atoms_) {
            if (!(a.size != 0.0) || !std::isfinite(a.size))
                throw std::invalid_argument("JumpLaw: sizes must be finite and nonzero");
            if (!(a.weight > 0.0) || !std::isfinite(a.weight))
                throw std::invalid_argument("JumpLaw: weights must be finite and positive");
        }
        cumulative_.resize(atoms_.size());
        double acc = 0.0;
        for (std::size_t k = 0; k < atoms_.size(); ++k)
            cumulative_[k] = (acc += atoms_[k].weight);
    }

    [[nodiscard]] std::span<JumpAtom const> atoms() const noexcept { return atoms_; }
    [[nodiscard]] double total_mass() const noexcept
    {
        return cumulative_.empty() ? 0.0 : cumulative_.back();
    }

    /// int z^k nu(dz).
    [[nodiscard]] double moment(int k) const noexcept
    {
        double m = 0.0;
        for (auto const& a : atoms_)
            m += a.weight * std::pow(a.size, k);
        return m;
    }

    /// Jump size drawn from the normalized law.
    template <class Engine>
    [[nodiscard]] double sample(Engine& eng) const
    {
        double u = eng.uniform() * total_mass();
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        if (it == cumulative_.end())
            --it;
        return atoms_[static_cast<std::size_t>(it - cumulative_.begin())].size;
    }

    friend bool operator==(JumpLaw const& a, JumpLaw const& b) { return a.atoms_ == b.atoms_; }

  private:
    std::vector<JumpAtom> atoms_;
    std::vector<double> cumulative_;
};

/// Piecewise-constant rate r(s) = values[i] on [breaks[i], breaks[i+1]),
/// with the last piece extending to the model horizon. breaks[0] == 0.
class RateFunction
{
  public:
    RateFunction() : RateFunction({0.0}, {1.0}) {}

    RateFunction(std::vector<double> breaks, std::vector<double> values)
        : breaks_(std::move(breaks)), values_(std::move(values))
    {
        if (breaks_.empty() || breaks_.size() != values_.size())
            throw std::invalid_argument("RateFunction: breaks and values must be non-empty and equal length");
        if (breaks_.front() != 0.0)
            throw std::invalid_argument("RateFunction: first breakpoint must be 0");
        for (std::size_t i = 1; i < breaks_.size(); ++i)
            if (!(breaks_[i] > breaks_[i - 1]))
                throw std::invalid_argument("RateFunction: breakpoints must be strictly increasing");
        for (double v : values_)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw std::invalid_argument("RateFunction: rates must be finite and nonnegative");
    }

    static RateFunction constant(double r) { return RateFunction({0.0}, {r}); }

    [[nodiscard]] double operator()(double s) const noexcept
    {
        auto it = std::upper_bound(breaks_.begin(), breaks_.end(), s);
        return values_[static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - breaks_.begin() - 1))];
    }

    /// int_a^b r(s) ds for 0 <= a <= b.
    [[nodiscard]] double integral(double a, double b) const noexcept
    {
        if (!(b > a))
            return 0.0;
        double acc = 0.0;
        for (std::size_t i = 0; i < breaks_.size(); ++i) {
            double lo = std::max(a, breaks_[i]);
            double hi = i + 1 < breaks_.size() ? std::min(b, breaks_[i + 1]) : b;
            if (hi > lo)
                acc += values_[i] * (hi - lo);
        }
        return acc;
    }

    [[nodiscard]] std::span<double const> breaks() const noexcept { return breaks_; }
    [[nodiscard]] std::span<double const> values() const noexcept { return values_; }

    friend bool operator==(RateFunction const&, RateFunction const&) = default;

  private:
    std::vector<double> breaks_;
    std::vector<double> values_;
};

struct AssetIntensity
{
    RateFunction rate;
    JumpLaw jumps;

    friend bool operator==(AssetIntensity const&, AssetIntensity const&) = default;
};

/// lambda(ds x {j} x dz) = r_j(s) ds nu_j(dz) on [0, horizon].
class IntensityModel
{
  public:
    IntensityModel(double horizon, std::vector<AssetIntensity> assets)
        : horizon_(horizon), assets_(std::move(assets))
    {
        if (!(horizon_ > 0.0) || !std::isfinite(horizon_))
            throw std::invalid_argument("IntensityModel: horizon must be positive and finite");
        if (assets_.empty())
            throw std::invalid_argument("IntensityModel: at least one asset required");
        for (auto const& a : assets_)
            if (a.jumps.atoms().empty())
                throw std::invalid_argument("IntensityModel: every asset needs a jump law");
        for (auto const& a : assets_)
            for (double b : a.rate.breaks())
                if (b > 0.0 && b < horizon_)
                    breaks_.push_back(b);
        std::sort(breaks_.begin(), breaks_.end());
        breaks_.erase(std::unique(breaks_.begin(), breaks_.end()), breaks_.end());
    }

    /// Single asset, constant rate.
    static IntensityModel homogeneous(double horizon, double rate, JumpLaw jumps)
    {
        return IntensityModel(horizon, {AssetIntensity{RateFunction::constant(rate), std::move(jumps)}});
    }

    [[nodiscard]] double horizon() const noexcept { return horizon_; }
    [[nodiscard]] int asset_count() const noexcept { return static_cast<int>(assets_.size()); }
    [[nodiscard]] AssetIntensity const& asset(int j) const { return assets_.at(static_cast<std::size_t>(j)); }
    [[nodiscard]] std::span<AssetIntensity const> assets() const noexcept { return assets_; }

    /// Interior rate breakpoints of all assets, sorted and unique.
    [[nodiscard]] std::span<double const> rate_breaks() const noexcept { return breaks_; }

    /// lambda([a, b] x {j} x R*).
    [[nodiscard]] double mass(int j, double a, double b) const
    {
        auto const& as = asset(j);
        return as.rate.integral(std::max(a, 0.0), std::min(b, horizon_)) * as.jumps.total_mass();
    }

    /// lambda(window x asset) for an asset selector (kAllAssets for all).
    [[nodiscard]] double measure(TimeWindow w, int asset_sel = kAllAssets) const
    {
        double m = 0.0;
        for (int j = 0; j < asset_count(); ++j)
            if (asset_sel == kAllAssets || asset_sel == j)
                m += mass(j, w.lo, w.hi);
        return m;
    }

    /// Expected total atom count on [0, horizon].
    [[nodiscard]] double total_mass() const { return measure({0.0, horizon_}); }

    friend bool operator==(IntensityModel const&, IntensityModel const&) = default;

  private:
    double horizon_;
    std::vector<AssetIntensity> assets_;
    std::vector<double> breaks_;
};

/// Appends to `out` a draw of the process restricted to (t, horizon],
/// sorted by time. Per asset: a Poisson count with mean lambda((t,T] x {j}),
/// then i.i.d. times with density proportional to r_j and i.i.d. jumps from
/// the normalized nu_j.
inline void sample_future_into(IntensityModel const& model, double t, SeedStream stream,
                               std::vector<Atom>& out)
{
    double const horizon = model.horizon();
    if (!(t >= 0.0) || t > horizon)
        throw std::out_of_range("sample_future: t must lie in [0, horizon]");
    StreamEngine eng(stream);
    auto const first = out.size();
    for (int j = 0; j < model.asset_count(); ++j) {
        auto const& as = model.asset(j);
        double const mean = model.mass(j, t, horizon);
        if (!(mean > 0.0))
            continue;
        long n = std::poisson_distribution<long>(mean)(eng);
        if (n == 0)
            continue;
        auto br = as.rate.breaks();
        auto vals = as.rate.values();
        if (br.size() == 1) {
            for (long i = 0; i < n; ++i) {
                double s = t + (horizon - t) * eng.uniform_open_left();
                out.push_back({std::min(s, horizon), j, as.jumps.sample(eng)});
            }
            continue;
        }
        // Pieces of (t, horizon] weighted by their rate mass.
        std::vector<double> lo, hi, cum;
        double acc = 0.0;
        for (std::size_t i = 0; i < br.size(); ++i) {
            double a = std::max(t, br[i]);
            double b = i + 1 < br.size() ? std::min(horizon, br[i + 1]) : horizon;
            if (b > a && vals[i] > 0.0) {
                lo.push_back(a);
                hi.push_back(b);
                cum.push_back(acc += vals[i] * (b - a));
            }
        }
        for (long i = 0; i < n; ++i) {
            double u = eng.uniform() * acc;
            auto k = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
            k = std::min(k, cum.size() - 1);
            double s = lo[k] + (hi[k] - lo[k]) * eng.uniform_open_left();
            out.push_back({std::min(s, hi[k]), j, as.jumps.sample(eng)});
        }
    }
    std::stable_sort(out.begin() + static_cast<std::ptrdiff_t>(first), out.end(),
                     [](Atom const& a, Atom const& b) { return a.time < b.time; });
}

/// A draw from the law of the process restricted to (t, horizon].
[[nodiscard]] inline PointConfiguration sample_future(IntensityModel const& model, double t,
                                                      SeedStream stream)
{
    std::vector<Atom> atoms;
    sample_future_into(model, t, stream, atoms);
    return PointConfiguration::from_sorted(model.horizon(), std::move(atoms));
}

/// A draw of the full process on [0, horizon].
[[nodiscard]] inline PointConfiguration sample_path(IntensityModel const& model, SeedStream stream)
{
    return sample_future(model, 0.0, stream);
}

/// Sorted breakpoints of [lo, hi] at which a piecewise-smooth time
/// integrand may have kinks: rate breaks, jump times of mu, and the extra
/// points supplied by the integrand.
inline std::vector<double> time_pieces(IntensityModel const& model, PointConfiguration const& mu,
                                       std::span<double const> extra, double lo, double hi)
{
    std::vector<double> pts{lo, hi};
    auto add = [&](double x) {
        if (x > lo && x < hi)
            pts.push_back(x);
    };
    for (double b : model.rate_breaks())
        add(b);
    for (auto const& a : mu.atoms())
        add(a.time);
    for (double b : extra)
        add(b);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

/// int_lo^hi density(past(s), s) ds, split at `time_pieces`. On each piece
/// (a, b) the strict past of every interior s is restrict_upto(mu, a),
/// which is computed once per piece and handed to `density`.
template <class Value = double, class Density>
Value integrate_over_time(IntensityModel const& model, PointConfiguration const& mu,
                          Density&& density, std::span<double const> extra_breaks, double lo,
                          double hi, QuadratureOptions const& opts = {})
{
    Value total{};
    if (!(hi > lo))
        return total;
    auto pts = time_pieces(model, mu, extra_breaks, lo, hi);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        double a = pts[i];
        double b = pts[i + 1];
        PointConfiguration past = mu.prefix(mu.count_upto(a));
        total += integrate_piece<Value>([&](double s) -> Value { return density(past, s); }, a, b, opts);
    }
    return total;
}

/// The time density s -> sum_j r_j(s) sum_k w_jk h(past, s, j, z_jk) of
/// int h dlambda, for an integrand h(past, s, j, z).
template <class Value, class Integrand>
auto compensator_density(IntensityModel const& model, Integrand const& h)
{
    return [&model, &h](PointConfiguration const& past, double s) -> Value {
        Value acc{};
        for (int j = 0; j < model.asset_count(); ++j) {
            auto const& as = model.asset(j);
            double r = as.rate(s);
            if (r == 0.0)
                continue;
            for (auto const& z : as.jumps.atoms())
                acc += h(past, s, j, z.size) * (r * z.weight);
        }
        return acc;
    };
}

/// int h(mu, y) lambda(dy) over [lo, hi] (default [0, horizon]) for an
/// integrand h(past, s, j, z) that reads mu only through its strict past.
template <class Value = double, class Integrand>
Value compensator_integral(IntensityModel const& model, Integrand const& h, PointConfiguration const& mu,
                           std::span<double const> extra_breaks = {}, QuadratureOptions const& opts = {},
                           double lo = 0.0, double hi = -1.0)
{
    if (hi < 0.0)
        hi = model.horizon();
    return integrate_over_time<Value>(model, mu, compensator_density<Value>(model, h), extra_breaks, lo,
                                      hi, opts);
}

// ---------------------------------------------------------------------------
// Small-jump truncation

/// A jump measure given by a Levy density on R*, possibly of infinite
/// activity near 0. Supported on [-support, support].
struct ParametricJumpLaw
{
    std::string label;
    std::function<double(double)> density;
    double support = 10.0;
};

/// nu(dz) = C exp(-G|z|)/|z| for z < 0 and C exp(-M z)/z for z > 0.
inline ParametricJumpLaw variance_gamma_levy(double c, double g, double m, double support = 0.0)
{
    if (!(c > 0.0 && g > 0.0 && m > 0.0))
        throw std::invalid_argument("variance_gamma_levy: C, G, M must be positive");
    if (support <= 0.0)
        support = 40.0 / std::min(g, m);
    return {"variance_gamma",
            [=](double z) { return z < 0.0 ? c * std::exp(g * z) / -z : c * std::exp(-m * z) / z; },
            support};
}

struct TruncationResult
{
    JumpLaw law;
    /// int_{|z| <= epsilon} z^2 nu(dz)
    double discarded_second_moment = 0.0;
};

/// Drops atoms with |z| <= epsilon.
inline TruncationResult truncate_small_jumps(JumpLaw const& law, double epsilon)
{
    if (!(epsilon > 0.0))
        throw std::invalid_argument("truncate_small_jumps: epsilon must be positive");
    std::vector<JumpAtom> kept;
    double discarded = 0.0;
    for (auto const& a : law.atoms()) {
        if (std::abs(a.size) > epsilon)
            kept.push_back(a);
        else
            discarded += a.weight * a.size * a.size;
    }
    if (kept.empty())
        throw std::invalid_argument("truncate_small_jumps: epsilon removes every atom");
    return {JumpLaw(std::move(kept)), discarded};
}

/// Replaces nu restricted to epsilon < |z| <= support by a discrete law:
/// each side is cut into geometric bins and every bin becomes one atom
/// carrying the bin's mass, placed so that it also carries the bin's second
/// moment exactly.
inline TruncationResult truncate_small_jumps(ParametricJumpLaw const& law, double epsilon,
                                             int bins_per_side = 32)
{
    if (!(epsilon > 0.0))
        throw std::invalid_argument("truncate_small_jumps: epsilon must be positive");
    if (!(epsilon < law.support))
        throw std::invalid_argument("truncate_small_jumps: epsilon must be below the support bound");
    using gk = boost::math::quadrature::gauss_kronrod<double, 15>;
    auto integral = [&](auto&& f, double a, double b) { return gk::integrate(f, a, b, 15, 1e-12); };

    std::vector<JumpAtom> atoms;
    double const ratio = std::pow(law.support / epsilon, 1.0 / bins_per_side);
    for (double sign : {-1.0, 1.0}) {
        double a = epsilon;
        for (int i = 0; i < bins_per_side; ++i) {
            double b = i + 1 == bins_per_side ? law.support : a * ratio;
            double mass = integral([&](double x) { return law.density(sign * x); }, a, b);
            double m2 = integral([&](double x) { return x * x * law.density(sign * x); }, a, b);
            if (mass > 0.0 && std::isfinite(mass))
                atoms.push_back({sign * std::sqrt(m2 / mass), mass});
            a = b;
        }
    }
    double discarded = integral([&](double x) { return x * x * law.density(-x); }, 0.0, epsilon)
                     + integral([&](double x) { return x * x * law.density(x); }, 0.0, epsilon);
    return {JumpLaw(std::move(atoms)), discarded};
}

} // namespace jumpcalc
