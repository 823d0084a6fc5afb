#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "intensity.hpp"
#include "point_measure.hpp"
#include "quadrature.hpp"
#include "rng.hpp"

namespace jumpcalc {

/// A square-integrable claim f: configurations -> R, with whatever
/// closed forms are known for it.
struct Functional
{
    struct Oracles
    {
        std::optional<double> mean;
        std::optional<double> variance;
        /// D_a f(mu)
        std::function<double(PointConfiguration const& mu, Atom const& a)> difference;
        /// E[D_(s,j,z) f(eta) | eta_{s-} = past]
        std::function<double(PointConfiguration const& past, Atom const& at)> clark_integrand;
    };

    std::string label;
    std::function<double(PointConfiguration const&)> evaluate;
    /// Times at which s -> D_(s,j,z) f may jump other than at atoms of mu.
    std::vector<double> breakpoints;
    Oracles oracles;

    double operator()(PointConfiguration const& mu) const { return evaluate(mu); }

    /// Same claim, every closed form removed (black-box A/B runs).
    [[nodiscard]] Functional without_oracles() const
    {
        Functional g{label, evaluate, breakpoints, {}};
        return g;
    }
};

/// Monte Carlo estimate of a conditional expectation.
struct ClarkEstimate
{
    double value = 0.0;
    std::size_t inner_samples = 0;
    double standard_error = 0.0;
    /// Some inner sample was not finite; value is then set to 0.
    bool non_finite = false;

    [[nodiscard]] Estimate as_estimate() const noexcept
    {
        return {value, standard_error * standard_error};
    }
};

/// D_a f(mu) = f(mu + delta_a) - f(mu), evaluated as a black box.
[[nodiscard]] inline double difference(Functional const& f, PointConfiguration const& mu, Atom const& a)
{
    return f(add_atom(mu, a)) - f(mu);
}

/// D_a f(mu), through the closed form when one is attached.
[[nodiscard]] inline double exact_difference(Functional const& f, PointConfiguration const& mu, Atom const& a)
{
    if (f.oracles.difference)
        return f.oracles.difference(mu, a);
    return difference(f, mu, a);
}

inline constexpr std::size_t kDefaultMaxOrder = 6;

/// D^n_{a_1..a_n} f(mu) by inclusion-exclusion:
///   sum_{J subset {1..n}} (-1)^{n-|J|} f(mu + sum_{j in J} delta_{a_j}).
/// Atoms are put in a canonical order first, so the result is bit-for-bit
/// invariant under permutation of `atoms`.
[[nodiscard]] inline double iterated_difference(Functional const& f, PointConfiguration const& mu,
                                                std::span<Atom const> atoms,
                                                std::size_t max_order = kDefaultMaxOrder)
{
    std::size_t const n = atoms.size();
    if (n > max_order)
        throw std::invalid_argument("iterated_difference: order " + std::to_string(n)
                                    + " exceeds the configured maximum " + std::to_string(max_order));
    std::vector<Atom> sorted(atoms.begin(), atoms.end());
    std::sort(sorted.begin(), sorted.end(), [](Atom const& a, Atom const& b) {
        return std::tie(a.time, a.asset, a.jump) < std::tie(b.time, b.asset, b.jump);
    });
    for (auto const& a : sorted)
        mu.validate(a);

    double total = 0.0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        std::vector<Atom> all(mu.atoms().begin(), mu.atoms().end());
        std::size_t size = 0;
        for (std::size_t k = 0; k < n; ++k)
            if (mask & (std::size_t{1} << k)) {
                all.push_back(sorted[k]);
                ++size;
            }
        double v = f(PointConfiguration(mu.horizon(), std::move(all)));
        total += ((n - size) % 2 == 0) ? v : -v;
    }
    return total;
}

namespace detail {

/// Welford accumulator for inner Monte Carlo loops.
struct RunningMean
{
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;
    bool non_finite = false;

    void add(double x) noexcept
    {
        if (!std::isfinite(x)) {
            non_finite = true;
            return;
        }
        ++n;
        double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }

    [[nodiscard]] ClarkEstimate result(std::size_t samples) const noexcept
    {
        ClarkEstimate e;
        e.inner_samples = samples;
        if (non_finite) {
            e.non_finite = true;
            return e;
        }
        e.value = mean;
        e.standard_error = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
        return e;
    }
};

} // namespace detail

/// Inner loop shared by the Clark and hedge integrands. For each of M
/// independent futures nu_i ~ Pi^s (sample i on stream.child(i)), calls
/// on_sample(diffs) with diffs[k] = D_(s,j,zs[k]) f(past + nu_i). All jump
/// sizes share the same futures.
template <class OnSample>
void for_each_inner_difference(Functional const& f, PointConfiguration const& past, double s, int asset,
                               std::span<double const> zs, IntensityModel const& model, std::size_t inner,
                               SeedStream stream, OnSample&& on_sample)
{
    if (inner == 0)
        throw std::invalid_argument("inner sample count M must be positive");
    double const horizon = model.horizon();
    if (!(s >= 0.0) || s > horizon)
        throw std::out_of_range("evaluation time outside [0, horizon]");
    auto past_atoms = past.atoms().first(past.count_before(s));
    std::vector<Atom> future;
    PointConfiguration base;
    PointConfiguration bumped;
    std::vector<double> diffs(zs.size());
    for (std::size_t i = 0; i < inner; ++i) {
        future.clear();
        if (s < horizon)
            sample_future_into(model, s, stream.child(std::uint64_t{i}), future);
        ConfigurationBuilder::compose(base, past_atoms, std::nullopt, future, horizon);
        double const f0 = f(base);
        for (std::size_t k = 0; k < zs.size(); ++k) {
            ConfigurationBuilder::compose(bumped, past_atoms, Atom{s, asset, zs[k]}, future, horizon);
            diffs[k] = f(bumped) - f0;
        }
        on_sample(std::span<double const>(diffs));
    }
}

/// E[D_(s,j,z) f(eta) | eta_{s-} = past] estimated by resampling the
/// future: the mean over M draws nu_i of D f(past_{s-} + nu_i).
[[nodiscard]] inline ClarkEstimate clark_integrand_from_past(Functional const& f, PointConfiguration const& past,
                                                             Atom const& at, IntensityModel const& model,
                                                             std::size_t inner, SeedStream stream)
{
    detail::RunningMean acc;
    double const z = at.jump;
    for_each_inner_difference(f, past, at.time, at.asset, std::span<double const>(&z, 1), model, inner, stream,
                              [&](std::span<double const> d) { acc.add(d[0]); });
    return acc.result(inner);
}

/// Clark-Ocone integrand at (s, j, z) for the path mu. Reads mu only
/// through its strict past at s.
[[nodiscard]] inline ClarkEstimate clark_integrand_mc(Functional const& f, PointConfiguration const& mu, double s,
                                                      int asset, double jump, IntensityModel const& model,
                                                      std::size_t inner, SeedStream stream)
{
    return clark_integrand_from_past(f, restrict_before(mu, s), Atom{s, asset, jump}, model, inner, stream);
}

/// T_n f(a_1..a_n) = E D^n f(eta), averaged over M paths (path i on
/// stream.child(i)).
[[nodiscard]] inline ClarkEstimate chaos_coefficient(Functional const& f, std::span<Atom const> atoms,
                                                     IntensityModel const& model, std::size_t samples,
                                                     SeedStream stream,
                                                     std::size_t max_order = kDefaultMaxOrder)
{
    if (samples == 0)
        throw std::invalid_argument("chaos_coefficient: sample count must be positive");
    if (atoms.size() > max_order)
        throw std::invalid_argument("chaos_coefficient: order exceeds the configured maximum");
    detail::RunningMean acc;
    for (std::size_t i = 0; i < samples; ++i) {
        auto mu = sample_path(model, stream.child(std::uint64_t{i}));
        acc.add(iterated_difference(f, mu, atoms, max_order));
    }
    return acc.result(samples);
}

} // namespace jumpcalc
