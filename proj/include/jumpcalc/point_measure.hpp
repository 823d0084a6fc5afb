#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace jumpcalc {

/// A point (s, j, z) of the marked process: event time, asset index
/// (0-based) and jump size.
struct Atom
{
    double time = 0.0;
    int asset = 0;
    double jump = 1.0;

    friend bool operator==(Atom const&, Atom const&) = default;
};

/// Closed time interval [lo, hi].
struct TimeWindow
{
    double lo = 0.0;
    double hi = 0.0;

    [[nodiscard]] bool contains(double t) const noexcept { return lo <= t && t <= hi; }
};

/// Matches every asset when used as an asset selector.
inline constexpr int kAllAssets = -1;

/// A finite realization of the marked Poisson process on [0, horizon].
///
/// Atoms are kept sorted by time. Atoms with equal time keep insertion
/// order, which is a storage detail only: order-dependent operations treat
/// tied atoms as neither before nor after each other. The type is a value;
/// every "mutation" returns a new configuration.
class PointConfiguration
{
  public:
    PointConfiguration() = default;

    explicit PointConfiguration(double horizon) : horizon_(horizon)
    {
        if (!(horizon > 0.0) || !std::isfinite(horizon))
            throw std::invalid_argument("PointConfiguration: horizon must be positive and finite");
    }

    PointConfiguration(double horizon, std::vector<Atom> atoms) : PointConfiguration(horizon)
    {
        for (auto const& a : atoms)
            validate(a);
        std::stable_sort(atoms.begin(), atoms.end(),
                         [](Atom const& x, Atom const& y) { return x.time < y.time; });
        atoms_ = std::move(atoms);
    }

    /// Trusted construction from atoms already sorted and validated.
    static PointConfiguration from_sorted(double horizon, std::vector<Atom> atoms)
    {
        PointConfiguration c;
        c.horizon_ = horizon;
        c.atoms_ = std::move(atoms);
        return c;
    }

    [[nodiscard]] double horizon() const noexcept { return horizon_; }
    [[nodiscard]] std::span<Atom const> atoms() const noexcept { return atoms_; }
    [[nodiscard]] std::size_t size() const noexcept { return atoms_.size(); }
    [[nodiscard]] bool empty() const noexcept { return atoms_.empty(); }
    [[nodiscard]] Atom const& operator[](std::size_t i) const { return atoms_[i]; }

    /// Number of atoms with time < t.
    [[nodiscard]] std::size_t count_before(double t) const noexcept
    {
        return static_cast<std::size_t>(
            std::lower_bound(atoms_.begin(), atoms_.end(), t,
                             [](Atom const& a, double v) { return a.time < v; })
            - atoms_.begin());
    }

    /// Number of atoms with time <= t.
    [[nodiscard]] std::size_t count_upto(double t) const noexcept
    {
        return static_cast<std::size_t>(
            std::upper_bound(atoms_.begin(), atoms_.end(), t,
                             [](double v, Atom const& a) { return v < a.time; })
            - atoms_.begin());
    }

    /// The first n atoms as a configuration with the same horizon.
    [[nodiscard]] PointConfiguration prefix(std::size_t n) const
    {
        return from_sorted(horizon_, {atoms_.begin(), atoms_.begin() + static_cast<std::ptrdiff_t>(n)});
    }

    friend bool operator==(PointConfiguration const&, PointConfiguration const&) = default;

    void validate(Atom const& a) const
    {
        if (!(a.jump != 0.0) || !std::isfinite(a.jump))
            throw std::invalid_argument("atom jump size must be finite and nonzero");
        if (!(a.time >= 0.0) || a.time > horizon_)
            throw std::out_of_range("atom time " + std::to_string(a.time)
                                    + " outside [0, " + std::to_string(horizon_) + "]");
        if (a.asset < 0)
            throw std::invalid_argument("atom asset index must be nonnegative");
    }

  private:
    friend class ConfigurationBuilder;

    double horizon_ = 1.0;
    std::vector<Atom> atoms_;
};

/// Atoms with time < t (the strict past); horizon unchanged.
[[nodiscard]] inline PointConfiguration restrict_before(PointConfiguration const& mu, double t)
{
    if (t < 0.0)
        throw std::invalid_argument("restrict_before: t must be nonnegative");
    return mu.prefix(mu.count_before(t));
}

/// Atoms with time <= t.
[[nodiscard]] inline PointConfiguration restrict_upto(PointConfiguration const& mu, double t)
{
    if (t < 0.0)
        throw std::invalid_argument("restrict_upto: t must be nonnegative");
    return mu.prefix(mu.count_upto(t));
}

/// mu + delta_a. A tied atom is placed after existing atoms with the same time.
[[nodiscard]] inline PointConfiguration add_atom(PointConfiguration const& mu, Atom const& a)
{
    mu.validate(a);
    auto src = mu.atoms();
    std::vector<Atom> out;
    out.reserve(src.size() + 1);
    auto pos = mu.count_upto(a.time);
    out.insert(out.end(), src.begin(), src.begin() + static_cast<std::ptrdiff_t>(pos));
    out.push_back(a);
    out.insert(out.end(), src.begin() + static_cast<std::ptrdiff_t>(pos), src.end());
    return PointConfiguration::from_sorted(mu.horizon(), std::move(out));
}

/// mu - delta_{mu[index]}, together with the removed atom.
[[nodiscard]] inline std::pair<PointConfiguration, Atom> remove_atom(PointConfiguration const& mu,
                                                                     std::size_t index)
{
    if (index >= mu.size())
        throw std::out_of_range("remove_atom: index " + std::to_string(index) + " out of range for "
                                + std::to_string(mu.size()) + " atoms");
    auto src = mu.atoms();
    std::vector<Atom> out;
    out.reserve(src.size() - 1);
    out.insert(out.end(), src.begin(), src.begin() + static_cast<std::ptrdiff_t>(index));
    out.insert(out.end(), src.begin() + static_cast<std::ptrdiff_t>(index) + 1, src.end());
    return {PointConfiguration::from_sorted(mu.horizon(), std::move(out)), src[index]};
}

/// mu(window x asset): atoms in the closed window whose asset matches
/// (kAllAssets matches any).
[[nodiscard]] inline std::size_t count(PointConfiguration const& mu, TimeWindow window,
                                       int asset = kAllAssets)
{
    if (window.hi < window.lo)
        return 0;
    std::size_t n = 0;
    auto atoms = mu.atoms();
    for (auto i = mu.count_before(window.lo); i < atoms.size() && atoms[i].time <= window.hi; ++i)
        if (asset == kAllAssets || atoms[i].asset == asset)
            ++n;
    return n;
}

/// Reusable scratch buffer for building past + {atom} + future
/// configurations in hot Monte Carlo loops without reallocating.
class ConfigurationBuilder
{
  public:
    /// Rebuilds `out` as past ++ extra ++ future. Requires every past atom
    /// to precede `extra`, and `extra` to precede every future atom.
    static void compose(PointConfiguration& out, std::span<Atom const> past,
                        std::optional<Atom> extra, std::span<Atom const> future, double horizon)
    {
        out.horizon_ = horizon;
        auto& v = out.atoms_;
        v.clear();
        v.insert(v.end(), past.begin(), past.end());
        if (extra)
            v.push_back(*extra);
        v.insert(v.end(), future.begin(), future.end());
    }
};

/// One row per atom: `time,asset,jump` with 17 significant digits.
inline void write_csv_rows(std::ostream& os, PointConfiguration const& mu, std::string const& prefix = {})
{
    char buf[128];
    for (auto const& a : mu.atoms()) {
        std::snprintf(buf, sizeof buf, "%.17g,%d,%.17g\n", a.time, a.asset, a.jump);
        os << prefix << buf;
    }
}

} // namespace jumpcalc
