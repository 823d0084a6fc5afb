#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <type_traits>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace jumpcalc {

/// A Monte Carlo estimate together with the variance of the estimator
/// (squared standard error). Sums treat the summands as independent.
struct Estimate
{
    double value = 0.0;
    double variance = 0.0;

    [[nodiscard]] double se() const noexcept { return std::sqrt(variance); }

    Estimate& operator+=(Estimate const& o) noexcept
    {
        value += o.value;
        variance += o.variance;
        return *this;
    }
    Estimate& operator-=(Estimate const& o) noexcept
    {
        value -= o.value;
        variance += o.variance;
        return *this;
    }
    Estimate& operator*=(double c) noexcept
    {
        value *= c;
        variance *= c * c;
        return *this;
    }
    friend Estimate operator+(Estimate a, Estimate const& b) noexcept { return a += b; }
    friend Estimate operator-(Estimate a, Estimate const& b) noexcept { return a -= b; }
    friend Estimate operator*(Estimate a, double c) noexcept { return a *= c; }
    friend Estimate operator*(double c, Estimate a) noexcept { return a *= c; }
};

inline double value_of(double x) noexcept { return x; }
inline double value_of(Estimate const& e) noexcept { return e.value; }

class QuadratureError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

struct QuadratureOptions
{
    enum class Rule {
        /// Adaptive Gauss-Kronrod (7/15) on each smooth piece.
        adaptive,
        /// Non-adaptive 5-point Gauss-Legendre; for integrands that are
        /// themselves Monte Carlo estimates.
        fixed_gauss,
    };

    Rule rule = Rule::adaptive;
    double abs_tol = 1e-10;
    unsigned max_depth = 12;
};

inline constexpr QuadratureOptions kFixedGauss{QuadratureOptions::Rule::fixed_gauss};

namespace detail {

template <class Value, class F>
Value gauss_legendre_5(F& f, double a, double b)
{
    using rule = boost::math::quadrature::gauss<double, 5>;
    auto const& x = rule::abscissa();
    auto const& w = rule::weights();
    double const half = 0.5 * (b - a);
    double const mid = 0.5 * (a + b);
    // abscissa()[0] is the centre node for odd orders.
    Value sum = f(mid) * w[0];
    for (std::size_t i = 1; i < x.size(); ++i) {
        sum += f(mid - half * x[i]) * w[i];
        sum += f(mid + half * x[i]) * w[i];
    }
    return sum * half;
}

} // namespace detail

/// Integrates f over the smooth piece [a, b]. Estimate-valued integrands
/// always use the fixed rule.
template <class Value, class F>
Value integrate_piece(F&& f, double a, double b, QuadratureOptions const& opts)
{
    if (!(b > a))
        return Value{};
    if constexpr (!std::is_same_v<Value, double>) {
        return detail::gauss_legendre_5<Value>(f, a, b);
    } else {
        if (opts.rule == QuadratureOptions::Rule::fixed_gauss)
            return detail::gauss_legendre_5<Value>(f, a, b);
        // Mapped to [-1, 1] first: on other intervals the recursive error
        // test of gauss_kronrod compares unscaled errors with scaled tolerances.
        double const half = 0.5 * (b - a);
        double const mid = 0.5 * (a + b);
        double err = 0.0;
        double l1 = 0.0;
        double r = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
            [&](double x) { return f(mid + half * x); }, -1.0, 1.0, opts.max_depth, 1e-13, &err, &l1);
        r *= half;
        err *= half;
        l1 *= half;
        double const floor = 64 * std::numeric_limits<double>::epsilon() * l1;
        if (!std::isfinite(r) || (err > opts.abs_tol && err > floor))
            throw QuadratureError("quadrature did not converge on [" + std::to_string(a) + ", "
                                  + std::to_string(b) + "]: error estimate "
                                  + std::to_string(err) + " exceeds tolerance "
                                  + std::to_string(opts.abs_tol));
        return r;
    }
}

} // namespace jumpcalc
