#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>

namespace jumpcalc {

struct SampleSummary
{
    std::size_t n = 0;
    double mean = 0.0;
    /// Unbiased sample variance; 0 when n < 2.
    double variance = 0.0;

    [[nodiscard]] double se() const noexcept
    {
        return n > 0 ? std::sqrt(variance / static_cast<double>(n)) : 0.0;
    }
};

/// Two-pass mean and variance, accumulated in index order.
inline SampleSummary summarize(std::span<double const> xs)
{
    SampleSummary s;
    s.n = xs.size();
    if (s.n == 0)
        return s;
    double sum = 0.0;
    for (double x : xs)
        sum += x;
    s.mean = sum / static_cast<double>(s.n);
    if (s.n > 1) {
        double ss = 0.0;
        for (double x : xs)
            ss += (x - s.mean) * (x - s.mean);
        s.variance = ss / static_cast<double>(s.n - 1);
    }
    return s;
}

/// Mean of squares, with the standard error of that mean.
inline SampleSummary summarize_squares(std::span<double const> xs)
{
    SampleSummary s;
    s.n = xs.size();
    if (s.n == 0)
        return s;
    double sum = 0.0;
    for (double x : xs)
        sum += x * x;
    s.mean = sum / static_cast<double>(s.n);
    if (s.n > 1) {
        double ss = 0.0;
        for (double x : xs)
            ss += (x * x - s.mean) * (x * x - s.mean);
        s.variance = ss / static_cast<double>(s.n - 1);
    }
    return s;
}

/// gap / se, with 0/0 := 0 and x/0 := inf for x != 0.
inline double standardized(double gap, double se)
{
    if (se > 0.0)
        return gap / se;
    if (gap == 0.0)
        return 0.0;
    return gap > 0.0 ? std::numeric_limits<double>::infinity()
                     : -std::numeric_limits<double>::infinity();
}

/// Pearson sample correlation; 0 if either sample is constant.
inline double correlation(std::span<double const> x, std::span<double const> y)
{
    if (x.size() != y.size())
        throw std::invalid_argument("correlation: sample sizes differ");
    auto sx = summarize(x);
    auto sy = summarize(y);
    if (sx.n < 2 || sx.variance == 0.0 || sy.variance == 0.0)
        return 0.0;
    double c = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        c += (x[i] - sx.mean) * (y[i] - sy.mean);
    c /= static_cast<double>(sx.n - 1);
    return c / std::sqrt(sx.variance * sy.variance);
}

/// Standard error of the sample correlation under the null of zero
/// correlation without assuming independence:
///   sqrt(E[xc^2 yc^2] / (var x var y N)), xc and yc centred.
/// Reduces to 1/sqrt(N) for independent samples.
inline double correlation_se(std::span<double const> x, std::span<double const> y)
{
    if (x.size() != y.size())
        throw std::invalid_argument("correlation_se: sample sizes differ");
    auto sx = summarize(x);
    auto sy = summarize(y);
    if (sx.n < 2 || sx.variance == 0.0 || sy.variance == 0.0)
        return 0.0;
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double a = x[i] - sx.mean;
        double b = y[i] - sy.mean;
        m += a * a * b * b;
    }
    auto n = static_cast<double>(sx.n);
    m /= n;
    return std::sqrt(m / (sx.variance * sy.variance * n));
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(std::span<double const> x, std::span<double const> y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("loglog_slope: need at least two matching points");
    double mx = 0.0, my = 0.0;
    auto n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double dx = std::log(x[i]) - mx;
        num += dx * (std::log(y[i]) - my);
        den += dx * dx;
    }
    return num / den;
}

} // namespace jumpcalc
