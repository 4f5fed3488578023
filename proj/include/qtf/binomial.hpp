// SPDX-License-Identifier: Apache-2.0
//
// Binomial probability mass and cumulative distribution with relative
// accuracy near machine precision for large n.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace qtf {

namespace detail {

// Stirling remainder: log(n!) - log(sqrt(2 pi n) (n/e)^n).
inline double stirlerr(double n)
{
    constexpr double s0 = 1.0 / 12.0;
    constexpr double s1 = 1.0 / 360.0;
    constexpr double s2 = 1.0 / 1260.0;
    constexpr double s3 = 1.0 / 1680.0;
    constexpr double s4 = 1.0 / 1188.0;

    // Exact values for small integers.
    static constexpr std::array<double, 16> table = {
        0.0,  // unused; n = 0 has no Stirling form
        0.08106146679532725821967026,
        0.04134069595540929409382208,
        0.02767792568499833914878929,
        0.02079067210376509311152277,
        0.01664469118982119216319487,
        0.01387612882307074799874573,
        0.01189670994589177009505572,
        0.01041126526197209649747857,
        0.009255462182712732917728637,
        0.008330563433362871256469319,
        0.007573675487951840794972024,
        0.006942840107209529865664153,
        0.006408994188004207068439631,
        0.005951370112758847735624416,
        0.00555473355196280137103869,
    };

    if (n <= 15.0) {
        double nn = std::round(n);
        if (nn == n) return table[static_cast<std::size_t>(nn)];
        return std::lgamma(n + 1.0) - (n + 0.5) * std::log(n) + n
               - 0.5 * std::log(2.0 * std::numbers::pi);
    }
    double nn = n * n;
    if (n > 500) return (s0 - s1 / nn) / n;
    if (n > 80) return (s0 - (s1 - s2 / nn) / nn) / n;
    if (n > 35) return (s0 - (s1 - (s2 - s3 / nn) / nn) / nn) / n;
    return (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / n;
}

// Deviance term x log(x/np) + np - x, evaluated without cancellation when
// x is close to np.
inline double bd0(double x, double np)
{
    if (std::fabs(x - np) < 0.1 * (x + np)) {
        double v = (x - np) / (x + np);
        double s = (x - np) * v;
        if (std::fabs(s) < std::numeric_limits<double>::min()) return s;
        double ej = 2.0 * x * v;
        v *= v;
        for (int j = 1; j < 1000; ++j) {
            ej *= v;
            double s1 = s + ej / (2 * j + 1);
            if (s1 == s) return s1;
            s = s1;
        }
    }
    return x * std::log(x / np) + np - x;
}

// Neumaier-compensated running sum.
class CompensatedSum {
  public:
    void add(double v)
    {
        double t = sum_ + v;
        if (std::fabs(sum_) >= std::fabs(v)) comp_ += (sum_ - t) + v;
        else comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace detail

/// Pr[Bin(n, p) = x] via the saddle-point expansion (Loader 2000). `q` is
/// passed separately so callers holding 1-p exactly do not lose digits.
inline double binomial_pmf(std::uint64_t n, std::uint64_t x, double p, double q)
{
    if (x > n) return 0.0;
    if (p == 0.0) return x == 0 ? 1.0 : 0.0;
    if (q == 0.0) return x == n ? 1.0 : 0.0;

    const double nd = static_cast<double>(n);
    const double xd = static_cast<double>(x);
    if (x == 0) {
        if (n == 0) return 1.0;
        double lc = p < 0.1 ? -detail::bd0(nd, nd * q) - nd * p : nd * std::log(q);
        return std::exp(lc);
    }
    if (x == n) {
        double lc = q < 0.1 ? -detail::bd0(nd, nd * p) - nd * q : nd * std::log(p);
        return std::exp(lc);
    }
    double lc = detail::stirlerr(nd) - detail::stirlerr(xd) - detail::stirlerr(nd - xd)
                - detail::bd0(xd, nd * p) - detail::bd0(nd - xd, nd * q);
    double lf = std::log(2.0 * std::numbers::pi) + std::log(xd) + std::log1p(-xd / nd);
    return std::exp(lc - 0.5 * lf);
}

inline double binomial_pmf(std::uint64_t n, std::uint64_t x, double p)
{
    return binomial_pmf(n, x, p, 1.0 - p);
}

/// Pr[Bin(n, p) <= k]. Sums pmf terms outward from k into whichever tail
/// does not contain the mean, so every summed term is monotone and the
/// truncation point is sharp.
inline double binomial_cdf(std::uint64_t n, double p, std::int64_t k)
{
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binomial_cdf: p must lie in [0, 1]");
    if (k < 0) return 0.0;
    if (static_cast<std::uint64_t>(k) >= n) return 1.0;
    if (p == 0.0) return 1.0;
    if (p == 1.0) return 0.0;

    constexpr double rel_cut = 1e-20;
    const double q = 1.0 - p;
    const auto kk = static_cast<std::uint64_t>(k);
    const double mean = static_cast<double>(n) * p;

    detail::CompensatedSum sum;
    if (static_cast<double>(kk) < mean) {
        for (std::uint64_t x = kk + 1; x-- > 0;) {
            double term = binomial_pmf(n, x, p, q);
            sum.add(term);
            if (term <= rel_cut * sum.value()) break;
        }
        return std::min(1.0, sum.value());
    }
    for (std::uint64_t x = kk + 1; x <= n; ++x) {
        double term = binomial_pmf(n, x, p, q);
        sum.add(term);
        if (term <= rel_cut * sum.value()) break;
    }
    return std::max(0.0, 1.0 - sum.value());
}

}  // namespace qtf
