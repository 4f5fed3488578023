// SPDX-License-Identifier: Apache-2.0
//
// Closed-form error and energy expressions for classical, TMSV and
// Bell-state target finding, plus the exact per-position error series that
// the Chernoff-type bound is checked against.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

#include "qtf/binomial.hpp"
#include "qtf/model.hpp"

namespace qtf {

namespace detail {

inline void check_bound_inputs(const ChannelParams& params, double n_s)
{
    if (!(params.eta >= 0.0 && params.eta <= 1.0)) throw InvalidParameter("eta must lie in [0, 1]");
    if (!(params.n_b >= 0.0)) throw InvalidParameter("n_b must be >= 0");
    if (params.d < 2) throw InvalidParameter("d must be >= 2");
    if (!(n_s >= 0.0)) throw InvalidParameter("n_s must be >= 0");
}

inline void require_no_false_positives(const ClickModel& model, const char* what)
{
    if (model.p_fp > 0.0)
        throw UnsupportedCombination(std::string(what) + " requires p_fp = 0 (m = inf)");
}

// (1 - p)^n without losing digits for small p.
inline double miss_all(double p, std::uint64_t n)
{
    if (p >= 1.0) return 0.0;
    return std::exp(static_cast<double>(n) * std::log1p(-p));
}

}  // namespace detail

/// Presentation clamp for bounds that can exceed one.
inline double clamp_probability(double value) { return std::clamp(value, 0.0, 1.0); }

/// Lower bound on the error of coherent-state (classical) target finding
/// with n_s photons per position.
inline double classical_lower_bound(const ChannelParams& params, double n_s)
{
    detail::check_bound_inputs(params, n_s);
    const double d = params.d;
    return (d - 1.0) / (2.0 * d) * std::exp(-2.0 * params.eta * n_s / (2.0 * params.n_b + 1.0));
}

/// Upper bound on the error of TMSV target finding. Not clamped: for small
/// n_s the value exceeds one.
inline double tmsv_upper_bound(const ChannelParams& params, double n_s)
{
    detail::check_bound_inputs(params, n_s);
    return (params.d - 1.0) * std::exp(-params.eta * n_s / (1.0 + params.n_b));
}

/// Exact error of the non-sequential rule in the false-positive-free limit.
inline double dv_fixed_shot_error(const ClickModel& model, std::uint64_t n_s)
{
    if (n_s < 1) throw InvalidParameter("n_s must be >= 1");
    detail::require_no_false_positives(model, "dv_fixed_shot_error");
    return detail::miss_all(model.p_tp, n_s);
}

/// Mean total photons spent by the first-click rule capped at n_max
/// transmissions (d photons per transmission).
inline double truncated_energy(const ChannelParams& params, const ClickModel& model,
                               std::uint64_t n_max)
{
    if (n_max < 1) throw InvalidParameter("n_max must be >= 1");
    if (!(model.p_tp > 0.0)) throw InvalidParameter("p_tp must be > 0");
    if (model.p_tp >= 1.0) return params.d;
    double hit = -std::expm1(static_cast<double>(n_max) * std::log1p(-model.p_tp));
    return params.d / model.p_tp * hit;
}

/// The n_max -> infinity limit of truncated_energy.
inline double truncated_energy_limit(const ChannelParams& params, const ClickModel& model)
{
    if (!(model.p_tp > 0.0)) throw InvalidParameter("p_tp must be > 0");
    return params.d / model.p_tp;
}

/// Probability that all n_max transmissions miss (a missed detection).
inline double truncated_error(const ClickModel& model, std::uint64_t n_max)
{
    if (n_max < 1) throw InvalidParameter("n_max must be >= 1");
    detail::require_no_false_positives(model, "truncated_error");
    return detail::miss_all(model.p_tp, n_max);
}

/// Mean number of transmissions to the r-th true click (negative binomial).
inline double expected_transmissions(const ClickModel& model, std::uint64_t r)
{
    if (r < 1) throw InvalidParameter("r must be >= 1");
    if (!(model.p_tp > 0.0)) throw InvalidParameter("p_tp must be > 0");
    return static_cast<double>(r) / model.p_tp;
}

/// Union bound on the first-click race error: (d-1) p_fp / p_tp. Zero for
/// m = inf.
inline double first_click_error_bound(const ChannelParams& params, const ClickModel& model)
{
    if (params.m.is_infinite() || model.p_fp == 0.0) return 0.0;
    if (!(model.p_tp > 0.0)) throw InvalidParameter("p_tp must be > 0");
    return model.p_fp * (params.d - 1.0) / model.p_tp;
}

struct SeriesResult {
    double value = 0.0;
    double truncation_bound = 0.0;  // certified bound on the omitted tail
    std::uint64_t terms_used = 0;
};

/// Probability that one particular empty position reaches r clicks at some
/// transmission n while the true position has at most r clicks by then:
///
///   sum_{n>=r} C(n-1, r-1) (1-q)^(n-r) q^r Pr[Bin(n, p_tp) <= r]
///
/// with q = p_fp. Summation stops once the negative-binomial mass not yet
/// visited, Pr[Bin(n, q) <= r-1], is below `tol`; the CDF factor is at most
/// one so that mass bounds the omitted tail.
inline SeriesResult per_position_error_series(const ClickModel& model, std::uint64_t r,
                                              double tol = 1e-12,
                                              std::uint64_t max_terms = 100'000'000)
{
    if (r < 1) throw InvalidParameter("r must be >= 1");
    if (!(tol > 0.0)) throw InvalidParameter("tol must be > 0");
    validate(model);
    if (model.p_fp == 0.0) return {};

    const double q = model.p_fp;
    const double qc = 1.0 - q;
    const auto rr = static_cast<std::int64_t>(r);

    detail::CompensatedSum sum;
    SeriesResult out;
    for (std::uint64_t n = r;; ++n) {
        // C(n-1, r-1) q^r (1-q)^(n-r) = q * Pr[Bin(n-1, q) = r-1]
        double hit = q * binomial_pmf(n - 1, r - 1, q, qc);
        sum.add(hit * binomial_cdf(n, model.p_tp, rr));
        ++out.terms_used;

        double tail = binomial_cdf(n, q, rr - 1);
        if (tail < tol) {
            out.value = sum.value();
            out.truncation_bound = tail;
            return out;
        }
        if (out.terms_used >= max_terms)
            throw FailedToConverge("per_position_error_series: tail mass " + std::to_string(tail)
                                   + " still above tol after " + std::to_string(max_terms)
                                   + " terms");
    }
}

/// log C(r), C(r) = e / (r sqrt(r) sqrt(2r-1)) * ((2r-1)^2 / (r^2 p_tp))^r.
inline double log_chernoff_constant(const ClickModel& model, std::uint64_t r)
{
    if (r < 1) throw InvalidParameter("r must be >= 1");
    if (!(model.p_tp > 0.0)) throw InvalidParameter("p_tp must be > 0");
    const double rd = static_cast<double>(r);
    const double two_r_1 = 2.0 * rd - 1.0;
    return 1.0 - 1.5 * std::log(rd) - 0.5 * std::log(two_r_1)
           + rd * (2.0 * std::log(two_r_1) - 2.0 * std::log(rd) - std::log(model.p_tp));
}

inline double chernoff_constant(const ClickModel& model, std::uint64_t r)
{
    return std::exp(log_chernoff_constant(model, r));
}

/// Union bound over the d-1 empty positions: (d-1) C(r) p_fp^r, which is
/// (d-1) C(r) / m^r at the default rate. Returned unclamped; zero for m = inf.
inline double r_click_error_bound(const ChannelParams& params, const ClickModel& model,
                                  std::uint64_t r)
{
    if (params.m.is_infinite() || model.p_fp == 0.0) return 0.0;
    const double log_bound = std::log(params.d - 1.0) + log_chernoff_constant(model, r)
                             + static_cast<double>(r) * std::log(model.p_fp);
    return std::exp(log_bound);
}

}  // namespace qtf
