// SPDX-License-Identifier: Apache-2.0
//
// Scenario parameters, per-transmission click rates and decision rules for
// sequential target finding with high-dimensional Bell-state probes.
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>

namespace qtf {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
  public:
    using Error::Error;
};

class UnsupportedCombination : public Error {
  public:
    using Error::Error;
};

class FailedToConverge : public Error {
  public:
    using Error::Error;
};

/// Number of entangled modes. Infinite is kept symbolic so that the
/// false-positive rate is exactly zero in that limit.
class ModeCount {
  public:
    static constexpr ModeCount infinite() { return ModeCount{}; }
    static ModeCount finite(std::uint64_t m)
    {
        if (m < 1) throw InvalidParameter("mode count m must be >= 1");
        ModeCount out;
        out.value_ = m;
        return out;
    }

    constexpr bool is_infinite() const { return value_ == 0; }
    constexpr bool is_finite() const { return value_ != 0; }

    std::uint64_t value() const
    {
        if (is_infinite()) throw InvalidParameter("mode count is infinite");
        return value_;
    }

    std::string to_string() const { return is_infinite() ? "inf" : std::to_string(value_); }

    friend constexpr bool operator==(ModeCount, ModeCount) = default;

  private:
    constexpr ModeCount() = default;
    std::uint64_t value_ = 0;  // 0 encodes Infinite
};

struct ChannelParams {
    double eta = 1.0;  // target reflectivity
    double n_b = 0.0;  // thermal photons per mode
    std::uint32_t d = 2;  // candidate positions
    ModeCount m = ModeCount::infinite();

    friend bool operator==(const ChannelParams&, const ChannelParams&) = default;
};

inline void validate(const ChannelParams& params)
{
    if (!(params.eta > 0.0 && params.eta <= 1.0))
        throw InvalidParameter("eta must lie in (0, 1], got " + std::to_string(params.eta));
    if (!(params.n_b >= 0.0) || !std::isfinite(params.n_b))
        throw InvalidParameter("n_b must be a finite value >= 0");
    if (params.d < 2) throw InvalidParameter("d must be >= 2");
}

struct ClickModel {
    double p_tp = 1.0;  // true position clicks
    double p_fp = 0.0;  // any given empty position clicks

    friend bool operator==(const ClickModel&, const ClickModel&) = default;
};

/// Click rates seen by the receiver. The false-positive rate defaults to the
/// worst case 1/m; `p_fp_override` replaces it for finite m only.
inline ClickModel derive_click_model(const ChannelParams& params,
                                     std::optional<double> p_fp_override = std::nullopt)
{
    validate(params);
    ClickModel model;
    model.p_tp = params.eta / (1.0 + params.n_b);
    if (params.m.is_infinite()) {
        model.p_fp = 0.0;
    } else if (p_fp_override) {
        if (!(*p_fp_override >= 0.0 && *p_fp_override < 1.0))
            throw InvalidParameter("p_fp override must lie in [0, 1)");
        model.p_fp = *p_fp_override;
    } else {
        model.p_fp = 1.0 / static_cast<double>(params.m.value());
    }
    return model;
}

inline void validate(const ClickModel& model)
{
    if (!(model.p_tp > 0.0 && model.p_tp <= 1.0)) throw InvalidParameter("p_tp must lie in (0, 1]");
    if (!(model.p_fp >= 0.0 && model.p_fp < 1.0)) throw InvalidParameter("p_fp must lie in [0, 1)");
}

//---------------------------------------------------------------------------//
// Decision rules
//---------------------------------------------------------------------------//

/// Transmit exactly n_s times, report the position that clicked.
struct FixedShots {
    std::uint64_t n_s = 1;
    friend bool operator==(const FixedShots&, const FixedShots&) = default;
};

/// Transmit until some position clicks.
struct FirstClick {
    friend bool operator==(const FirstClick&, const FirstClick&) = default;
};

/// Transmit until some position has accumulated r clicks.
struct RClicks {
    std::uint64_t r = 1;
    friend bool operator==(const RClicks&, const RClicks&) = default;
};

/// FirstClick with at most n_max transmissions.
struct TruncatedFirstClick {
    std::uint64_t n_max = 1;
    friend bool operator==(const TruncatedFirstClick&, const TruncatedFirstClick&) = default;
};

using DecisionRule = std::variant<FixedShots, FirstClick, RClicks, TruncatedFirstClick>;

inline std::string rule_name(const DecisionRule& rule)
{
    return std::visit(
        [](const auto& r) -> std::string {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, FixedShots>) return "fixed_shots";
            else if constexpr (std::is_same_v<T, FirstClick>) return "first_click";
            else if constexpr (std::is_same_v<T, RClicks>) return "r_clicks";
            else return "truncated_first_click";
        },
        rule);
}

/// The rule's integer parameter: n_s, r, n_max, or 1 for FirstClick.
inline std::uint64_t rule_count(const DecisionRule& rule)
{
    return std::visit(
        [](const auto& r) -> std::uint64_t {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, FixedShots>) return r.n_s;
            else if constexpr (std::is_same_v<T, FirstClick>) return 1;
            else if constexpr (std::is_same_v<T, RClicks>) return r.r;
            else return r.n_max;
        },
        rule);
}

/// Click threshold that ends a race (FirstClick and its truncated form use 1).
inline std::uint64_t click_threshold(const DecisionRule& rule)
{
    if (const auto* rc = std::get_if<RClicks>(&rule)) return rc->r;
    return 1;
}

/// Rejects zero counts, and the fixed-shot rule whenever false positives are
/// possible: without the M -> infinity limit it has no defined decision.
inline void validate_rule(const DecisionRule& rule, const ClickModel& model)
{
    if (rule_count(rule) < 1)
        throw InvalidParameter(rule_name(rule) + ": count must be >= 1");
    if (std::holds_alternative<FixedShots>(rule) && model.p_fp > 0.0)
        throw UnsupportedCombination(
            "fixed_shots is only defined without false positives (m = inf), got p_fp = "
            + std::to_string(model.p_fp));
}

}  // namespace qtf
