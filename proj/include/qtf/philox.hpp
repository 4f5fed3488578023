// SPDX-License-Identifier: Apache-2.0
//
// Philox4x32-10 counter-based generator (Salmon et al., SC'11) and the
// per-trial random stream built on it.
#pragma once

#include <array>
#include <cstdint>

namespace qtf {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

namespace detail {

constexpr std::uint32_t philox_m0 = 0xD2511F53u;
constexpr std::uint32_t philox_m1 = 0xCD9E8D57u;
constexpr std::uint32_t philox_w0 = 0x9E3779B9u;
constexpr std::uint32_t philox_w1 = 0xBB67AE85u;

constexpr PhiloxCounter philox_round(const PhiloxCounter& ctr, const PhiloxKey& key)
{
    const std::uint64_t p0 = static_cast<std::uint64_t>(philox_m0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(philox_m1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

}  // namespace detail

/// One Philox4x32-10 block: a bijection of the counter under the key.
constexpr PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key)
{
    for (int round = 0; round < 10; ++round) {
        ctr = detail::philox_round(ctr, key);
        key[0] += detail::philox_w0;
        key[1] += detail::philox_w1;
    }
    return ctr;
}

/// 53-bit uniform in [0, 1) from two 32-bit words.
constexpr double to_unit_double(std::uint32_t hi, std::uint32_t lo)
{
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
}

/// Random numbers for one simulated trial. Every draw is a pure function of
/// (seed, trial, transmission, position), so results do not depend on how
/// trials are distributed over threads or in which order draws are made.
class TrialStream {
  public:
    TrialStream(std::uint64_t seed, std::uint64_t trial)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          trial_lo_(static_cast<std::uint32_t>(trial)),
          trial_hi_(static_cast<std::uint32_t>(trial >> 32))
    {
    }

    /// Uniform in [0, 1) for `position` at `transmission`. Positions 2j and
    /// 2j+1 share one Philox block.
    double uniform(std::uint64_t transmission, std::uint32_t position)
    {
        const std::uint32_t block = position >> 1;
        if (!cached_ || block != cached_block_ || transmission != cached_transmission_) {
            cache_ = philox4x32(
                {block, static_cast<std::uint32_t>(transmission), trial_lo_, trial_hi_}, key_);
            cached_block_ = block;
            cached_transmission_ = transmission;
            cached_ = true;
        }
        return (position & 1u) ? to_unit_double(cache_[2], cache_[3])
                                : to_unit_double(cache_[0], cache_[1]);
    }

    bool bernoulli(std::uint64_t transmission, std::uint32_t position, double p)
    {
        return uniform(transmission, position) < p;
    }

  private:
    PhiloxKey key_;
    std::uint32_t trial_lo_;
    std::uint32_t trial_hi_;
    PhiloxCounter cache_{};
    std::uint32_t cached_block_ = 0;
    std::uint64_t cached_transmission_ = 0;
    bool cached_ = false;
};

}  // namespace qtf
