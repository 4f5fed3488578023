// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "qtf/analytic.hpp"
#include "qtf/engine.hpp"

using namespace qtf;

namespace {

bool ci_contains(const CampaignSummary& s, double v) { return s.ci_low <= v && v <= s.ci_high; }

bool mean_ci_contains(const CampaignSummary& s, double v)
{
    return s.transmissions_ci_low <= v && v <= s.transmissions_ci_high;
}

// Containment checks use z = 3.5 so fixed seeds do not sit at the 5% edge.
CampaignOptions loose(std::uint64_t trials, std::uint64_t seed, unsigned workers)
{
    CampaignOptions o;
    o.trials = trials;
    o.seed = seed;
    o.workers = workers;
    o.z = 3.5;
    return o;
}

// Tolerate sampling noise at ~4 sigma for the property sweeps below.
CampaignOptions wide(std::uint64_t trials, std::uint64_t seed)
{
    CampaignOptions o;
    o.trials = trials;
    o.seed = seed;
    o.z = 4.0;
    return o;
}

}  // namespace

TEST(RunTrial, DeterministicSuccess)
{
    TrialStream stream(1, 0);
    for (std::uint32_t d : {2u, 5u}) {
        auto rec = run_trial({1.0, 0.0}, d, RClicks{3}, stream);
        EXPECT_EQ(rec.verdict, Verdict::Correct);
        EXPECT_EQ(rec.transmissions, 3u);
        EXPECT_EQ(rec.photons, 3u * d);
    }
}

TEST(RunTrial, FixedShotsRunsEveryTransmission)
{
    for (std::uint64_t i = 0; i < 200; ++i) {
        TrialStream stream(5, i);
        auto rec = run_trial({0.3, 0.0}, 4, FixedShots{6}, stream);
        EXPECT_EQ(rec.transmissions, 6u);
        EXPECT_EQ(rec.photons, 24u);
        EXPECT_TRUE(rec.verdict == Verdict::Correct || rec.verdict == Verdict::Exhausted);
    }
}

TEST(RunTrial, VerdictsRespectRule)
{
    for (std::uint64_t i = 0; i < 2000; ++i) {
        TrialStream s1(3, i);
        auto fc = run_trial({0.2, 0.05}, 3, FirstClick{}, s1);
        EXPECT_NE(fc.verdict, Verdict::Exhausted);
        TrialStream s2(3, i);
        auto tr = run_trial({0.2, 0.05}, 3, TruncatedFirstClick{4}, s2);
        EXPECT_LE(tr.transmissions, 4u);
        if (tr.verdict == Verdict::Exhausted) {
            EXPECT_EQ(tr.transmissions, 4u);
        }
        // The truncated race agrees with the full race whenever it finishes.
        if (tr.verdict != Verdict::Exhausted) {
            EXPECT_EQ(tr.verdict, fc.verdict);
            EXPECT_EQ(tr.transmissions, fc.transmissions);
        }
        TrialStream s3(3, i);
        auto rc = run_trial({0.2, 0.05}, 3, RClicks{2}, s3);
        EXPECT_NE(rc.verdict, Verdict::Exhausted);
        EXPECT_GE(rc.transmissions, 2u);
        EXPECT_EQ(rc.photons, rc.transmissions * 3);
    }
}

TEST(Wilson, Interval)
{
    auto [lo, hi] = wilson_interval(0, 100);
    EXPECT_EQ(lo, 0.0);
    EXPECT_GT(hi, 0.0);
    auto [lo2, hi2] = wilson_interval(100, 100);
    EXPECT_LT(lo2, 1.0);
    EXPECT_EQ(hi2, 1.0);
    // Reference: k=30, n=100, z=1.96 -> (0.2189, 0.3958)
    auto [lo3, hi3] = wilson_interval(30, 100);
    EXPECT_NEAR(lo3, 0.21892, 1e-4);
    EXPECT_NEAR(hi3, 0.39582, 1e-4);
}

TEST(Campaign, FirstClickRaceMatchesConditioningOracle)
{
    const double exact = oracle::first_click_race_error(0.5, 0.1, 2);
    EXPECT_NEAR(exact, 2.0 / 11.0, 1e-15);
    auto s = run_campaign({0.5, 0.1}, 2, FirstClick{}, loose(100000, 11, 2));
    EXPECT_TRUE(ci_contains(s, exact)) << s.error_rate;
    EXPECT_TRUE(mean_ci_contains(s, oracle::first_click_mean_transmissions(0.5, 0.1, 2)));
}

TEST(Campaign, RClickRaceMatchesExactChain)
{
    for (unsigned r : {1u, 2u, 3u}) {
        auto exact = oracle::two_position_r_click_race(0.3, 0.1, r);
        auto s = run_campaign({0.3, 0.1}, 2, RClicks{r}, loose(100000, 100 + r, 2));
        EXPECT_TRUE(ci_contains(s, exact.error)) << r << ": " << s.error_rate << " vs " << exact.error;
        EXPECT_TRUE(mean_ci_contains(s, exact.mean_transmissions))
            << r << ": " << s.mean_transmissions << " vs " << exact.mean_transmissions;
    }
}

TEST(Campaign, TruncatedMatchesClosedForm)
{
    auto s = run_campaign({0.1, 0.0}, 5, TruncatedFirstClick{20}, loose(100000, 7, 3));
    EXPECT_TRUE(ci_contains(s, truncated_error({0.1, 0.0}, 20))) << s.error_rate;
    EXPECT_EQ(s.tally.ties, 0u);
    EXPECT_EQ(s.tally.wrong_position, 0u);
}

TEST(Campaign, GeometricMeanTransmissions)
{
    auto s = run_campaign({1.0 / 3.0, 0.0}, 3, FirstClick{}, loose(100000, 5, 1));
    EXPECT_TRUE(mean_ci_contains(s, 3.0)) << s.mean_transmissions;
    EXPECT_EQ(s.errors, 0u);
    EXPECT_DOUBLE_EQ(s.mean_photons, s.mean_transmissions * 3);
}

TEST(Campaign, FixedShotsMatchesClosedForm)
{
    for (std::uint64_t n : {1u, 3u, 8u}) {
        auto s = run_campaign({1.0 / 3.0, 0.0}, 4, FixedShots{n}, wide(40000, n));
        EXPECT_TRUE(ci_contains(s, dv_fixed_shot_error({1.0 / 3.0, 0.0}, n))) << n;
    }
}

TEST(Campaign, NoTiesWithoutFalsePositives)
{
    for (std::uint64_t r : {1u, 2u, 4u}) {
        auto s = run_campaign({0.4, 0.0}, 6, RClicks{r}, loose(20000, r, 2));
        EXPECT_EQ(s.tally.ties, 0u);
        EXPECT_EQ(s.errors, 0u);
        EXPECT_TRUE(mean_ci_contains(s, expected_transmissions({0.4, 0.0}, r)));
    }
}

TEST(Campaign, BoundsDominateSimulation)
{
    for (std::uint64_t m : {10u, 30u, 100u})
        for (std::uint32_t d : {2u, 4u})
            for (double p : {0.3, 0.5}) {
                ChannelParams ch;
                ch.eta = p;
                ch.d = d;
                ch.m = ModeCount::finite(m);
                auto model = derive_click_model(ch);
                auto fc = run_campaign(model, d, FirstClick{}, wide(20000, m * d));
                EXPECT_LE(fc.ci_low, first_click_error_bound(ch, model));
                auto rc = run_campaign(model, d, RClicks{1}, wide(20000, m * d + 1));
                EXPECT_LE(rc.ci_low, std::min(1.0, r_click_error_bound(ch, model, 1)));
                auto r2 = run_campaign(model, d, RClicks{2}, wide(20000, m * d + 2));
                EXPECT_LE(r2.ci_low, std::min(1.0, r_click_error_bound(ch, model, 2)));
            }
}

TEST(Campaign, RClickRaceCanExceedChernoffBound)
{
    ChannelParams ch;
    ch.eta = 0.3;
    ch.d = 2;
    ch.m = ModeCount::finite(100);
    auto model = derive_click_model(ch);
    const double bound = r_click_error_bound(ch, model, 3);
    auto exact = oracle::two_position_r_click_race(0.3, 0.01, 3);
    EXPECT_GT(exact.error, 1.15 * bound);
    auto s = run_campaign(model, 2, RClicks{3}, loose(4'000'000, 9, 4));
    EXPECT_TRUE(ci_contains(s, exact.error)) << s.error_rate << " vs " << exact.error;
    EXPECT_GT(s.ci_low, bound);
}

TEST(Campaign, SummaryInvariants)
{
    auto s = run_campaign({0.2, 0.05}, 3, RClicks{2}, loose(5000, 17, 3));
    EXPECT_EQ(s.trials, 5000u);
    EXPECT_LE(s.errors, s.trials);
    EXPECT_LE(s.ci_low, s.error_rate);
    EXPECT_LE(s.error_rate, s.ci_high);
    EXPECT_DOUBLE_EQ(s.mean_photons, s.mean_transmissions * 3);
    EXPECT_EQ(s.tally.correct + s.errors, s.trials);
}

TEST(Campaign, IndependentOfWorkerCount)
{
    const ClickModel model{0.25, 0.02};
    for (const DecisionRule& rule : {DecisionRule{FirstClick{}}, DecisionRule{RClicks{3}},
                                     DecisionRule{TruncatedFirstClick{5}}}) {
        auto one = run_campaign(model, 5, rule, loose(30001, 99, 1));
        for (unsigned w : {2u, 3u, 8u, 64u}) {
            auto many = run_campaign(model, 5, rule, loose(30001, 99, w));
            EXPECT_EQ(one, many) << rule_name(rule) << " workers=" << w;
        }
    }
}

TEST(Campaign, RejectsInvalidInput)
{
    EXPECT_THROW(run_campaign({0.2, 0.1}, 2, FixedShots{3}, 10, 1), UnsupportedCombination);
    EXPECT_THROW(run_campaign({0.0, 0.0}, 2, FirstClick{}, 10, 1), InvalidParameter);
    EXPECT_THROW(run_campaign({0.2, 0.0}, 1, FirstClick{}, 10, 1), InvalidParameter);
    EXPECT_THROW(run_campaign({0.2, 0.0}, 2, FirstClick{}, 0, 1), InvalidParameter);
}

TEST(Merge, IdentityAndAssociativity)
{
    const ClickModel model{0.3, 0.05};
    auto part = [&](std::uint64_t first, std::uint64_t n) {
        CampaignOptions o{n, 1234, 2};
        o.first_trial = first;
        return run_campaign(model, 3, RClicks{2}, o);
    };
    auto a = part(0, 1000);
    auto b = part(1000, 2500);
    auto c = part(3500, 700);
    EXPECT_EQ(merge_summaries(a, CampaignSummary{}), a);
    EXPECT_EQ(merge_summaries(CampaignSummary{}, a), a);
    EXPECT_EQ(merge_summaries(merge_summaries(a, b), c), merge_summaries(a, merge_summaries(b, c)));
    EXPECT_EQ(merge_summaries(a, b), merge_summaries(b, a));
    EXPECT_EQ(merge_summaries(merge_summaries(a, b), c), part(0, 4200));
}

TEST(Merge, HalvesEqualWhole)
{
    const ClickModel model{0.1, 0.0};
    CampaignOptions first{50000, 77, 1};
    CampaignOptions second{50000, 77, 4};
    second.first_trial = 50000;
    auto whole = run_campaign(model, 5, TruncatedFirstClick{20}, CampaignOptions{100000, 77, 3});
    auto merged = merge_summaries(run_campaign(model, 5, TruncatedFirstClick{20}, first),
                                  run_campaign(model, 5, TruncatedFirstClick{20}, second));
    EXPECT_EQ(merged, whole);
}

TEST(Merge, RejectsIncompatible)
{
    auto a = run_campaign({0.3, 0.05}, 3, FirstClick{}, 100, 1);
    auto other_seed = run_campaign({0.3, 0.05}, 3, FirstClick{}, 100, 2);
    auto other_rule = run_campaign({0.3, 0.05}, 3, RClicks{2}, 100, 1);
    auto other_d = run_campaign({0.3, 0.05}, 4, FirstClick{}, 100, 1);
    EXPECT_THROW(merge_summaries(a, other_seed), IncompatibleCampaigns);
    EXPECT_THROW(merge_summaries(a, other_rule), IncompatibleCampaigns);
    EXPECT_THROW(merge_summaries(a, other_d), IncompatibleCampaigns);
    // Same trial range twice would double count.
    EXPECT_THROW(merge_summaries(a, a), IncompatibleCampaigns);
}
