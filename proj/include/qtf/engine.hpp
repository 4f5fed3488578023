// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo simulation of the sequential click race over d positions.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "qtf/model.hpp"
#include "qtf/philox.hpp"

namespace qtf {

class IncompatibleCampaigns : public Error {
  public:
    using Error::Error;
};

enum class Verdict { Correct, WrongPosition, Tie, Exhausted };

inline const char* to_string(Verdict v)
{
    switch (v) {
    case Verdict::Correct: return "correct";
    case Verdict::WrongPosition: return "wrong_position";
    case Verdict::Tie: return "tie";
    case Verdict::Exhausted: return "exhausted";
    }
    return "?";
}

inline bool is_error(Verdict v) { return v != Verdict::Correct; }

struct TrialRecord {
    Verdict verdict = Verdict::Correct;
    std::uint64_t transmissions = 0;
    std::uint64_t photons = 0;  // transmissions * d
};

/// Simulates one trial. The target sits at position 0; positions 1..d-1 are
/// empty. Each transmission draws Bernoulli(p_tp) for the target and
/// Bernoulli(p_fp) for every empty position. A race ends on the first
/// transmission where some counter reaches the threshold; two or more
/// counters reaching it together is a tie.
///
/// Inputs are assumed validated (validate(model), validate_rule).
inline TrialRecord run_trial(const ClickModel& model, std::uint32_t d, const DecisionRule& rule,
                             TrialStream& stream)
{
    TrialRecord rec;
    const bool empty_positions_click = model.p_fp > 0.0;

    if (const auto* fixed = std::get_if<FixedShots>(&rule)) {
        bool hit = false;
        for (std::uint64_t t = 0; t < fixed->n_s; ++t)
            hit = stream.bernoulli(t, 0, model.p_tp) || hit;
        rec.verdict = hit ? Verdict::Correct : Verdict::Exhausted;
        rec.transmissions = fixed->n_s;
        rec.photons = rec.transmissions * d;
        return rec;
    }

    const std::uint64_t threshold = click_threshold(rule);
    std::uint64_t limit = 0;  // 0 = unlimited
    if (const auto* trunc = std::get_if<TruncatedFirstClick>(&rule)) limit = trunc->n_max;

    std::vector<std::uint64_t> counts(threshold > 1 ? d : 0, 0);
    for (std::uint64_t t = 0;; ++t) {
        unsigned reached = 0;
        bool target_reached = false;
        const std::uint32_t active = empty_positions_click ? d : 1;
        for (std::uint32_t pos = 0; pos < active; ++pos) {
            const double p = pos == 0 ? model.p_tp : model.p_fp;
            if (!stream.bernoulli(t, pos, p)) continue;
            if (threshold > 1 && ++counts[pos] < threshold) continue;
            ++reached;
            if (pos == 0) target_reached = true;
        }
        rec.transmissions = t + 1;
        if (reached > 0) {
            if (reached > 1) rec.verdict = Verdict::Tie;
            else rec.verdict = target_reached ? Verdict::Correct : Verdict::WrongPosition;
            break;
        }
        if (limit != 0 && rec.transmissions == limit) {
            rec.verdict = Verdict::Exhausted;
            break;
        }
    }
    rec.photons = rec.transmissions * d;
    return rec;
}

/// Wilson score interval for k successes out of n.
inline std::pair<double, double> wilson_interval(std::uint64_t k, std::uint64_t n, double z = 1.96)
{
    if (n == 0) return {0.0, 1.0};
    const double nd = static_cast<double>(n);
    const double phat = static_cast<double>(k) / nd;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nd;
    const double center = (phat + z2 / (2.0 * nd)) / denom;
    const double half = z / denom * std::sqrt(phat * (1.0 - phat) / nd + z2 / (4.0 * nd * nd));
    double lo = std::max(0.0, center - half);
    double hi = std::min(1.0, center + half);
    // Guard the invariant lo <= phat <= hi against rounding at k = 0 or n.
    return {std::min(lo, phat), std::max(hi, phat)};
}

/// Raw integer tallies behind a summary; summing them is exact, which is
/// what makes campaigns independent of the worker split.
struct CampaignTally {
    std::uint64_t trials = 0;
    std::uint64_t correct = 0;
    std::uint64_t wrong_position = 0;
    std::uint64_t ties = 0;
    std::uint64_t exhausted = 0;
    std::uint64_t transmissions = 0;
    std::uint64_t transmissions_sq = 0;

    void add(const TrialRecord& rec)
    {
        ++trials;
        switch (rec.verdict) {
        case Verdict::Correct: ++correct; break;
        case Verdict::WrongPosition: ++wrong_position; break;
        case Verdict::Tie: ++ties; break;
        case Verdict::Exhausted: ++exhausted; break;
        }
        transmissions += rec.transmissions;
        transmissions_sq += rec.transmissions * rec.transmissions;
    }

    CampaignTally& operator+=(const CampaignTally& o)
    {
        trials += o.trials;
        correct += o.correct;
        wrong_position += o.wrong_position;
        ties += o.ties;
        exhausted += o.exhausted;
        transmissions += o.transmissions;
        transmissions_sq += o.transmissions_sq;
        return *this;
    }

    std::uint64_t errors() const { return wrong_position + ties + exhausted; }

    friend bool operator==(const CampaignTally&, const CampaignTally&) = default;
};

struct CampaignSummary {
    std::uint64_t trials = 0;
    std::uint64_t errors = 0;
    double error_rate = 0.0;
    double ci_low = 0.0;
    double ci_high = 1.0;
    double mean_transmissions = 0.0;
    double mean_photons = 0.0;
    // Normal-approximation interval on mean_transmissions at the same z.
    double transmissions_ci_low = 0.0;
    double transmissions_ci_high = 0.0;
    std::uint64_t seed = 0;
    DecisionRule rule = FirstClick{};
    ClickModel model;
    std::uint32_t d = 2;
    double z = 1.96;
    std::uint64_t first_trial = 0;  // trials cover [first_trial, first_trial + trials)
    CampaignTally tally;

    friend bool operator==(const CampaignSummary&, const CampaignSummary&) = default;
};

/// Fills in every derived field of a summary from its tally.
inline CampaignSummary summarize(const CampaignTally& tally, const ClickModel& model,
                                 std::uint32_t d, const DecisionRule& rule, std::uint64_t seed,
                                 double z, std::uint64_t first_trial)
{
    CampaignSummary s;
    s.tally = tally;
    s.trials = tally.trials;
    s.errors = tally.errors();
    s.seed = seed;
    s.rule = rule;
    s.model = model;
    s.d = d;
    s.z = z;
    s.first_trial = first_trial;
    if (tally.trials == 0) return s;

    const double n = static_cast<double>(tally.trials);
    s.error_rate = static_cast<double>(s.errors) / n;
    std::tie(s.ci_low, s.ci_high) = wilson_interval(s.errors, tally.trials, z);
    s.mean_transmissions = static_cast<double>(tally.transmissions) / n;
    s.mean_photons = s.mean_transmissions * d;

    double var = 0.0;
    if (tally.trials > 1) {
        const double sq = static_cast<double>(tally.transmissions_sq);
        var = std::max(0.0, (sq - n * s.mean_transmissions * s.mean_transmissions) / (n - 1.0));
    }
    const double half = z * std::sqrt(var / n);
    s.transmissions_ci_low = s.mean_transmissions - half;
    s.transmissions_ci_high = s.mean_transmissions + half;
    return s;
}

struct CampaignOptions {
    std::uint64_t trials = 1;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    double z = 1.96;
    std::uint64_t first_trial = 0;
};

/// Runs trials [first_trial, first_trial + trials). Trial i draws only from
/// TrialStream(seed, i), and the per-worker tallies are integer sums, so the
/// summary is bit-identical for every worker count.
inline CampaignSummary run_campaign(const ClickModel& model, std::uint32_t d,
                                    const DecisionRule& rule, const CampaignOptions& opts)
{
    validate(model);
    validate_rule(rule, model);
    if (d < 2) throw InvalidParameter("d must be >= 2");
    if (opts.trials < 1) throw InvalidParameter("trials must be >= 1");
    if (opts.workers < 1) throw InvalidParameter("workers must be >= 1");
    if (!(opts.z > 0.0)) throw InvalidParameter("z must be > 0");

    const std::uint64_t workers = std::min<std::uint64_t>(opts.workers, opts.trials);
    std::vector<CampaignTally> partial(workers);
    auto run_chunk = [&](std::uint64_t w) {
        const std::uint64_t begin = opts.first_trial + opts.trials * w / workers;
        const std::uint64_t end = opts.first_trial + opts.trials * (w + 1) / workers;
        CampaignTally tally;
        for (std::uint64_t i = begin; i < end; ++i) {
            TrialStream stream(opts.seed, i);
            tally.add(run_trial(model, d, rule, stream));
        }
        partial[w] = tally;
    };

    if (workers == 1) {
        run_chunk(0);
    } else {
        std::vector<std::jthread> threads;
        threads.reserve(workers);
        for (std::uint64_t w = 0; w < workers; ++w) threads.emplace_back(run_chunk, w);
    }

    CampaignTally total;
    for (const auto& t : partial) total += t;
    return summarize(total, model, d, rule, opts.seed, opts.z, opts.first_trial);
}

inline CampaignSummary run_campaign(const ClickModel& model, std::uint32_t d,
                                    const DecisionRule& rule, std::uint64_t trials,
                                    std::uint64_t seed, unsigned workers = 1)
{
    return run_campaign(model, d, rule, CampaignOptions{trials, seed, workers});
}

/// Pools two campaigns of the same configuration and seed that cover
/// adjacent trial ranges. A summary with zero trials is the identity.
inline CampaignSummary merge_summaries(const CampaignSummary& a, const CampaignSummary& b)
{
    if (b.trials == 0) return a;
    if (a.trials == 0) return b;
    if (!(a.model == b.model) || a.rule != b.rule || a.d != b.d || a.z != b.z)
        throw IncompatibleCampaigns("merge_summaries: model, rule, d or z differ");
    if (a.seed != b.seed)
        throw IncompatibleCampaigns("merge_summaries: seeds differ (" + std::to_string(a.seed)
                                    + " vs " + std::to_string(b.seed) + ")");
    const CampaignSummary& lo = a.first_trial <= b.first_trial ? a : b;
    const CampaignSummary& hi = a.first_trial <= b.first_trial ? b : a;
    if (lo.first_trial + lo.trials != hi.first_trial)
        throw IncompatibleCampaigns("merge_summaries: trial ranges are not adjacent");

    CampaignTally total = lo.tally;
    total += hi.tally;
    return summarize(total, a.model, a.d, a.rule, a.seed, a.z, lo.first_trial);
}

}  // namespace qtf
