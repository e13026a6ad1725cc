#pragma once

#include "storyaug/model.hpp"

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace storyaug {

enum class Suite { blimp, blimp_supplement, ewok, custom };

std::string_view to_string(Suite s);
Suite parse_suite(std::string_view s);

struct MinimalPair {
    std::string uid;
    std::string good_text;
    std::string bad_text;
    std::string group; // BLiMP phenomenon or EWoK domain
    Suite suite = Suite::custom;
};

struct GroupResult {
    std::int64_t correct = 0;
    std::int64_t total = 0;
    double accuracy = 0.0;

    friend bool operator==(const GroupResult &, const GroupResult &) = default;
};

struct EvalReport {
    std::map<std::string, GroupResult> per_group;
    double macro_average = 0.0; // unweighted mean over groups
    double micro_average = 0.0; // pooled over pairs
    std::string scorer_id;
    std::int64_t tie_count = 0;

    friend bool operator==(const EvalReport &, const EvalReport &) = default;
};

/// Line-delimited JSON records {uid, good, bad, group}. EWoK items are expected
/// already flattened to full context+target texts.
/// Throws MalformedRecord (good == bad, missing fields), EmptySuite.
std::vector<MinimalPair> load_pairs(const std::filesystem::path &path, Suite suite);

/// A pair is correct iff log_prob(good) > log_prob(bad); exact ties count as
/// incorrect and are tallied. Scoring fans out over pairs.
/// Scorer failures are rethrown as PairScoringError carrying the uid.
EvalReport score_pairs(const Scorer &scorer, std::span<const MinimalPair> pairs);

/// Report from precomputed (good, bad) scores, shared by the parallel and serial paths.
EvalReport tally_pairs(std::span<const MinimalPair> pairs, std::span<const double> good, std::span<const double> bad,
                       std::string scorer_id);

/// Fixed-width table with one row per group and an accuracy row.
std::string render_report(const EvalReport &report);

namespace reference {

/// Serial scoring of every pair in order.
EvalReport score_pairs(const Scorer &scorer, std::span<const MinimalPair> pairs);

} // namespace reference

} // namespace storyaug
