#pragma once

#include "storyaug/corpus.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace storyaug {

enum class Track { strict_small, strict, custom };

struct BudgetSpec {
    Track track = Track::strict_small;
    std::int64_t budget_words = 10'000'000;

    static BudgetSpec strict_small() { return {Track::strict_small, 10'000'000}; }
    static BudgetSpec strict() { return {Track::strict, 100'000'000}; }
    static BudgetSpec custom(std::int64_t words);

    /// Accepts "10M", "100M", a plain integer, or an integer with K/M suffix.
    static BudgetSpec parse(const std::string &text);
};

std::string_view to_string(Track t);

/// Seeded document-level subset: shuffle, then take every document that still
/// fits under target_words (overflowing documents are skipped, not a stop).
/// Sampled documents get provenance `sampled` unless they were generated.
Corpus sample_budget(const Corpus &corpus, std::int64_t target_words, std::uint64_t seed);

struct CorpusPart {
    Corpus corpus;
    Provenance provenance = Provenance::original;
    std::string label;
};

/// Concatenates the parts, recording one manifest entry per part, and checks that
/// the non-generated words fit the budget. Throws BudgetExceeded.
Corpus combine(const std::vector<CorpusPart> &parts, const BudgetSpec &budget);

} // namespace storyaug
