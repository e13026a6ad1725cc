#include "storyaug/sampler.hpp"

#include "storyaug/errors.hpp"
#include "storyaug/random.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

namespace storyaug {

BudgetSpec BudgetSpec::custom(std::int64_t words) {
    if (words <= 0) throw InvalidArgument("budget_words must be positive");
    return {Track::custom, words};
}

BudgetSpec BudgetSpec::parse(const std::string &text) {
    if (text == "10M" || text == "strict-small" || text == "strict_small") return strict_small();
    if (text == "100M" || text == "strict") return strict();
    if (text.empty()) throw InvalidArgument("empty budget");
    std::int64_t mult = 1;
    std::string digits = text;
    const char last = static_cast<char>(std::toupper(static_cast<unsigned char>(text.back())));
    if (last == 'M' || last == 'K') {
        mult = last == 'M' ? 1'000'000 : 1'000;
        digits.pop_back();
    }
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
        throw InvalidArgument("cannot parse budget '" + text + "'");
    return custom(std::stoll(digits) * mult);
}

std::string_view to_string(Track t) {
    switch (t) {
    case Track::strict_small: return "strict_small";
    case Track::strict: return "strict";
    case Track::custom: return "custom";
    }
    return "custom";
}

Corpus sample_budget(const Corpus &corpus, std::int64_t target_words, std::uint64_t seed) {
    if (target_words < 0) throw InvalidArgument("target_words must be non-negative");
    const auto &docs = corpus.documents();
    std::vector<std::size_t> order(docs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));

    std::vector<Document> picked;
    std::int64_t total = 0;
    for (std::size_t idx : order) {
        if (total == target_words) break;
        const auto &d = docs[idx];
        if (total + d.word_count() > target_words) continue;
        total += d.word_count();
        picked.push_back(d.provenance() == Provenance::generated ? d : d.with_provenance(Provenance::sampled));
    }
    return Corpus(std::move(picked), std::nullopt, seed);
}

Corpus combine(const std::vector<CorpusPart> &parts, const BudgetSpec &budget) {
    if (parts.empty()) throw InvalidArgument("combine needs at least one part");
    if (budget.budget_words <= 0) throw InvalidArgument("budget_words must be positive");
    std::vector<Document> docs;
    CorpusManifest manifest;
    for (const auto &part : parts) {
        const std::size_t first_entry = manifest.entries.size();
        for (const auto &d : part.corpus.documents()) {
            auto it = std::find_if(manifest.entries.begin() + static_cast<std::ptrdiff_t>(first_entry),
                                   manifest.entries.end(),
                                   [&](const ManifestEntry &e) { return e.source == d.source(); });
            if (it == manifest.entries.end()) {
                manifest.entries.push_back({d.source(), 0, part.provenance, part.label});
                it = std::prev(manifest.entries.end());
            }
            it->word_count += d.word_count();
            docs.push_back(d.with_provenance(part.provenance));
        }
    }
    for (const auto &e : manifest.entries) {
        manifest.total_words += e.word_count;
        if (e.provenance != Provenance::generated) manifest.nongenerated_words += e.word_count;
    }
    if (manifest.nongenerated_words > budget.budget_words)
        throw BudgetExceeded(manifest.nongenerated_words, budget.budget_words);
    manifest.budget = budget.budget_words;
    return Corpus(std::move(docs), std::move(manifest));
}

} // namespace storyaug
