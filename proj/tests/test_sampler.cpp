#include "storyaug/errors.hpp"
#include "storyaug/sampler.hpp"

#include <doctest.h>

#include <set>

using namespace storyaug;

namespace {

Corpus make_corpus(const std::string &prefix, Source source, int n_docs, int words_each,
                   Provenance prov = Provenance::original) {
    std::vector<Document> docs;
    std::string text;
    for (int w = 0; w < words_each; ++w) text += (w ? " w" : "w") + std::to_string(w % 17);
    for (int i = 0; i < n_docs; ++i) docs.emplace_back(prefix + std::to_string(i), source, text, prov);
    return Corpus(std::move(docs));
}

Corpus varied_corpus(int n) {
    std::vector<Document> docs;
    for (int i = 0; i < n; ++i) {
        std::string text = "a";
        for (int w = 1; w < 1 + (i * 7) % 23; ++w) text += " b";
        docs.emplace_back("d" + std::to_string(i), Source::tinystories(), text);
    }
    return Corpus(std::move(docs));
}

} // namespace

TEST_CASE("budget spec parsing") {
    CHECK(BudgetSpec::parse("10M").budget_words == 10'000'000);
    CHECK(BudgetSpec::parse("10M").track == Track::strict_small);
    CHECK(BudgetSpec::parse("100M").track == Track::strict);
    CHECK(BudgetSpec::parse("5M").budget_words == 5'000'000);
    CHECK(BudgetSpec::parse("250k").budget_words == 250'000);
    CHECK(BudgetSpec::parse("1234").budget_words == 1234);
    CHECK_THROWS_AS(BudgetSpec::parse("M"), InvalidArgument);
    CHECK_THROWS_AS(BudgetSpec::parse("-5"), InvalidArgument);
    CHECK_THROWS_AS(BudgetSpec::custom(0), InvalidArgument);
}

TEST_CASE("sample_budget is seeded and never overshoots") {
    const Corpus c = varied_corpus(500);
    for (std::int64_t target : {0, 1, 50, 999, 3000, 100000}) {
        const Corpus s = sample_budget(c, target, 42);
        CHECK(s.total_words() <= target);
        CHECK(s.manifest().seed == std::uint64_t{42});
        for (const auto &d : s.documents()) CHECK(d.provenance() == Provenance::sampled);
        CHECK(sample_budget(c, target, 42) == s);
    }
    // The whole corpus fits: everything is taken.
    CHECK(sample_budget(c, c.total_words(), 1).size() == c.size());
    CHECK(sample_budget(c, 3000, 1).documents() != sample_budget(c, 3000, 2).documents());
}

TEST_CASE("sample_budget reaches the target when small documents allow it") {
    const Corpus c = make_corpus("d", Source::babylm(), 100, 10);
    const Corpus s = sample_budget(c, 500, 3);
    CHECK(s.total_words() == 500);
    CHECK(s.size() == 50);
    std::set<std::string> ids;
    for (const auto &d : s.documents()) ids.insert(d.id());
    CHECK(ids.size() == 50);
}

TEST_CASE("sample_budget keeps generated provenance") {
    const Corpus g = make_corpus("g", Source::generated(), 10, 5, Provenance::generated);
    for (const auto &d : sample_budget(g, 20, 0).documents()) CHECK(d.provenance() == Provenance::generated);
}

TEST_CASE("combine accounts per part and enforces the budget") {
    const Corpus tiny = make_corpus("t", Source::tinystories(), 10, 100);
    const Corpus baby = make_corpus("b", Source::babylm(), 10, 100);
    const Corpus gen = make_corpus("g", Source::generated(), 50, 100, Provenance::generated);
    const Corpus c = combine({{tiny, Provenance::sampled, "tiny"}, {baby, Provenance::sampled, "baby"},
                              {gen, Provenance::generated, "gen"}},
                             BudgetSpec::custom(2000));
    CHECK(c.total_words() == 7000);
    CHECK(c.manifest().nongenerated_words == 2000);
    CHECK(c.manifest().budget == std::int64_t{2000});
    REQUIRE(c.manifest().entries.size() == 3);
    CHECK(c.manifest().entries[0].label == "tiny");
    CHECK(c.manifest().entries[2].provenance == Provenance::generated);
    CHECK(c.manifest().entries[2].word_count == 5000);

    try {
        combine({{tiny, Provenance::sampled, "tiny"}, {baby, Provenance::sampled, "baby"}}, BudgetSpec::custom(1999));
        FAIL("expected BudgetExceeded");
    } catch (const BudgetExceeded &e) {
        CHECK(e.nongenerated_words() == 2000);
        CHECK(e.budget() == 1999);
    }
    CHECK_THROWS_AS(combine({{tiny, Provenance::sampled, "a"}, {tiny, Provenance::sampled, "b"}}, BudgetSpec::custom(5000)),
                    DuplicateId);
    CHECK_THROWS_AS(combine({}, BudgetSpec::custom(10)), InvalidArgument);
}
