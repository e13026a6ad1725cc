#include "support.hpp"

#include "storyaug/errors.hpp"
#include "storyaug/prompts.hpp"
#include "storyaug/random.hpp"

#include <doctest.h>

#include <cmath>

using namespace storyaug;

namespace {

Document story(const std::string &id, int words) {
    std::string text;
    for (int i = 0; i < words; ++i) {
        if (i) text += (i % 9 == 0) ? " [PAR] " : " ";
        text += "w" + std::to_string(i);
    }
    return Document(id, Source::tinystories(), text);
}

} // namespace

TEST_CASE("truncation keeps a word prefix within the ratio bounds") {
    const Document d = story("s", 100);
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const StoryPrompt p = truncate_story(d, {}, seed);
        CHECK(p.prompt_words >= 15);
        CHECK(p.prompt_words <= 30);
        CHECK(p.ratio >= 0.15);
        CHECK(p.ratio <= 0.30);
        CHECK(p.original_words == 100);
        CHECK(count_words(p.prompt_text) == p.prompt_words);
        CHECK(d.text().compare(0, p.prompt_text.size(), p.prompt_text) == 0);
        CHECK(p.prompt_text.back() != ' ');
        CHECK(p.prompt_text.substr(p.prompt_text.size() - std::min<std::size_t>(5, p.prompt_text.size())) != "[PAR]");
    }
}

TEST_CASE("truncation of short stories") {
    CHECK_THROWS_AS(truncate_story(story("s", 3), {}, 1), StoryTooShort);
    const StoryPrompt p = truncate_story(story("s", 4), {}, 1);
    CHECK(p.prompt_words == 1);
    CHECK(p.prompt_text == "w0");
    CHECK_THROWS_AS(truncate_story(story("s", 10), {0.5, 0.4}, 1), InvalidArgument);
    CHECK_THROWS_AS(truncate_story(story("s", 10), {0.0, 0.4}, 1), InvalidArgument);
}

TEST_CASE("truncation matches round(r * words) with clamping") {
    Rng rng(5);
    for (int trial = 0; trial < 2000; ++trial) {
        const int n = 4 + static_cast<int>(rng.below(300));
        const std::uint64_t seed = rng.next_u64();
        const StoryPrompt p = truncate_story(story("s", n), {}, seed);
        Rng replay(seed);
        const double r = replay.uniform(0.15, 0.30);
        const auto expect = std::max<std::int64_t>(1, std::min<std::int64_t>(n - 1, std::llround(r * n)));
        CHECK(p.prompt_words == expect);
        CHECK(p.ratio == r);
    }
}

TEST_CASE("prompt sets are order independent and skip short stories") {
    std::vector<Document> docs = {story("c", 50), story("a", 40), story("b", 2), story("d", 60)};
    std::vector<Document> reversed(docs.rbegin(), docs.rend());
    const PromptSet x = build_prompt_set(Corpus(docs), {}, 9);
    const PromptSet y = build_prompt_set(Corpus(reversed), {}, 9);
    CHECK(x.prompts == y.prompts);
    CHECK(x.skipped == 1);
    REQUIRE(x.prompts.size() == 3);
    CHECK(x.prompts[0].story_id == "a");
    CHECK(x.prompts[2].story_id == "d");
    CHECK(build_prompt_set(Corpus(docs), {}, 10).prompts != x.prompts);
}

TEST_CASE("prompts round-trip through disk") {
    test::TempDir dir;
    const PromptSet x = build_prompt_set(Corpus(std::vector<Document>{story("a", 40), story("b", 70)}), {}, 3);
    write_prompts(x.prompts, dir / "p.jsonl");
    CHECK(read_prompts(dir / "p.jsonl") == x.prompts);
}
