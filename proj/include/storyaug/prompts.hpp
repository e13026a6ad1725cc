#pragma once

#include "storyaug/corpus.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace storyaug {

struct TruncationBounds {
    double low = 0.15;
    double high = 0.30;
};

struct StoryPrompt {
    std::string story_id;
    std::string prompt_text;
    double ratio = 0.0;
    std::int64_t prompt_words = 0;
    std::int64_t original_words = 0;

    friend bool operator==(const StoryPrompt &, const StoryPrompt &) = default;
};

inline constexpr std::int64_t kMinStoryWords = 4;

/// Keeps the first round(r * words) words (clamped to [1, words - 1]) with r
/// uniform in [low, high]. Throws StoryTooShort below four words.
StoryPrompt truncate_story(const Document &doc, const TruncationBounds &bounds, std::uint64_t seed);

struct PromptSet {
    std::vector<StoryPrompt> prompts; // sorted by story_id
    std::size_t skipped = 0;
};

/// One prompt per eligible document. Each document's seed is derived from
/// (seed, id), so the result does not depend on corpus order.
PromptSet build_prompt_set(const Corpus &corpus, const TruncationBounds &bounds, std::uint64_t seed);

void write_prompts(const std::vector<StoryPrompt> &prompts, const std::filesystem::path &path);
std::vector<StoryPrompt> read_prompts(const std::filesystem::path &path);

} // namespace storyaug
