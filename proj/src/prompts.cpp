#include "storyaug/prompts.hpp"

#include "storyaug/errors.hpp"
#include "storyaug/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace storyaug {

namespace {

bool is_ascii_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// Byte offset just past the n-th counted word of text.
std::size_t prefix_end(std::string_view text, std::int64_t n) {
    std::int64_t seen = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_ascii_space(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && !is_ascii_space(text[j])) ++j;
        if (j > i && text.substr(i, j - i) != kParagraphToken && ++seen == n) return j;
        i = j;
    }
    return text.size();
}

void check_bounds(const TruncationBounds &bounds) {
    if (!(bounds.low > 0.0 && bounds.low <= bounds.high && bounds.high < 1.0))
        throw InvalidArgument("truncation bounds must satisfy 0 < low <= high < 1");
}

} // namespace

StoryPrompt truncate_story(const Document &doc, const TruncationBounds &bounds, std::uint64_t seed) {
    check_bounds(bounds);
    const std::int64_t words = doc.word_count();
    if (words < kMinStoryWords) throw StoryTooShort(doc.id(), words);

    Rng rng(seed);
    const double r = rng.uniform(bounds.low, bounds.high);
    const auto keep = std::clamp<std::int64_t>(std::llround(r * static_cast<double>(words)), 1, words - 1);

    StoryPrompt p;
    p.story_id = doc.id();
    p.prompt_text = doc.text().substr(0, prefix_end(doc.text(), keep));
    p.ratio = r;
    p.prompt_words = keep;
    p.original_words = words;
    return p;
}

PromptSet build_prompt_set(const Corpus &corpus, const TruncationBounds &bounds, std::uint64_t seed) {
    check_bounds(bounds);
    const auto &docs = corpus.documents();
    std::vector<const Document *> eligible;
    PromptSet out;
    for (const auto &d : docs) {
        if (d.word_count() < kMinStoryWords)
            ++out.skipped;
        else
            eligible.push_back(&d);
    }
    std::sort(eligible.begin(), eligible.end(), [](const Document *a, const Document *b) { return a->id() < b->id(); });
    out.prompts.resize(eligible.size());
    const auto n = static_cast<std::ptrdiff_t>(eligible.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const Document &d = *eligible[static_cast<std::size_t>(i)];
        out.prompts[static_cast<std::size_t>(i)] = truncate_story(d, bounds, derive_seed(seed, d.id()));
    }
    return out;
}

void write_prompts(const std::vector<StoryPrompt> &prompts, const std::filesystem::path &path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    for (const auto &p : prompts) {
        nlohmann::json rec = {{"id", p.story_id},
                              {"source", "prompt"},
                              {"provenance", "original"},
                              {"text", p.prompt_text},
                              {"ratio", p.ratio},
                              {"prompt_words", p.prompt_words},
                              {"original_words", p.original_words}};
        out << rec.dump() << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<StoryPrompt> read_prompts(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<StoryPrompt> prompts;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const auto rec = nlohmann::json::parse(line);
            StoryPrompt p;
            p.story_id = rec.at("id").get<std::string>();
            p.prompt_text = rec.at("text").get<std::string>();
            p.ratio = rec.at("ratio").get<double>();
            p.prompt_words = rec.at("prompt_words").get<std::int64_t>();
            p.original_words = rec.at("original_words").get<std::int64_t>();
            prompts.push_back(std::move(p));
        } catch (const nlohmann::json::exception &e) {
            throw MalformedRecord(lineno, e.what());
        }
    }
    return prompts;
}

} // namespace storyaug
