#pragma once

#include "storyaug/model.hpp"
#include "storyaug/prompts.hpp"

#include <span>
#include <string>
#include <vector>

namespace storyaug {

enum class BleuScale { unit, percent };

struct BleuConfig {
    int max_n = 4;                          // uniform weights 1/max_n
    BleuScale scale = BleuScale::percent;   // scale of reports; the functions return unit scale
};

using TokenSeq = std::vector<std::string>;

TokenSeq tokenize(std::string_view text);

/// Sentence BLEU: clipped n-gram precision against the per-n-gram maximum over
/// references, uniform geometric mean over n = 1..max_n, brevity penalty from the
/// closest reference length (ties go to the shorter one), no smoothing.
/// Returns a value in [0, 1]. Throws EmptyInput.
double bleu(std::span<const std::string> hypothesis, std::span<const TokenSeq> references,
            const BleuConfig &config = {});

/// Mean over i of bleu(g_i, all other generations). Parallel over hypotheses.
/// Throws TooFewGenerations, EmptyInput.
double self_bleu(std::span<const TokenSeq> generations, const BleuConfig &config = {});

double to_report_scale(double unit_score, const BleuConfig &config);

struct PromptScore {
    std::string prompt_id;
    int k = 0;
    double score = 0.0; // unit scale
};

struct SelfBleuReport {
    int k = 0;
    std::vector<PromptScore> per_prompt;
    double average = 0.0; // unit scale, arithmetic mean of per_prompt
    BleuConfig config;
};

/// Completions generated once per prompt, in prompt order.
struct GenerationCache {
    std::vector<std::string> prompt_ids;
    std::vector<std::vector<Generation>> completions;
};

struct SelfBleuCurve {
    std::vector<SelfBleuReport> points; // one per k, ascending
    BleuConfig config;
};

/// policy.k completions per prompt (generate_k), parallel over prompts.
GenerationCache generate_cache(const TextGenerator &generator, std::span<const StoryPrompt> prompts,
                               const GenerationPolicy &policy);

/// Self-BLEU of the first k cached completions of every prompt, for every k.
/// Incremental kernel: each hypothesis folds in one reference at a time, so all
/// k values cost one pass over the completion pairs. Parallel over prompts.
SelfBleuCurve curve_from_cache(const GenerationCache &cache, std::span<const int> k_values,
                               const BleuConfig &config = {});

/// Generates k_max completions per prompt with `policy` and evaluates the curve.
/// Also returns the cache the curve was computed from.
std::pair<SelfBleuCurve, GenerationCache> self_bleu_curve(const TextGenerator &generator,
                                                          std::span<const StoryPrompt> prompts, int k_max,
                                                          const GenerationPolicy &policy,
                                                          std::span<const int> k_values,
                                                          const BleuConfig &config = {});

namespace reference {

/// Serial self-BLEU straight from the definition.
double self_bleu(std::span<const TokenSeq> generations, const BleuConfig &config = {});

/// Serial curve: calls self_bleu on each k-prefix of every prompt's completions.
SelfBleuCurve curve_from_cache(const GenerationCache &cache, std::span<const int> k_values,
                               const BleuConfig &config = {});

} // namespace reference

} // namespace storyaug
