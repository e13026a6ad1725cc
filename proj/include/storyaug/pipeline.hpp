#pragma once

#include "storyaug/diversity.hpp"
#include "storyaug/errors.hpp"
#include "storyaug/eval_pairs.hpp"
#include "storyaug/model.hpp"
#include "storyaug/ngram.hpp"
#include "storyaug/prompts.hpp"
#include "storyaug/sampler.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace storyaug {

inline constexpr std::string_view kToolVersion = "storyaug 0.1.0";

struct PipelineSeeds {
    std::uint64_t sample_tiny = 11;
    std::uint64_t sample_baby = 12;
    std::uint64_t prompts = 13;
    std::uint64_t generation = 14;
    friend bool operator==(const PipelineSeeds &, const PipelineSeeds &) = default;
};

struct PipelineConfig {
    BudgetSpec track = BudgetSpec::strict_small();
    std::filesystem::path tiny_path;
    std::filesystem::path baby_path;
    std::filesystem::path workdir;
    std::int64_t m_words = 5'000'000;
    std::int64_t b_words = 5'000'000;
    GenerationPolicy policy{DecodeMode::nucleus, 0.95, 1.0, 5, 300, PipelineSeeds{}.generation};
    BleuConfig bleu;
    PipelineSeeds seeds;
    NGramOptions ngram;
    TruncationBounds truncation;
    std::size_t selfbleu_prompts = 100;      // first prompts (by id) scored for Self-BLEU
    std::vector<int> selfbleu_k_values;      // extra curve points, each in [2, policy.k]
    std::optional<std::filesystem::path> pairs_path;
    Suite pairs_suite = Suite::blimp;
};

/// Field-by-field JSON form. Paths in `config_dir`-relative form are resolved against it.
PipelineConfig config_from_json(const nlohmann::json &j, const std::filesystem::path &config_dir = {});
nlohmann::json config_to_json(const PipelineConfig &config);
PipelineConfig load_config(const std::filesystem::path &path);

/// Every violation, not just the first.
std::vector<ConfigViolation> check_config(const PipelineConfig &config);
/// Throws ConfigInvalid with the full violation list.
void validate_config(const PipelineConfig &config);

struct PipelineResult {
    nlohmann::json manifest;
    std::string workdir_digest;
};

/// normalize -> sample -> train -> prompts -> generate -> selfbleu -> combine -> eval.
/// Writes every artifact plus manifest.json under config.workdir, which is
/// replaced if it holds an earlier run. A failing stage throws StageFailed after
/// the manifest with the completed stages (and the failure) has been written.
PipelineResult run_pipeline(const PipelineConfig &config);

/// "model | training data | total | metric" table of a finished run.
std::string render_run_table(const nlohmann::json &manifest);

} // namespace storyaug
