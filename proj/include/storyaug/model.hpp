#pragma once

#include "storyaug/random.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace storyaug {

using TokenId = std::uint32_t;

enum class DecodeMode { greedy, nucleus };

std::string_view to_string(DecodeMode m);
DecodeMode parse_decode_mode(std::string_view s);

struct GenerationPolicy {
    DecodeMode mode = DecodeMode::nucleus;
    double top_p = 0.95;
    double temperature = 1.0;
    int k = 1;
    int max_new_tokens = 300;
    std::uint64_t seed = 0;

    friend bool operator==(const GenerationPolicy &, const GenerationPolicy &) = default;
};

/// Throws InvalidArgument on a policy outside its domain.
void validate_policy(const GenerationPolicy &policy);

enum class Termination { stop_token, max_len };

std::string_view to_string(Termination t);

struct Generation {
    std::string story_id;
    std::string completion_text;
    GenerationPolicy policy;
    int token_count = 0;
    Termination terminated_by = Termination::max_len;

    friend bool operator==(const Generation &, const Generation &) = default;
};

/// Anything that assigns a natural-log probability (<= 0, finite) to a text.
class Scorer {
  public:
    virtual ~Scorer() = default;
    virtual double log_prob(std::string_view text) const = 0;
    virtual std::string scorer_id() const = 0;
};

/// Anything that continues a prompt under a decoding policy.
class TextGenerator {
  public:
    virtual ~TextGenerator() = default;
    virtual Generation generate(std::string_view prompt, const GenerationPolicy &policy) const = 0;
};

/// k completions of one prompt; completion i uses seed derive_seed(policy.seed, story_id, i).
/// Greedy decoding is run once and repeated.
std::vector<Generation> generate_k(const TextGenerator &generator, const std::string &story_id,
                                   std::string_view prompt, const GenerationPolicy &policy);

/// Per-completion seed of generate_k.
inline std::uint64_t completion_seed(std::uint64_t seed, std::string_view story_id, std::size_t index) {
    return derive_seed(seed, story_id, index);
}

// Token-level decoding over a dense next-token distribution.

struct NucleusEntry {
    TokenId id;
    double weight; // unnormalized, temperature already applied
};

/// Tokens kept by nucleus truncation, in descending weight order (ties: smaller id first).
/// `excluded` (if any) is never kept.
std::vector<NucleusEntry> nucleus_set(std::span<const double> probs, double top_p, double temperature,
                                      std::optional<TokenId> excluded = {});

/// Argmax with ties broken by the smallest id.
TokenId greedy_pick(std::span<const double> probs, std::optional<TokenId> excluded = {});

/// Draws one token from the renormalized nucleus using a single uniform.
TokenId sample_from_nucleus(std::span<const NucleusEntry> nucleus, Rng &rng);

/// One decoding step (greedy or nucleus) from a dense distribution.
TokenId pick_token(std::span<const double> probs, const GenerationPolicy &policy, Rng &rng,
                   std::optional<TokenId> excluded = {});

/// A model that exposes its next-token distribution.
class NextTokenModel {
  public:
    virtual ~NextTokenModel() = default;
    virtual std::size_t vocab_size() const = 0;
    virtual TokenId eot_id() const = 0;
    /// Never emitted while decoding (e.g. the unknown-word token).
    virtual std::optional<TokenId> excluded_id() const { return std::nullopt; }
    virtual std::string_view token_text(TokenId id) const = 0;
    /// Fills `out` with P(. | history); history excludes any padding.
    virtual void next_distribution(std::span<const TokenId> history, std::vector<double> &out) const = 0;
    /// One decoding step. The default builds the dense distribution.
    virtual TokenId next_token(std::span<const TokenId> history, const GenerationPolicy &policy, Rng &rng) const;
};

struct DecodeResult {
    std::vector<TokenId> tokens;
    Termination terminated_by = Termination::max_len;
};

/// Runs the decoding loop until the end-of-text token or max_new_tokens.
DecodeResult decode(const NextTokenModel &model, std::vector<TokenId> history, const GenerationPolicy &policy);

} // namespace storyaug
