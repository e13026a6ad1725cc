#pragma once

#include "storyaug/corpus.hpp"
#include "storyaug/model.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace storyaug {

inline constexpr int kMaxNgramOrder = 6;

struct NGramOptions {
    int order = 4;
    std::size_t vocab_cap = 50'000;
    double discount = 0.75;
};

/// Interpolated absolute-discount word n-gram model with Kneser-Ney continuation
/// counts for the lower orders and a uniform floor below the unigram level:
///
///   P_k(w | h) = (c(h w) - D_k) / c(h)  +  D_k * N1+(h .) / c(h) * P_{k-1}(w | h')
///
/// where c is the raw count at the highest order and the continuation count
/// N1+(. h w) below it. Unseen contexts back off entirely. Documents are padded on
/// the left with <eot> and terminated with <eot>.
class NGramModel final : public NextTokenModel, public Scorer, public TextGenerator {
  public:
    static constexpr TokenId kUnk = 0;
    static constexpr TokenId kEot = 1;

    /// A model without counts: every conditional is uniform over the vocabulary.
    static NGramModel uniform(std::vector<std::string> words, int order = 4);

    int order() const { return order_; }
    const std::vector<double> &discounts() const { return discounts_; }
    std::int64_t trained_words() const { return trained_words_; }

    std::size_t vocab_size() const override { return vocab_.size(); }
    TokenId eot_id() const override { return kEot; }
    std::optional<TokenId> excluded_id() const override { return kUnk; }
    std::string_view token_text(TokenId id) const override { return vocab_.at(id); }
    TokenId lookup(std::string_view word) const;
    std::vector<TokenId> encode(std::string_view text) const;

    /// Point query P(word | history) walking the orders upward.
    double prob(TokenId word, std::span<const TokenId> history) const;

    void next_distribution(std::span<const TokenId> history, std::vector<double> &out) const override;

    /// Sparse decoding step: exact same choice as the dense route for unit temperature,
    /// without materializing the distribution. Other temperatures use the dense route.
    TokenId next_token(std::span<const TokenId> history, const GenerationPolicy &policy, Rng &rng) const override;

    /// Dense reference for next_token.
    TokenId next_token_dense(std::span<const TokenId> history, const GenerationPolicy &policy, Rng &rng) const {
        return NextTokenModel::next_token(history, policy, rng);
    }

    /// Sum of ln P over the text's words and the closing <eot>. Throws EmptyText.
    double log_prob(std::string_view text) const override;
    std::string scorer_id() const override;

    /// Throws EmptyText for a prompt without words.
    Generation generate(std::string_view prompt, const GenerationPolicy &policy) const override;

    void save(const std::filesystem::path &path) const;
    static NGramModel load(const std::filesystem::path &path);

    /// Highest-order n-gram counts, sorted; the persisted state together with the vocabulary.
    struct NgramCount {
        std::array<TokenId, kMaxNgramOrder> ids{};
        std::uint64_t count = 0;
    };

    friend NGramModel train_ngram(const Corpus &corpus, const NGramOptions &options);

  private:
    using Key = std::array<TokenId, kMaxNgramOrder>;
    struct KeyHash {
        std::size_t operator()(const Key &k) const noexcept;
    };
    struct ContextRecord {
        std::uint64_t total = 0;
        std::uint32_t types = 0;
        std::uint64_t begin = 0;
        double backoff = 0.0; // D * types / total
    };
    struct Level {
        std::unordered_map<Key, std::uint32_t, KeyHash> index;
        std::vector<ContextRecord> records;
        std::vector<TokenId> successor_ids;
        std::vector<double> successor_terms; // (c - D) / total
    };

    NGramModel() = default;
    void build(std::vector<std::string> vocab, int order, std::vector<double> discounts, std::int64_t trained_words,
               std::vector<NgramCount> counts);
    /// Active context record per order 2..N for the given history (nullptr when unseen).
    void active_contexts(std::span<const TokenId> history,
                         std::array<const ContextRecord *, kMaxNgramOrder + 1> &active) const;
    double successor_term(int order, const ContextRecord &rec, TokenId word) const;

    int order_ = 1;
    std::vector<double> discounts_;
    std::int64_t trained_words_ = 0;
    std::vector<std::string> vocab_;
    std::unordered_map<std::string, TokenId> word_ids_;
    std::vector<NgramCount> counts_;
    std::vector<double> base_;           // order-1 distribution
    std::vector<TokenId> base_order_;    // ids by (base desc, id asc)
    std::vector<Level> levels_;          // index k holds contexts of length k - 1, k >= 2
};

/// Trains on the corpus words with a vocabulary of the vocab_cap most frequent
/// words (ties lexicographic). Throws EmptyCorpus.
NGramModel train_ngram(const Corpus &corpus, const NGramOptions &options = {});

} // namespace storyaug
