#pragma once

#include "storyaug/corpus.hpp"
#include "storyaug/random.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace storyaug {

enum class EpochPolicy { cycle_reshuffle, stop_at_shorter };

/// bernoulli: every slot flips a fair coin for its source.
/// quota: every batch holds floor(n/2) slots of each source, the odd slot decided by the coin.
enum class BalanceMode { bernoulli, quota };

struct BatchSpec {
    std::size_t batch_size = 80;
    std::uint64_t seed = 0;
    EpochPolicy epoch_policy = EpochPolicy::cycle_reshuffle;
    BalanceMode balance = BalanceMode::bernoulli;
};

enum class Group : std::uint8_t { a, b };

struct BatchSlot {
    Group group = Group::a;
    std::size_t index = 0; // position in the source corpus
    std::string id;

    friend bool operator==(const BatchSlot &, const BatchSlot &) = default;
};

struct Batch {
    std::size_t index = 0;
    std::vector<BatchSlot> slots;
    std::size_t from_a = 0;
    std::size_t from_b = 0;

    friend bool operator==(const Batch &, const Batch &) = default;
};

/// Permutation stream over n items. Epoch e is shuffled with derive_seed(seed, e);
/// a non-cycling stream ends after epoch 0.
class ShuffledStream {
  public:
    ShuffledStream(std::size_t n, std::uint64_t seed, bool cycle);
    std::optional<std::size_t> next();
    std::size_t epoch() const { return epoch_; }

  private:
    void reshuffle();
    std::vector<std::size_t> order_;
    std::size_t pos_ = 0;
    std::size_t epoch_ = 0;
    std::uint64_t seed_;
    bool cycle_;
};

/// Batches drawing from two groups with equal probability. The corpora must outlive
/// the iterator. In stop_at_shorter mode the iterator ends the first time a slot
/// draws from an exhausted group; the batch in progress is emitted if nonempty.
class BalancedBatches {
  public:
    BalancedBatches(const Corpus &group_a, const Corpus &group_b, BatchSpec spec);
    std::optional<Batch> next();

  private:
    const Corpus *a_;
    const Corpus *b_;
    BatchSpec spec_;
    ShuffledStream stream_a_;
    ShuffledStream stream_b_;
    Rng coin_;
    std::size_t emitted_ = 0;
    bool done_ = false;
};

/// Single shuffled stream over one corpus (the non-balanced baseline). All slots are group a.
class UnbalancedBatches {
  public:
    UnbalancedBatches(const Corpus &combined, BatchSpec spec);
    std::optional<Batch> next();

  private:
    const Corpus *corpus_;
    BatchSpec spec_;
    ShuffledStream stream_;
    std::size_t emitted_ = 0;
    bool done_ = false;
};

} // namespace storyaug
