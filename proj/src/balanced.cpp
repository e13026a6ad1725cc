#include "storyaug/balanced.hpp"

#include "storyaug/errors.hpp"

#include <numeric>

namespace storyaug {

ShuffledStream::ShuffledStream(std::size_t n, std::uint64_t seed, bool cycle)
    : order_(n), seed_(seed), cycle_(cycle) {
    reshuffle();
}

void ShuffledStream::reshuffle() {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    Rng rng(derive_seed(seed_, epoch_));
    rng.shuffle(std::span<std::size_t>(order_));
    pos_ = 0;
}

std::optional<std::size_t> ShuffledStream::next() {
    if (order_.empty()) return std::nullopt;
    if (pos_ == order_.size()) {
        if (!cycle_) return std::nullopt;
        ++epoch_;
        reshuffle();
    }
    return order_[pos_++];
}

namespace {

void check_spec(const BatchSpec &spec) {
    if (spec.batch_size < 1) throw InvalidArgument("batch_size must be positive");
}

} // namespace

BalancedBatches::BalancedBatches(const Corpus &group_a, const Corpus &group_b, BatchSpec spec)
    : a_(&group_a), b_(&group_b), spec_(spec),
      stream_a_(group_a.size(), derive_seed(spec.seed, "group-a"), spec.epoch_policy == EpochPolicy::cycle_reshuffle),
      stream_b_(group_b.size(), derive_seed(spec.seed, "group-b"), spec.epoch_policy == EpochPolicy::cycle_reshuffle),
      coin_(derive_seed(spec.seed, "coin")) {
    check_spec(spec_);
    if (group_a.empty() || group_b.empty()) throw EmptyGroup();
}

std::optional<Batch> BalancedBatches::next() {
    if (done_) return std::nullopt;
    std::vector<Group> plan(spec_.batch_size);
    if (spec_.balance == BalanceMode::bernoulli) {
        for (auto &g : plan) g = coin_.coin() ? Group::b : Group::a;
    } else {
        const std::size_t half = spec_.batch_size / 2;
        for (std::size_t i = 0; i < spec_.batch_size; ++i) plan[i] = i < half ? Group::a : Group::b;
        if (spec_.batch_size % 2 == 1) plan.back() = coin_.coin() ? Group::b : Group::a;
        coin_.shuffle(std::span<Group>(plan));
    }

    Batch batch;
    batch.index = emitted_;
    for (Group g : plan) {
        auto idx = g == Group::a ? stream_a_.next() : stream_b_.next();
        if (!idx) {
            done_ = true;
            break;
        }
        const Corpus &src = g == Group::a ? *a_ : *b_;
        batch.slots.push_back({g, *idx, src.documents()[*idx].id()});
        ++(g == Group::a ? batch.from_a : batch.from_b);
    }
    if (batch.slots.empty()) return std::nullopt;
    ++emitted_;
    return batch;
}

UnbalancedBatches::UnbalancedBatches(const Corpus &combined, BatchSpec spec)
    : corpus_(&combined), spec_(spec),
      stream_(combined.size(), derive_seed(spec.seed, "combined"), spec.epoch_policy == EpochPolicy::cycle_reshuffle) {
    check_spec(spec_);
    if (combined.empty()) throw EmptyGroup();
}

std::optional<Batch> UnbalancedBatches::next() {
    if (done_) return std::nullopt;
    Batch batch;
    batch.index = emitted_;
    for (std::size_t s = 0; s < spec_.batch_size; ++s) {
        auto idx = stream_.next();
        if (!idx) {
            done_ = true;
            break;
        }
        batch.slots.push_back({Group::a, *idx, corpus_->documents()[*idx].id()});
        ++batch.from_a;
    }
    if (batch.slots.empty()) return std::nullopt;
    ++emitted_;
    return batch;
}

} // namespace storyaug
