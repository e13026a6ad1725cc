#include "storyaug/ngram.hpp"

#include "storyaug/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace storyaug {

namespace {

constexpr std::string_view kUnkText = "<unk>";
constexpr std::string_view kEotText = "<eot>";
constexpr std::string_view kModelMagic = "storyaug-ngram 1";

// Scratch buffers for the sparse decoding step; one set per thread.
struct SparseScratch {
    std::vector<std::uint32_t> stamp;
    std::uint32_t generation = 0;
    std::vector<NucleusEntry> successors;
    std::vector<NucleusEntry> kept;

    void prepare(std::size_t vocab) {
        if (stamp.size() != vocab || generation == ~std::uint32_t{0}) {
            stamp.assign(vocab, 0);
            generation = 0;
        }
        ++generation;
        successors.clear();
        kept.clear();
    }
    bool mark(TokenId id) {
        if (stamp[id] == generation) return false;
        stamp[id] = generation;
        return true;
    }
    bool marked(TokenId id) const { return stamp[id] == generation; }
};

bool heavier(const NucleusEntry &a, const NucleusEntry &b) {
    return a.weight > b.weight || (a.weight == b.weight && a.id < b.id);
}

} // namespace

std::size_t NGramModel::KeyHash::operator()(const Key &k) const noexcept {
    std::uint64_t h = 0x9E3779B97F4A7C15ULL;
    for (TokenId id : k) h = splitmix64(h ^ id);
    return static_cast<std::size_t>(h);
}

NGramModel NGramModel::uniform(std::vector<std::string> words, int order) {
    if (order < 1 || order > kMaxNgramOrder) throw InvalidArgument("order out of range");
    std::vector<std::string> vocab{std::string(kUnkText), std::string(kEotText)};
    for (auto &w : words)
        if (w != kUnkText && w != kEotText) vocab.push_back(std::move(w));
    NGramModel m;
    m.build(std::move(vocab), order, std::vector<double>(static_cast<std::size_t>(order), 0.75), 0, {});
    return m;
}

void NGramModel::build(std::vector<std::string> vocab, int order, std::vector<double> discounts,
                       std::int64_t trained_words, std::vector<NgramCount> counts) {
    order_ = order;
    discounts_ = std::move(discounts);
    trained_words_ = trained_words;
    vocab_ = std::move(vocab);
    word_ids_.clear();
    word_ids_.reserve(vocab_.size() * 2);
    for (std::size_t i = 0; i < vocab_.size(); ++i)
        if (i != kUnk && i != kEot) word_ids_.emplace(vocab_[i], static_cast<TokenId>(i));
    std::sort(counts.begin(), counts.end(), [](const NgramCount &a, const NgramCount &b) { return a.ids < b.ids; });
    counts_ = std::move(counts);

    const auto n = static_cast<std::size_t>(order_);
    // grams[k]: count table of k-grams, stored left-aligned in a Key.
    std::vector<std::vector<std::pair<Key, std::uint64_t>>> grams(n + 1);
    grams[n].reserve(counts_.size());
    for (const auto &c : counts_) grams[n].emplace_back(c.ids, c.count);
    for (std::size_t k = n - 1; k >= 1; --k) {
        std::unordered_map<Key, std::uint64_t, KeyHash> cont;
        cont.reserve(grams[k + 1].size());
        for (const auto &[key, count] : grams[k + 1]) {
            Key suffix{};
            std::copy(key.begin() + 1, key.begin() + static_cast<std::ptrdiff_t>(k + 1), suffix.begin());
            ++cont[suffix];
        }
        grams[k].assign(cont.begin(), cont.end());
        std::sort(grams[k].begin(), grams[k].end(), [](const auto &a, const auto &b) { return a.first < b.first; });
    }

    const auto vsize = vocab_.size();
    const double uniform_p = 1.0 / static_cast<double>(vsize);
    base_.assign(vsize, uniform_p);
    if (!grams[1].empty()) {
        std::uint64_t total = 0;
        for (const auto &g : grams[1]) total += g.second;
        const double d = discounts_[0];
        const double gamma = d * static_cast<double>(grams[1].size()) / static_cast<double>(total);
        for (std::size_t w = 0; w < vsize; ++w) base_[w] = gamma * uniform_p;
        for (const auto &[key, count] : grams[1])
            base_[key[0]] = gamma * uniform_p + (static_cast<double>(count) - d) / static_cast<double>(total);
    }
    base_order_.resize(vsize);
    for (std::size_t i = 0; i < vsize; ++i) base_order_[i] = static_cast<TokenId>(i);
    std::sort(base_order_.begin(), base_order_.end(),
              [&](TokenId a, TokenId b) { return base_[a] > base_[b] || (base_[a] == base_[b] && a < b); });

    levels_.assign(n + 1, Level{});
    for (std::size_t k = 2; k <= n; ++k) {
        Level &level = levels_[k];
        const double d = discounts_[k - 1];
        const auto &table = grams[k];
        std::size_t i = 0;
        while (i < table.size()) {
            Key ctx{};
            std::copy(table[i].first.begin(), table[i].first.begin() + static_cast<std::ptrdiff_t>(k - 1), ctx.begin());
            std::size_t j = i;
            std::uint64_t total = 0;
            while (j < table.size() &&
                   std::equal(ctx.begin(), ctx.begin() + static_cast<std::ptrdiff_t>(k - 1), table[j].first.begin())) {
                total += table[j].second;
                ++j;
            }
            ContextRecord rec;
            rec.total = total;
            rec.types = static_cast<std::uint32_t>(j - i);
            rec.begin = level.successor_ids.size();
            rec.backoff = d * static_cast<double>(rec.types) / static_cast<double>(total);
            for (std::size_t s = i; s < j; ++s) {
                level.successor_ids.push_back(table[s].first[k - 1]);
                level.successor_terms.push_back((static_cast<double>(table[s].second) - d) / static_cast<double>(total));
            }
            level.index.emplace(ctx, static_cast<std::uint32_t>(level.records.size()));
            level.records.push_back(rec);
            i = j;
        }
    }
}

TokenId NGramModel::lookup(std::string_view word) const {
    auto it = word_ids_.find(std::string(word));
    return it == word_ids_.end() ? kUnk : it->second;
}

std::vector<TokenId> NGramModel::encode(std::string_view text) const {
    std::vector<TokenId> ids;
    for (auto w : split_words(text)) ids.push_back(lookup(w));
    return ids;
}

void NGramModel::active_contexts(std::span<const TokenId> history,
                                 std::array<const ContextRecord *, kMaxNgramOrder + 1> &active) const {
    active.fill(nullptr);
    for (int k = 2; k <= order_; ++k) {
        const auto len = static_cast<std::size_t>(k - 1);
        Key ctx{};
        for (std::size_t i = 0; i < len; ++i) {
            // ctx[len-1] is the most recent token.
            const std::size_t back = len - 1 - i;
            ctx[i] = back < history.size() ? history[history.size() - 1 - back] : kEot;
        }
        const Level &level = levels_[static_cast<std::size_t>(k)];
        auto it = level.index.find(ctx);
        if (it != level.index.end()) active[static_cast<std::size_t>(k)] = &level.records[it->second];
    }
}

double NGramModel::successor_term(int order, const ContextRecord &rec, TokenId word) const {
    const Level &level = levels_[static_cast<std::size_t>(order)];
    const auto first = level.successor_ids.begin() + static_cast<std::ptrdiff_t>(rec.begin);
    const auto last = first + rec.types;
    auto it = std::lower_bound(first, last, word);
    if (it == last || *it != word) return 0.0;
    return level.successor_terms[static_cast<std::size_t>(it - level.successor_ids.begin())];
}

double NGramModel::prob(TokenId word, std::span<const TokenId> history) const {
    if (word >= vocab_.size()) throw InvalidArgument("token id out of range");
    std::array<const ContextRecord *, kMaxNgramOrder + 1> active;
    active_contexts(history, active);
    double p = base_[word];
    for (int k = 2; k <= order_; ++k) {
        const ContextRecord *rec = active[static_cast<std::size_t>(k)];
        if (rec) p = rec->backoff * p + successor_term(k, *rec, word);
    }
    return p;
}

void NGramModel::next_distribution(std::span<const TokenId> history, std::vector<double> &out) const {
    std::array<const ContextRecord *, kMaxNgramOrder + 1> active;
    active_contexts(history, active);
    out = base_;
    for (int k = 2; k <= order_; ++k) {
        const ContextRecord *rec = active[static_cast<std::size_t>(k)];
        if (!rec) continue;
        for (double &p : out) p = rec->backoff * p;
        const Level &level = levels_[static_cast<std::size_t>(k)];
        for (std::uint32_t s = 0; s < rec->types; ++s) {
            const auto idx = static_cast<std::size_t>(rec->begin + s);
            out[level.successor_ids[idx]] += level.successor_terms[idx];
        }
    }
}

TokenId NGramModel::next_token(std::span<const TokenId> history, const GenerationPolicy &policy, Rng &rng) const {
    if (policy.temperature != 1.0) return next_token_dense(history, policy, rng);

    thread_local SparseScratch scratch;
    scratch.prepare(vocab_.size());
    std::array<const ContextRecord *, kMaxNgramOrder + 1> active;
    active_contexts(history, active);

    auto point = [&](TokenId w) {
        double p = base_[w];
        for (int k = 2; k <= order_; ++k) {
            const ContextRecord *rec = active[static_cast<std::size_t>(k)];
            if (rec) p = rec->backoff * p + successor_term(k, *rec, w);
        }
        return p;
    };
    auto tail = [&](TokenId w) {
        double p = base_[w];
        for (int k = 2; k <= order_; ++k) {
            const ContextRecord *rec = active[static_cast<std::size_t>(k)];
            if (rec) p = rec->backoff * p;
        }
        return p;
    };

    scratch.mark(kUnk);
    for (int k = 2; k <= order_; ++k) {
        const ContextRecord *rec = active[static_cast<std::size_t>(k)];
        if (!rec) continue;
        const Level &level = levels_[static_cast<std::size_t>(k)];
        for (std::uint32_t s = 0; s < rec->types; ++s) {
            const TokenId id = level.successor_ids[static_cast<std::size_t>(rec->begin + s)];
            if (scratch.mark(id)) scratch.successors.push_back({id, 0.0});
        }
    }
    for (auto &e : scratch.successors) e.weight = point(e.id);
    std::sort(scratch.successors.begin(), scratch.successors.end(), heavier);

    // Merge the exact successor list with the presorted tail of backed-off tokens.
    std::size_t si = 0, ti = 0;
    auto next_tail = [&]() -> std::optional<NucleusEntry> {
        while (ti < base_order_.size() && scratch.marked(base_order_[ti])) ++ti;
        if (ti == base_order_.size()) return std::nullopt;
        return NucleusEntry{base_order_[ti], tail(base_order_[ti])};
    };
    auto pop_next = [&]() -> std::optional<NucleusEntry> {
        auto t = next_tail();
        const bool have_s = si < scratch.successors.size();
        if (!have_s && !t) return std::nullopt;
        if (have_s && (!t || heavier(scratch.successors[si], *t))) return scratch.successors[si++];
        ++ti;
        return t;
    };

    if (policy.mode == DecodeMode::greedy) {
        auto best = pop_next();
        if (!best) throw InvalidArgument("no token available for greedy decoding");
        return best->id;
    }

    const double threshold = policy.top_p * (1.0 - point(kUnk));
    double cumulative = 0.0;
    while (auto e = pop_next()) {
        cumulative += e->weight;
        scratch.kept.push_back(*e);
        if (cumulative >= threshold) break;
    }
    return sample_from_nucleus(scratch.kept, rng);
}

double NGramModel::log_prob(std::string_view text) const {
    const auto ids = encode(text);
    if (ids.empty()) throw EmptyText();
    double total = 0.0;
    for (std::size_t i = 0; i < ids.size(); ++i)
        total += std::log(prob(ids[i], std::span<const TokenId>(ids.data(), i)));
    total += std::log(prob(kEot, ids));
    return total;
}

std::string NGramModel::scorer_id() const {
    return "ngram:order=" + std::to_string(order_) + ",vocab=" + std::to_string(vocab_.size()) +
           ",trained_words=" + std::to_string(trained_words_);
}

Generation NGramModel::generate(std::string_view prompt, const GenerationPolicy &policy) const {
    auto ids = encode(prompt);
    if (ids.empty()) throw EmptyText();
    const DecodeResult result = decode(*this, std::move(ids), policy);
    Generation g;
    g.policy = policy;
    g.token_count = static_cast<int>(result.tokens.size());
    g.terminated_by = result.terminated_by;
    for (std::size_t i = 0; i < result.tokens.size(); ++i) {
        if (i) g.completion_text.push_back(' ');
        g.completion_text += vocab_[result.tokens[i]];
    }
    return g;
}

void NGramModel::save(const std::filesystem::path &path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    char buf[64];
    out << kModelMagic << '\n' << "order " << order_ << '\n' << "discounts";
    for (double d : discounts_) {
        std::snprintf(buf, sizeof buf, " %.17g", d);
        out << buf;
    }
    out << '\n' << "trained_words " << trained_words_ << '\n' << "vocab " << vocab_.size() << '\n';
    for (const auto &w : vocab_) out << w << '\n';
    out << "ngrams " << counts_.size() << '\n';
    for (const auto &c : counts_) {
        for (int k = 0; k < order_; ++k) out << c.ids[static_cast<std::size_t>(k)] << ' ';
        out << c.count << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

NGramModel NGramModel::load(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    std::size_t lineno = 0;
    auto next_line = [&]() -> std::string & {
        if (!std::getline(in, line)) throw MalformedRecord(lineno + 1, "unexpected end of model file");
        ++lineno;
        return line;
    };
    auto field = [&](std::string_view name) {
        std::istringstream ss(next_line());
        std::string key;
        ss >> key;
        if (key != name) throw MalformedRecord(lineno, "expected '" + std::string(name) + "'");
        return ss.str().substr(key.size());
    };
    if (next_line() != kModelMagic) throw MalformedRecord(1, "not a storyaug n-gram model");
    const int order = std::stoi(field("order"));
    if (order < 1 || order > kMaxNgramOrder) throw MalformedRecord(lineno, "order out of range");
    std::vector<double> discounts;
    {
        std::istringstream ss(field("discounts"));
        double d;
        while (ss >> d) discounts.push_back(d);
    }
    if (discounts.size() != static_cast<std::size_t>(order)) throw MalformedRecord(lineno, "discount count");
    const std::int64_t trained = std::stoll(field("trained_words"));
    const std::size_t vsize = std::stoull(field("vocab"));
    std::vector<std::string> vocab;
    vocab.reserve(vsize);
    for (std::size_t i = 0; i < vsize; ++i) vocab.push_back(next_line());
    if (vsize < 2 || vocab[kUnk] != kUnkText || vocab[kEot] != kEotText)
        throw MalformedRecord(lineno, "vocabulary must start with <unk> and <eot>");
    const std::size_t ngrams = std::stoull(field("ngrams"));
    std::vector<NgramCount> counts(ngrams);
    for (auto &c : counts) {
        std::istringstream ss(next_line());
        for (int k = 0; k < order; ++k) {
            if (!(ss >> c.ids[static_cast<std::size_t>(k)]) || c.ids[static_cast<std::size_t>(k)] >= vsize)
                throw MalformedRecord(lineno, "bad n-gram id");
        }
        if (!(ss >> c.count) || c.count == 0) throw MalformedRecord(lineno, "bad n-gram count");
    }
    NGramModel m;
    m.build(std::move(vocab), order, std::move(discounts), trained, std::move(counts));
    return m;
}

NGramModel train_ngram(const Corpus &corpus, const NGramOptions &options) {
    if (options.order < 1 || options.order > kMaxNgramOrder)
        throw InvalidArgument("order must lie in [1, " + std::to_string(kMaxNgramOrder) + "]");
    if (options.vocab_cap < 2) throw InvalidArgument("vocab_cap must be at least 2");
    if (!(options.discount > 0.0 && options.discount < 1.0)) throw InvalidArgument("discount must lie in (0, 1)");
    if (corpus.empty() || corpus.total_words() == 0) throw EmptyCorpus();

    std::unordered_map<std::string_view, std::int64_t> freq;
    for (const auto &d : corpus.documents())
        for (auto w : split_words(d.text())) ++freq[w];
    std::vector<std::pair<std::string_view, std::int64_t>> ranked;
    ranked.reserve(freq.size());
    for (const auto &e : freq)
        if (e.first != kUnkText && e.first != kEotText) ranked.push_back(e);
    auto by_rank = [](const auto &a, const auto &b) { return a.second > b.second || (a.second == b.second && a.first < b.first); };
    const std::size_t keep = std::min(options.vocab_cap, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end(), by_rank);
    ranked.resize(keep);

    std::vector<std::string> vocab{std::string(kUnkText), std::string(kEotText)};
    std::unordered_map<std::string_view, TokenId> ids;
    ids.reserve(keep * 2);
    for (const auto &[w, c] : ranked) {
        ids.emplace(w, static_cast<TokenId>(vocab.size()));
        vocab.emplace_back(w);
    }

    const auto n = static_cast<std::size_t>(options.order);
    std::unordered_map<NGramModel::Key, std::uint64_t, NGramModel::KeyHash> table;
    std::vector<TokenId> seq;
    for (const auto &d : corpus.documents()) {
        seq.assign(n - 1, NGramModel::kEot);
        for (auto w : split_words(d.text())) {
            auto it = ids.find(w);
            seq.push_back(it == ids.end() ? NGramModel::kUnk : it->second);
        }
        seq.push_back(NGramModel::kEot);
        for (std::size_t i = n - 1; i < seq.size(); ++i) {
            NGramModel::Key key{};
            std::copy(seq.begin() + static_cast<std::ptrdiff_t>(i + 1 - n), seq.begin() + static_cast<std::ptrdiff_t>(i + 1),
                      key.begin());
            ++table[key];
        }
    }
    std::vector<NGramModel::NgramCount> counts;
    counts.reserve(table.size());
    for (const auto &[key, count] : table) counts.push_back({key, count});

    NGramModel m;
    m.build(std::move(vocab), options.order, std::vector<double>(n, options.discount), corpus.total_words(),
            std::move(counts));
    return m;
}

} // namespace storyaug
