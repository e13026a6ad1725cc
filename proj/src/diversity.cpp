#include "storyaug/diversity.hpp"

#include "storyaug/corpus.hpp"
#include "storyaug/errors.hpp"
#include "storyaug/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <unordered_map>

namespace storyaug {

namespace {

using GramList = std::vector<std::pair<std::uint32_t, std::uint32_t>>; // (gram id, count), sorted by id

struct Profile {
    std::int64_t length = 0;
    std::vector<GramList> grams; // grams[n - 1]
};

// Exact n-gram interning: an n-gram is (id of its (n-1)-prefix, last word).
class NgramIndexer {
  public:
    explicit NgramIndexer(int max_n) : orders_(static_cast<std::size_t>(std::max(0, max_n - 1))) {}

    Profile profile(std::span<const std::string> seq) {
        const int max_n = static_cast<int>(orders_.size()) + 1;
        Profile p;
        p.length = static_cast<std::int64_t>(seq.size());
        p.grams.resize(static_cast<std::size_t>(max_n));
        std::vector<std::uint32_t> ids(seq.size());
        for (std::size_t i = 0; i < seq.size(); ++i) {
            auto [it, fresh] = words_.try_emplace(seq[i], static_cast<std::uint32_t>(words_.size()));
            ids[i] = it->second;
        }
        std::vector<std::uint32_t> prefix = ids;
        for (int n = 1; n <= max_n; ++n) {
            if (n > 1) {
                auto &table = orders_[static_cast<std::size_t>(n - 2)];
                const std::size_t count = seq.size() >= static_cast<std::size_t>(n) ? seq.size() - static_cast<std::size_t>(n) + 1 : 0;
                std::vector<std::uint32_t> next(count);
                for (std::size_t i = 0; i < count; ++i) {
                    const std::uint64_t key = (std::uint64_t{prefix[i]} << 32) | ids[i + static_cast<std::size_t>(n) - 1];
                    auto [it, fresh] = table.try_emplace(key, static_cast<std::uint32_t>(table.size()));
                    next[i] = it->second;
                }
                prefix = std::move(next);
            }
            std::vector<std::uint32_t> sorted = prefix;
            std::sort(sorted.begin(), sorted.end());
            GramList &list = p.grams[static_cast<std::size_t>(n - 1)];
            for (std::size_t i = 0; i < sorted.size();) {
                std::size_t j = i;
                while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
                list.emplace_back(sorted[i], static_cast<std::uint32_t>(j - i));
                i = j;
            }
        }
        return p;
    }

  private:
    std::unordered_map<std::string_view, std::uint32_t> words_;
    std::vector<std::unordered_map<std::uint64_t, std::uint32_t>> orders_;
};

void check_config(const BleuConfig &config) {
    if (config.max_n < 1) throw InvalidArgument("BLEU max_n must be positive");
}

std::int64_t total_ngrams(std::int64_t length, int n) { return std::max<std::int64_t>(0, length - n + 1); }

// Closest reference length to c; ties go to the shorter reference.
void update_closest(std::optional<std::int64_t> &best, std::int64_t candidate, std::int64_t c) {
    if (!best) {
        best = candidate;
        return;
    }
    const auto d_new = std::llabs(candidate - c), d_old = std::llabs(*best - c);
    if (d_new < d_old || (d_new == d_old && candidate < *best)) best = candidate;
}

double bleu_from_counts(std::span<const std::int64_t> clipped, std::int64_t hyp_len, std::int64_t ref_len, int max_n) {
    const double weight = 1.0 / static_cast<double>(max_n);
    double log_sum = 0.0;
    for (int n = 1; n <= max_n; ++n) {
        const auto c = clipped[static_cast<std::size_t>(n - 1)];
        if (c == 0) return 0.0;
        log_sum += weight * std::log(static_cast<double>(c) / static_cast<double>(total_ngrams(hyp_len, n)));
    }
    const double bp = hyp_len < ref_len ? std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len)) : 1.0;
    return bp * std::exp(log_sum);
}

// Running clipped counts of one hypothesis as references are folded in.
class ClipState {
  public:
    ClipState(const Profile &hyp, int max_n) : hyp_(&hyp), max_n_(max_n), clipped_(static_cast<std::size_t>(max_n), 0) {
        maxref_.resize(static_cast<std::size_t>(max_n));
        for (int n = 0; n < max_n; ++n) maxref_[static_cast<std::size_t>(n)].assign(hyp.grams[static_cast<std::size_t>(n)].size(), 0);
    }

    void add_reference(const Profile &ref) {
        for (int n = 0; n < max_n_; ++n) {
            const GramList &h = hyp_->grams[static_cast<std::size_t>(n)];
            const GramList &r = ref.grams[static_cast<std::size_t>(n)];
            auto &mx = maxref_[static_cast<std::size_t>(n)];
            std::size_t a = 0, b = 0;
            while (a < h.size() && b < r.size()) {
                if (h[a].first < r[b].first) {
                    ++a;
                } else if (r[b].first < h[a].first) {
                    ++b;
                } else {
                    if (r[b].second > mx[a]) {
                        const std::int64_t hc = h[a].second;
                        clipped_[static_cast<std::size_t>(n)] += std::min<std::int64_t>(hc, r[b].second) - std::min<std::int64_t>(hc, mx[a]);
                        mx[a] = r[b].second;
                    }
                    ++a;
                    ++b;
                }
            }
        }
        update_closest(closest_, ref.length, hyp_->length);
    }

    double score() const { return bleu_from_counts(clipped_, hyp_->length, closest_.value_or(0), max_n_); }

  private:
    const Profile *hyp_;
    int max_n_;
    std::vector<std::vector<std::uint32_t>> maxref_;
    std::vector<std::int64_t> clipped_;
    std::optional<std::int64_t> closest_;
};

std::vector<int> checked_k_values(std::span<const int> k_values) {
    std::vector<int> ks(k_values.begin(), k_values.end());
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    if (ks.empty()) throw InvalidArgument("k_values must be nonempty");
    if (ks.front() < 2) throw InvalidArgument("every k must be at least 2");
    return ks;
}

void check_cache(const GenerationCache &cache, int k_max) {
    if (cache.prompt_ids.empty()) throw InvalidArgument("no prompts in the generation cache");
    if (cache.prompt_ids.size() != cache.completions.size()) throw InvalidArgument("cache prompt/completion mismatch");
    for (std::size_t p = 0; p < cache.completions.size(); ++p)
        if (cache.completions[p].size() < static_cast<std::size_t>(k_max))
            throw InvalidArgument("prompt " + cache.prompt_ids[p] + " has " + std::to_string(cache.completions[p].size()) +
                                  " cached completions, need " + std::to_string(k_max));
}

SelfBleuCurve assemble_curve(const GenerationCache &cache, const std::vector<int> &ks,
                             const std::vector<std::vector<double>> &scores, const BleuConfig &config) {
    SelfBleuCurve curve;
    curve.config = config;
    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
        SelfBleuReport rep;
        rep.k = ks[ki];
        rep.config = config;
        double sum = 0.0;
        for (std::size_t p = 0; p < cache.prompt_ids.size(); ++p) {
            rep.per_prompt.push_back({cache.prompt_ids[p], ks[ki], scores[p][ki]});
            sum += scores[p][ki];
        }
        rep.average = sum / static_cast<double>(cache.prompt_ids.size());
        curve.points.push_back(std::move(rep));
    }
    return curve;
}

} // namespace

TokenSeq tokenize(std::string_view text) {
    TokenSeq out;
    for (auto w : split_words(text)) out.emplace_back(w);
    return out;
}

double bleu(std::span<const std::string> hypothesis, std::span<const TokenSeq> references, const BleuConfig &config) {
    check_config(config);
    if (hypothesis.empty() || references.empty()) throw EmptyInput();
    NgramIndexer indexer(config.max_n);
    const Profile hyp = indexer.profile(hypothesis);
    ClipState state(hyp, config.max_n);
    for (const auto &ref : references) state.add_reference(indexer.profile(ref));
    return state.score();
}

double self_bleu(std::span<const TokenSeq> generations, const BleuConfig &config) {
    check_config(config);
    if (generations.size() < 2) throw TooFewGenerations(generations.size());
    for (const auto &g : generations)
        if (g.empty()) throw EmptyInput();
    NgramIndexer indexer(config.max_n);
    std::vector<Profile> profiles;
    profiles.reserve(generations.size());
    for (const auto &g : generations) profiles.push_back(indexer.profile(g));

    std::vector<double> scores(generations.size());
    parallel_for(generations.size(), [&](std::size_t i) {
        ClipState state(profiles[i], config.max_n);
        for (std::size_t j = 0; j < profiles.size(); ++j)
            if (j != i) state.add_reference(profiles[j]);
        scores[i] = state.score();
    });
    double sum = 0.0;
    for (double s : scores) sum += s;
    return sum / static_cast<double>(scores.size());
}

double to_report_scale(double unit_score, const BleuConfig &config) {
    return config.scale == BleuScale::percent ? unit_score * 100.0 : unit_score;
}

GenerationCache generate_cache(const TextGenerator &generator, std::span<const StoryPrompt> prompts,
                               const GenerationPolicy &policy) {
    validate_policy(policy);
    GenerationCache cache;
    cache.prompt_ids.reserve(prompts.size());
    for (const auto &p : prompts) cache.prompt_ids.push_back(p.story_id);
    cache.completions.resize(prompts.size());
    parallel_for(
        prompts.size(),
        [&](std::size_t i) { cache.completions[i] = generate_k(generator, prompts[i].story_id, prompts[i].prompt_text, policy); },
        /*dynamic=*/true);
    return cache;
}

SelfBleuCurve curve_from_cache(const GenerationCache &cache, std::span<const int> k_values, const BleuConfig &config) {
    check_config(config);
    const auto ks = checked_k_values(k_values);
    const int k_max = ks.back();
    check_cache(cache, k_max);

    std::vector<std::vector<double>> scores(cache.prompt_ids.size(), std::vector<double>(ks.size(), 0.0));
    parallel_for(
        cache.prompt_ids.size(),
        [&](std::size_t p) {
            std::vector<TokenSeq> seqs;
            seqs.reserve(static_cast<std::size_t>(k_max));
            for (int i = 0; i < k_max; ++i) {
                seqs.push_back(tokenize(cache.completions[p][static_cast<std::size_t>(i)].completion_text));
                if (seqs.back().empty()) throw EmptyInput();
            }
            NgramIndexer indexer(config.max_n);
            std::vector<Profile> profiles;
            profiles.reserve(seqs.size());
            for (const auto &s : seqs) profiles.push_back(indexer.profile(s));

            // per_k[ki][i]: BLEU of completion i against the other completions among the first ks[ki].
            std::vector<std::vector<double>> per_k(ks.size(), std::vector<double>(static_cast<std::size_t>(k_max), 0.0));
            for (int i = 0; i < k_max; ++i) {
                ClipState state(profiles[static_cast<std::size_t>(i)], config.max_n);
                std::size_t ki = 0;
                for (int j = 0; j < k_max && ki < ks.size(); ++j) {
                    if (j != i) state.add_reference(profiles[static_cast<std::size_t>(j)]);
                    const int k = j + 1;
                    while (ki < ks.size() && ks[ki] < k) ++ki;
                    if (ki < ks.size() && ks[ki] == k && i < k)
                        per_k[ki][static_cast<std::size_t>(i)] = state.score();
                }
            }
            for (std::size_t ki = 0; ki < ks.size(); ++ki) {
                double sum = 0.0;
                for (int i = 0; i < ks[ki]; ++i) sum += per_k[ki][static_cast<std::size_t>(i)];
                scores[p][ki] = sum / static_cast<double>(ks[ki]);
            }
        },
        /*dynamic=*/true);
    return assemble_curve(cache, ks, scores, config);
}

std::pair<SelfBleuCurve, GenerationCache> self_bleu_curve(const TextGenerator &generator,
                                                          std::span<const StoryPrompt> prompts, int k_max,
                                                          const GenerationPolicy &policy,
                                                          std::span<const int> k_values, const BleuConfig &config) {
    if (prompts.empty()) throw InvalidArgument("self-BLEU curve needs at least one prompt");
    for (int k : k_values)
        if (k < 2 || k > k_max) throw InvalidArgument("k values must lie in [2, k_max]");
    GenerationPolicy p = policy;
    p.k = k_max;
    GenerationCache cache = generate_cache(generator, prompts, p);
    SelfBleuCurve curve = curve_from_cache(cache, k_values, config);
    return {std::move(curve), std::move(cache)};
}

namespace reference {

double self_bleu(std::span<const TokenSeq> generations, const BleuConfig &config) {
    if (generations.size() < 2) throw TooFewGenerations(generations.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < generations.size(); ++i) {
        std::vector<TokenSeq> others;
        for (std::size_t j = 0; j < generations.size(); ++j)
            if (j != i) others.push_back(generations[j]);
        sum += storyaug::bleu(generations[i], others, config);
    }
    return sum / static_cast<double>(generations.size());
}

SelfBleuCurve curve_from_cache(const GenerationCache &cache, std::span<const int> k_values, const BleuConfig &config) {
    check_config(config);
    const auto ks = checked_k_values(k_values);
    check_cache(cache, ks.back());
    std::vector<std::vector<double>> scores(cache.prompt_ids.size(), std::vector<double>(ks.size(), 0.0));
    for (std::size_t p = 0; p < cache.prompt_ids.size(); ++p) {
        std::vector<TokenSeq> seqs;
        for (const auto &g : cache.completions[p]) seqs.push_back(tokenize(g.completion_text));
        for (std::size_t ki = 0; ki < ks.size(); ++ki)
            scores[p][ki] = reference::self_bleu(std::span<const TokenSeq>(seqs.data(), static_cast<std::size_t>(ks[ki])), config);
    }
    return assemble_curve(cache, ks, scores, config);
}

} // namespace reference

} // namespace storyaug
