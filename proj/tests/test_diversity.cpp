#include "support.hpp"

#include "storyaug/diversity.hpp"
#include "storyaug/errors.hpp"
#include "storyaug/random.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

using namespace storyaug;

namespace {

std::vector<std::string> words_of(const std::string &s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

std::map<std::string, int> ngram_counts(const std::vector<std::string> &w, int n) {
    std::map<std::string, int> m;
    for (std::size_t i = 0; i + n <= w.size(); ++i) {
        std::string key;
        for (int j = 0; j < n; ++j) key += w[i + j] + '\x1f';
        ++m[key];
    }
    return m;
}

// Brute-force sentence BLEU over string-keyed n-gram maps.
double oracle_bleu(const std::vector<std::string> &hyp, const std::vector<std::vector<std::string>> &refs, int max_n) {
    double log_sum = 0.0;
    for (int n = 1; n <= max_n; ++n) {
        const auto h = ngram_counts(hyp, n);
        int total = 0, clipped = 0;
        for (const auto &[g, c] : h) {
            int best = 0;
            for (const auto &r : refs) {
                const auto rc = ngram_counts(r, n);
                auto it = rc.find(g);
                if (it != rc.end()) best = std::max(best, it->second);
            }
            total += c;
            clipped += std::min(c, best);
        }
        if (clipped == 0) return 0.0;
        log_sum += std::log(double(clipped) / total) / max_n;
    }
    const double c = double(hyp.size());
    double r = 0;
    double best_diff = 1e300;
    for (const auto &ref : refs) {
        const double diff = std::abs(double(ref.size()) - c);
        if (diff < best_diff || (diff == best_diff && double(ref.size()) < r)) {
            best_diff = diff;
            r = double(ref.size());
        }
    }
    const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
    return bp * std::exp(log_sum);
}

TokenSeq random_sentence(Rng &rng, int vocab, int len) {
    TokenSeq s;
    for (int i = 0; i < len; ++i) s.push_back("t" + std::to_string(rng.below(vocab)));
    return s;
}

GenerationCache random_cache(std::uint64_t seed, int prompts, int k) {
    Rng rng(seed);
    GenerationCache cache;
    for (int p = 0; p < prompts; ++p) {
        cache.prompt_ids.push_back("p" + std::to_string(p));
        std::vector<Generation> gens;
        for (int i = 0; i < k; ++i) {
            Generation g;
            const auto toks = random_sentence(rng, 6 + p % 5, 4 + static_cast<int>(rng.below(20)));
            for (const auto &t : toks) g.completion_text += (g.completion_text.empty() ? "" : " ") + t;
            gens.push_back(g);
        }
        cache.completions.push_back(std::move(gens));
    }
    return cache;
}

} // namespace

TEST_CASE("BLEU matches the fixture sets and the brute-force oracle") {
    const auto sets = nlohmann::json::parse(test::slurp(test::fixture("bleu_sets.json")));
    REQUIRE(sets.size() == 10);
    for (const auto &s : sets) {
        CAPTURE(s["name"]);
        const auto hyp = words_of(s["hypothesis"]);
        std::vector<TokenSeq> refs;
        for (const auto &r : s["references"]) refs.push_back(words_of(r));
        const double got = bleu(hyp, refs);
        CHECK(std::abs(got - s["expected"].get<double>()) < 1e-9);
        CHECK(std::abs(got - oracle_bleu(hyp, refs, 4)) < 1e-9);
    }
}

TEST_CASE("BLEU agrees with the oracle on random sentences") {
    Rng rng(21);
    for (int trial = 0; trial < 500; ++trial) {
        const int max_n = 1 + static_cast<int>(rng.below(4));
        const auto hyp = random_sentence(rng, 5, 1 + static_cast<int>(rng.below(15)));
        std::vector<TokenSeq> refs;
        for (int r = 0, n = 1 + static_cast<int>(rng.below(4)); r < n; ++r)
            refs.push_back(random_sentence(rng, 5, 1 + static_cast<int>(rng.below(15))));
        const double got = bleu(hyp, refs, {max_n});
        CHECK(got >= 0.0);
        CHECK(got <= 1.0);
        CHECK(std::abs(got - oracle_bleu(hyp, refs, max_n)) < 1e-12);
    }
}

TEST_CASE("self-BLEU identity and disjoint bounds") {
    for (std::size_t k : {2, 5, 10}) {
        const std::vector<TokenSeq> same(k, words_of("one day the little dog ran to the park"));
        CHECK(to_report_scale(self_bleu(same), {}) == 100.0);
        CHECK(reference::self_bleu(same) == 1.0);
        std::vector<TokenSeq> disjoint;
        for (std::size_t i = 0; i < k; ++i)
            disjoint.push_back({"a" + std::to_string(i), "b" + std::to_string(i), "c" + std::to_string(i),
                                "d" + std::to_string(i), "e" + std::to_string(i)});
        CHECK(self_bleu(disjoint) == 0.0);
    }
    CHECK(to_report_scale(0.25, {4, BleuScale::unit}) == 0.25);
}

TEST_CASE("BLEU argument errors") {
    const std::vector<TokenSeq> none;
    const TokenSeq hyp = {"a"};
    CHECK_THROWS_AS(bleu(hyp, none), EmptyInput);
    const std::vector<TokenSeq> one = {{"a"}};
    CHECK_THROWS_AS(bleu(TokenSeq{}, one), EmptyInput);
    CHECK_THROWS_AS(self_bleu(one), TooFewGenerations);
    CHECK_THROWS_AS(reference::self_bleu(one), TooFewGenerations);
    CHECK_THROWS_AS(self_bleu(std::vector<TokenSeq>{{"a"}, {}}), EmptyInput);
}

TEST_CASE("parallel self-BLEU equals the serial reference") {
    Rng rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<TokenSeq> gens;
        for (int i = 0, k = 2 + static_cast<int>(rng.below(10)); i < k; ++i)
            gens.push_back(random_sentence(rng, 8, 3 + static_cast<int>(rng.below(25))));
        CHECK(self_bleu(gens) == reference::self_bleu(gens));
    }
}

TEST_CASE("incremental curve kernel equals the reference curve") {
    const GenerationCache cache = random_cache(5, 12, 20);
    std::vector<int> ks;
    for (int k = 2; k <= 20; ++k) ks.push_back(k);
    const SelfBleuCurve fast = curve_from_cache(cache, ks);
    const SelfBleuCurve slow = reference::curve_from_cache(cache, ks);
    REQUIRE(fast.points.size() == ks.size());
    for (std::size_t i = 0; i < ks.size(); ++i) {
        CHECK(fast.points[i].k == ks[i]);
        CHECK(fast.points[i].average == slow.points[i].average);
        REQUIRE(fast.points[i].per_prompt.size() == 12);
        for (std::size_t p = 0; p < 12; ++p) CHECK(fast.points[i].per_prompt[p].score == slow.points[i].per_prompt[p].score);
    }
    CHECK_THROWS_AS(curve_from_cache(cache, std::vector<int>{21}), InvalidArgument);
    CHECK_THROWS_AS(curve_from_cache(cache, std::vector<int>{1}), InvalidArgument);
}

TEST_CASE("tokenize splits on whitespace and drops the paragraph symbol") {
    CHECK(tokenize("a b [PAR] c") == TokenSeq{"a", "b", "c"});
    CHECK(tokenize("  ").empty());
}
