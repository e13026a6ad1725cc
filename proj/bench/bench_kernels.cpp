// Parallel kernels against their serial reference implementations.

#include "storyaug/diversity.hpp"
#include "storyaug/eval_pairs.hpp"
#include "storyaug/ngram.hpp"
#include "storyaug/synth.hpp"

#include <benchmark/benchmark.h>

#include <map>

using namespace storyaug;

namespace {

const NGramModel &model() {
    static const NGramModel m = train_ngram(synth_corpus(SynthStyle::stories, 200'000, 1, "b"), {4, 50'000, 0.75});
    return m;
}

const GenerationCache &cache(int k) {
    static std::map<int, GenerationCache> caches;
    auto it = caches.find(k);
    if (it != caches.end()) return it->second;
    const Corpus stories = synth_corpus(SynthStyle::stories, 20'000, 2, "p");
    auto prompts = build_prompt_set(stories, {}, 3).prompts;
    prompts.resize(40);
    GenerationPolicy p;
    p.k = k;
    p.seed = 4;
    p.max_new_tokens = 200;
    return caches.emplace(k, generate_cache(model(), prompts, p)).first->second;
}

std::vector<TokenSeq> generations(int k) {
    std::vector<TokenSeq> out;
    for (const auto &g : cache(k).completions[0]) out.push_back(tokenize(g.completion_text));
    return out;
}

std::vector<MinimalPair> pairs() {
    const Corpus c = synth_corpus(SynthStyle::stories, 20'000, 5, "e");
    std::vector<MinimalPair> out;
    for (std::size_t i = 0; i + 1 < c.size() && out.size() < 200; i += 2)
        out.push_back({"p" + std::to_string(i), c.documents()[i].text(), c.documents()[i + 1].text(), "g" + std::to_string(i % 7),
                       Suite::custom});
    return out;
}

void BM_SelfBleu(benchmark::State &state) {
    const auto gens = generations(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(self_bleu(gens));
}

void BM_SelfBleuReference(benchmark::State &state) {
    const auto gens = generations(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(reference::self_bleu(gens));
}

void BM_Curve(benchmark::State &state) {
    const auto &c = cache(20);
    std::vector<int> ks;
    for (int k = 2; k <= 20; ++k) ks.push_back(k);
    for (auto _ : state) benchmark::DoNotOptimize(curve_from_cache(c, ks));
}

void BM_CurveReference(benchmark::State &state) {
    const auto &c = cache(20);
    std::vector<int> ks;
    for (int k = 2; k <= 20; ++k) ks.push_back(k);
    for (auto _ : state) benchmark::DoNotOptimize(reference::curve_from_cache(c, ks));
}

void BM_ScorePairs(benchmark::State &state) {
    const auto ps = pairs();
    for (auto _ : state) benchmark::DoNotOptimize(score_pairs(model(), ps));
}

void BM_ScorePairsReference(benchmark::State &state) {
    const auto ps = pairs();
    for (auto _ : state) benchmark::DoNotOptimize(reference::score_pairs(model(), ps));
}

void BM_NextTokenSparse(benchmark::State &state) {
    const auto h = model().encode("Once upon a time, there was a");
    GenerationPolicy p;
    Rng rng(1);
    for (auto _ : state) benchmark::DoNotOptimize(model().next_token(h, p, rng));
}

void BM_NextTokenDense(benchmark::State &state) {
    const auto h = model().encode("Once upon a time, there was a");
    GenerationPolicy p;
    Rng rng(1);
    for (auto _ : state) benchmark::DoNotOptimize(model().next_token_dense(h, p, rng));
}

} // namespace

BENCHMARK(BM_SelfBleu)->Arg(5)->Arg(20)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SelfBleuReference)->Arg(5)->Arg(20)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Curve)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CurveReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScorePairs)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScorePairsReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NextTokenSparse);
BENCHMARK(BM_NextTokenDense);

BENCHMARK_MAIN();
