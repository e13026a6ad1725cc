#include "storyaug/model.hpp"

#include "storyaug/errors.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace storyaug {

std::string_view to_string(DecodeMode m) { return m == DecodeMode::greedy ? "greedy" : "nucleus"; }

DecodeMode parse_decode_mode(std::string_view s) {
    if (s == "greedy") return DecodeMode::greedy;
    if (s == "nucleus") return DecodeMode::nucleus;
    throw InvalidArgument("unknown decoding mode: " + std::string(s));
}

std::string_view to_string(Termination t) { return t == Termination::stop_token ? "stop_token" : "max_len"; }

void validate_policy(const GenerationPolicy &policy) {
    if (!(policy.top_p > 0.0 && policy.top_p <= 1.0)) throw InvalidArgument("top_p must lie in (0, 1]");
    if (!(policy.temperature > 0.0) || !std::isfinite(policy.temperature))
        throw InvalidArgument("temperature must be positive");
    if (policy.k < 1) throw InvalidArgument("k must be positive");
    if (policy.max_new_tokens < 1) throw InvalidArgument("max_new_tokens must be positive");
}

std::vector<Generation> generate_k(const TextGenerator &generator, const std::string &story_id,
                                   std::string_view prompt, const GenerationPolicy &policy) {
    validate_policy(policy);
    std::vector<Generation> out;
    out.reserve(static_cast<std::size_t>(policy.k));
    for (int i = 0; i < policy.k; ++i) {
        if (policy.mode == DecodeMode::greedy && i > 0) {
            out.push_back(out.front());
            continue;
        }
        GenerationPolicy p = policy;
        p.seed = completion_seed(policy.seed, story_id, static_cast<std::size_t>(i));
        Generation g = generator.generate(prompt, p);
        g.story_id = story_id;
        g.policy = policy;
        out.push_back(std::move(g));
    }
    return out;
}

std::vector<NucleusEntry> nucleus_set(std::span<const double> probs, double top_p, double temperature,
                                      std::optional<TokenId> excluded) {
    std::vector<NucleusEntry> entries;
    entries.reserve(probs.size());
    double total = 0.0;
    const bool unit_temperature = temperature == 1.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const auto id = static_cast<TokenId>(i);
        if (excluded && *excluded == id) continue;
        const double w = unit_temperature ? probs[i] : std::exp(std::log(probs[i]) / temperature);
        if (!(w > 0.0)) continue;
        if (!unit_temperature) total += w;
        entries.push_back({id, w});
    }
    if (unit_temperature) total = 1.0 - (excluded && *excluded < probs.size() ? probs[*excluded] : 0.0);
    std::sort(entries.begin(), entries.end(), [](const NucleusEntry &a, const NucleusEntry &b) {
        return a.weight > b.weight || (a.weight == b.weight && a.id < b.id);
    });
    const double threshold = top_p * total;
    double cumulative = 0.0;
    std::size_t keep = 0;
    while (keep < entries.size()) {
        cumulative += entries[keep].weight;
        ++keep;
        if (cumulative >= threshold) break;
    }
    entries.resize(keep);
    return entries;
}

TokenId sample_from_nucleus(std::span<const NucleusEntry> nucleus, Rng &rng) {
    if (nucleus.empty()) throw InvalidArgument("empty nucleus");
    double mass = 0.0;
    for (const auto &e : nucleus) mass += e.weight;
    const double u = rng.uniform() * mass;
    double acc = 0.0;
    for (const auto &e : nucleus) {
        acc += e.weight;
        if (u < acc) return e.id;
    }
    return nucleus.back().id;
}

TokenId greedy_pick(std::span<const double> probs, std::optional<TokenId> excluded) {
    std::optional<TokenId> best;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const auto id = static_cast<TokenId>(i);
        if (excluded && *excluded == id) continue;
        if (!best || probs[i] > probs[*best]) best = id;
    }
    if (!best) throw InvalidArgument("no token available for greedy decoding");
    return *best;
}

TokenId pick_token(std::span<const double> probs, const GenerationPolicy &policy, Rng &rng,
                   std::optional<TokenId> excluded) {
    if (policy.mode == DecodeMode::greedy) return greedy_pick(probs, excluded);
    const auto nucleus = nucleus_set(probs, policy.top_p, policy.temperature, excluded);
    const TokenId id = sample_from_nucleus(nucleus, rng);
#ifndef NDEBUG
    assert(std::any_of(nucleus.begin(), nucleus.end(), [&](const NucleusEntry &e) { return e.id == id; }));
#endif
    return id;
}

TokenId NextTokenModel::next_token(std::span<const TokenId> history, const GenerationPolicy &policy, Rng &rng) const {
    thread_local std::vector<double> probs;
    next_distribution(history, probs);
    return pick_token(probs, policy, rng, excluded_id());
}

DecodeResult decode(const NextTokenModel &model, std::vector<TokenId> history, const GenerationPolicy &policy) {
    validate_policy(policy);
    Rng rng(policy.seed);
    DecodeResult out;
    const TokenId eot = model.eot_id();
    for (int step = 0; step < policy.max_new_tokens; ++step) {
        const TokenId next = model.next_token(history, policy, rng);
        if (next == eot) {
            out.terminated_by = Termination::stop_token;
            return out;
        }
        out.tokens.push_back(next);
        history.push_back(next);
    }
    out.terminated_by = Termination::max_len;
    return out;
}

} // namespace storyaug
