#include "storyaug/pipeline.hpp"

#include "storyaug/digest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>

namespace storyaug {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Reads typed fields out of a JSON object, collecting violations instead of throwing.
class FieldReader {
  public:
    FieldReader(std::vector<ConfigViolation> &violations, std::string prefix)
        : violations_(violations), prefix_(std::move(prefix)) {}

    template <class T> void read(const json &obj, const char *key, T &out) {
        if (!obj.contains(key)) return;
        try {
            out = obj.at(key).get<T>();
        } catch (const json::exception &) {
            violations_.push_back({prefix_ + key, "has the wrong type"});
        }
    }

    void unknown_keys(const json &obj, std::initializer_list<const char *> known) {
        for (auto it = obj.begin(); it != obj.end(); ++it)
            if (std::none_of(known.begin(), known.end(), [&](const char *k) { return it.key() == k; }))
                violations_.push_back({prefix_ + it.key(), "unknown field"});
    }

    bool object(const json &j, const char *key) {
        if (!j.contains(key)) return false;
        if (j.at(key).is_object()) return true;
        violations_.push_back({prefix_ + key, "must be an object"});
        return false;
    }

  private:
    std::vector<ConfigViolation> &violations_;
    std::string prefix_;
};

fs::path resolve(const std::string &p, const fs::path &dir) {
    if (p.empty()) return {};
    fs::path path(p);
    return path.is_relative() && !dir.empty() ? dir / path : path;
}

std::string words_label(std::int64_t words) {
    char buf[32];
    if (words >= 1'000'000 && words % 1'000'000 == 0)
        std::snprintf(buf, sizeof buf, "%lldM", static_cast<long long>(words / 1'000'000));
    else if (words >= 1'000 && words % 1'000 == 0)
        std::snprintf(buf, sizeof buf, "%lldK", static_cast<long long>(words / 1'000));
    else
        std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(words));
    return buf;
}

std::string millions(std::int64_t words) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2fM", static_cast<double>(words) / 1e6);
    return buf;
}

bool is_previous_run(const fs::path &dir) { return fs::is_regular_file(dir / "manifest.json"); }

} // namespace

PipelineConfig config_from_json(const json &j, const fs::path &config_dir) {
    std::vector<ConfigViolation> violations;
    PipelineConfig c;
    if (!j.is_object()) throw ConfigInvalid(std::vector<ConfigViolation>{{"<root>", "config must be a JSON object"}});
    FieldReader root(violations, "");
    root.unknown_keys(j, {"track", "paths", "m_words", "b_words", "policy", "bleu", "seeds", "ngram", "truncation",
                          "selfbleu", "pairs"});

    if (j.contains("track")) {
        const json &t = j["track"];
        try {
            c.track = t.is_string() ? BudgetSpec::parse(t.get<std::string>()) : BudgetSpec::custom(t.get<std::int64_t>());
        } catch (const std::exception &e) {
            violations.push_back({"track", e.what()});
        }
    }
    root.read(j, "m_words", c.m_words);
    root.read(j, "b_words", c.b_words);

    if (root.object(j, "paths")) {
        const json &p = j["paths"];
        FieldReader r(violations, "paths.");
        r.unknown_keys(p, {"tiny", "baby", "workdir"});
        std::string tiny, baby, workdir;
        r.read(p, "tiny", tiny);
        r.read(p, "baby", baby);
        r.read(p, "workdir", workdir);
        c.tiny_path = resolve(tiny, config_dir);
        c.baby_path = resolve(baby, config_dir);
        c.workdir = resolve(workdir, config_dir);
    }
    if (root.object(j, "policy")) {
        const json &p = j["policy"];
        FieldReader r(violations, "policy.");
        r.unknown_keys(p, {"mode", "top_p", "temperature", "k", "max_new_tokens"});
        if (p.contains("mode")) {
            try {
                c.policy.mode = parse_decode_mode(p["mode"].get<std::string>());
            } catch (const std::exception &e) {
                violations.push_back({"policy.mode", e.what()});
            }
        }
        r.read(p, "top_p", c.policy.top_p);
        r.read(p, "temperature", c.policy.temperature);
        r.read(p, "k", c.policy.k);
        r.read(p, "max_new_tokens", c.policy.max_new_tokens);
    }
    if (root.object(j, "bleu")) {
        const json &b = j["bleu"];
        FieldReader r(violations, "bleu.");
        r.unknown_keys(b, {"max_n", "scale"});
        r.read(b, "max_n", c.bleu.max_n);
        if (b.contains("scale")) {
            const json &s = b["scale"];
            if (s == "percent")
                c.bleu.scale = BleuScale::percent;
            else if (s == "unit")
                c.bleu.scale = BleuScale::unit;
            else
                violations.push_back({"bleu.scale", "must be \"percent\" or \"unit\""});
        }
    }
    if (root.object(j, "seeds")) {
        const json &s = j["seeds"];
        FieldReader r(violations, "seeds.");
        r.unknown_keys(s, {"sample_tiny", "sample_baby", "prompts", "generation"});
        r.read(s, "sample_tiny", c.seeds.sample_tiny);
        r.read(s, "sample_baby", c.seeds.sample_baby);
        r.read(s, "prompts", c.seeds.prompts);
        r.read(s, "generation", c.seeds.generation);
    }
    if (root.object(j, "ngram")) {
        const json &n = j["ngram"];
        FieldReader r(violations, "ngram.");
        r.unknown_keys(n, {"order", "vocab_cap", "discount"});
        r.read(n, "order", c.ngram.order);
        r.read(n, "vocab_cap", c.ngram.vocab_cap);
        r.read(n, "discount", c.ngram.discount);
    }
    if (root.object(j, "truncation")) {
        const json &t = j["truncation"];
        FieldReader r(violations, "truncation.");
        r.unknown_keys(t, {"low", "high"});
        r.read(t, "low", c.truncation.low);
        r.read(t, "high", c.truncation.high);
    }
    if (root.object(j, "selfbleu")) {
        const json &s = j["selfbleu"];
        FieldReader r(violations, "selfbleu.");
        r.unknown_keys(s, {"prompts", "k_values"});
        r.read(s, "prompts", c.selfbleu_prompts);
        r.read(s, "k_values", c.selfbleu_k_values);
    }
    if (root.object(j, "pairs")) {
        const json &p = j["pairs"];
        FieldReader r(violations, "pairs.");
        r.unknown_keys(p, {"path", "suite"});
        std::string path;
        r.read(p, "path", path);
        if (!path.empty()) c.pairs_path = resolve(path, config_dir);
        if (p.contains("suite")) {
            try {
                c.pairs_suite = parse_suite(p["suite"].get<std::string>());
            } catch (const std::exception &e) {
                violations.push_back({"pairs.suite", e.what()});
            }
        }
    }
    c.policy.seed = c.seeds.generation;
    if (!violations.empty()) throw ConfigInvalid(std::move(violations));
    return c;
}

json config_to_json(const PipelineConfig &c) {
    json j = {
        {"track", c.track.budget_words},
        {"paths", {{"tiny", c.tiny_path.generic_string()},
                   {"baby", c.baby_path.generic_string()},
                   {"workdir", c.workdir.generic_string()}}},
        {"m_words", c.m_words},
        {"b_words", c.b_words},
        {"policy", {{"mode", std::string(to_string(c.policy.mode))},
                    {"top_p", c.policy.top_p},
                    {"temperature", c.policy.temperature},
                    {"k", c.policy.k},
                    {"max_new_tokens", c.policy.max_new_tokens}}},
        {"bleu", {{"max_n", c.bleu.max_n}, {"scale", c.bleu.scale == BleuScale::percent ? "percent" : "unit"}}},
        {"seeds", {{"sample_tiny", c.seeds.sample_tiny},
                   {"sample_baby", c.seeds.sample_baby},
                   {"prompts", c.seeds.prompts},
                   {"generation", c.seeds.generation}}},
        {"ngram", {{"order", c.ngram.order}, {"vocab_cap", c.ngram.vocab_cap}, {"discount", c.ngram.discount}}},
        {"truncation", {{"low", c.truncation.low}, {"high", c.truncation.high}}},
        {"selfbleu", {{"prompts", c.selfbleu_prompts}, {"k_values", c.selfbleu_k_values}}},
    };
    if (c.pairs_path)
        j["pairs"] = {{"path", c.pairs_path->generic_string()}, {"suite", std::string(to_string(c.pairs_suite))}};
    return j;
}

PipelineConfig load_config(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigInvalid(std::vector<ConfigViolation>{{"<file>", "cannot open " + path.string()}});
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception &e) {
        throw ConfigInvalid(std::vector<ConfigViolation>{{"<file>", e.what()}});
    }
    return config_from_json(j, path.parent_path());
}

std::vector<ConfigViolation> check_config(const PipelineConfig &c) {
    std::vector<ConfigViolation> v;
    auto need = [&](bool ok, const char *field, std::string what) {
        if (!ok) v.push_back({field, std::move(what)});
    };
    need(c.track.budget_words > 0, "track", "budget must be positive");
    need(c.m_words > 0, "m_words", "must be positive");
    need(c.b_words >= 0, "b_words", "must be non-negative");
    need(c.m_words + c.b_words <= c.track.budget_words, "m_words + b_words",
         std::to_string(c.m_words + c.b_words) + " exceeds the track budget " + std::to_string(c.track.budget_words));

    auto need_file = [&](const fs::path &p, const char *field) {
        if (p.empty())
            v.push_back({field, "is required"});
        else if (!fs::is_regular_file(p))
            v.push_back({field, "does not exist: " + p.string()});
    };
    need_file(c.tiny_path, "paths.tiny");
    if (c.b_words > 0) need_file(c.baby_path, "paths.baby");
    if (c.workdir.empty()) {
        v.push_back({"paths.workdir", "is required"});
    } else if (fs::exists(c.workdir)) {
        if (!fs::is_directory(c.workdir))
            v.push_back({"paths.workdir", "exists and is not a directory"});
        else if (!fs::is_empty(c.workdir) && !is_previous_run(c.workdir))
            v.push_back({"paths.workdir", "is a non-empty directory without a run manifest"});
    }
    if (c.pairs_path) need_file(*c.pairs_path, "pairs.path");

    const auto &p = c.policy;
    need(p.top_p > 0.0 && p.top_p <= 1.0, "policy.top_p", "must lie in (0, 1]");
    need(std::isfinite(p.temperature) && p.temperature > 0.0, "policy.temperature", "must be positive");
    need(p.k >= 1, "policy.k", "must be at least 1");
    need(p.max_new_tokens >= 1, "policy.max_new_tokens", "must be at least 1");
    need(c.bleu.max_n >= 1, "bleu.max_n", "must be at least 1");
    need(c.ngram.order >= 1 && c.ngram.order <= kMaxNgramOrder, "ngram.order",
         "must lie in [1, " + std::to_string(kMaxNgramOrder) + "]");
    need(c.ngram.vocab_cap >= 2, "ngram.vocab_cap", "must be at least 2");
    need(c.ngram.discount > 0.0 && c.ngram.discount < 1.0, "ngram.discount", "must lie in (0, 1)");
    need(c.truncation.low > 0.0 && c.truncation.low < 1.0, "truncation.low", "must lie in (0, 1)");
    need(c.truncation.high >= c.truncation.low && c.truncation.high < 1.0, "truncation.high",
         "must lie in [low, 1)");
    for (int k : c.selfbleu_k_values)
        if (k < 2 || k > p.k) {
            v.push_back({"selfbleu.k_values", "each k must lie in [2, policy.k]"});
            break;
        }
    return v;
}

void validate_config(const PipelineConfig &config) {
    auto v = check_config(config);
    if (!v.empty()) throw ConfigInvalid(std::move(v));
}

namespace {

class RunRecorder {
  public:
    explicit RunRecorder(fs::path workdir) : workdir_(std::move(workdir)) {}

    json &manifest() { return manifest_; }

    json artifact(const std::string &rel) const {
        const fs::path p = workdir_ / rel;
        return {{"path", rel}, {"sha256", sha256_file(p)}, {"bytes", fs::file_size(p)}};
    }

    json corpus_artifacts(const std::string &rel) const {
        return json::array({artifact(rel), artifact(rel + ".manifest.json")});
    }

    void write_text(const std::string &rel, const std::string &content) const {
        const fs::path p = workdir_ / rel;
        fs::create_directories(p.parent_path());
        write_file_atomically(p, content);
    }

    void flush() const { write_text("manifest.json", manifest_.dump(2) + "\n"); }

    void stage(const std::string &name, const std::function<json()> &body) {
        try {
            json record = body();
            record["name"] = name;
            record["status"] = "ok";
            manifest_["stages"].push_back(std::move(record));
            flush();
        } catch (const std::exception &e) {
            manifest_["stages"].push_back({{"name", name}, {"status", "failed"}, {"error", e.what()}});
            manifest_["status"] = "failed";
            manifest_["failed_stage"] = name;
            try {
                flush();
            } catch (...) {
            }
            throw StageFailed(name, e.what());
        }
    }

  private:
    fs::path workdir_;
    json manifest_;
};

json manifest_summary(const CorpusManifest &m) {
    json entries = json::array();
    for (const auto &e : m.entries) {
        json je = {{"source", e.source.name()},
                   {"provenance", std::string(to_string(e.provenance))},
                   {"word_count", e.word_count}};
        if (!e.label.empty()) je["label"] = e.label;
        entries.push_back(std::move(je));
    }
    return {{"total_words", m.total_words}, {"nongenerated_words", m.nongenerated_words}, {"entries", entries}};
}

std::string render_selfbleu(const SelfBleuCurve &curve, std::size_t prompts) {
    std::string out;
    char line[128];
    std::snprintf(line, sizeof line, "Self-BLEU over %zu prompts (BLEU-%d)\n", prompts, curve.config.max_n);
    out += line;
    out += "k     score\n";
    for (const auto &pt : curve.points) {
        std::snprintf(line, sizeof line, "%-5d %.4f\n", pt.k, to_report_scale(pt.average, curve.config));
        out += line;
    }
    return out;
}

} // namespace

PipelineResult run_pipeline(const PipelineConfig &config) {
    validate_config(config);
    const fs::path &wd = config.workdir;
    if (fs::exists(wd)) fs::remove_all(wd);
    fs::create_directories(wd);

    RunRecorder rec(wd);
    json &man = rec.manifest();
    json cfg = config_to_json(config);
    // The manifest names inputs by file name only, so runs compare across machines.
    cfg["paths"] = {{"tiny", config.tiny_path.filename().generic_string()},
                    {"baby", config.baby_path.filename().generic_string()}};
    if (config.pairs_path) cfg["pairs"]["path"] = config.pairs_path->filename().generic_string();
    man = {{"format", "storyaug-run/1"},
           {"tool_version", std::string(kToolVersion)},
           {"normalization", std::string(kNormalizationVersion)},
           {"config", cfg},
           {"status", "running"},
           {"stages", json::array()}};
    rec.flush();

    GenerationPolicy policy = config.policy;
    policy.seed = config.seeds.generation;

    Corpus tiny, baby, tiny_m, baby_b, d_gen, d_comb;
    std::optional<NGramModel> model;
    PromptSet prompts;
    GenerationCache cache;
    std::optional<std::pair<SelfBleuCurve, std::size_t>> selfbleu;
    std::optional<EvalReport> eval;

    rec.stage("normalize", [&] {
        json inputs = json::object();
        json stats = json::object();
        auto import = [&](const fs::path &path, Source source, const char *role, const char *prefix) {
            RawImport r = import_raw_corpus(path, source, prefix);
            inputs[role] = {{"file", path.filename().generic_string()}, {"sha256", sha256_file(path)}};
            stats[role] = {{"documents", r.corpus.size()},
                           {"words", r.corpus.total_words()},
                           {"skipped_empty", r.skipped_empty}};
            return std::move(r.corpus);
        };
        tiny = import(config.tiny_path, Source::tinystories(), "tiny", "tiny");
        if (config.b_words > 0) baby = import(config.baby_path, Source::babylm(), "baby", "baby");
        man["inputs"] = inputs;
        return json{{"stats", stats}};
    });

    rec.stage("sample", [&] {
        tiny_m = sample_budget(tiny, config.m_words, config.seeds.sample_tiny);
        if (config.b_words > 0) baby_b = sample_budget(baby, config.b_words, config.seeds.sample_baby);
        tiny = {};
        baby = {};
        fs::create_directories(wd / "corpora");
        write_corpus(tiny_m, wd / "corpora/tiny_m.jsonl");
        write_corpus(baby_b, wd / "corpora/baby_b.jsonl");
        json outputs = rec.corpus_artifacts("corpora/tiny_m.jsonl");
        for (auto &a : rec.corpus_artifacts("corpora/baby_b.jsonl")) outputs.push_back(a);
        return json{{"inputs", json::array({"tiny", "baby"})},
                    {"outputs", outputs},
                    {"stats", {{"tiny_m_words", tiny_m.total_words()},
                               {"tiny_m_documents", tiny_m.size()},
                               {"baby_b_words", baby_b.total_words()},
                               {"baby_b_documents", baby_b.size()}}}};
    });

    rec.stage("train", [&] {
        model = train_ngram(tiny_m, config.ngram);
        fs::create_directories(wd / "model");
        model->save(wd / "model/ngram.txt");
        return json{{"inputs", json::array({"corpora/tiny_m.jsonl"})},
                    {"outputs", json::array({rec.artifact("model/ngram.txt")})},
                    {"stats", {{"order", model->order()},
                               {"vocab_size", model->vocab_size()},
                               {"trained_words", model->trained_words()}}}};
    });

    rec.stage("prompts", [&] {
        prompts = build_prompt_set(tiny_m, config.truncation, config.seeds.prompts);
        write_prompts(prompts.prompts, wd / "prompts.jsonl");
        return json{{"inputs", json::array({"corpora/tiny_m.jsonl"})},
                    {"outputs", json::array({rec.artifact("prompts.jsonl")})},
                    {"stats", {{"prompts", prompts.prompts.size()}, {"skipped_short", prompts.skipped}}}};
    });

    rec.stage("generate", [&] {
        cache = generate_cache(*model, prompts.prompts, policy);
        std::vector<Document> docs;
        std::string meta;
        std::int64_t empty = 0, at_max_len = 0, prompt_words = 0;
        char id_suffix[24];
        for (std::size_t p = 0; p < cache.prompt_ids.size(); ++p) {
            prompt_words += prompts.prompts[p].prompt_words;
            for (std::size_t i = 0; i < cache.completions[p].size(); ++i) {
                const Generation &g = cache.completions[p][i];
                std::snprintf(id_suffix, sizeof id_suffix, "#g%zu", i);
                const std::string id = g.story_id + id_suffix;
                if (g.terminated_by == Termination::max_len) ++at_max_len;
                meta += json{{"id", id},
                             {"story_id", g.story_id},
                             {"index", i},
                             {"token_count", g.token_count},
                             {"terminated_by", std::string(to_string(g.terminated_by))}}
                            .dump();
                meta += '\n';
                if (count_words(g.completion_text) == 0) {
                    ++empty;
                    continue;
                }
                docs.emplace_back(id, Source::generated(), g.completion_text, Provenance::generated);
            }
        }
        d_gen = Corpus(std::move(docs));
        write_corpus(d_gen, wd / "corpora/d_gen.jsonl");
        rec.write_text("corpora/generations.jsonl", meta);
        json outputs = rec.corpus_artifacts("corpora/d_gen.jsonl");
        outputs.push_back(rec.artifact("corpora/generations.jsonl"));
        const double ratio = static_cast<double>(d_gen.total_words()) /
                             (static_cast<double>(policy.k) * static_cast<double>(tiny_m.total_words()));
        return json{{"inputs", json::array({"model/ngram.txt", "prompts.jsonl"})},
                    {"outputs", outputs},
                    {"policy", {{"mode", std::string(to_string(policy.mode))},
                                {"top_p", policy.top_p},
                                {"temperature", policy.temperature},
                                {"k", policy.k},
                                {"max_new_tokens", policy.max_new_tokens},
                                {"seed", policy.seed}}},
                    {"stats", {{"completions", cache.prompt_ids.size() * static_cast<std::size_t>(policy.k)},
                               {"generated_words", d_gen.total_words()},
                               {"empty_completions", empty},
                               {"max_len_completions", at_max_len},
                               {"prompt_words", prompt_words},
                               {"generated_per_k_source_words", ratio}}}};
    });

    rec.stage("selfbleu", [&] {
        if (policy.k < 2) return json{{"skipped", "policy.k < 2"}};
        GenerationCache sub;
        std::size_t excluded = 0;
        for (std::size_t p = 0; p < cache.prompt_ids.size() && sub.prompt_ids.size() < config.selfbleu_prompts; ++p) {
            const auto &gens = cache.completions[p];
            if (std::any_of(gens.begin(), gens.end(), [](const Generation &g) { return count_words(g.completion_text) == 0; })) {
                ++excluded;
                continue;
            }
            sub.prompt_ids.push_back(cache.prompt_ids[p]);
            sub.completions.push_back(gens);
        }
        if (sub.prompt_ids.empty()) return json{{"skipped", "no prompt with k nonempty completions"}};
        std::set<int> ks(config.selfbleu_k_values.begin(), config.selfbleu_k_values.end());
        ks.insert(policy.k);
        const std::vector<int> k_values(ks.begin(), ks.end());
        SelfBleuCurve curve = curve_from_cache(sub, k_values, config.bleu);

        json points = json::array();
        for (const auto &pt : curve.points) {
            json per = json::array();
            for (const auto &s : pt.per_prompt)
                per.push_back({{"prompt_id", s.prompt_id}, {"score", to_report_scale(s.score, curve.config)}});
            points.push_back({{"k", pt.k}, {"average", to_report_scale(pt.average, curve.config)}, {"per_prompt", per}});
        }
        json report = {{"max_n", curve.config.max_n},
                       {"scale", curve.config.scale == BleuScale::percent ? "percent" : "unit"},
                       {"prompts", sub.prompt_ids.size()},
                       {"excluded_prompts", excluded},
                       {"points", points}};
        rec.write_text("reports/selfbleu.json", report.dump(2) + "\n");
        rec.write_text("reports/selfbleu.txt", render_selfbleu(curve, sub.prompt_ids.size()));
        const double at_k = to_report_scale(curve.points.back().average, curve.config);
        const std::size_t n = sub.prompt_ids.size();
        selfbleu.emplace(std::move(curve), n);
        return json{{"inputs", json::array({"corpora/d_gen.jsonl"})},
                    {"outputs", json::array({rec.artifact("reports/selfbleu.json"), rec.artifact("reports/selfbleu.txt")})},
                    {"stats", {{"k", policy.k}, {"self_bleu", at_k}, {"prompts", n}}}};
    });

    rec.stage("combine", [&] {
        const std::string gen_label = policy.mode == DecodeMode::greedy
                                          ? std::string("D_gen[greedy]")
                                          : "D_gen[nucleus-" + std::to_string(policy.k) + "]";
        std::vector<CorpusPart> parts;
        parts.push_back({tiny_m, Provenance::sampled, "D_tiny[" + words_label(config.m_words) + "]"});
        if (config.b_words > 0)
            parts.push_back({baby_b, Provenance::sampled, "D_baby[" + words_label(config.b_words) + "]"});
        parts.push_back({d_gen, Provenance::generated, gen_label});
        d_comb = combine(parts, config.track);
        write_corpus(d_comb, wd / "corpora/d_comb.jsonl");
        return json{{"inputs", json::array({"corpora/tiny_m.jsonl", "corpora/baby_b.jsonl", "corpora/d_gen.jsonl"})},
                    {"outputs", rec.corpus_artifacts("corpora/d_comb.jsonl")},
                    {"budget", config.track.budget_words},
                    {"manifest", manifest_summary(d_comb.manifest())}};
    });

    if (config.pairs_path) {
        rec.stage("eval", [&] {
            const auto pairs = load_pairs(*config.pairs_path, config.pairs_suite);
            eval = score_pairs(*model, pairs);
            json groups = json::object();
            for (const auto &[g, r] : eval->per_group)
                groups[g] = {{"correct", r.correct}, {"total", r.total}, {"accuracy", r.accuracy}};
            json report = {{"scorer", eval->scorer_id},
                           {"suite", std::string(to_string(config.pairs_suite))},
                           {"pairs", pairs.size()},
                           {"ties", eval->tie_count},
                           {"macro_average", eval->macro_average},
                           {"micro_average", eval->micro_average},
                           {"groups", groups}};
            rec.write_text("reports/eval.json", report.dump(2) + "\n");
            rec.write_text("reports/eval.txt", render_report(*eval));
            man["inputs"]["pairs"] = {{"file", config.pairs_path->filename().generic_string()},
                                      {"sha256", sha256_file(*config.pairs_path)}};
            return json{{"inputs", json::array({"pairs", "model/ngram.txt"})},
                        {"outputs", json::array({rec.artifact("reports/eval.json"), rec.artifact("reports/eval.txt")})},
                        {"stats", {{"macro_average", eval->macro_average}, {"micro_average", eval->micro_average}}}};
        });
    }

    man["status"] = "complete";
    rec.write_text("reports/summary.txt", render_run_table(man));
    man["summary"] = rec.artifact("reports/summary.txt");
    rec.flush();
    return {man, directory_digest(wd)};
}

std::string render_run_table(const json &manifest) {
    std::string model = "-", data = "-", total = "-", sb = "-", acc = "-";
    for (const auto &st : manifest.at("stages")) {
        const std::string name = st.at("name");
        if (st.value("status", "") != "ok") continue;
        if (name == "train") model = "ngram-" + std::to_string(st["stats"]["order"].get<int>());
        if (name == "combine") {
            data.clear();
            for (const auto &e : st["manifest"]["entries"]) {
                if (!data.empty()) data += " + ";
                data += e.value("label", e["source"].get<std::string>());
            }
            total = millions(st["manifest"]["total_words"].get<std::int64_t>());
        }
        if (name == "selfbleu" && st.contains("stats")) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.2f", st["stats"]["self_bleu"].get<double>());
            sb = buf;
        }
        if (name == "eval") {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.2f", 100.0 * st["stats"]["macro_average"].get<double>());
            acc = buf;
        }
    }
    const std::size_t data_w = std::max<std::size_t>(13, data.size());
    std::string out;
    char line[512];
    std::snprintf(line, sizeof line, "%-10s | %-*s | %-8s | %-9s | %-8s\n", "Model", static_cast<int>(data_w),
                  "Training data", "Total", "Self-BLEU", "Accuracy");
    out += line;
    out += std::string(10, '-') + "-+-" + std::string(data_w, '-') + "-+-" + std::string(8, '-') + "-+-" +
           std::string(9, '-') + "-+-" + std::string(8, '-') + "\n";
    std::snprintf(line, sizeof line, "%-10s | %-*s | %-8s | %-9s | %-8s\n", model.c_str(), static_cast<int>(data_w),
                  data.c_str(), total.c_str(), sb.c_str(), acc.c_str());
    out += line;
    return out;
}

} // namespace storyaug
