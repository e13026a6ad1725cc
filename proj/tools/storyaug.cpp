// storyaug command-line interface. Exit codes: 0 success, 2 invalid input or
// configuration, 3 a stage (or subcommand) failed while running.

#include "storyaug/balanced.hpp"
#include "storyaug/corpus.hpp"
#include "storyaug/diversity.hpp"
#include "storyaug/errors.hpp"
#include "storyaug/eval_pairs.hpp"
#include "storyaug/judge.hpp"
#include "storyaug/ngram.hpp"
#include "storyaug/pipeline.hpp"
#include "storyaug/prompts.hpp"
#include "storyaug/remote.hpp"
#include "storyaug/sampler.hpp"
#include "storyaug/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace storyaug;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitStage = 3;

constexpr const char *kDryRunReply =
    "Here are the grades for the student's completion on a scale of 1-10:\n"
    "1. Grammar: 7/10\n2. Creativity: 5/10\n3. Consistency: 3/10\n"
    "Age group estimate: B: 4-5 years old\n";

std::string read_file(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open " + p.string());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

void emit(const json &j, const std::string &path) {
    if (path.empty() || path == "-")
        std::cout << j.dump(2) << '\n';
    else
        write_file_atomically(path, j.dump(2) + "\n");
}

json manifest_json(const CorpusManifest &m, std::size_t documents) {
    json entries = json::array();
    for (const auto &e : m.entries) {
        json je = {{"source", e.source.name()},
                   {"provenance", std::string(to_string(e.provenance))},
                   {"word_count", e.word_count}};
        if (!e.label.empty()) je["label"] = e.label;
        entries.push_back(je);
    }
    json j = {{"documents", documents},
              {"total_words", m.total_words},
              {"nongenerated_words", m.nongenerated_words},
              {"entries", entries}};
    if (m.budget) j["budget"] = *m.budget;
    if (m.seed) j["seed"] = *m.seed;
    return j;
}

HttpOptions http_options(const std::string &endpoint, int timeout_ms, int in_flight, int min_interval_ms) {
    HttpOptions o;
    o.endpoint = endpoint;
    o.timeout = std::chrono::milliseconds(timeout_ms);
    o.max_in_flight = in_flight;
    o.min_interval = std::chrono::milliseconds(min_interval_ms);
    return o;
}

struct ModelChoice {
    std::string model_path;
    std::string endpoint;
    int timeout_ms = 30'000;

    void add_to(CLI::App *cmd) {
        auto *m = cmd->add_option("--model", model_path, "n-gram model file from train-lm");
        auto *e = cmd->add_option("--endpoint", endpoint, "remote model base URL (see docs/remote_protocol.md)");
        m->excludes(e);
        cmd->add_option("--timeout-ms", timeout_ms, "remote request timeout")->capture_default_str();
    }

    // Exactly one of the two is returned.
    std::pair<std::unique_ptr<NGramModel>, std::unique_ptr<RemoteLanguageModel>> open() const {
        if (!model_path.empty()) return {std::make_unique<NGramModel>(NGramModel::load(model_path)), nullptr};
        if (!endpoint.empty())
            return {nullptr, std::make_unique<RemoteLanguageModel>(http_options(endpoint, timeout_ms, 4, 0))};
        throw InvalidArgument("one of --model or --endpoint is required");
    }
};

// Groups D_gen documents ("<story>#g<i>") back into per-story completion lists.
GenerationCache cache_from_docs(const Corpus &gen) {
    std::map<std::string, std::vector<std::pair<std::size_t, std::string>>> groups;
    for (const auto &d : gen.documents()) {
        const auto pos = d.id().rfind("#g");
        if (pos == std::string::npos) throw InvalidArgument("generation id without #g<index>: " + d.id());
        groups[d.id().substr(0, pos)].emplace_back(std::stoul(d.id().substr(pos + 2)), d.text());
    }
    GenerationCache cache;
    for (auto &[story, list] : groups) {
        std::sort(list.begin(), list.end());
        cache.prompt_ids.push_back(story);
        auto &gens = cache.completions.emplace_back();
        for (auto &[i, text] : list) {
            Generation g;
            g.story_id = story;
            g.completion_text = std::move(text);
            gens.push_back(std::move(g));
        }
    }
    return cache;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Word-budget corpus augmentation and evaluation toolkit"};
    app.require_subcommand(1);
    std::function<void()> action;

    // normalize
    std::string in_path, out_path, source_name = "tinystories", id_prefix = "doc";
    auto *normalize = app.add_subcommand("normalize", "Normalize a raw corpus (.jsonl {text,[id]} or text split on <|endoftext|>)");
    normalize->add_option("--input", in_path, "raw corpus file")->required();
    normalize->add_option("--output", out_path, "normalized corpus (.jsonl)")->required();
    normalize->add_option("--source", source_name, "babylm, tinystories, generated or any name")->capture_default_str();
    normalize->add_option("--id-prefix", id_prefix, "prefix of generated ids")->capture_default_str();
    normalize->callback([&] {
        action = [&] {
            RawImport r = import_raw_corpus(in_path, Source::parse(source_name), id_prefix);
            write_corpus(r.corpus, out_path);
            std::cout << "documents " << r.corpus.size() << "  words " << r.corpus.total_words() << "  skipped_empty "
                      << r.skipped_empty << '\n';
        };
    });

    // stats
    std::string corpus_path;
    auto *stats = app.add_subcommand("stats", "Print the manifest of a corpus");
    stats->add_option("--corpus", corpus_path, "corpus file")->required();
    stats->callback([&] {
        action = [&] {
            const Corpus c = read_corpus(corpus_path);
            std::cout << manifest_json(c.manifest(), c.size()).dump(2) << '\n';
        };
    });

    // sample
    std::string words_text;
    std::uint64_t seed = 0;
    auto *sample = app.add_subcommand("sample", "Seeded document-level subset under a word target");
    sample->add_option("--corpus", corpus_path, "input corpus")->required();
    sample->add_option("--words", words_text, "target words, e.g. 5M, 500K, 1200")->required();
    sample->add_option("--seed", seed, "shuffle seed")->capture_default_str();
    sample->add_option("--output", out_path, "output corpus")->required();
    sample->callback([&] {
        action = [&] {
            const Corpus s = sample_budget(read_corpus(corpus_path), BudgetSpec::parse(words_text).budget_words, seed);
            write_corpus(s, out_path);
            std::cout << "documents " << s.size() << "  words " << s.total_words() << '\n';
        };
    });

    // train-lm
    NGramOptions ngram_opts;
    auto *train = app.add_subcommand("train-lm", "Train the n-gram language model");
    train->add_option("--corpus", corpus_path, "training corpus")->required();
    train->add_option("--order", ngram_opts.order, "n-gram order")->capture_default_str();
    train->add_option("--vocab-cap", ngram_opts.vocab_cap, "vocabulary size cap")->capture_default_str();
    train->add_option("--discount", ngram_opts.discount, "absolute discount")->capture_default_str();
    train->add_option("--output", out_path, "model file")->required();
    train->callback([&] {
        action = [&] {
            const NGramModel m = train_ngram(read_corpus(corpus_path), ngram_opts);
            m.save(out_path);
            std::cout << m.scorer_id() << "  vocab " << m.vocab_size() << "  trained_words " << m.trained_words()
                      << '\n';
        };
    });

    // prompts
    TruncationBounds bounds;
    auto *prompts_cmd = app.add_subcommand("prompts", "Truncate stories into prompts");
    prompts_cmd->add_option("--corpus", corpus_path, "story corpus")->required();
    prompts_cmd->add_option("--low", bounds.low, "lowest kept fraction")->capture_default_str();
    prompts_cmd->add_option("--high", bounds.high, "highest kept fraction")->capture_default_str();
    prompts_cmd->add_option("--seed", seed, "truncation seed")->capture_default_str();
    prompts_cmd->add_option("--output", out_path, "prompts file")->required();
    prompts_cmd->callback([&] {
        action = [&] {
            const PromptSet ps = build_prompt_set(read_corpus(corpus_path), bounds, seed);
            write_prompts(ps.prompts, out_path);
            std::cout << "prompts " << ps.prompts.size() << "  skipped_short " << ps.skipped << '\n';
        };
    });

    // generate
    ModelChoice model_choice;
    std::string prompts_path, mode_name = "nucleus";
    GenerationPolicy policy;
    auto *generate = app.add_subcommand("generate", "Generate k completions per prompt (D_gen)");
    model_choice.add_to(generate);
    generate->add_option("--prompts", prompts_path, "prompts file")->required();
    generate->add_option("--mode", mode_name, "greedy or nucleus")->capture_default_str();
    generate->add_option("--top-p", policy.top_p, "nucleus mass")->capture_default_str();
    generate->add_option("--temperature", policy.temperature, "sampling temperature")->capture_default_str();
    generate->add_option("-k,--k", policy.k, "completions per prompt")->capture_default_str();
    generate->add_option("--max-new-tokens", policy.max_new_tokens, "generation length cap")->capture_default_str();
    generate->add_option("--seed", policy.seed, "generation seed")->capture_default_str();
    generate->add_option("--output", out_path, "D_gen corpus")->required();
    generate->callback([&] {
        action = [&] {
            policy.mode = parse_decode_mode(mode_name);
            const auto models = model_choice.open();
            const TextGenerator &gen = models.first ? static_cast<const TextGenerator &>(*models.first)
                                                    : static_cast<const TextGenerator &>(*models.second);
            const auto prompts = read_prompts(prompts_path);
            const GenerationCache cache = generate_cache(gen, prompts, policy);
            std::vector<Document> docs;
            std::size_t empty = 0;
            for (const auto &gens : cache.completions)
                for (std::size_t i = 0; i < gens.size(); ++i) {
                    if (count_words(gens[i].completion_text) == 0) {
                        ++empty;
                        continue;
                    }
                    docs.emplace_back(gens[i].story_id + "#g" + std::to_string(i), Source::generated(),
                                      gens[i].completion_text, Provenance::generated);
                }
            const Corpus out(std::move(docs));
            write_corpus(out, out_path);
            std::cout << "completions " << out.size() << "  words " << out.total_words() << "  empty " << empty << '\n';
        };
    });

    // selfbleu
    std::string gen_path, scale_name = "percent";
    std::vector<int> k_values;
    BleuConfig bleu_config;
    auto *selfbleu = app.add_subcommand("selfbleu", "Self-BLEU of each prompt's completions, for several k");
    selfbleu->add_option("--generations", gen_path, "D_gen corpus from generate")->required();
    selfbleu->add_option("--k", k_values, "k values (default: the full completion count)")->delimiter(',');
    selfbleu->add_option("--max-n", bleu_config.max_n, "highest n-gram order")->capture_default_str();
    selfbleu->add_option("--scale", scale_name, "percent or unit")->capture_default_str();
    selfbleu->add_option("--output", out_path, "report JSON (default stdout)");
    selfbleu->callback([&] {
        action = [&] {
            if (scale_name != "percent" && scale_name != "unit") throw InvalidArgument("--scale must be percent or unit");
            bleu_config.scale = scale_name == "percent" ? BleuScale::percent : BleuScale::unit;
            const GenerationCache cache = cache_from_docs(read_corpus(gen_path));
            if (cache.prompt_ids.empty()) throw InvalidArgument("no generations");
            if (k_values.empty()) {
                std::size_t k = cache.completions.front().size();
                for (const auto &g : cache.completions) k = std::min(k, g.size());
                k_values.push_back(static_cast<int>(k));
            }
            const SelfBleuCurve curve = curve_from_cache(cache, k_values, bleu_config);
            json points = json::array();
            for (const auto &pt : curve.points) {
                points.push_back({{"k", pt.k}, {"average", to_report_scale(pt.average, curve.config)}});
                std::printf("k=%-4d self-BLEU %.4f\n", pt.k, to_report_scale(pt.average, curve.config));
            }
            if (!out_path.empty())
                emit({{"prompts", cache.prompt_ids.size()}, {"scale", scale_name}, {"points", points}}, out_path);
        };
    });

    // combine
    std::string tiny_path, baby_path, track_text = "10M";
    auto *combine_cmd = app.add_subcommand("combine", "Assemble D_comb under the track budget");
    combine_cmd->add_option("--tiny", tiny_path, "D_tiny[m] corpus")->required();
    combine_cmd->add_option("--baby", baby_path, "D_baby[b] corpus");
    combine_cmd->add_option("--generated", gen_path, "D_gen corpus");
    combine_cmd->add_option("--track", track_text, "budget: 10M, 100M or a word count")->capture_default_str();
    combine_cmd->add_option("--output", out_path, "combined corpus")->required();
    combine_cmd->callback([&] {
        action = [&] {
            std::vector<CorpusPart> parts;
            parts.push_back({read_corpus(tiny_path), Provenance::sampled, "D_tiny"});
            if (!baby_path.empty()) parts.push_back({read_corpus(baby_path), Provenance::sampled, "D_baby"});
            if (!gen_path.empty()) parts.push_back({read_corpus(gen_path), Provenance::generated, "D_gen"});
            const Corpus c = combine(parts, BudgetSpec::parse(track_text));
            write_corpus(c, out_path);
            std::cout << manifest_json(c.manifest(), c.size()).dump(2) << '\n';
            if (!gen_path.empty())
                std::cerr << "note: generated words are not counted against the track budget\n";
        };
    });

    // batches
    std::string a_path, b_path, balance_name = "bernoulli", epoch_name = "cycle";
    BatchSpec batch_spec;
    std::size_t batch_count = 100;
    bool balanced_flag = false;
    auto *batches = app.add_subcommand("batches", "Stream balanced batches from two corpora");
    batches->add_option("--a", a_path, "group a corpus")->required();
    batches->add_option("--b", b_path, "group b corpus (omit for the unbalanced baseline)");
    batches->add_flag("--balanced", balanced_flag, "require --b and draw slots from both groups");
    batches->add_option("--batch-size", batch_spec.batch_size, "slots per batch")->capture_default_str();
    batches->add_option("--count", batch_count, "batches to emit")->capture_default_str();
    batches->add_option("--seed", batch_spec.seed, "stream seed")->capture_default_str();
    batches->add_option("--balance", balance_name, "bernoulli or quota")->capture_default_str();
    batches->add_option("--epoch", epoch_name, "cycle or stop")->capture_default_str();
    batches->add_option("--output,--out", out_path, "batch composition log as JSONL (default: summary only)");
    batches->callback([&] {
        action = [&] {
            if (balance_name != "bernoulli" && balance_name != "quota")
                throw InvalidArgument("--balance must be bernoulli or quota");
            if (epoch_name != "cycle" && epoch_name != "stop") throw InvalidArgument("--epoch must be cycle or stop");
            if (balanced_flag && b_path.empty()) throw InvalidArgument("--balanced needs --b");
            batch_spec.balance = balance_name == "quota" ? BalanceMode::quota : BalanceMode::bernoulli;
            batch_spec.epoch_policy = epoch_name == "stop" ? EpochPolicy::stop_at_shorter : EpochPolicy::cycle_reshuffle;
            const Corpus a = read_corpus(a_path);
            const Corpus b = b_path.empty() ? Corpus() : read_corpus(b_path);
            std::unique_ptr<BalancedBatches> balanced;
            std::unique_ptr<UnbalancedBatches> single;
            if (b_path.empty())
                single = std::make_unique<UnbalancedBatches>(a, batch_spec);
            else
                balanced = std::make_unique<BalancedBatches>(a, b, batch_spec);
            std::string body;
            std::size_t from_a = 0, slots = 0, emitted = 0;
            for (; emitted < batch_count; ++emitted) {
                auto batch = balanced ? balanced->next() : single->next();
                if (!batch) break;
                from_a += batch->from_a;
                slots += batch->slots.size();
                if (!out_path.empty()) {
                    json ids = json::array();
                    for (const auto &s : batch->slots) ids.push_back(s.id);
                    body += json{{"batch", batch->index}, {"from_a", batch->from_a}, {"ids", ids}}.dump() + "\n";
                }
            }
            if (!out_path.empty()) write_file_atomically(out_path, body);
            std::printf("batches %zu  slots %zu  group-a fraction %.4f\n", emitted, slots,
                        slots ? static_cast<double>(from_a) / static_cast<double>(slots) : 0.0);
        };
    });

    // eval-pairs
    std::string pairs_path, suite_name = "blimp";
    ModelChoice eval_model;
    auto *eval = app.add_subcommand("eval-pairs", "Minimal-pair accuracy of a scorer");
    eval_model.add_to(eval);
    eval->add_option("--pairs", pairs_path, "pairs JSONL {uid, good, bad, group}")->required();
    eval->add_option("--suite", suite_name, "blimp, blimp_supplement, ewok or custom")->capture_default_str();
    eval->add_option("--output", out_path, "report JSON");
    eval->callback([&] {
        action = [&] {
            const auto models = eval_model.open();
            const Scorer &scorer = models.first ? static_cast<const Scorer &>(*models.first)
                                                : static_cast<const Scorer &>(*models.second);
            const auto pairs = load_pairs(pairs_path, parse_suite(suite_name));
            const EvalReport r = score_pairs(scorer, pairs);
            std::cout << render_report(r);
            if (!out_path.empty()) {
                json groups = json::object();
                for (const auto &[g, res] : r.per_group)
                    groups[g] = {{"correct", res.correct}, {"total", res.total}, {"accuracy", res.accuracy}};
                emit({{"scorer", r.scorer_id},
                      {"macro_average", r.macro_average},
                      {"micro_average", r.micro_average},
                      {"ties", r.tie_count},
                      {"groups", groups}},
                     out_path);
            }
        };
    });

    // judge
    std::string items_path, judge_endpoint, judge_model, flavor_name = "openai", api_key_env = "STORYAUG_JUDGE_API_KEY",
                                                           canned_path, out_dir;
    JudgeOptions judge_opts;
    bool dry_run = false;
    int min_interval_ms = 0;
    auto *judge = app.add_subcommand("judge", "Grade completions with a hosted LLM judge");
    judge->add_option("--items", items_path, "items JSONL {id, beginning, completion}")->required();
    judge->add_option("--endpoint", judge_endpoint, "chat API base URL");
    judge->add_option("--judge-model", judge_model, "judge model name");
    judge->add_option("--flavor", flavor_name, "openai or anthropic wire format")->capture_default_str();
    judge->add_option("--api-key-env", api_key_env, "environment variable holding the credential")->capture_default_str();
    judge->add_option("--max-calls", judge_opts.max_calls, "refuse runs needing more calls")->capture_default_str();
    judge->add_option("--parallelism", judge_opts.parallelism, "concurrent calls")->capture_default_str();
    judge->add_option("--min-interval-ms", min_interval_ms, "spacing between call starts")->capture_default_str();
    judge->add_option("--generation-temperature", judge_opts.generation_temperature,
                      "temperature the completions were sampled with (recorded)")
        ->capture_default_str();
    judge->add_flag("--dry-run", dry_run, "answer every call with a canned reply instead of the network");
    judge->add_option("--canned-response", canned_path, "reply file for --dry-run");
    judge->add_option("--output-dir", out_dir, "where judge_items.jsonl and judge_summary.json go")->required();
    judge->callback([&] {
        action = [&] {
            const auto items = load_judge_items(items_path);
            std::unique_ptr<ChatClient> client;
            if (dry_run) {
                client = std::make_unique<CannedChatClient>(canned_path.empty() ? kDryRunReply : read_file(canned_path));
            } else {
                if (judge_endpoint.empty()) throw InvalidArgument("--endpoint is required without --dry-run");
                RemoteChatOptions o;
                o.http = http_options(judge_endpoint, 60'000, std::max(1, judge_opts.parallelism), min_interval_ms);
                o.model = judge_model;
                o.api_key_env = api_key_env;
                if (flavor_name != "openai" && flavor_name != "anthropic")
                    throw InvalidArgument("--flavor must be openai or anthropic");
                o.flavor = flavor_name == "anthropic" ? ChatFlavor::anthropic : ChatFlavor::openai;
                client = std::make_unique<RemoteChatClient>(o);
            }
            const JudgeRun run = judge_batch(*client, items, judge_opts);
            fs::create_directories(out_dir);
            write_judge_run(run, out_dir);
            std::printf("calls %zu  parsed %zu  failures %zu  grammar %.2f  creativity %.2f  consistency %.2f\n",
                        run.calls, run.summary.n_items, run.summary.failures, run.summary.mean_grammar,
                        run.summary.mean_creativity, run.summary.mean_consistency);
        };
    });

    // run
    std::string config_path;
    auto *run = app.add_subcommand("run", "Run the full pipeline from a JSON config");
    run->add_option("--config", config_path, "pipeline config")->required();
    run->callback([&] {
        action = [&] {
            const PipelineResult r = run_pipeline(load_config(config_path));
            std::cout << render_run_table(r.manifest) << "workdir digest " << r.workdir_digest << '\n';
            std::cerr << "note: generated words are not counted against the track budget\n";
        };
    });

    // validate
    auto *validate = app.add_subcommand("validate", "Check a pipeline config without running it");
    validate->add_option("--config", config_path, "pipeline config")->required();
    validate->callback([&] {
        action = [&] {
            validate_config(load_config(config_path));
            std::cout << "config ok\n";
        };
    });

    // synth
    std::string style_name = "stories";
    std::int64_t synth_words = 1'000'000;
    auto *synth = app.add_subcommand("synth", "Write a seeded synthetic raw corpus (text split on <|endoftext|>)");
    synth->add_option("--style", style_name, "stories or transcripts")->capture_default_str();
    synth->add_option("--words", synth_words, "approximate word count")->capture_default_str();
    synth->add_option("--seed", seed, "generator seed")->capture_default_str();
    synth->add_option("--output", out_path, "raw text file")->required();
    synth->callback([&] {
        action = [&] {
            if (style_name != "stories" && style_name != "transcripts")
                throw InvalidArgument("--style must be stories or transcripts");
            const SynthStyle style = style_name == "stories" ? SynthStyle::stories : SynthStyle::transcripts;
            std::string body;
            std::int64_t words = 0;
            for (std::uint64_t i = 0; words < synth_words; ++i) {
                std::string doc = synth_raw_document(style, derive_seed(seed, i));
                words += count_words(normalize_text(doc));
                body += doc;
                body += '\n';
                body += kDocumentSeparator;
                body += '\n';
            }
            write_file_atomically(out_path, body);
            std::cout << "words " << words << '\n';
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }
    try {
        action();
    } catch (const ConfigInvalid &e) {
        std::cerr << e.what() << '\n';
        return kExitValidation;
    } catch (const InvalidArgument &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const StageFailed &e) {
        std::cerr << e.what() << '\n';
        return kExitStage;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitStage;
    }
    return 0;
}
