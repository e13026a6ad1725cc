#include "support.hpp"

#include "storyaug/corpus.hpp"
#include "storyaug/digest.hpp"
#include "storyaug/pipeline.hpp"
#include "storyaug/synth.hpp"

#include <doctest.h>

#include <cstdlib>
#include <set>
#include <sys/wait.h>

using namespace storyaug;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write_raw(const fs::path &path, SynthStyle style, std::int64_t words, std::uint64_t seed) {
    std::string body;
    std::int64_t n = 0;
    for (std::uint64_t i = 0; n < words; ++i) {
        const std::string doc = synth_raw_document(style, derive_seed(seed, i));
        n += count_words(normalize_text(doc));
        body += doc + "\n" + std::string(kDocumentSeparator) + "\n";
    }
    test::spit(path, body);
}

// Small corpora shared by the run tests.
struct Inputs {
    test::TempDir dir;
    Inputs() {
        write_raw(dir / "tiny.txt", SynthStyle::stories, 30'000, 1);
        write_raw(dir / "baby.txt", SynthStyle::transcripts, 15'000, 2);
    }
    json config(const std::string &workdir) const {
        return {{"track", 40'000},
                {"paths", {{"tiny", "tiny.txt"}, {"baby", "baby.txt"}, {"workdir", workdir}}},
                {"m_words", 20'000},
                {"b_words", 10'000},
                {"policy", {{"k", 3}, {"max_new_tokens", 40}}},
                {"ngram", {{"order", 3}}},
                {"selfbleu", {{"prompts", 20}, {"k_values", {2}}}}};
    }
};

const Inputs &inputs() {
    static const Inputs in;
    return in;
}

bool has_violation(const std::vector<ConfigViolation> &v, const std::string &field) {
    return std::any_of(v.begin(), v.end(), [&](const ConfigViolation &x) { return x.field == field; });
}

int run_cli(const std::string &args) {
    const int status = std::system((std::string(STORYAUG_CLI) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_CASE("default config with real inputs is valid") {
    PipelineConfig c;
    c.tiny_path = inputs().dir / "tiny.txt";
    c.baby_path = inputs().dir / "baby.txt";
    c.workdir = inputs().dir / "fresh";
    CHECK(check_config(c).empty());
    CHECK(config_from_json(config_to_json(c)).policy == c.policy);
}

TEST_CASE("config violations are named and collected") {
    const auto &in = inputs();
    json j = in.config("w");
    j["policy"]["top_p"] = 0.0;
    auto v = check_config(config_from_json(j, in.dir.path()));
    REQUIRE(v.size() == 1);
    CHECK(v[0].field == "policy.top_p");

    j["ngram"]["order"] = 9;
    v = check_config(config_from_json(j, in.dir.path()));
    CHECK(v.size() == 2);
    CHECK(has_violation(v, "policy.top_p"));
    CHECK(has_violation(v, "ngram.order"));

    json over = in.config("w");
    over["track"] = "10M";
    over["m_words"] = 6'000'000;
    over["b_words"] = 5'000'000;
    CHECK(has_violation(check_config(config_from_json(over, in.dir.path())), "m_words + b_words"));

    json typo = in.config("w");
    typo["policy"]["topp"] = 0.9;
    typo["m_words"] = "lots";
    try {
        config_from_json(typo, in.dir.path());
        FAIL("expected ConfigInvalid");
    } catch (const ConfigInvalid &e) {
        CHECK(has_violation(e.violations(), "policy.topp"));
        CHECK(has_violation(e.violations(), "m_words"));
    }

    json missing = in.config("w");
    missing["paths"]["tiny"] = "nope.txt";
    missing["selfbleu"]["k_values"] = {7};
    v = check_config(config_from_json(missing, in.dir.path()));
    CHECK(has_violation(v, "paths.tiny"));
    CHECK(has_violation(v, "selfbleu.k_values"));
}

TEST_CASE("end-to-end run is deterministic and closed") {
    const auto &in = inputs();
    const PipelineConfig c1 = config_from_json(in.config("run1"), in.dir.path());
    const PipelineConfig c2 = config_from_json(in.config("run2"), in.dir.path());
    const PipelineResult r1 = run_pipeline(c1);
    const PipelineResult r2 = run_pipeline(c2);
    CHECK(r1.workdir_digest == r2.workdir_digest);
    CHECK(r1.manifest == r2.manifest);
    CHECK(r1.manifest["status"] == "complete");

    std::vector<std::string> names;
    std::set<std::string> listed = {"manifest.json"};
    for (const auto &st : r1.manifest["stages"]) {
        names.push_back(st["name"]);
        CHECK(st["status"] == "ok");
        for (const auto &o : st.value("outputs", json::array())) {
            listed.insert(o["path"].get<std::string>());
            CHECK(o["sha256"] == sha256_file(c1.workdir / o["path"].get<std::string>()));
        }
    }
    listed.insert(r1.manifest["summary"]["path"].get<std::string>());
    CHECK(names == std::vector<std::string>{"normalize", "sample", "train", "prompts", "generate", "selfbleu", "combine"});
    for (const auto &e : fs::recursive_directory_iterator(c1.workdir)) {
        if (!e.is_regular_file()) continue;
        const std::string rel = fs::relative(e.path(), c1.workdir).generic_string();
        CAPTURE(rel);
        CHECK(listed.count(rel) == 1);
    }
    CHECK(test::slurp(c1.workdir / "manifest.json").find(in.dir.path().string()) == std::string::npos);

    const Corpus comb = read_corpus(c1.workdir / "corpora/d_comb.jsonl");
    const Corpus tiny = read_corpus(c1.workdir / "corpora/tiny_m.jsonl");
    const Corpus baby = read_corpus(c1.workdir / "corpora/baby_b.jsonl");
    const Corpus gen = read_corpus(c1.workdir / "corpora/d_gen.jsonl");
    CHECK(tiny.total_words() <= 20'000);
    CHECK(baby.total_words() <= 10'000);
    CHECK(comb.total_words() == tiny.total_words() + baby.total_words() + gen.total_words());
    CHECK(comb.manifest().nongenerated_words <= 40'000);
    const auto sb = json::parse(test::slurp(c1.workdir / "reports/selfbleu.json"));
    CHECK(sb["points"].size() == 2);
    CHECK(sb["prompts"].get<int>() <= 20);

    // A rerun replaces the earlier run in place.
    CHECK(run_pipeline(c1).workdir_digest == r1.workdir_digest);
}

TEST_CASE("failing stage leaves a partial manifest") {
    const auto &in = inputs();
    test::spit(in.dir / "bad_pairs.jsonl", "{\"uid\":\"u\",\"good\":\"same\",\"bad\":\"same\",\"group\":\"g\"}\n");
    json j = in.config("failed");
    j["pairs"] = {{"path", "bad_pairs.jsonl"}};
    const PipelineConfig c = config_from_json(j, in.dir.path());
    try {
        run_pipeline(c);
        FAIL("expected StageFailed");
    } catch (const StageFailed &e) {
        CHECK(e.stage() == "eval");
    }
    const auto man = json::parse(test::slurp(c.workdir / "manifest.json"));
    CHECK(man["status"] == "failed");
    CHECK(man["stages"].back()["name"] == "eval");
    CHECK(man["stages"].back()["status"] == "failed");
    CHECK(man["stages"][6]["status"] == "ok");
}

TEST_CASE("workdir holding unrelated files is refused") {
    const auto &in = inputs();
    fs::create_directories(in.dir / "occupied");
    test::spit(in.dir / "occupied/keep.txt", "mine");
    const auto v = check_config(config_from_json(in.config("occupied"), in.dir.path()));
    CHECK(has_violation(v, "paths.workdir"));
}

TEST_CASE("run table lists the training mixture") {
    const auto &in = inputs();
    const auto man = json::parse(test::slurp(in.dir / "run1/manifest.json"));
    const std::string table = render_run_table(man);
    CHECK(table.find("D_tiny[") != std::string::npos);
    CHECK(table.find("D_gen[nucleus-3]") != std::string::npos);
    CHECK(table.find("Self-BLEU") != std::string::npos);
}

TEST_CASE("command line exit codes") {
    const auto &in = inputs();
    const std::string dir = in.dir.path().string();
    test::spit(in.dir / "ok.json", in.config("cli_run").dump());
    json bad = in.config("cli_bad");
    bad["policy"]["top_p"] = 2.0;
    test::spit(in.dir / "bad.json", bad.dump());
    json failing = in.config("cli_fail");
    failing["pairs"] = {{"path", "bad_pairs.jsonl"}};
    test::spit(in.dir / "bad_pairs.jsonl", "{\"uid\":\"u\",\"good\":\"same\",\"bad\":\"same\",\"group\":\"g\"}\n");
    test::spit(in.dir / "fail.json", failing.dump());

    CHECK(run_cli("") == 2);
    CHECK(run_cli("frobnicate") == 2);
    CHECK(run_cli("validate --config " + dir + "/ok.json") == 0);
    CHECK(run_cli("validate --config " + dir + "/bad.json") == 2);
    CHECK(run_cli("run --config " + dir + "/bad.json") == 2);
    CHECK(run_cli("sample --corpus " + dir + "/none.jsonl --words 10 --seed 1 --output " + dir + "/s.jsonl") == 3);
    CHECK(run_cli("run --config " + dir + "/fail.json") == 3);
    CHECK(run_cli("normalize --input " + dir + "/tiny.txt --output " + dir + "/tiny.jsonl --source tinystories") == 0);
    CHECK(run_cli("stats --corpus " + dir + "/tiny.jsonl") == 0);
    CHECK(run_cli("batches --a " + dir + "/tiny.jsonl --b " + dir + "/tiny.jsonl --count 2 --seed 1") == 0);
}
