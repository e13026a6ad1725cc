#include "support.hpp"

#include "storyaug/errors.hpp"
#include "storyaug/eval_pairs.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>

using namespace storyaug;

namespace {

// Scores a text with an arbitrary function of its length and characters.
class FnScorer final : public Scorer {
  public:
    explicit FnScorer(std::function<double(std::string_view)> fn) : fn_(std::move(fn)) {}
    double log_prob(std::string_view text) const override { return fn_(text); }
    std::string scorer_id() const override { return "fn"; }

  private:
    std::function<double(std::string_view)> fn_;
};

double hash_score(std::string_view text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) h = (h ^ c) * 1099511628211ull;
    return -static_cast<double>(h % 1000) / 10.0;
}

} // namespace

TEST_CASE("fixture suite loads") {
    const auto pairs = load_pairs(test::fixture("blimp_sample.jsonl"), Suite::blimp);
    CHECK(pairs.size() == 20);
    for (const auto &p : pairs) {
        CHECK(p.suite == Suite::blimp);
        CHECK(p.good_text != p.bad_text);
    }
}

TEST_CASE("malformed suites are rejected") {
    test::TempDir dir;
    test::spit(dir / "same.jsonl", "{\"uid\":\"u\",\"good\":\"a\",\"bad\":\"a\",\"group\":\"g\"}\n");
    CHECK_THROWS_AS(load_pairs(dir / "same.jsonl", Suite::custom), MalformedRecord);
    test::spit(dir / "missing.jsonl", "{\"uid\":\"u\",\"good\":\"a\",\"group\":\"g\"}\n");
    CHECK_THROWS_AS(load_pairs(dir / "missing.jsonl", Suite::custom), MalformedRecord);
    test::spit(dir / "empty.jsonl", "\n");
    CHECK_THROWS_AS(load_pairs(dir / "empty.jsonl", Suite::custom), EmptySuite);
    CHECK_THROWS_AS(load_pairs(dir / "nope.jsonl", Suite::custom), IoError);
    CHECK(parse_suite("ewok") == Suite::ewok);
    CHECK_THROWS_AS(parse_suite("glue"), InvalidArgument);
}

TEST_CASE("accuracy matches a brute-force recount") {
    const auto pairs = load_pairs(test::fixture("blimp_sample.jsonl"), Suite::blimp);
    const FnScorer s(hash_score);
    const EvalReport r = score_pairs(s, pairs);
    std::map<std::string, std::pair<int, int>> tally;
    int correct = 0, ties = 0;
    for (const auto &p : pairs) {
        const double g = hash_score(p.good_text), b = hash_score(p.bad_text);
        auto &t = tally[p.group];
        t.second++;
        if (g > b) {
            t.first++;
            correct++;
        }
        ties += g == b;
    }
    CHECK(r.tie_count == ties);
    CHECK(r.micro_average == doctest::Approx(correct / 20.0).epsilon(1e-15));
    double macro = 0.0;
    REQUIRE(r.per_group.size() == tally.size());
    for (const auto &[name, t] : tally) {
        CHECK(r.per_group.at(name).correct == t.first);
        CHECK(r.per_group.at(name).total == t.second);
        macro += double(t.first) / t.second;
    }
    CHECK(r.macro_average == doctest::Approx(macro / tally.size()).epsilon(1e-15));
    CHECK(r.scorer_id == "fn");
}

TEST_CASE("length-preferring scorer and ties") {
    const std::vector<MinimalPair> pairs = {
        {"1", "a longer good sentence", "short bad", "g1", Suite::custom},
        {"2", "short", "a long bad one", "g1", Suite::custom},
        {"3", "abc", "xyz", "g2", Suite::custom},
    };
    const FnScorer by_length([](std::string_view t) { return -100.0 + static_cast<double>(t.size()); });
    const EvalReport r = score_pairs(by_length, pairs);
    CHECK(r.per_group.at("g1").correct == 1);
    CHECK(r.per_group.at("g2").correct == 0);
    CHECK(r.tie_count == 1);
    CHECK(r.micro_average == doctest::Approx(1.0 / 3.0));
    CHECK(r.macro_average == doctest::Approx(0.25));

    const FnScorer constant([](std::string_view) { return -1.0; });
    const EvalReport all_ties = score_pairs(constant, pairs);
    CHECK(all_ties.tie_count == 3);
    CHECK(all_ties.micro_average == 0.0);
}

TEST_CASE("accuracy is invariant under strictly increasing transforms") {
    const auto pairs = load_pairs(test::fixture("blimp_sample.jsonl"), Suite::blimp);
    const EvalReport base = score_pairs(FnScorer(hash_score), pairs);
    const EvalReport lin = score_pairs(FnScorer([](std::string_view t) { return 2.0 * hash_score(t) + 7.0; }), pairs);
    const EvalReport ex = score_pairs(FnScorer([](std::string_view t) { return std::exp(hash_score(t)); }), pairs);
    CHECK(lin.per_group == base.per_group);
    CHECK(ex.per_group == base.per_group);
    CHECK(lin.tie_count == base.tie_count);
}

TEST_CASE("parallel scoring equals the serial reference") {
    const auto pairs = load_pairs(test::fixture("blimp_sample.jsonl"), Suite::blimp);
    const FnScorer s(hash_score);
    CHECK(score_pairs(s, pairs) == reference::score_pairs(s, pairs));
    const std::vector<MinimalPair> none;
    CHECK_THROWS_AS(score_pairs(s, none), EmptySuite);
}

TEST_CASE("scorer failures carry the pair uid") {
    const auto pairs = load_pairs(test::fixture("blimp_sample.jsonl"), Suite::blimp);
    const std::string victim = pairs[7].bad_text;
    const FnScorer failing([&](std::string_view t) -> double {
        if (t == victim) throw TransportError("connection reset");
        return -1.0;
    });
    for (auto fn : {&score_pairs, &reference::score_pairs}) {
        try {
            fn(failing, pairs);
            FAIL("expected PairScoringError");
        } catch (const PairScoringError &e) {
            CHECK(e.uid() == pairs[7].uid);
        }
    }
}

TEST_CASE("report rendering lists every group") {
    const auto pairs = load_pairs(test::fixture("blimp_sample.jsonl"), Suite::blimp);
    const EvalReport r = score_pairs(FnScorer(hash_score), pairs);
    const std::string table = render_report(r);
    for (const auto &[name, g] : r.per_group) CHECK(table.find(name) != std::string::npos);
}
