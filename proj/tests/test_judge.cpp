#include "support.hpp"

#include "storyaug/errors.hpp"
#include "storyaug/judge.hpp"

#include <doctest.h>

#include <cstdlib>

using namespace storyaug;
using nlohmann::json;

namespace {

JudgeItem fixture_item() {
    const auto j = json::parse(test::slurp(test::fixture("judge_item.json")));
    return {j["id"], j["beginning"], j["completion"]};
}

std::string canned() { return test::slurp(test::fixture("judge_canned_response.txt")); }

std::string grades(int g, int c, int k, char age) {
    return "Grammar: " + std::to_string(g) + "/10\nCreativity: " + std::to_string(c) +
           "/10\nConsistency: " + std::to_string(k) + "/10\nAge group: " + age + "\n";
}

// Replies according to a marker word found in the completion.
class ScriptedChatClient final : public ChatClient {
  public:
    std::string complete(const std::vector<ChatMessage> &messages) const override {
        REQUIRE(messages.size() == 1);
        const std::string &m = messages[0].content;
        if (m.find("alpha") != std::string::npos) return grades(8, 6, 4, 'C');
        if (m.find("beta") != std::string::npos) return grades(6, 2, 8, 'B');
        if (m.find("gamma") != std::string::npos) return grades(7, 7, 6, 'D');
        return "I cannot grade this.";
    }
};

void set_key(const char *name, const char *value) {
    if (value) ::setenv(name, value, 1);
    else ::unsetenv(name);
}

} // namespace

TEST_CASE("judge prompt matches the golden bytes") {
    const std::string golden = test::slurp(test::fixture("judge_prompt_golden.txt"));
    CHECK(build_judge_prompt(fixture_item()) == golden);
    const auto turns = build_judge_turns(fixture_item());
    CHECK(golden == turns[0] + "\n\n" + turns[1]);
    CHECK(turns[0].find(fixture_item().story_beginning + " *** " + fixture_item().completion) != std::string::npos);
}

TEST_CASE("judge prompt follows the versioned template asset") {
    const std::string tmpl = test::slurp(std::filesystem::path(STORYAUG_ASSETS) / "judge_prompt_v1.txt");
    REQUIRE(kJudgeTemplateVersion == "judge-prompt-v1");
    const std::vector<JudgeItem> items = {fixture_item(), {"x", "  Tom had a red ball.", "He threw it.\n"}, {"y", "a", "b"}};
    for (const JudgeItem &item : items) {
        std::string expect = tmpl;
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t\r\n"));
            s.erase(s.find_last_not_of(" \t\r\n") + 1);
            return s;
        };
        expect.replace(expect.find("{beginning}"), 11, trim(item.story_beginning));
        expect.replace(expect.find("{completion}"), 12, trim(item.completion));
        CHECK(build_judge_prompt(item) == expect);
    }
}

TEST_CASE("judge prompt rejects separators and empty fields") {
    JudgeItem item = fixture_item();
    item.completion = "and then *** happened";
    CHECK_THROWS_AS(build_judge_prompt(item), SeparatorInText);
    item = fixture_item();
    item.story_beginning = "a *** b";
    CHECK_THROWS_AS(build_judge_prompt(item), SeparatorInText);
    item = fixture_item();
    item.completion = "";
    CHECK_THROWS_AS(build_judge_prompt(item), InvalidArgument);
}

TEST_CASE("canned judge response parses") {
    const JudgeScore s = parse_judge_response(canned());
    CHECK(s.grammar == 7);
    CHECK(s.creativity == 5);
    CHECK(s.consistency == 3);
    CHECK(s.age_group == AgeGroup::B);
    CHECK(to_letter(s.age_group) == 'B');
    CHECK(age_range(s.age_group) == "4-5");
    CHECK(s.raw_response == canned());
}

TEST_CASE("response corpus parses or fails as expected") {
    const auto dir = test::fixture("judge_responses");
    const auto expected = json::parse(test::slurp(dir / "expected.json"));
    REQUIRE(expected.size() == 9);
    for (const auto &[file, want] : expected.items()) {
        CAPTURE(file);
        const std::string text = test::slurp(dir / file);
        REQUIRE_FALSE(text.empty());
        if (want.contains("error")) {
            const std::string kind = want["error"];
            if (kind == "MissingGrade") CHECK_THROWS_AS(parse_judge_response(text), MissingGrade);
            else if (kind == "GradeOutOfRange") CHECK_THROWS_AS(parse_judge_response(text), GradeOutOfRange);
            else if (kind == "MissingAgeGroup") CHECK_THROWS_AS(parse_judge_response(text), MissingAgeGroup);
            else FAIL("unknown error kind " << kind);
        } else {
            const JudgeScore s = parse_judge_response(text);
            CHECK(s.grammar == want["grammar"].get<int>());
            CHECK(s.creativity == want["creativity"].get<int>());
            CHECK(s.consistency == want["consistency"].get<int>());
            CHECK(std::string(1, to_letter(s.age_group)) == want["age_group"].get<std::string>());
        }
    }
}

TEST_CASE("missing creativity names the category") {
    try {
        parse_judge_response("Grammar: 5/10\nConsistency: 5/10\nAge group: A");
        FAIL("expected MissingGrade");
    } catch (const MissingGrade &e) {
        CHECK(e.category() == "Creativity");
    }
}

TEST_CASE("judge_batch averages parsed items and records failures") {
    const std::vector<JudgeItem> items = {
        {"1", "Once there was", "an alpha story."},
        {"2", "Once there was", "a beta story."},
        {"3", "Once there was", "a gamma story."},
        {"4", "Once there was", "a broken story."},
    };
    for (int parallelism : {1, 3}) {
        const JudgeRun run = judge_batch(ScriptedChatClient(), items, {100, parallelism, 0.8});
        CHECK(run.calls == 4);
        CHECK(run.summary.n_items == 3);
        CHECK(run.summary.failures == 1);
        CHECK(run.summary.mean_grammar == doctest::Approx(7.0));
        CHECK(run.summary.mean_creativity == doctest::Approx(5.0));
        CHECK(run.summary.mean_consistency == doctest::Approx(6.0));
        CHECK(run.summary.generation_temperature == 0.8);
        REQUIRE(run.items.size() == 4);
        CHECK(run.items[3].id == "4");
        CHECK_FALSE(run.items[3].score.has_value());
        CHECK_FALSE(run.items[3].error.empty());
        CHECK(run.items[1].score->creativity == 2);
    }
}

TEST_CASE("judge_batch enforces the call budget before calling") {
    CannedChatClient client(canned());
    const std::vector<JudgeItem> items(5, fixture_item());
    CHECK_THROWS_AS(judge_batch(client, items, {4}), CallBudgetExceeded);
    CHECK(client.calls() == 0);
    const JudgeRun run = judge_batch(client, items, {5});
    CHECK(client.calls() == 5);
    CHECK(run.summary.n_items == 5);

    JudgeItem bad = fixture_item();
    bad.completion = "x *** y";
    const JudgeRun skipped = judge_batch(client, {bad}, {5});
    CHECK(skipped.summary.failures == 1);
    CHECK(client.calls() == 5);
}

TEST_CASE("remote chat client: credentials from the environment") {
    RemoteChatOptions o;
    o.http.endpoint = "http://127.0.0.1:1";
    o.model = "m";
    o.api_key_env = "STORYAUG_TEST_JUDGE_KEY";
    set_key("STORYAUG_TEST_JUDGE_KEY", nullptr);
    CHECK_THROWS_AS(RemoteChatClient{o}, AuthMissing);
    set_key("STORYAUG_TEST_JUDGE_KEY", "");
    CHECK_THROWS_AS(RemoteChatClient{o}, AuthMissing);
}

TEST_CASE("remote chat client speaks both wire flavors") {
    std::atomic<int> openai_calls{0}, anthropic_calls{0};
    test::StubServer server([&](httplib::Server &s) {
        s.Post("/v1/chat/completions", [&](const httplib::Request &req, httplib::Response &res) {
            ++openai_calls;
            if (req.get_header_value("Authorization") != "Bearer sekrit") return test::reply_json(res, {{"error", "auth"}}, 401);
            const auto body = json::parse(req.body);
            CHECK(body["model"] == "judge-1");
            CHECK(body["messages"][0]["role"] == "user");
            test::reply_json(res, {{"choices", {{{"message", {{"role", "assistant"}, {"content", canned()}}}}}}});
        });
        s.Post("/v1/messages", [&](const httplib::Request &req, httplib::Response &res) {
            ++anthropic_calls;
            if (req.get_header_value("x-api-key") != "sekrit") return test::reply_json(res, {{"error", "auth"}}, 401);
            test::reply_json(res, {{"content", {{{"type", "text"}, {"text", grades(9, 9, 9, 'E')}}}}});
        });
    });
    set_key("STORYAUG_TEST_JUDGE_KEY", "sekrit");
    RemoteChatOptions o;
    o.http.endpoint = server.url("/v1");
    o.http.backoff = std::chrono::milliseconds(1);
    o.model = "judge-1";
    o.api_key_env = "STORYAUG_TEST_JUDGE_KEY";

    const RemoteChatClient openai(o);
    const JudgeRun a = judge_batch(openai, std::vector<JudgeItem>(3, fixture_item()), {10, 2});
    CHECK(a.summary.n_items == 3);
    CHECK(a.summary.mean_grammar == 7.0);
    CHECK(openai_calls == 3);

    o.flavor = ChatFlavor::anthropic;
    const RemoteChatClient anthropic(o);
    CHECK(parse_judge_response(anthropic.complete({{"user", "hi"}})).age_group == AgeGroup::E);
    CHECK(anthropic_calls == 1);

    set_key("STORYAUG_TEST_JUDGE_KEY", "wrong");
    const RemoteChatClient bad(o);
    CHECK_THROWS_AS(bad.complete({{"user", "hi"}}), RemoteError);
}

TEST_CASE("judge run files") {
    test::TempDir dir;
    CannedChatClient client(canned());
    JudgeItem bad = fixture_item();
    bad.id = "bad";
    bad.completion = "";
    const JudgeRun run = judge_batch(client, {fixture_item(), bad}, {});
    write_judge_run(run, dir.path());
    const auto summary = json::parse(test::slurp(dir / "judge_summary.json"));
    CHECK(summary["n_items"] == 1);
    CHECK(summary["failures"] == 1);
    CHECK(summary["mean_grammar"] == 7.0);
    CHECK(summary["template"] == std::string(kJudgeTemplateVersion));
    const std::string lines = test::slurp(dir / "judge_items.jsonl");
    CHECK(std::count(lines.begin(), lines.end(), '\n') == 2);

    test::spit(dir / "items.jsonl", json{{"id", "tiger"}, {"beginning", "a"}, {"completion", "b"}}.dump() + "\n\n");
    const auto loaded = load_judge_items(dir / "items.jsonl");
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].completion == "b");
    test::spit(dir / "broken.jsonl", "{\"id\":1}\n");
    CHECK_THROWS_AS(load_judge_items(dir / "broken.jsonl"), MalformedRecord);
}
