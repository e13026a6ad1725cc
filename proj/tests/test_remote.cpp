#include "support.hpp"

#include "storyaug/errors.hpp"
#include "storyaug/http.hpp"
#include "storyaug/remote.hpp"

#include <doctest.h>

#include <chrono>

using namespace storyaug;
using namespace std::chrono_literals;
using nlohmann::json;

namespace {

HttpOptions fast(const std::string &endpoint) {
    HttpOptions o;
    o.endpoint = endpoint;
    o.timeout = 200ms;
    o.backoff = 10ms;
    return o;
}

void echo_routes(httplib::Server &s) {
    s.Post("/v1/generate", [](const httplib::Request &req, httplib::Response &res) {
        const auto body = json::parse(req.body);
        CHECK(body.at("mode") == "nucleus");
        CHECK(body.at("max_new_tokens") == 12);
        test::reply_json(res, {{"completion", "echo " + body.at("prompt").get<std::string>()},
                               {"token_count", 3},
                               {"finish_reason", "stop"}});
    });
    s.Post("/v1/score", [](const httplib::Request &req, httplib::Response &res) {
        const auto text = json::parse(req.body).at("text").get<std::string>();
        test::reply_json(res, {{"log_prob", text == "positive" ? 0.5 : -1.25 * static_cast<double>(text.size())}});
    });
}

} // namespace

TEST_CASE("remote model round-trips generate and score") {
    test::StubServer server(echo_routes);
    RemoteLanguageModel m(fast(server.url("/v1/")));
    GenerationPolicy p;
    p.max_new_tokens = 12;
    const Generation g = m.generate("hello there", p);
    CHECK(g.completion_text == "echo hello there");
    CHECK(g.token_count == 3);
    CHECK(g.terminated_by == Termination::stop_token);
    CHECK(g.policy == p);
    CHECK(m.log_prob("abcd") == -5.0);
    CHECK_THROWS_AS(m.log_prob("positive"), MalformedResponse);
    CHECK_THROWS_AS(m.log_prob(""), EmptyText);
    CHECK(m.client().attempts_made() == 3);
}

TEST_CASE("malformed generate responses are rejected") {
    int variant = 0;
    test::StubServer server([&](httplib::Server &s) {
        s.Post("/generate", [&](const httplib::Request &, httplib::Response &res) {
            switch (variant) {
            case 0: test::reply_json(res, {{"completion", "x"}, {"token_count", 1}}); break;
            case 1: test::reply_json(res, {{"completion", "x"}, {"token_count", 999}, {"finish_reason", "stop"}}); break;
            case 2: test::reply_json(res, {{"completion", "x"}, {"token_count", 1}, {"finish_reason", "eos"}}); break;
            case 3: test::reply_json(res, {{"completion", ""}, {"token_count", 0}, {"finish_reason", "stop"}}); break;
            default: res.set_content("not json", "text/plain");
            }
        });
    });
    RemoteLanguageModel m(fast(server.url()));
    for (variant = 0; variant < 5; ++variant) CHECK_THROWS_AS(m.generate("p", {}), MalformedResponse);
}

TEST_CASE("timeouts are retried with backoff") {
    std::atomic<int> calls{0};
    test::StubServer server([&](httplib::Server &s) {
        s.Post("/score", [&](const httplib::Request &, httplib::Response &res) {
            if (calls++ < 2) std::this_thread::sleep_for(600ms);
            test::reply_json(res, {{"log_prob", -2.0}});
        });
    });
    RemoteLanguageModel m(fast(server.url()));
    CHECK(m.log_prob("x") == -2.0);
    CHECK(m.client().attempts_made() == 3);

    calls = -10;
    RemoteLanguageModel n(fast(server.url()));
    CHECK_THROWS_AS(n.log_prob("x"), TimeoutError);
    CHECK(n.client().attempts_made() == 3);
}

TEST_CASE("server errors: 5xx retried, 4xx surfaced") {
    std::atomic<int> calls{0};
    test::StubServer server([&](httplib::Server &s) {
        s.Post("/flaky", [&](const httplib::Request &, httplib::Response &res) {
            if (calls++ == 0) test::reply_json(res, {{"error", "busy"}}, 503);
            else test::reply_json(res, {{"ok", true}});
        });
        s.Post("/bad", [&](const httplib::Request &, httplib::Response &res) {
            test::reply_json(res, {{"error", {{"message", "nope"}}}}, 400);
        });
        s.Post("/down", [&](const httplib::Request &, httplib::Response &res) {
            test::reply_json(res, {{"error", "still down"}}, 500);
        });
    });
    JsonHttpClient c(fast(server.url()));
    CHECK(c.post("/flaky", json::object()).at("ok") == true);
    CHECK(c.attempts_made() == 2);
    try {
        c.post("/bad", json::object());
        FAIL("expected RemoteError");
    } catch (const RemoteError &e) {
        CHECK(e.code() == 400);
        CHECK(e.message().find("nope") != std::string::npos);
    }
    CHECK(c.attempts_made() == 3);
    try {
        c.post("/down", json::object());
        FAIL("expected RemoteError");
    } catch (const RemoteError &e) {
        CHECK(e.code() == 500);
        CHECK(e.message() == "still down");
    }
    CHECK(c.attempts_made() == 6);
}

TEST_CASE("unreachable endpoint raises TransportError") {
    int port;
    {
        httplib::Server s;
        port = s.bind_to_any_port("127.0.0.1");
    }
    JsonHttpClient c(fast("http://127.0.0.1:" + std::to_string(port)));
    CHECK_THROWS_AS(c.post("/x", json::object()), TransportError);
    CHECK(c.attempts_made() == 3);
    CHECK_THROWS_AS(JsonHttpClient(fast("localhost:80")), InvalidArgument);
}

TEST_CASE("request gate spaces out request starts") {
    RequestGate gate(2, 30ms);
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < 4; ++i) auto t = gate.acquire();
    CHECK(std::chrono::steady_clock::now() - t0 >= 90ms);
}
