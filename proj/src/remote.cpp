#include "storyaug/remote.hpp"

#include "storyaug/errors.hpp"

#include <cmath>

namespace storyaug {

using nlohmann::json;

Generation RemoteLanguageModel::generate(std::string_view prompt, const GenerationPolicy &policy) const {
    validate_policy(policy);
    if (prompt.empty()) throw EmptyText();
    const json body = {{"prompt", std::string(prompt)},
                       {"mode", std::string(to_string(policy.mode))},
                       {"top_p", policy.top_p},
                       {"temperature", policy.temperature},
                       {"max_new_tokens", policy.max_new_tokens},
                       {"seed", policy.seed}};
    const json res = client_.post("/generate", body);
    if (!res.is_object()) throw MalformedResponse("/generate response is not an object");
    if (!res.contains("completion") || !res["completion"].is_string())
        throw MalformedResponse("/generate response lacks a string 'completion'");
    if (!res.contains("token_count") || !res["token_count"].is_number_integer())
        throw MalformedResponse("/generate response lacks an integer 'token_count'");
    if (!res.contains("finish_reason") || !res["finish_reason"].is_string())
        throw MalformedResponse("/generate response lacks a string 'finish_reason'");

    Generation g;
    g.policy = policy;
    g.completion_text = res["completion"].get<std::string>();
    if (g.completion_text.empty()) throw MalformedResponse("/generate returned an empty completion");
    const auto count = res["token_count"].get<std::int64_t>();
    if (count < 0 || count > policy.max_new_tokens)
        throw MalformedResponse("/generate token_count " + std::to_string(count) + " outside [0, max_new_tokens]");
    g.token_count = static_cast<int>(count);
    const auto reason = res["finish_reason"].get<std::string>();
    if (reason == "stop")
        g.terminated_by = Termination::stop_token;
    else if (reason == "length")
        g.terminated_by = Termination::max_len;
    else
        throw MalformedResponse("/generate finish_reason '" + reason + "' is not 'stop' or 'length'");
    return g;
}

double RemoteLanguageModel::log_prob(std::string_view text) const {
    if (text.empty()) throw EmptyText();
    const json res = client_.post("/score", json{{"text", std::string(text)}});
    if (!res.is_object() || !res.contains("log_prob") || !res["log_prob"].is_number())
        throw MalformedResponse("/score response lacks a numeric 'log_prob'");
    const double lp = res["log_prob"].get<double>();
    if (!std::isfinite(lp) || lp > 0.0)
        throw MalformedResponse("/score log_prob must be finite and <= 0, got " + res["log_prob"].dump());
    return lp;
}

} // namespace storyaug
