#pragma once

#include "storyaug/http.hpp"
#include "storyaug/model.hpp"

namespace storyaug {

/// A language model served over HTTP (see docs/remote_protocol.md):
///   POST {endpoint}/generate  {prompt, mode, top_p, temperature, max_new_tokens, seed}
///                          -> {completion, token_count, finish_reason}
///   POST {endpoint}/score     {text} -> {log_prob}
/// Responses are checked against the contract; violations raise MalformedResponse.
class RemoteLanguageModel final : public Scorer, public TextGenerator {
  public:
    explicit RemoteLanguageModel(HttpOptions options) : client_(std::move(options)) {}

    Generation generate(std::string_view prompt, const GenerationPolicy &policy) const override;
    double log_prob(std::string_view text) const override;
    std::string scorer_id() const override { return "remote:" + client_.options().endpoint; }

    const JsonHttpClient &client() const { return client_; }

  private:
    JsonHttpClient client_;
};

} // namespace storyaug
