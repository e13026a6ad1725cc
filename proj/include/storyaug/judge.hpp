#pragma once

#include "storyaug/http.hpp"

#include <array>
#include <atomic>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace storyaug {

struct JudgeItem {
    std::string id;
    std::string story_beginning;
    std::string completion;
};

enum class AgeGroup { A, B, C, D, E, F }; // 3 or under, 4-5, 6-7, 8-9, 10-12, 13-16

char to_letter(AgeGroup g);
std::string_view age_range(AgeGroup g);

struct JudgeScore {
    int grammar = 0;
    int creativity = 0;
    int consistency = 0;
    AgeGroup age_group = AgeGroup::A;
    std::string raw_response;
};

inline constexpr std::string_view kJudgeTemplateVersion = "judge-prompt-v1";
inline constexpr std::string_view kJudgeSeparator = "***";

/// The two user turns of the grading conversation: the assessment request with the
/// story shown as `beginning *** completion`, then the grading request.
/// Throws InvalidArgument on an empty field and SeparatorInText if either text
/// already contains "***".
std::array<std::string, 2> build_judge_turns(const JudgeItem &item);

/// Both turns joined by a blank line; the single message sent per item.
std::string build_judge_prompt(const JudgeItem &item);

/// Extracts "<Category>: n/10" for Grammar, Creativity and Consistency and the
/// "Age group" letter. Throws MissingGrade, GradeOutOfRange, MissingAgeGroup.
JudgeScore parse_judge_response(const std::string &text);

struct ChatMessage {
    std::string role;
    std::string content;
};

class ChatClient {
  public:
    virtual ~ChatClient() = default;
    /// Returns the text of the assistant reply.
    virtual std::string complete(const std::vector<ChatMessage> &messages) const = 0;
};

enum class ChatFlavor { openai, anthropic };

struct RemoteChatOptions {
    HttpOptions http;
    std::string model;
    double temperature = 0.0;
    int max_tokens = 1024;
    std::string api_key_env = "STORYAUG_JUDGE_API_KEY";
    ChatFlavor flavor = ChatFlavor::openai;
};

/// Chat-completion call. openai flavor: POST {endpoint}/chat/completions, bearer token,
/// reply at choices[0].message.content. anthropic flavor: POST {endpoint}/messages,
/// x-api-key header, reply at content[0].text. Throws AuthMissing at construction
/// when the credential variable is unset.
class RemoteChatClient final : public ChatClient {
  public:
    explicit RemoteChatClient(RemoteChatOptions options);
    std::string complete(const std::vector<ChatMessage> &messages) const override;

  private:
    RemoteChatOptions options_;
    std::string api_key_;
    JsonHttpClient client_;
};

/// Replies with a fixed text and counts calls. Used for dry runs.
class CannedChatClient final : public ChatClient {
  public:
    explicit CannedChatClient(std::string reply) : reply_(std::move(reply)) {}
    std::string complete(const std::vector<ChatMessage> &) const override {
        calls_.fetch_add(1);
        return reply_;
    }
    std::size_t calls() const { return calls_.load(); }

  private:
    std::string reply_;
    mutable std::atomic<std::size_t> calls_{0};
};

struct JudgeOptions {
    std::size_t max_calls = 1000;
    int parallelism = 1;
    double generation_temperature = 1.0; // recorded with the summary
};

struct JudgeItemResult {
    std::string id;
    std::optional<JudgeScore> score;
    std::string error;
};

struct JudgeSummary {
    double mean_grammar = 0.0;
    double mean_creativity = 0.0;
    double mean_consistency = 0.0;
    std::size_t n_items = 0; // successfully parsed
    std::size_t failures = 0;
    double generation_temperature = 1.0;
};

struct JudgeRun {
    JudgeSummary summary;
    std::vector<JudgeItemResult> items; // input order
    std::size_t calls = 0;
};

/// One call per item; per-item failures are recorded, not fatal.
/// Throws CallBudgetExceeded when the items need more than max_calls calls.
JudgeRun judge_batch(const ChatClient &client, const std::vector<JudgeItem> &items, const JudgeOptions &options);

std::vector<JudgeItem> load_judge_items(const std::filesystem::path &path);
void write_judge_run(const JudgeRun &run, const std::filesystem::path &dir);

} // namespace storyaug
