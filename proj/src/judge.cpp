#include "storyaug/judge.hpp"

#include "storyaug/errors.hpp"

#include <cstdlib>
#include <fstream>
#include <mutex>
#include <regex>
#include <thread>

namespace storyaug {

namespace {

using nlohmann::json;

constexpr std::string_view kAssessmentPreamble =
    "In the following exercise, the student is given a beginning of a story. The student needs to complete it "
    "into a full story. The exercise tests the student's language abilities and creativity. The symbol *** marks "
    "the separator between the prescribed beginning and the student's completion:";

constexpr std::string_view kAssessmentRequest =
    "Please provide your general assessment about the part written by the student (the one after the *** "
    "symbol). Is it gramatically correct? Is it consistent with the beginning of the story? Pay special attention "
    "to whether the student manages to complete the sentence which is split in the middle by the separator ***.";

constexpr std::string_view kGradingRequest =
    "Now, grade the student's completion in terms of 1. Grammar, 2. Creativity, 3. Consistency with the story's "
    "beginning and whether the plot makes sense. Please provide grades from a scale of 1-10 for each of the "
    "requested categories, namely: 1. Grammar, 2. Creativity, 3. Consistency. Moreover, please provide your best "
    "guess of what the age of the student might be, as reflected from the completion. Choose from possible age "
    "groups: A: 3 or under. B: 4-5. C: 6-7. D: 8-9. E: 10-12. F: 13-16.";

std::string trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return std::string(s.substr(b, e - b + 1));
}

int extract_grade(const std::string &text, const std::string &category) {
    const std::regex re("\\b" + category + "\\b[^:\\n]{0,60}:[\\s*]*(\\d+(?:\\.\\d+)?)\\s*(?:/|out of)\\s*10\\b",
                        std::regex::icase);
    std::smatch m;
    if (!std::regex_search(text, m, re)) throw MissingGrade(category);
    const std::string value = m[1].str();
    if (value.find('.') != std::string::npos) throw GradeOutOfRange(category, value);
    const int grade = std::stoi(value);
    if (grade < 1 || grade > 10) throw GradeOutOfRange(category, value);
    return grade;
}

AgeGroup extract_age_group(const std::string &text) {
    const std::regex re("\\bage[ -]group[^:\\n]{0,40}:[\\s*]*([A-Fa-f])\\b", std::regex::icase);
    std::smatch m;
    if (!std::regex_search(text, m, re)) throw MissingAgeGroup();
    const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(m[1].str()[0])));
    return static_cast<AgeGroup>(c - 'A');
}

} // namespace

char to_letter(AgeGroup g) { return static_cast<char>('A' + static_cast<int>(g)); }

std::string_view age_range(AgeGroup g) {
    switch (g) {
    case AgeGroup::A: return "3 or under";
    case AgeGroup::B: return "4-5";
    case AgeGroup::C: return "6-7";
    case AgeGroup::D: return "8-9";
    case AgeGroup::E: return "10-12";
    case AgeGroup::F: return "13-16";
    }
    return "";
}

std::array<std::string, 2> build_judge_turns(const JudgeItem &item) {
    const std::string beginning = trim(item.story_beginning);
    const std::string completion = trim(item.completion);
    if (beginning.empty()) throw InvalidArgument("judge item " + item.id + " has an empty story beginning");
    if (completion.empty()) throw InvalidArgument("judge item " + item.id + " has an empty completion");
    if (beginning.find(kJudgeSeparator) != std::string::npos || completion.find(kJudgeSeparator) != std::string::npos)
        throw SeparatorInText();
    std::string first;
    first.reserve(kAssessmentPreamble.size() + kAssessmentRequest.size() + beginning.size() + completion.size() + 16);
    first += kAssessmentPreamble;
    first += "\n\n";
    first += beginning;
    first += " *** ";
    first += completion;
    first += "\n\n";
    first += kAssessmentRequest;
    return {std::move(first), std::string(kGradingRequest)};
}

std::string build_judge_prompt(const JudgeItem &item) {
    const auto turns = build_judge_turns(item);
    return turns[0] + "\n\n" + turns[1];
}

JudgeScore parse_judge_response(const std::string &text) {
    JudgeScore s;
    s.grammar = extract_grade(text, "Grammar");
    s.creativity = extract_grade(text, "Creativity");
    s.consistency = extract_grade(text, "Consistency");
    s.age_group = extract_age_group(text);
    s.raw_response = text;
    return s;
}

RemoteChatClient::RemoteChatClient(RemoteChatOptions options)
    : options_(std::move(options)), client_(options_.http) {
    const char *key = std::getenv(options_.api_key_env.c_str());
    if (!key || !*key) throw AuthMissing(options_.api_key_env);
    api_key_ = key;
    if (options_.model.empty()) throw InvalidArgument("judge model name must be set");
}

std::string RemoteChatClient::complete(const std::vector<ChatMessage> &messages) const {
    json msgs = json::array();
    for (const auto &m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    const json body = {{"model", options_.model},
                       {"messages", std::move(msgs)},
                       {"temperature", options_.temperature},
                       {"max_tokens", options_.max_tokens}};
    json res;
    if (options_.flavor == ChatFlavor::openai) {
        res = client_.post("/chat/completions", body, {{"Authorization", "Bearer " + api_key_}});
        try {
            return res.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception &) {
            throw MalformedResponse("chat response lacks choices[0].message.content");
        }
    }
    res = client_.post("/messages", body, {{"x-api-key", api_key_}, {"anthropic-version", "2023-06-01"}});
    try {
        return res.at("content").at(0).at("text").get<std::string>();
    } catch (const json::exception &) {
        throw MalformedResponse("chat response lacks content[0].text");
    }
}

JudgeRun judge_batch(const ChatClient &client, const std::vector<JudgeItem> &items, const JudgeOptions &options) {
    if (items.size() > options.max_calls) throw CallBudgetExceeded(items.size(), options.max_calls);
    JudgeRun run;
    run.items.resize(items.size());
    std::atomic<std::size_t> cursor{0}, calls{0};

    auto worker = [&] {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= items.size()) return;
            JudgeItemResult &r = run.items[i];
            r.id = items[i].id;
            try {
                const std::string prompt = build_judge_prompt(items[i]);
                calls.fetch_add(1);
                r.score = parse_judge_response(client.complete({{"user", prompt}}));
            } catch (const std::exception &e) {
                r.error = e.what();
            }
        }
    };
    const int threads = std::max(1, std::min<int>(options.parallelism, static_cast<int>(items.size())));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto &t : pool) t.join();
    }

    JudgeSummary &s = run.summary;
    s.generation_temperature = options.generation_temperature;
    double g = 0, c = 0, k = 0;
    for (const auto &r : run.items) {
        if (!r.score) {
            ++s.failures;
            continue;
        }
        ++s.n_items;
        g += r.score->grammar;
        c += r.score->creativity;
        k += r.score->consistency;
    }
    if (s.n_items) {
        const auto n = static_cast<double>(s.n_items);
        s.mean_grammar = g / n;
        s.mean_creativity = c / n;
        s.mean_consistency = k / n;
    }
    run.calls = calls.load();
    return run;
}

std::vector<JudgeItem> load_judge_items(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<JudgeItem> items;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const auto rec = json::parse(line);
            items.push_back({rec.at("id").get<std::string>(), rec.at("beginning").get<std::string>(),
                             rec.at("completion").get<std::string>()});
        } catch (const json::exception &e) {
            throw MalformedRecord(lineno, e.what());
        }
    }
    return items;
}

void write_judge_run(const JudgeRun &run, const std::filesystem::path &dir) {
    std::filesystem::create_directories(dir);
    std::ofstream items(dir / "judge_items.jsonl", std::ios::binary | std::ios::trunc);
    for (const auto &r : run.items) {
        json rec = {{"id", r.id}};
        if (r.score) {
            rec["grammar"] = r.score->grammar;
            rec["creativity"] = r.score->creativity;
            rec["consistency"] = r.score->consistency;
            rec["age_group"] = std::string(1, to_letter(r.score->age_group));
            rec["raw_response"] = r.score->raw_response;
        } else {
            rec["error"] = r.error;
        }
        items << rec.dump() << '\n';
    }
    const auto &s = run.summary;
    const json summary = {{"template", std::string(kJudgeTemplateVersion)},
                          {"mean_grammar", s.mean_grammar},
                          {"mean_creativity", s.mean_creativity},
                          {"mean_consistency", s.mean_consistency},
                          {"n_items", s.n_items},
                          {"failures", s.failures},
                          {"calls", run.calls},
                          {"generation_temperature", s.generation_temperature}};
    std::ofstream out(dir / "judge_summary.json", std::ios::binary | std::ios::trunc);
    out << summary.dump(2) << '\n';
    if (!out || !items) throw IoError("cannot write judge results to " + dir.string());
}

} // namespace storyaug
