#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace storyaug {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
  public:
    using Error::Error;
};

// corpus_io

class EmptyAfterNormalization : public Error {
  public:
    EmptyAfterNormalization() : Error("document is empty after normalization") {}
};

class InvalidUtf8 : public Error {
  public:
    explicit InvalidUtf8(std::size_t offset)
        : Error("invalid UTF-8 at byte " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const { return offset_; }

  private:
    std::size_t offset_;
};

class MalformedRecord : public Error {
  public:
    MalformedRecord(std::size_t line, const std::string &what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

class DuplicateId : public Error {
  public:
    explicit DuplicateId(const std::string &id) : Error("duplicate document id: " + id), id_(id) {}
    const std::string &id() const { return id_; }

  private:
    std::string id_;
};

class ManifestMismatch : public Error {
  public:
    using Error::Error;
};

class IoError : public Error {
  public:
    using Error::Error;
};

// sampler

class BudgetExceeded : public Error {
  public:
    BudgetExceeded(std::int64_t nongenerated_words, std::int64_t budget)
        : Error("non-generated words " + std::to_string(nongenerated_words) + " exceed budget " +
                std::to_string(budget)),
          nongenerated_words_(nongenerated_words), budget_(budget) {}
    std::int64_t nongenerated_words() const { return nongenerated_words_; }
    std::int64_t budget() const { return budget_; }

  private:
    std::int64_t nongenerated_words_;
    std::int64_t budget_;
};

// prompt_builder

class StoryTooShort : public Error {
  public:
    StoryTooShort(const std::string &id, std::int64_t words)
        : Error("story " + id + " has " + std::to_string(words) + " words, need at least 4") {}
};

// generator

class EmptyCorpus : public Error {
  public:
    EmptyCorpus() : Error("corpus is empty") {}
};

class EmptyText : public Error {
  public:
    EmptyText() : Error("text has no tokens") {}
};

class TransportError : public Error {
  public:
    using Error::Error;
};

class TimeoutError : public TransportError {
  public:
    using TransportError::TransportError;
};

class MalformedResponse : public Error {
  public:
    using Error::Error;
};

class RemoteError : public Error {
  public:
    RemoteError(int code, const std::string &message)
        : Error("remote error " + std::to_string(code) + ": " + message), code_(code),
          message_(message) {}
    int code() const { return code_; }
    const std::string &message() const { return message_; }

  private:
    int code_;
    std::string message_;
};

// diversity

class EmptyInput : public Error {
  public:
    EmptyInput() : Error("empty hypothesis or reference set") {}
};

class TooFewGenerations : public Error {
  public:
    explicit TooFewGenerations(std::size_t n)
        : Error("self-BLEU needs at least 2 generations, got " + std::to_string(n)) {}
};

// eval_pairs

class EmptySuite : public Error {
  public:
    EmptySuite() : Error("minimal-pair suite is empty") {}
};

/// A scorer failure while evaluating a particular pair.
class PairScoringError : public Error {
  public:
    PairScoringError(const std::string &uid, const std::string &what)
        : Error("pair " + uid + ": " + what), uid_(uid) {}
    const std::string &uid() const { return uid_; }

  private:
    std::string uid_;
};

// balanced_stream

class EmptyGroup : public Error {
  public:
    EmptyGroup() : Error("batch source group is empty") {}
};

// llm_judge

class MissingGrade : public Error {
  public:
    explicit MissingGrade(const std::string &category)
        : Error("judge response has no grade for " + category), category_(category) {}
    const std::string &category() const { return category_; }

  private:
    std::string category_;
};

class GradeOutOfRange : public Error {
  public:
    GradeOutOfRange(const std::string &category, const std::string &value)
        : Error(category + " grade out of range: " + value) {}
};

class MissingAgeGroup : public Error {
  public:
    MissingAgeGroup() : Error("judge response has no age group") {}
};

class SeparatorInText : public Error {
  public:
    SeparatorInText() : Error("judge item contains the reserved separator \"***\"") {}
};

class AuthMissing : public Error {
  public:
    explicit AuthMissing(const std::string &variable)
        : Error("credential environment variable " + variable + " is not set") {}
};

class CallBudgetExceeded : public Error {
  public:
    CallBudgetExceeded(std::size_t needed, std::size_t max_calls)
        : Error("judge run needs " + std::to_string(needed) + " calls, max-calls is " +
                std::to_string(max_calls)) {}
};

// cli_orchestrator

struct ConfigViolation {
    std::string field;
    std::string violation;
};

class ConfigInvalid : public Error {
  public:
    explicit ConfigInvalid(std::vector<ConfigViolation> violations)
        : Error(render(violations)), violations_(std::move(violations)) {}
    const std::vector<ConfigViolation> &violations() const { return violations_; }

  private:
    static std::string render(const std::vector<ConfigViolation> &v) {
        std::string out = "invalid config:";
        for (const auto &e : v) out += "\n  " + e.field + ": " + e.violation;
        return out;
    }
    std::vector<ConfigViolation> violations_;
};

class StageFailed : public Error {
  public:
    StageFailed(const std::string &stage, const std::string &what)
        : Error("stage " + stage + " failed: " + what), stage_(stage) {}
    const std::string &stage() const { return stage_; }

  private:
    std::string stage_;
};

} // namespace storyaug
