#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace storyaug {

/// Paragraph-break symbol. Kept in the text, never counted as a word.
inline constexpr std::string_view kParagraphToken = "[PAR]";

/// Version tag of the normalization rule set, recorded in manifests.
inline constexpr std::string_view kNormalizationVersion = "norm-v1";

/// Where a document came from. Known corpora get their own tag, anything else
/// keeps its name.
class Source {
  public:
    enum class Kind { babylm, tinystories, generated, other };

    Source() = default;
    static Source babylm() { return Source(Kind::babylm, {}); }
    static Source tinystories() { return Source(Kind::tinystories, {}); }
    static Source generated() { return Source(Kind::generated, {}); }
    static Source other(std::string name);

    /// Parses "babylm", "tinystories", "generated"; any other non-empty string is other(name).
    static Source parse(std::string_view name);

    Kind kind() const { return kind_; }
    std::string name() const;

    friend bool operator==(const Source &, const Source &) = default;

  private:
    Source(Kind kind, std::string name) : kind_(kind), other_(std::move(name)) {}
    Kind kind_ = Kind::other;
    std::string other_ = "unknown";
};

enum class Provenance { original, sampled, generated };

std::string_view to_string(Provenance p);
Provenance parse_provenance(std::string_view s);

/// Splits on ASCII whitespace, dropping the paragraph token.
std::vector<std::string_view> split_words(std::string_view text);

/// Number of whitespace-delimited tokens that are not the paragraph token.
std::int64_t count_words(std::string_view text);

/// Normalized text of one document. word_count always matches the text.
class Document {
  public:
    Document() = default;
    Document(std::string id, Source source, std::string text,
             Provenance provenance = Provenance::original);

    const std::string &id() const { return id_; }
    const Source &source() const { return source_; }
    const std::string &text() const { return text_; }
    Provenance provenance() const { return provenance_; }
    std::int64_t word_count() const { return word_count_; }

    void set_text(std::string text);
    Document with_provenance(Provenance p) const;

    friend bool operator==(const Document &, const Document &) = default;

  private:
    std::string id_;
    Source source_;
    std::string text_;
    Provenance provenance_ = Provenance::original;
    std::int64_t word_count_ = 0;
};

/// Applies the fixed normalization rules to raw text:
///   a. curly, angled and single-style quotes around direct speech become ASCII '"';
///      other right single quotes become apostrophes
///   b. control and zero-width characters are removed
///   c. runs of blank lines become one " [PAR] " token
///   d. runs of horizontal whitespace (and lone newlines) become one space
///   e. leading and trailing whitespace and paragraph tokens are stripped
/// Idempotent. Throws InvalidUtf8 or EmptyAfterNormalization.
std::string normalize_text(std::string_view raw_text);

Document normalize_document(std::string id, std::string_view raw_text, Source source,
                            Provenance provenance = Provenance::original);

struct ManifestEntry {
    Source source;
    std::int64_t word_count = 0;
    Provenance provenance = Provenance::original;
    std::string label;

    friend bool operator==(const ManifestEntry &, const ManifestEntry &) = default;
};

struct CorpusManifest {
    std::vector<ManifestEntry> entries;
    std::int64_t total_words = 0;
    std::int64_t nongenerated_words = 0;
    std::optional<std::int64_t> budget;
    std::optional<std::uint64_t> seed;

    /// One entry per (source, provenance) pair in order of first appearance.
    static CorpusManifest summarize(const std::vector<Document> &docs);

    friend bool operator==(const CorpusManifest &, const CorpusManifest &) = default;
};

/// An immutable ordered collection of documents and its accounting.
class Corpus {
  public:
    Corpus() = default;
    /// Builds the manifest from the documents. Throws DuplicateId.
    explicit Corpus(std::vector<Document> docs, std::optional<std::int64_t> budget = {},
                    std::optional<std::uint64_t> seed = {});
    /// Uses an explicit manifest; throws ManifestMismatch if its totals disagree
    /// with the documents or the budget invariant fails.
    Corpus(std::vector<Document> docs, CorpusManifest manifest);

    const std::vector<Document> &documents() const { return docs_; }
    const CorpusManifest &manifest() const { return manifest_; }
    std::size_t size() const { return docs_.size(); }
    bool empty() const { return docs_.empty(); }
    std::int64_t total_words() const { return manifest_.total_words; }

    friend bool operator==(const Corpus &, const Corpus &) = default;

  private:
    std::vector<Document> docs_;
    CorpusManifest manifest_;
};

/// Path of the manifest sidecar written next to a corpus file.
std::filesystem::path manifest_path(const std::filesystem::path &corpus_path);

/// Writes one JSON object per line ({id, source, provenance, text}) plus the sidecar manifest.
void write_corpus(const Corpus &corpus, const std::filesystem::path &path);

/// Reads a corpus written by write_corpus. A missing sidecar is rebuilt from the records.
/// Throws MalformedRecord (with line number), DuplicateId, ManifestMismatch, IoError.
Corpus read_corpus(const std::filesystem::path &path);

/// Line that separates documents in plain-text corpus dumps.
inline constexpr std::string_view kDocumentSeparator = "<|endoftext|>";

struct RawImport {
    Corpus corpus;
    std::size_t skipped_empty = 0; // documents with no words after normalization
};

/// Normalizes an external corpus file. `.jsonl` files hold {text, [id]} records;
/// anything else is plain text split on kDocumentSeparator lines. Documents
/// without an id are named "<id_prefix>-<index>". Throws IoError, MalformedRecord,
/// InvalidUtf8, DuplicateId.
RawImport import_raw_corpus(const std::filesystem::path &path, Source source, const std::string &id_prefix);

/// Writes through a temporary file and a rename. Throws IoError.
void write_file_atomically(const std::filesystem::path &path, std::string_view content);

} // namespace storyaug
