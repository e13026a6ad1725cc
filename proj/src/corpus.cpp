#include "storyaug/corpus.hpp"

#include "storyaug/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <iterator>
#include <fstream>
#include <unordered_set>

namespace storyaug {

namespace {

using json = nlohmann::json;

bool is_ascii_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::u32string decode_utf8(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const auto b0 = static_cast<unsigned char>(s[i]);
        char32_t cp = 0;
        std::size_t len = 0;
        if (b0 < 0x80) {
            cp = b0;
            len = 1;
        } else if ((b0 & 0xE0) == 0xC0) {
            cp = b0 & 0x1F;
            len = 2;
        } else if ((b0 & 0xF0) == 0xE0) {
            cp = b0 & 0x0F;
            len = 3;
        } else if ((b0 & 0xF8) == 0xF0) {
            cp = b0 & 0x07;
            len = 4;
        } else {
            throw InvalidUtf8(i);
        }
        if (i + len > s.size()) throw InvalidUtf8(i);
        for (std::size_t k = 1; k < len; ++k) {
            const auto b = static_cast<unsigned char>(s[i + k]);
            if ((b & 0xC0) != 0x80) throw InvalidUtf8(i);
            cp = (cp << 6) | (b & 0x3F);
        }
        const bool overlong = (len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000);
        if (overlong || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) throw InvalidUtf8(i);
        out.push_back(cp);
        i += len;
    }
    return out;
}

void append_utf8(std::string &out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

bool is_removed(char32_t c) {
    if (c == U'\t' || c == U'\n') return false;
    if (c < 0x20 || (c >= 0x7F && c <= 0x9F)) return true;
    switch (c) {
    case 0x180E: case 0x200B: case 0x200C: case 0x200D: case 0x200E: case 0x200F:
    case 0x2060: case 0xFEFF:
    case 0x202A: case 0x202B: case 0x202C: case 0x202D: case 0x202E:
    case 0x2066: case 0x2067: case 0x2068: case 0x2069:
        return true;
    default:
        return false;
    }
}

bool is_space(char32_t c) {
    return c == U' ' || c == U'\t' || c == 0x00A0 || c == 0x1680 || (c >= 0x2000 && c <= 0x200A) ||
           c == 0x202F || c == 0x205F || c == 0x3000;
}

bool is_double_quote(char32_t c) {
    switch (c) {
    case U'"': case 0x201C: case 0x201D: case 0x201E: case 0x201F: case 0x00AB: case 0x00BB:
    case 0x2039: case 0x203A: case 0x2033: case 0xFF02: case 0x300C: case 0x300D: case 0x300E:
    case 0x300F: case 0x301D: case 0x301E:
        return true;
    default:
        return false;
    }
}

bool is_single_quote(char32_t c) { return c == U'\'' || c == 0x2018 || c == 0x2019 || c == 0x201A || c == 0x201B; }

bool opens_before(char32_t c) {
    return c == U' ' || c == U'(' || c == U'[' || c == U'{' || c == U'"' || is_single_quote(c) || c == 0x2014;
}

bool closes_after(char32_t c) {
    switch (c) {
    case U' ': case U'.': case U',': case U';': case U':': case U'!': case U'?': case U')': case U']':
    case U'}': case U'"': case U'-': case 0x2014: case 0x2026:
        return true;
    default:
        return is_single_quote(c);
    }
}

// One pairing pass over the single-style quotes of a paragraph. Returns whether any pair was found.
bool pair_single_quotes_once(std::u32string &seg) {
    const std::size_t n = seg.size();
    auto open_at = [&](std::size_t i) {
        return is_single_quote(seg[i]) && (i == 0 || opens_before(seg[i - 1])) && i + 1 < n && seg[i + 1] != U' ' &&
               !is_single_quote(seg[i + 1]);
    };
    auto close_at = [&](std::size_t j) {
        return is_single_quote(seg[j]) && j > 0 && seg[j - 1] != U' ' && !is_single_quote(seg[j - 1]) &&
               (j + 1 == n || closes_after(seg[j + 1]));
    };
    std::vector<bool> paired(n, false);
    std::size_t i = 0;
    while (i < n) {
        if (open_at(i)) {
            std::size_t j = i + 1;
            while (j < n && !close_at(j)) ++j;
            if (j < n) {
                paired[i] = paired[j] = true;
                i = j + 1;
                continue;
            }
        }
        ++i;
    }
    bool any = false;
    for (std::size_t k = 0; k < n; ++k) {
        if (!is_single_quote(seg[k])) continue;
        seg[k] = paired[k] ? U'"' : U'\'';
        any = any || paired[k];
    }
    return any;
}

// Pairs single-style quotes inside one paragraph (single-spaced, no [PAR]). Repeats
// until no pair is left, so the output is stable under renormalization.
void pair_single_quotes(std::u32string &seg) {
    while (pair_single_quotes_once(seg)) {
    }
}

} // namespace

Source Source::other(std::string name) {
    if (name.empty()) throw InvalidArgument("source name must be non-empty");
    return Source(Kind::other, std::move(name));
}

Source Source::parse(std::string_view name) {
    if (name == "babylm") return babylm();
    if (name == "tinystories") return tinystories();
    if (name == "generated") return generated();
    return other(std::string(name));
}

std::string Source::name() const {
    switch (kind_) {
    case Kind::babylm: return "babylm";
    case Kind::tinystories: return "tinystories";
    case Kind::generated: return "generated";
    case Kind::other: return other_;
    }
    return other_;
}

std::string_view to_string(Provenance p) {
    switch (p) {
    case Provenance::original: return "original";
    case Provenance::sampled: return "sampled";
    case Provenance::generated: return "generated";
    }
    return "original";
}

Provenance parse_provenance(std::string_view s) {
    if (s == "original") return Provenance::original;
    if (s == "sampled") return Provenance::sampled;
    if (s == "generated") return Provenance::generated;
    throw InvalidArgument("unknown provenance: " + std::string(s));
}

std::vector<std::string_view> split_words(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_ascii_space(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && !is_ascii_space(text[j])) ++j;
        if (j > i) {
            auto tok = text.substr(i, j - i);
            if (tok != kParagraphToken) out.push_back(tok);
        }
        i = j;
    }
    return out;
}

std::int64_t count_words(std::string_view text) {
    std::int64_t n = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_ascii_space(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && !is_ascii_space(text[j])) ++j;
        if (j > i && text.substr(i, j - i) != kParagraphToken) ++n;
        i = j;
    }
    return n;
}

std::string normalize_text(std::string_view raw_text) {
    const std::u32string in = decode_utf8(raw_text);

    // Rules a (double quotes), b and the whitespace mapping, one pass.
    std::u32string cleaned;
    cleaned.reserve(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) {
        char32_t c = in[i];
        if (c == U'\r') {
            if (i + 1 < in.size() && in[i + 1] == U'\n') continue;
            c = U'\n';
        }
        if (c == 0x2028) c = U'\n';
        if (c == 0x2029) {
            cleaned += U"\n\n";
            continue;
        }
        if (is_removed(c)) continue;
        if (is_space(c)) c = U' ';
        if (is_double_quote(c)) c = U'"';
        cleaned.push_back(c);
    }

    // Rules c, d: group non-blank lines into paragraphs, split every paragraph into tokens.
    std::vector<std::vector<std::u32string>> paragraphs;
    std::vector<std::u32string> current;
    auto flush = [&] {
        if (!current.empty()) paragraphs.push_back(std::move(current));
        current.clear();
    };
    std::size_t pos = 0;
    while (pos <= cleaned.size()) {
        std::size_t eol = cleaned.find(U'\n', pos);
        if (eol == std::u32string::npos) eol = cleaned.size();
        std::u32string_view line(cleaned.data() + pos, eol - pos);
        bool blank = true;
        std::size_t k = 0;
        while (k < line.size()) {
            while (k < line.size() && line[k] == U' ') ++k;
            std::size_t e = k;
            while (e < line.size() && line[e] != U' ') ++e;
            if (e > k) {
                blank = false;
                std::u32string tok(line.substr(k, e - k));
                if (tok == U"[PAR]") {
                    flush();
                } else {
                    current.push_back(std::move(tok));
                }
            }
            k = e;
        }
        if (blank) flush();
        pos = eol + 1;
    }
    flush();

    // Rule a (single-style quotes) per paragraph, then rule e by construction.
    std::string out;
    out.reserve(raw_text.size());
    for (std::size_t p = 0; p < paragraphs.size(); ++p) {
        std::u32string seg;
        for (std::size_t t = 0; t < paragraphs[p].size(); ++t) {
            if (t) seg.push_back(U' ');
            seg += paragraphs[p][t];
        }
        pair_single_quotes(seg);
        if (p) out += " [PAR] ";
        for (char32_t c : seg) append_utf8(out, c);
    }
    if (count_words(out) == 0) throw EmptyAfterNormalization();
    return out;
}

Document normalize_document(std::string id, std::string_view raw_text, Source source, Provenance provenance) {
    return Document(std::move(id), std::move(source), normalize_text(raw_text), provenance);
}

Document::Document(std::string id, Source source, std::string text, Provenance provenance)
    : id_(std::move(id)), source_(std::move(source)), provenance_(provenance) {
    if (id_.empty()) throw InvalidArgument("document id must be non-empty");
    set_text(std::move(text));
}

void Document::set_text(std::string text) {
    if (text.find('\n') != std::string::npos || text.find('\r') != std::string::npos)
        throw InvalidArgument("document " + id_ + " contains a raw newline");
    text_ = std::move(text);
    word_count_ = count_words(text_);
}

Document Document::with_provenance(Provenance p) const {
    Document d = *this;
    d.provenance_ = p;
    return d;
}

CorpusManifest CorpusManifest::summarize(const std::vector<Document> &docs) {
    CorpusManifest m;
    for (const auto &d : docs) {
        auto it = std::find_if(m.entries.begin(), m.entries.end(), [&](const ManifestEntry &e) {
            return e.source == d.source() && e.provenance == d.provenance();
        });
        if (it == m.entries.end()) {
            m.entries.push_back({d.source(), 0, d.provenance(), {}});
            it = std::prev(m.entries.end());
        }
        it->word_count += d.word_count();
        m.total_words += d.word_count();
        if (d.provenance() != Provenance::generated) m.nongenerated_words += d.word_count();
    }
    return m;
}

namespace {

void check_unique_ids(const std::vector<Document> &docs) {
    std::unordered_set<std::string_view> seen;
    seen.reserve(docs.size() * 2);
    for (const auto &d : docs)
        if (!seen.insert(d.id()).second) throw DuplicateId(d.id());
}

} // namespace

Corpus::Corpus(std::vector<Document> docs, std::optional<std::int64_t> budget, std::optional<std::uint64_t> seed)
    : docs_(std::move(docs)) {
    check_unique_ids(docs_);
    manifest_ = CorpusManifest::summarize(docs_);
    manifest_.budget = budget;
    manifest_.seed = seed;
    if (budget && manifest_.nongenerated_words > *budget)
        throw BudgetExceeded(manifest_.nongenerated_words, *budget);
}

Corpus::Corpus(std::vector<Document> docs, CorpusManifest manifest)
    : docs_(std::move(docs)), manifest_(std::move(manifest)) {
    check_unique_ids(docs_);
    std::int64_t total = 0, nongen = 0;
    for (const auto &d : docs_) {
        total += d.word_count();
        if (d.provenance() != Provenance::generated) nongen += d.word_count();
    }
    std::int64_t entry_total = 0, entry_nongen = 0;
    for (const auto &e : manifest_.entries) {
        entry_total += e.word_count;
        if (e.provenance != Provenance::generated) entry_nongen += e.word_count;
    }
    if (manifest_.total_words != total || entry_total != total)
        throw ManifestMismatch("manifest total_words " + std::to_string(manifest_.total_words) +
                               " disagrees with documents (" + std::to_string(total) + ")");
    if (manifest_.nongenerated_words != nongen || entry_nongen != nongen)
        throw ManifestMismatch("manifest nongenerated_words " + std::to_string(manifest_.nongenerated_words) +
                               " disagrees with documents (" + std::to_string(nongen) + ")");
    if (manifest_.budget && manifest_.nongenerated_words > *manifest_.budget)
        throw BudgetExceeded(manifest_.nongenerated_words, *manifest_.budget);
}

std::filesystem::path manifest_path(const std::filesystem::path &corpus_path) {
    auto p = corpus_path;
    p += ".manifest.json";
    return p;
}

namespace {

json manifest_to_json(const CorpusManifest &m, std::size_t documents) {
    json entries = json::array();
    for (const auto &e : m.entries) {
        json je = {{"source", e.source.name()},
                   {"provenance", std::string(to_string(e.provenance))},
                   {"word_count", e.word_count}};
        if (!e.label.empty()) je["label"] = e.label;
        entries.push_back(std::move(je));
    }
    json j = {{"format", "storyaug-corpus-manifest/1"},
              {"normalization", std::string(kNormalizationVersion)},
              {"documents", documents},
              {"total_words", m.total_words},
              {"nongenerated_words", m.nongenerated_words},
              {"budget", m.budget ? json(*m.budget) : json(nullptr)},
              {"seed", m.seed ? json(*m.seed) : json(nullptr)},
              {"entries", std::move(entries)}};
    return j;
}

CorpusManifest manifest_from_json(const json &j) {
    CorpusManifest m;
    m.total_words = j.at("total_words").get<std::int64_t>();
    m.nongenerated_words = j.at("nongenerated_words").get<std::int64_t>();
    if (j.contains("budget") && !j["budget"].is_null()) m.budget = j["budget"].get<std::int64_t>();
    if (j.contains("seed") && !j["seed"].is_null()) m.seed = j["seed"].get<std::uint64_t>();
    for (const auto &je : j.at("entries")) {
        ManifestEntry e;
        e.source = Source::parse(je.at("source").get<std::string>());
        e.provenance = parse_provenance(je.at("provenance").get<std::string>());
        e.word_count = je.at("word_count").get<std::int64_t>();
        if (je.contains("label")) e.label = je["label"].get<std::string>();
        m.entries.push_back(std::move(e));
    }
    return m;
}

} // namespace

void write_file_atomically(const std::filesystem::path &path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void write_corpus(const Corpus &corpus, const std::filesystem::path &path) {
    std::string body;
    for (const auto &d : corpus.documents()) {
        json rec = {{"id", d.id()},
                    {"source", d.source().name()},
                    {"provenance", std::string(to_string(d.provenance()))},
                    {"text", d.text()}};
        try {
            body += rec.dump();
        } catch (const json::exception &e) {
            throw IoError("cannot serialize document " + d.id() + ": " + e.what());
        }
        body.push_back('\n');
    }
    write_file_atomically(path, body);
    write_file_atomically(manifest_path(path), manifest_to_json(corpus.manifest(), corpus.size()).dump(2) + "\n");
}

Corpus read_corpus(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<Document> docs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const json rec = json::parse(line);
            if (!rec.is_object()) throw MalformedRecord(lineno, "record is not an object");
            for (const char *field : {"id", "source", "provenance", "text"})
                if (!rec.contains(field) || !rec[field].is_string())
                    throw MalformedRecord(lineno, std::string("missing string field '") + field + "'");
            docs.emplace_back(rec["id"].get<std::string>(), Source::parse(rec["source"].get<std::string>()),
                              rec["text"].get<std::string>(),
                              parse_provenance(rec["provenance"].get<std::string>()));
        } catch (const MalformedRecord &) {
            throw;
        } catch (const json::exception &e) {
            throw MalformedRecord(lineno, e.what());
        } catch (const InvalidArgument &e) {
            throw MalformedRecord(lineno, e.what());
        }
    }
    const auto mpath = manifest_path(path);
    if (!std::filesystem::exists(mpath)) return Corpus(std::move(docs));
    std::ifstream min(mpath, std::ios::binary);
    CorpusManifest manifest;
    try {
        manifest = manifest_from_json(json::parse(min));
    } catch (const json::exception &e) {
        throw ManifestMismatch("unreadable manifest " + mpath.string() + ": " + e.what());
    }
    return Corpus(std::move(docs), std::move(manifest));
}

namespace {

std::string read_all(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

std::string indexed_id(const std::string &prefix, std::size_t index) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "-%07zu", index);
    return prefix + buf;
}

} // namespace

RawImport import_raw_corpus(const std::filesystem::path &path, Source source, const std::string &id_prefix) {
    std::vector<Document> docs;
    std::size_t skipped = 0;
    auto add = [&](std::string id, std::string_view raw) {
        try {
            docs.push_back(normalize_document(std::move(id), raw, source));
        } catch (const EmptyAfterNormalization &) {
            ++skipped;
        }
    };
    const std::string content = read_all(path);
    std::size_t index = 0;
    if (path.extension() == ".jsonl") {
        std::size_t lineno = 0, pos = 0;
        while (pos < content.size()) {
            std::size_t end = content.find('\n', pos);
            if (end == std::string::npos) end = content.size();
            const std::string_view line(content.data() + pos, end - pos);
            pos = end + 1;
            ++lineno;
            if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
            json rec;
            try {
                rec = json::parse(line);
            } catch (const json::exception &e) {
                throw MalformedRecord(lineno, e.what());
            }
            if (!rec.is_object() || !rec.contains("text") || !rec["text"].is_string())
                throw MalformedRecord(lineno, "missing string field 'text'");
            std::string id = rec.contains("id") && rec["id"].is_string() ? rec["id"].get<std::string>()
                                                                          : indexed_id(id_prefix, index);
            ++index;
            if (id.empty()) throw MalformedRecord(lineno, "empty id");
            add(std::move(id), rec["text"].get_ref<const std::string &>());
        }
    } else {
        std::size_t pos = 0, start = 0;
        auto flush = [&](std::size_t end) {
            add(indexed_id(id_prefix, index++), std::string_view(content).substr(start, end - start));
        };
        while (pos < content.size()) {
            std::size_t end = content.find('\n', pos);
            if (end == std::string::npos) end = content.size();
            std::string_view line(content.data() + pos, end - pos);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            if (line == kDocumentSeparator) {
                flush(pos);
                start = end + 1;
            }
            pos = end + 1;
        }
        if (start < content.size()) flush(content.size());
    }
    return {Corpus(std::move(docs)), skipped};
}

} // namespace storyaug
