#include "storyaug/eval_pairs.hpp"

#include "storyaug/errors.hpp"
#include "storyaug/parallel.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>

namespace storyaug {

std::string_view to_string(Suite s) {
    switch (s) {
    case Suite::blimp: return "blimp";
    case Suite::blimp_supplement: return "blimp_supplement";
    case Suite::ewok: return "ewok";
    case Suite::custom: return "custom";
    }
    return "custom";
}

Suite parse_suite(std::string_view s) {
    if (s == "blimp") return Suite::blimp;
    if (s == "blimp_supplement" || s == "supplement") return Suite::blimp_supplement;
    if (s == "ewok") return Suite::ewok;
    if (s == "custom") return Suite::custom;
    throw InvalidArgument("unknown suite: " + std::string(s));
}

std::vector<MinimalPair> load_pairs(const std::filesystem::path &path, Suite suite) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<MinimalPair> pairs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception &e) {
            throw MalformedRecord(lineno, e.what());
        }
        if (!rec.is_object()) throw MalformedRecord(lineno, "record is not an object");
        for (const char *field : {"uid", "good", "bad", "group"})
            if (!rec.contains(field) || !rec[field].is_string())
                throw MalformedRecord(lineno, std::string("missing string field '") + field + "'");
        MinimalPair p{rec["uid"].get<std::string>(), rec["good"].get<std::string>(), rec["bad"].get<std::string>(),
                      rec["group"].get<std::string>(), suite};
        if (p.good_text == p.bad_text) throw MalformedRecord(lineno, "good and bad texts are identical");
        if (p.group.empty()) throw MalformedRecord(lineno, "empty group");
        if (p.uid.empty()) throw MalformedRecord(lineno, "empty uid");
        pairs.push_back(std::move(p));
    }
    if (pairs.empty()) throw EmptySuite();
    return pairs;
}

EvalReport tally_pairs(std::span<const MinimalPair> pairs, std::span<const double> good, std::span<const double> bad,
                       std::string scorer_id) {
    EvalReport report;
    report.scorer_id = std::move(scorer_id);
    std::int64_t correct = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        auto &g = report.per_group[pairs[i].group];
        ++g.total;
        if (good[i] > bad[i]) {
            ++g.correct;
            ++correct;
        } else if (good[i] == bad[i]) {
            ++report.tie_count;
        }
    }
    double sum = 0.0;
    for (auto &[name, g] : report.per_group) {
        g.accuracy = static_cast<double>(g.correct) / static_cast<double>(g.total);
        sum += g.accuracy;
    }
    if (!report.per_group.empty()) report.macro_average = sum / static_cast<double>(report.per_group.size());
    if (!pairs.empty()) report.micro_average = static_cast<double>(correct) / static_cast<double>(pairs.size());
    return report;
}

EvalReport score_pairs(const Scorer &scorer, std::span<const MinimalPair> pairs) {
    if (pairs.empty()) throw EmptySuite();
    std::vector<double> good(pairs.size()), bad(pairs.size());
    parallel_for(
        pairs.size(),
        [&](std::size_t i) {
            try {
                good[i] = scorer.log_prob(pairs[i].good_text);
                bad[i] = scorer.log_prob(pairs[i].bad_text);
            } catch (const std::exception &e) {
                throw PairScoringError(pairs[i].uid, e.what());
            }
        },
        /*dynamic=*/true);
    return tally_pairs(pairs, good, bad, scorer.scorer_id());
}

std::string render_report(const EvalReport &report) {
    std::size_t width = 8;
    for (const auto &[name, g] : report.per_group) width = std::max(width, name.size());
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-*s  %8s  %8s  %8s\n", static_cast<int>(width), "group", "correct", "total", "acc");
    out += buf;
    for (const auto &[name, g] : report.per_group) {
        std::snprintf(buf, sizeof buf, "%-*s  %8lld  %8lld  %8.2f\n", static_cast<int>(width), name.c_str(),
                      static_cast<long long>(g.correct), static_cast<long long>(g.total), 100.0 * g.accuracy);
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "%-*s  %8s  %8s  %8.2f\n", static_cast<int>(width), "Accuracy", "", "",
                  100.0 * report.macro_average);
    out += buf;
    std::snprintf(buf, sizeof buf, "(micro %.2f, ties %lld, scorer %s)\n", 100.0 * report.micro_average,
                  static_cast<long long>(report.tie_count), report.scorer_id.c_str());
    out += buf;
    return out;
}

namespace reference {

EvalReport score_pairs(const Scorer &scorer, std::span<const MinimalPair> pairs) {
    if (pairs.empty()) throw EmptySuite();
    std::vector<double> good, bad;
    for (const auto &p : pairs) {
        try {
            good.push_back(scorer.log_prob(p.good_text));
            bad.push_back(scorer.log_prob(p.bad_text));
        } catch (const std::exception &e) {
            throw PairScoringError(p.uid, e.what());
        }
    }
    return tally_pairs(pairs, good, bad, scorer.scorer_id());
}

} // namespace reference

} // namespace storyaug
