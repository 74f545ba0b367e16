#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "winnow/document.hpp"
#include "winnow/errors.hpp"
#include "winnow/utf8.hpp"

namespace winnow {

// Statistical quality metrics recomputed per document (FineWeb-style set).
struct DocStats {
    uint64_t word_count = 0;
    double mean_word_length = 0.0;       // codepoints per word
    double stopword_fraction = 0.0;      // lowercased exact-word membership
    double duplicate_line_fraction = 0.0; // repeats beyond first occurrence / lines
    double non_alnum_fraction = 0.0;     // non-word codepoints among non-whitespace
    double ellipsis_line_fraction = 0.0; // lines ending with ... or …
};

struct StopwordList {
    std::set<std::string> words; // lowercased

    static StopwordList load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open stopword list: " + path);
        StopwordList list;
        std::string line;
        while (std::getline(in, line)) {
            while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
            if (!line.empty()) list.words.insert(utf8::lowercase(line));
        }
        return list;
    }
};

struct Threshold {
    bool enabled = false;
    double min = -std::numeric_limits<double>::infinity();
    double max = std::numeric_limits<double>::infinity();

    bool violated(double v) const { return enabled && (v < min || v > max); }
};

struct FilterConfig {
    Threshold word_count{true, 50.0, std::numeric_limits<double>::infinity()};
    Threshold mean_word_length{false, 1.0, 14.0};
    Threshold stopword_fraction{true, 0.06, std::numeric_limits<double>::infinity()};
    Threshold duplicate_line_fraction{true, 0.0, 0.30};
    Threshold non_alnum_fraction{true, 0.0, 0.25};
    Threshold ellipsis_line_fraction{false, 0.0, 0.30};

    // keyed by ISO 639-1 code; "" is the fallback list
    std::map<std::string, StopwordList> stopwords;

    void validate() const {
        const std::pair<const char*, const Threshold*> rules[] = {
            {"word_count", &word_count},
            {"mean_word_length", &mean_word_length},
            {"stopword_fraction", &stopword_fraction},
            {"duplicate_line_fraction", &duplicate_line_fraction},
            {"non_alnum_fraction", &non_alnum_fraction},
            {"ellipsis_line_fraction", &ellipsis_line_fraction},
        };
        for (const auto& [name, t] : rules) {
            if (t->enabled && t->min > t->max)
                throw UsageError(std::string("filter rule '") + name + "': min > max");
        }
        if (stopword_fraction.enabled && stopwords.empty())
            throw UsageError("stopword_fraction rule enabled but no stopword list configured");
    }

    const StopwordList* list_for(const std::string& lang) const {
        auto it = stopwords.find(lang);
        if (it != stopwords.end()) return &it->second;
        it = stopwords.find("");
        return it == stopwords.end() ? nullptr : &it->second;
    }

    static FilterConfig from_json(const nlohmann::json& j) {
        FilterConfig cfg;
        auto read = [&](const char* name, Threshold& t) {
            if (!j.contains(name)) return;
            const auto& e = j.at(name);
            t.enabled = e.value("enabled", true);
            if (e.contains("min")) t.min = e.at("min").get<double>();
            if (e.contains("max")) t.max = e.at("max").get<double>();
        };
        read("word_count", cfg.word_count);
        read("mean_word_length", cfg.mean_word_length);
        read("stopword_fraction", cfg.stopword_fraction);
        read("duplicate_line_fraction", cfg.duplicate_line_fraction);
        read("non_alnum_fraction", cfg.non_alnum_fraction);
        read("ellipsis_line_fraction", cfg.ellipsis_line_fraction);
        if (j.contains("stopword_files")) {
            for (const auto& [lang, path] : j.at("stopword_files").items())
                cfg.stopwords[lang] = StopwordList::load(path.get<std::string>());
        }
        return cfg;
    }
};

inline DocStats compute_stats(const Document& doc, const FilterConfig& config) {
    if (doc.text.empty()) throw DataError("cannot compute stats for empty text: id=" + doc.id);
    DocStats stats;

    const auto words = utf8::split_words(doc.text);
    stats.word_count = words.size();

    const StopwordList* stopwords = config.list_for(doc.lang);
    uint64_t stop_hits = 0;
    uint64_t total_word_cps = 0;
    for (const auto& w : words) {
        total_word_cps += utf8::count_codepoints(w);
        if (stopwords && stopwords->words.count(utf8::lowercase(w))) ++stop_hits;
    }
    if (!words.empty()) {
        stats.mean_word_length = static_cast<double>(total_word_cps) / words.size();
        stats.stopword_fraction = static_cast<double>(stop_hits) / words.size();
    }

    // Line metrics: lines split on '\n'; a trailing newline does not add a line.
    std::vector<std::string_view> lines;
    {
        std::string_view t = doc.text;
        size_t start = 0;
        while (start <= t.size()) {
            size_t nl = t.find('\n', start);
            if (nl == std::string_view::npos) {
                if (start < t.size()) lines.push_back(t.substr(start));
                break;
            }
            lines.push_back(t.substr(start, nl - start));
            start = nl + 1;
        }
    }
    if (!lines.empty()) {
        std::unordered_map<std::string_view, uint64_t> seen;
        uint64_t dups = 0;
        uint64_t ellipsis = 0;
        for (const auto& line : lines) {
            if (seen[line]++ > 0) ++dups;
            if (line.size() >= 3 && line.substr(line.size() - 3) == "...") ++ellipsis;
            else if (line.size() >= 3 && line.substr(line.size() - 3) == "\xE2\x80\xA6") ++ellipsis;
        }
        stats.duplicate_line_fraction = static_cast<double>(dups) / lines.size();
        stats.ellipsis_line_fraction = static_cast<double>(ellipsis) / lines.size();
    }

    uint64_t non_ws = 0;
    uint64_t non_word = 0;
    size_t pos = 0;
    while (pos < doc.text.size()) {
        uint32_t cp = utf8::decode(doc.text, pos);
        if (cp == utf8::kInvalid || utf8::is_space(cp)) continue;
        ++non_ws;
        if (!utf8::is_word_cp(cp)) ++non_word;
    }
    if (non_ws > 0) stats.non_alnum_fraction = static_cast<double>(non_word) / non_ws;
    return stats;
}

inline const char* const kStatKeys[] = {
    "word_count",          "mean_word_length",   "stopword_fraction",
    "duplicate_line_fraction", "non_alnum_fraction", "ellipsis_line_fraction",
};

// Writes DocStats into meta. Idempotent: re-enriching overwrites with
// identical values and never touches the text.
inline Document enrich(Document doc, const FilterConfig& config) {
    const DocStats s = compute_stats(doc, config);
    doc.meta["word_count"] = s.word_count;
    doc.meta["mean_word_length"] = s.mean_word_length;
    doc.meta["stopword_fraction"] = s.stopword_fraction;
    doc.meta["duplicate_line_fraction"] = s.duplicate_line_fraction;
    doc.meta["non_alnum_fraction"] = s.non_alnum_fraction;
    doc.meta["ellipsis_line_fraction"] = s.ellipsis_line_fraction;
    return doc;
}

inline bool is_enriched(const Document& doc) {
    for (const char* key : kStatKeys)
        if (!doc.meta.contains(key)) return false;
    return true;
}

inline DocStats stats_from_meta(const Document& doc) {
    DocStats s;
    s.word_count = static_cast<uint64_t>(meta_number(doc, "word_count").value());
    s.mean_word_length = meta_number(doc, "mean_word_length").value();
    s.stopword_fraction = meta_number(doc, "stopword_fraction").value();
    s.duplicate_line_fraction = meta_number(doc, "duplicate_line_fraction").value();
    s.non_alnum_fraction = meta_number(doc, "non_alnum_fraction").value();
    s.ellipsis_line_fraction = meta_number(doc, "ellipsis_line_fraction").value();
    return s;
}

struct FilterDecision {
    bool keep = true;
    std::string reason; // first violated rule name when dropped
};

// Threshold rules over DocStats, checked in a fixed order; the decision
// is a pure function of (stats, config).
inline FilterDecision heuristic_filter(const Document& doc, const FilterConfig& config,
                                       bool strict = false) {
    DocStats s;
    if (is_enriched(doc)) {
        s = stats_from_meta(doc);
    } else if (strict) {
        throw DataError("document not enriched (strict mode): id=" + doc.id);
    } else {
        s = compute_stats(doc, config);
    }
    const std::pair<const char*, std::pair<const Threshold*, double>> rules[] = {
        {"word_count", {&config.word_count, static_cast<double>(s.word_count)}},
        {"mean_word_length", {&config.mean_word_length, s.mean_word_length}},
        {"stopword_fraction", {&config.stopword_fraction, s.stopword_fraction}},
        {"duplicate_line_fraction", {&config.duplicate_line_fraction, s.duplicate_line_fraction}},
        {"non_alnum_fraction", {&config.non_alnum_fraction, s.non_alnum_fraction}},
        {"ellipsis_line_fraction", {&config.ellipsis_line_fraction, s.ellipsis_line_fraction}},
    };
    for (const auto& [name, rule] : rules) {
        if (rule.first->violated(rule.second)) return {false, name};
    }
    return {true, ""};
}

enum class PplBucket { head, middle, tail };
enum class QualityLabel { low, medium, high };

inline PplBucket parse_ppl_bucket(const std::string& s) {
    if (s == "head") return PplBucket::head;
    if (s == "middle") return PplBucket::middle;
    if (s == "tail") return PplBucket::tail;
    throw DataError("invalid ppl_bucket value: " + s);
}

inline QualityLabel parse_quality_label(const std::string& s) {
    if (s == "low") return QualityLabel::low;
    if (s == "medium") return QualityLabel::medium;
    if (s == "high") return QualityLabel::high;
    throw DataError("invalid quality_label value: " + s);
}

struct GateDecision {
    bool keep = false;
    std::string bucket; // e.g. "head-high" when kept
};

// Keeps exactly the three cells of the (ppl_bucket x quality_label) grid
// that survive: head-high, head-medium, middle-high.
inline GateDecision bucket_gate(Document& doc) {
    auto bucket_str = meta_string(doc, "ppl_bucket");
    if (!bucket_str) throw DataError("missing meta field 'ppl_bucket': id=" + doc.id);
    auto label_str = meta_string(doc, "quality_label");
    if (!label_str) throw DataError("missing meta field 'quality_label': id=" + doc.id);
    const PplBucket bucket = parse_ppl_bucket(*bucket_str);
    const QualityLabel label = parse_quality_label(*label_str);
    const bool keep = (bucket == PplBucket::head && label == QualityLabel::high) ||
                      (bucket == PplBucket::head && label == QualityLabel::medium) ||
                      (bucket == PplBucket::middle && label == QualityLabel::high);
    GateDecision d;
    d.keep = keep;
    if (keep) {
        d.bucket = *bucket_str + "-" + *label_str;
        doc.meta["quality_bucket"] = d.bucket;
    }
    return d;
}

// Pluggable document scorer. Must be total over all input documents and
// deterministic per (scorer, doc).
class Scorer {
public:
    virtual ~Scorer() = default;
    virtual std::string name() const = 0;
    virtual double score(const Document& doc) const = 0;
};

class ConstantScorer : public Scorer {
public:
    explicit ConstantScorer(double value) : value_(value) {}
    std::string name() const override { return "constant"; }
    double score(const Document&) const override { return value_; }

private:
    double value_;
};

// id -> score table loaded from a line-delimited file ("<id>\t<score>"
// or JSON {"id":..,"score":..} per line). Missing id is an error.
class PrecomputedScorer : public Scorer {
public:
    explicit PrecomputedScorer(std::unordered_map<std::string, double> table)
        : table_(std::move(table)) {}

    static PrecomputedScorer load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open score file: " + path);
        std::unordered_map<std::string, double> table;
        std::string line;
        uint64_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            if (line.front() == '{') {
                nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
                if (j.is_discarded() || !j.contains("id") || !j.contains("score"))
                    throw DataError("malformed score record at line " + std::to_string(line_no));
                table[j.at("id").get<std::string>()] = j.at("score").get<double>();
            } else {
                const size_t tab = line.find('\t');
                if (tab == std::string::npos)
                    throw DataError("malformed score record at line " + std::to_string(line_no));
                table[line.substr(0, tab)] = std::stod(line.substr(tab + 1));
            }
        }
        return PrecomputedScorer(std::move(table));
    }

    std::string name() const override { return "precomputed"; }
    double score(const Document& doc) const override {
        auto it = table_.find(doc.id);
        if (it == table_.end())
            throw DataError("precomputed scorer has no score for id=" + doc.id);
        return it->second;
    }

private:
    std::unordered_map<std::string, double> table_;
};

// Bundled word-list reference scorer: rewards text whose stopword usage,
// word length and symbol density look like running prose. Range [0, 1].
class HeuristicScorer : public Scorer {
public:
    explicit HeuristicScorer(FilterConfig config) : config_(std::move(config)) {}

    std::string name() const override { return "heuristic"; }

    double score(const Document& doc) const override {
        const DocStats s =
            is_enriched(doc) ? stats_from_meta(doc) : compute_stats(doc, config_);
        auto closeness = [](double v, double target, double span) {
            return std::max(0.0, 1.0 - std::abs(v - target) / span);
        };
        const double stop = closeness(s.stopword_fraction, 0.40, 0.40);
        const double length = closeness(s.mean_word_length, 5.0, 5.0);
        const double clean = std::max(0.0, 1.0 - s.non_alnum_fraction * 4.0);
        const double unique = std::max(0.0, 1.0 - s.duplicate_line_fraction * 2.0);
        const double size = std::min(1.0, static_cast<double>(s.word_count) / 100.0);
        return 0.35 * stop + 0.2 * length + 0.2 * clean + 0.15 * unique + 0.1 * size;
    }

private:
    FilterConfig config_;
};

inline double score_with(const Scorer& scorer, Document& doc) {
    const double s = scorer.score(doc);
    doc.meta["score"] = s;
    return s;
}

// Exact top-fraction selection: pass 1 finds the (score, id) threshold,
// pass 2 keeps documents at or above it. Keeps ceil(fraction * N) docs;
// ties at the threshold break by ascending id.
class TopFractionSelector {
public:
    explicit TopFractionSelector(double fraction) : fraction_(fraction) {
        if (!(fraction > 0.0 && fraction <= 1.0))
            throw UsageError("fraction must be in (0, 1]");
    }

    void observe(const Document& doc) {
        auto s = meta_number(doc, "score");
        if (!s) throw DataError("missing meta field 'score': id=" + doc.id);
        scored_.emplace_back(*s, doc.id);
    }

    // Call once between the two passes.
    void freeze() {
        if (scored_.empty()) {
            frozen_ = true;
            return;
        }
        const size_t n = scored_.size();
        const size_t keep = static_cast<size_t>(
            std::ceil(fraction_ * static_cast<double>(n) - 1e-9));
        // Rank: higher score first, then ascending id.
        auto better = [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        };
        std::nth_element(scored_.begin(), scored_.begin() + (keep - 1), scored_.end(), better);
        threshold_ = scored_[keep - 1];
        frozen_ = true;
        scored_.clear();
        scored_.shrink_to_fit();
    }

    bool keeps(const Document& doc) const {
        if (!frozen_) throw UsageError("selector not frozen; run the first pass");
        auto s = meta_number(doc, "score");
        if (!s) throw DataError("missing meta field 'score': id=" + doc.id);
        if (*s != threshold_.first) return *s > threshold_.first;
        return doc.id <= threshold_.second;
    }

private:
    double fraction_;
    std::vector<std::pair<double, std::string>> scored_;
    std::pair<double, std::string> threshold_{std::numeric_limits<double>::lowest(), ""};
    bool frozen_ = false;
};

// Convenience in-memory form of the two-pass selection.
inline std::vector<Document> select_top_fraction(const std::vector<Document>& docs,
                                                 double fraction) {
    TopFractionSelector sel(fraction);
    for (const auto& d : docs) sel.observe(d);
    sel.freeze();
    std::vector<Document> kept;
    for (const auto& d : docs)
        if (sel.keeps(d)) kept.push_back(d);
    return kept;
}

} // namespace winnow
