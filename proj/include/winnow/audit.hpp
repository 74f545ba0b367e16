#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "winnow/document.hpp"
#include "winnow/errors.hpp"
#include "winnow/filtering.hpp"
#include "winnow/ngram_index.hpp"

namespace winnow {

struct BenchmarkSample {
    std::string id;
    std::string question;
    std::vector<std::string> choices;
    std::string answer;
    std::string category;
    std::string subset;
};

struct BenchmarkSet {
    std::string name;
    std::vector<BenchmarkSample> samples;

    void validate() const {
        std::set<std::string_view> ids;
        for (const auto& s : samples) {
            if (s.id.empty()) throw DataError("benchmark sample with empty id");
            if (s.question.empty()) throw DataError("empty question: id=" + s.id);
            if (!ids.insert(s.id).second) throw DataError("duplicate sample id: " + s.id);
        }
    }

    // Line-delimited JSON: {id, question, choices[], answer, category, subset}.
    static BenchmarkSet load(const std::string& path, const std::string& name = "") {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open benchmark file: " + path);
        BenchmarkSet set;
        set.name = name.empty() ? path : name;
        std::string line;
        uint64_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded())
                throw DataError(path + ":" + std::to_string(line_no) + ": invalid JSON");
            BenchmarkSample s;
            s.id = j.value("id", "");
            s.question = j.value("question", "");
            if (j.contains("choices"))
                for (const auto& c : j.at("choices")) s.choices.push_back(c.get<std::string>());
            s.answer = j.value("answer", "");
            s.category = j.value("category", "");
            s.subset = j.value("subset", "");
            set.samples.push_back(std::move(s));
        }
        set.validate();
        return set;
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw IoError("cannot open benchmark file for writing: " + path);
        for (const auto& s : samples) {
            nlohmann::json j{{"id", s.id},       {"question", s.question},
                             {"choices", s.choices}, {"answer", s.answer},
                             {"category", s.category}, {"subset", s.subset}};
            out << j.dump() << '\n';
        }
        out.close();
        if (!out) throw IoError("write failed: " + path);
    }
};

enum class QueryMode {
    question,              // match on the question text alone
    question_plus_answer,  // continuation-style: question followed by answer
};

inline std::string sample_query(const BenchmarkSample& s, QueryMode mode) {
    if (mode == QueryMode::question) return s.question;
    return s.question + " " + s.answer;
}

// A benchmark sample rendered as one standalone training-style document:
// question, every answer choice, then the reference answer.
inline Document render_needle(const BenchmarkSample& s, const std::string& family) {
    Document d;
    d.id = s.id;
    d.text = s.question;
    for (const auto& c : s.choices) {
        d.text += '\n';
        d.text += c;
    }
    d.text += "\nAnswer: ";
    d.text += s.answer;
    d.lang = "en";
    d.source = family;
    d.meta["family"] = family;
    return d;
}

struct CategoryLeak {
    uint64_t queryable = 0;
    uint64_t leaked = 0;
    double rate() const {
        return queryable == 0 ? 0.0 : static_cast<double>(leaked) / queryable;
    }
};

struct ContaminationReport {
    std::map<std::string, uint64_t> counts; // queryable sample id -> matches
    std::vector<std::string> unqueryable;   // below the index's query minimum
    std::map<std::string, CategoryLeak> per_category;

    uint64_t queryable() const { return counts.size(); }
    uint64_t leaked() const {
        uint64_t n = 0;
        for (const auto& [id, c] : counts)
            if (c >= 1) ++n;
        return n;
    }
    double leak_rate() const {
        return counts.empty() ? 0.0 : static_cast<double>(leaked()) / counts.size();
    }
    // Median match count among leaked samples; absent when nothing leaked.
    std::optional<double> median_occurrences() const {
        std::vector<uint64_t> hits;
        for (const auto& [id, c] : counts)
            if (c >= 1) hits.push_back(c);
        if (hits.empty()) return std::nullopt;
        std::sort(hits.begin(), hits.end());
        const size_t n = hits.size();
        if (n % 2 == 1) return static_cast<double>(hits[n / 2]);
        return (static_cast<double>(hits[n / 2 - 1]) + static_cast<double>(hits[n / 2])) / 2.0;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["queryable"] = queryable();
        j["unqueryable"] = unqueryable.size();
        j["leaked"] = leaked();
        j["leak_rate"] = leak_rate();
        if (auto m = median_occurrences()) j["median_occurrences"] = *m;
        else j["median_occurrences"] = nullptr;
        j["per_category"] = nlohmann::json::object();
        for (const auto& [cat, leak] : per_category)
            j["per_category"][cat.empty() ? "uncategorized" : cat] = {
                {"queryable", leak.queryable}, {"leaked", leak.leaked}, {"rate", leak.rate()}};
        j["counts"] = counts;
        return j;
    }
};

inline ContaminationReport contamination_rate(const NGramIndex& index, const BenchmarkSet& bench,
                                              QueryMode mode = QueryMode::question) {
    bench.validate();
    ContaminationReport report;
    for (const auto& s : bench.samples) {
        const std::string query = sample_query(s, mode);
        if (index.query_token_count(query) < index.min_query_tokens()) {
            report.unqueryable.push_back(s.id);
            continue;
        }
        const uint64_t c = index.count(query).count;
        report.counts[s.id] = c;
        auto& cat = report.per_category[s.category];
        cat.queryable += 1;
        if (c >= 1) cat.leaked += 1;
    }
    return report;
}

// Exact partition of the queryable samples by match count; unqueryable
// samples land in neither split.
inline std::pair<BenchmarkSet, BenchmarkSet> split_benchmark(const ContaminationReport& report,
                                                             const BenchmarkSet& bench) {
    const std::set<std::string> unqueryable(report.unqueryable.begin(), report.unqueryable.end());
    BenchmarkSet contaminated{bench.name + "-contaminated", {}};
    BenchmarkSet clean{bench.name + "-clean", {}};
    for (const auto& s : bench.samples) {
        if (unqueryable.count(s.id)) continue;
        auto it = report.counts.find(s.id);
        if (it == report.counts.end())
            throw DataError("report does not cover sample id=" + s.id);
        (it->second >= 1 ? contaminated : clean).samples.push_back(s);
    }
    return {std::move(contaminated), std::move(clean)};
}

struct GapRow {
    std::string category;
    uint64_t n_contaminated = 0;
    uint64_t n_clean = 0;
    std::optional<double> acc_contaminated; // percent, absent when n = 0
    std::optional<double> acc_clean;
    std::optional<double> gap; // percentage points, contaminated - clean
};

struct GapReport {
    std::vector<GapRow> categories;
    GapRow overall;

    nlohmann::json to_json() const {
        auto row_json = [](const GapRow& r) {
            nlohmann::json j{{"category", r.category.empty() ? "uncategorized" : r.category},
                             {"n_contaminated", r.n_contaminated},
                             {"n_clean", r.n_clean}};
            j["acc_contaminated"] = r.acc_contaminated ? nlohmann::json(*r.acc_contaminated)
                                                       : nlohmann::json(nullptr);
            j["acc_clean"] = r.acc_clean ? nlohmann::json(*r.acc_clean) : nlohmann::json(nullptr);
            j["gap"] = r.gap ? nlohmann::json(*r.gap) : nlohmann::json(nullptr);
            return j;
        };
        nlohmann::json j;
        j["overall"] = row_json(overall);
        j["categories"] = nlohmann::json::array();
        for (const auto& r : categories) j["categories"].push_back(row_json(r));
        return j;
    }
};

// Accuracy on each split, per category and overall, in percent; gap is
// contaminated minus clean in percentage points.
inline GapReport score_gap(const std::map<std::string, bool>& correctness,
                           const BenchmarkSet& contaminated, const BenchmarkSet& clean) {
    struct Tally {
        uint64_t n_cont = 0, correct_cont = 0;
        uint64_t n_clean = 0, correct_clean = 0;
    };
    std::map<std::string, Tally> by_cat;
    Tally total;

    auto feed = [&](const BenchmarkSet& set, bool is_cont) {
        for (const auto& s : set.samples) {
            auto it = correctness.find(s.id);
            if (it == correctness.end())
                throw DataError("no correctness entry for sample id=" + s.id);
            auto& t = by_cat[s.category];
            if (is_cont) {
                t.n_cont += 1;
                total.n_cont += 1;
                if (it->second) {
                    t.correct_cont += 1;
                    total.correct_cont += 1;
                }
            } else {
                t.n_clean += 1;
                total.n_clean += 1;
                if (it->second) {
                    t.correct_clean += 1;
                    total.correct_clean += 1;
                }
            }
        }
    };
    feed(contaminated, true);
    feed(clean, false);

    auto make_row = [](const std::string& cat, const Tally& t) {
        GapRow r;
        r.category = cat;
        r.n_contaminated = t.n_cont;
        r.n_clean = t.n_clean;
        if (t.n_cont) r.acc_contaminated = 100.0 * t.correct_cont / t.n_cont;
        if (t.n_clean) r.acc_clean = 100.0 * t.correct_clean / t.n_clean;
        if (r.acc_contaminated && r.acc_clean) r.gap = *r.acc_contaminated - *r.acc_clean;
        return r;
    };

    GapReport report;
    for (const auto& [cat, t] : by_cat) report.categories.push_back(make_row(cat, t));
    report.overall = make_row("overall", total);
    return report;
}

// ---------------------------------------------------------------------------
// Needle-in-haystack scorer-bias experiment: rank planted benchmark
// documents inside a large document pool under a quality scorer.

struct NeedleRank {
    std::string doc_id;
    std::string family;
    uint64_t rank = 0;     // 1 = best score
    double percentile = 0; // 100 * (1 - (rank - 1) / N)
    double score = 0;
};

struct FamilySummary {
    uint64_t needles = 0;
    uint64_t best_rank = 0;
    uint64_t worst_rank = 0;
    double median_percentile = 0;
};

struct BiahsResult {
    uint64_t total_docs = 0;
    std::vector<NeedleRank> needles; // ranked best-first
    std::map<std::string, FamilySummary> per_family;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["percentile_convention"] = "100*(1-(rank-1)/N); higher score => higher percentile";
        j["total_docs"] = total_docs;
        j["needles"] = nlohmann::json::array();
        for (const auto& n : needles)
            j["needles"].push_back({{"id", n.doc_id},
                                    {"family", n.family},
                                    {"rank", n.rank},
                                    {"percentile", n.percentile},
                                    {"score", n.score}});
        j["per_family"] = nlohmann::json::object();
        for (const auto& [fam, s] : per_family)
            j["per_family"][fam] = {{"needles", s.needles},
                                    {"best_rank", s.best_rank},
                                    {"worst_rank", s.worst_rank},
                                    {"median_percentile", s.median_percentile}};
        return j;
    }
};

// Scores every document (hay and needles), ranks descending by score with
// ties broken by ascending doc id, and reports each needle's rank and
// percentile. The ranking depends only on (score, id), never on input
// order.
inline BiahsResult biahs_run(const std::vector<Document>& hay,
                             const std::vector<Document>& needles, const Scorer& scorer) {
    struct Entry {
        double score;
        const Document* doc;
        const std::string* family; // null for hay
    };
    std::vector<Entry> entries;
    entries.reserve(hay.size() + needles.size());

    static const std::string kNoFamily;
    auto score_of = [&](const Document& d) {
        try {
            return scorer.score(d);
        } catch (const std::exception& e) {
            throw DataError("scorer failed on doc id=" + d.id + ": " + e.what());
        }
    };
    std::vector<std::string> needle_families(needles.size());
    for (size_t i = 0; i < needles.size(); ++i) {
        needle_families[i] = meta_string(needles[i], "family").value_or(needles[i].source);
        entries.push_back({score_of(needles[i]), &needles[i], &needle_families[i]});
    }
    for (const auto& d : hay) entries.push_back({score_of(d), &d, nullptr});

    {
        std::set<std::string_view> ids;
        for (const auto& e : entries)
            if (!ids.insert(e.doc->id).second)
                throw DataError("duplicate doc id across hay and needles: " + e.doc->id);
    }

    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc->id < b.doc->id;
    });

    BiahsResult result;
    result.total_docs = entries.size();
    const double N = static_cast<double>(entries.size());
    std::map<std::string, std::vector<double>> family_pcts;
    for (size_t i = 0; i < entries.size(); ++i) {
        if (!entries[i].family) continue;
        NeedleRank r;
        r.doc_id = entries[i].doc->id;
        r.family = *entries[i].family;
        r.rank = i + 1;
        r.percentile = 100.0 * (1.0 - static_cast<double>(r.rank - 1) / N);
        r.score = entries[i].score;
        family_pcts[r.family].push_back(r.percentile);
        result.needles.push_back(std::move(r));
    }
    for (auto& [fam, pcts] : family_pcts) {
        FamilySummary s;
        s.needles = pcts.size();
        uint64_t best = ~0ull, worst = 0;
        for (const auto& n : result.needles) {
            if (n.family != fam) continue;
            best = std::min(best, n.rank);
            worst = std::max(worst, n.rank);
        }
        s.best_rank = best;
        s.worst_rank = worst;
        std::sort(pcts.begin(), pcts.end());
        const size_t n = pcts.size();
        s.median_percentile =
            n % 2 == 1 ? pcts[n / 2] : (pcts[n / 2 - 1] + pcts[n / 2]) / 2.0;
        result.per_family[fam] = s;
    }
    return result;
}

// Correctness file: line-delimited {id, correct: 0/1}.
inline std::map<std::string, bool> load_correctness(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open correctness file: " + path);
    std::map<std::string, bool> out;
    std::string line;
    uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("id") || !j.contains("correct"))
            throw DataError(path + ":" + std::to_string(line_no) + ": invalid correctness record");
        const auto& c = j.at("correct");
        bool correct;
        if (c.is_boolean()) correct = c.get<bool>();
        else if (c.is_number_integer()) correct = c.get<int>() != 0;
        else throw DataError(path + ":" + std::to_string(line_no) + ": correct must be 0/1");
        out[j.at("id").get<std::string>()] = correct;
    }
    return out;
}

} // namespace winnow
