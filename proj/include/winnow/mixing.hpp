#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "winnow/document.hpp"
#include "winnow/errors.hpp"
#include "winnow/hash.hpp"
#include "winnow/packing.hpp"
#include "winnow/rng.hpp"

namespace winnow {

// Survivors of near-dedup are re-weighted in proportion to how many
// duplicates each one absorbed, restoring the pre-dedup mass.
inline std::map<std::string, double> rehydrate_weights(
    const std::map<std::string, uint64_t>& dup_counts) {
    if (dup_counts.empty()) throw UsageError("rehydrate_weights: empty count map");
    uint64_t total = 0;
    for (const auto& [id, count] : dup_counts) {
        if (count == 0) throw DataError("dup_count must be at least 1: id=" + id);
        total += count;
    }
    std::map<std::string, double> weights;
    for (const auto& [id, count] : dup_counts)
        weights[id] = static_cast<double>(count) / static_cast<double>(total);
    return weights;
}

struct MixSource {
    std::string name;
    double weight = 0.0;      // unnormalized; token counts work verbatim
    std::string lang;         // tag used for per-language accounting
};

struct MixPhase {
    std::string name;
    uint64_t token_budget = 0;
    std::vector<MixSource> sources; // order defines the CDF layout

    void validate() const {
        if (name.empty()) throw UsageError("phase name must be non-empty");
        if (token_budget == 0) throw UsageError("phase '" + name + "': token budget must be > 0");
        if (sources.empty()) throw UsageError("phase '" + name + "': no sources");
        double total = 0.0;
        for (const auto& s : sources) {
            if (s.weight < 0.0)
                throw UsageError("phase '" + name + "': negative weight for " + s.name);
            total += s.weight;
        }
        if (!(total > 0.0)) throw UsageError("phase '" + name + "': weights sum to zero");
    }

    std::vector<double> cdf() const {
        double total = 0.0;
        for (const auto& s : sources) total += s.weight;
        std::vector<double> out(sources.size());
        double acc = 0.0;
        for (size_t i = 0; i < sources.size(); ++i) {
            acc += sources[i].weight / total;
            out[i] = acc;
        }
        out.back() = 1.0; // absorb rounding
        return out;
    }
};

struct MixSchedule {
    std::vector<MixPhase> phases;
    std::string tokenizer_id = "byte";
    uint64_t seed = 1;

    void validate() const {
        if (phases.empty()) throw UsageError("schedule has no phases");
        std::set<std::string> names;
        for (const auto& p : phases) {
            p.validate();
            if (!names.insert(p.name).second)
                throw UsageError("duplicate phase name: " + p.name);
        }
    }

    std::set<std::string> source_names() const {
        std::set<std::string> out;
        for (const auto& p : phases)
            for (const auto& s : p.sources) out.insert(s.name);
        return out;
    }

    static MixSchedule from_json(const nlohmann::json& j) {
        if (j.value("format", "") != std::string("winnow-schedule-v1"))
            throw DataError("schedule file: expected format winnow-schedule-v1");
        MixSchedule sched;
        sched.tokenizer_id = j.value("tokenizer", "byte");
        if (j.contains("seed")) sched.seed = j.at("seed").get<uint64_t>();
        for (const auto& pj : j.at("phases")) {
            MixPhase phase;
            phase.name = pj.at("name").get<std::string>();
            phase.token_budget = pj.at("token_budget").get<uint64_t>();
            for (const auto& [name, sj] : pj.at("sources").items()) {
                MixSource src;
                src.name = name;
                if (sj.is_number()) {
                    src.weight = sj.get<double>();
                } else {
                    src.weight = sj.at("weight").get<double>();
                    src.lang = sj.value("lang", "");
                }
                phase.sources.push_back(std::move(src));
            }
            // items() iterates the (sorted) object order; keep it stable.
            phase.sources.shrink_to_fit();
            sched.phases.push_back(std::move(phase));
        }
        sched.validate();
        return sched;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["format"] = "winnow-schedule-v1";
        j["tokenizer"] = tokenizer_id;
        j["seed"] = seed;
        j["phases"] = nlohmann::json::array();
        for (const auto& p : phases) {
            nlohmann::json pj;
            pj["name"] = p.name;
            pj["token_budget"] = p.token_budget;
            nlohmann::json sources = nlohmann::json::object();
            for (const auto& s : p.sources)
                sources[s.name] = {{"weight", s.weight}, {"lang", s.lang}};
            pj["sources"] = std::move(sources);
            j["phases"].push_back(std::move(pj));
        }
        return j;
    }
};

// Multinomial draw, reproducible per (seed, draw index): draw i consumes
// exactly the i-th value of the indexed stream, independent of history.
inline size_t sample_source_index(const MixPhase& phase, const std::vector<double>& cdf,
                                  uint64_t seed, uint64_t draw_index) {
    const double u = indexed_double(seed, draw_index);
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return std::min<size_t>(static_cast<size_t>(it - cdf.begin()), phase.sources.size() - 1);
}

inline std::string sample_source(const MixPhase& phase, uint64_t seed, uint64_t draw_index) {
    phase.validate();
    return phase.sources[sample_source_index(phase, phase.cdf(), seed, draw_index)].name;
}

// A source stream that can be re-opened for another epoch.
using DocumentPull = std::function<std::optional<Document>()>;
using StreamFactory = std::function<DocumentPull()>;

struct SourceAccount {
    uint64_t docs = 0;
    uint64_t tokens = 0;
    uint64_t epochs = 1; // number of passes opened over the source
};

struct PhaseAccount {
    std::string name;
    uint64_t token_budget = 0;
    uint64_t tokens_total = 0;
    std::map<std::string, SourceAccount> sources;
    std::map<std::string, uint64_t> lang_tokens;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["name"] = name;
        j["token_budget"] = token_budget;
        j["tokens_total"] = tokens_total;
        j["sources"] = nlohmann::json::object();
        for (const auto& [s, a] : sources)
            j["sources"][s] = {{"docs", a.docs}, {"tokens", a.tokens}, {"epochs", a.epochs}};
        j["lang_share"] = nlohmann::json::object();
        for (const auto& [lang, t] : lang_tokens)
            j["lang_share"][lang.empty() ? "unknown" : lang] =
                tokens_total ? static_cast<double>(t) / static_cast<double>(tokens_total) : 0.0;
        return j;
    }
};

struct MixReport {
    std::vector<PhaseAccount> phases;
    uint64_t docs_total = 0;
    uint64_t tokens_total = 0;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["docs_total"] = docs_total;
        j["tokens_total"] = tokens_total;
        j["phases"] = nlohmann::json::array();
        for (const auto& p : phases) j["phases"].push_back(p.to_json());
        return j;
    }
};

// Runs the phase schedule: per phase, documents are drawn source-by-source
// from the phase's multinomial until the cumulative token count reaches the
// budget. The document that crosses the budget is still emitted (overshoot
// is at most one document; documents are never cut). Exhausted sources wrap
// to a fresh pass with an epoch counter. Draw indices restart at 0 in each
// phase, keyed by (schedule seed, phase index).
inline MixReport run_schedule(const MixSchedule& schedule,
                              const std::map<std::string, StreamFactory>& streams,
                              const Tokenizer& tokenizer,
                              const std::function<void(Document&&, uint64_t)>& sink) {
    schedule.validate();
    for (const auto& name : schedule.source_names())
        if (!streams.count(name)) throw UsageError("unregistered source: " + name);

    MixReport report;
    std::map<std::string, DocumentPull> open;

    for (size_t pi = 0; pi < schedule.phases.size(); ++pi) {
        const MixPhase& phase = schedule.phases[pi];
        const auto cdf = phase.cdf();
        const uint64_t phase_seed = hash_at(schedule.seed, pi);

        PhaseAccount account;
        account.name = phase.name;
        account.token_budget = phase.token_budget;

        for (uint64_t draw = 0; account.tokens_total < phase.token_budget; ++draw) {
            const MixSource& src = phase.sources[sample_source_index(phase, cdf, phase_seed, draw)];
            auto& acct = account.sources[src.name];

            auto it = open.find(src.name);
            if (it == open.end()) it = open.emplace(src.name, streams.at(src.name)()).first;
            std::optional<Document> doc = it->second();
            if (!doc) {
                it->second = streams.at(src.name)(); // next epoch
                ++acct.epochs;
                doc = it->second();
                if (!doc) throw DataError("source yields no documents: " + src.name);
            }

            const uint64_t tokens = tokenize_document(*doc, tokenizer).size();
            acct.docs += 1;
            acct.tokens += tokens;
            account.tokens_total += tokens;
            account.lang_tokens[src.lang] += tokens;
            report.docs_total += 1;
            report.tokens_total += tokens;
            sink(std::move(*doc), tokens);
        }
        report.phases.push_back(std::move(account));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Poison scheduling: fixed documents planted once each at random token
// offsets across a large stream.

struct PoisonDoc {
    Document doc;
    uint64_t tokens = 0;
};

struct PoisonPlan {
    std::vector<PoisonDoc> docs;       // plan order; docs[i] uses offsets[i]
    uint64_t total_tokens = 0;         // T, the stream size the plan targets
    std::vector<uint64_t> offsets;     // strictly increasing, each < T

    double token_ratio() const {
        uint64_t sum = 0;
        for (const auto& d : docs) sum += d.tokens;
        return total_tokens == 0 ? 0.0
                                 : static_cast<double>(sum) / static_cast<double>(total_tokens);
    }
};

// Offsets are a sorted uniform sample without replacement over [0, T).
inline PoisonPlan schedule_poison(std::vector<PoisonDoc> docs, uint64_t total_tokens,
                                  uint64_t seed) {
    uint64_t volume = 0;
    for (const auto& d : docs) {
        if (d.tokens == 0) throw DataError("poison doc with zero tokens: id=" + d.doc.id);
        volume += d.tokens;
    }
    if (volume >= total_tokens)
        throw DataError("poison volume (" + std::to_string(volume) +
                        " tokens) must be smaller than the stream (" +
                        std::to_string(total_tokens) + ")");
    if (docs.size() > total_tokens)
        throw DataError("more poison docs than token positions");

    PoisonPlan plan;
    plan.total_tokens = total_tokens;
    std::set<uint64_t> picked;
    Rng rng(seed);
    while (picked.size() < docs.size()) picked.insert(rng.next_below(total_tokens));
    plan.offsets.assign(picked.begin(), picked.end());
    plan.docs = std::move(docs);
    return plan;
}

struct InjectReport {
    uint64_t base_docs = 0;
    uint64_t base_tokens = 0;
    uint64_t injected = 0;
};

// Streams the base documents through, inserting each planned document at
// the first base-document boundary at or after its offset. Offsets count
// base-stream tokens only. Errors if the base stream ends before reaching
// some offset.
inline InjectReport inject(const PoisonPlan& plan, const DocumentPull& base,
                           const Tokenizer& tokenizer,
                           const std::function<void(Document&&, bool)>& sink) {
    if (plan.offsets.size() != plan.docs.size())
        throw UsageError("poison plan: offsets and docs differ in count");
    if (!std::is_sorted(plan.offsets.begin(), plan.offsets.end()) ||
        std::adjacent_find(plan.offsets.begin(), plan.offsets.end()) != plan.offsets.end())
        throw UsageError("poison plan: offsets must be strictly increasing");

    InjectReport report;
    uint64_t position = 0; // boundary before the next base doc
    size_t next = 0;
    auto place_due = [&]() {
        while (next < plan.offsets.size() && plan.offsets[next] <= position) {
            sink(Document(plan.docs[next].doc), true);
            ++report.injected;
            ++next;
        }
    };

    while (auto doc = base()) {
        place_due();
        const uint64_t tokens = tokenize_document(*doc, tokenizer).size();
        ++report.base_docs;
        report.base_tokens += tokens;
        sink(std::move(*doc), false);
        position += tokens;
    }
    place_due(); // boundary at the very end of the stream

    if (next < plan.offsets.size()) {
        std::string ids;
        for (size_t i = next; i < plan.docs.size(); ++i) {
            if (!ids.empty()) ids += ", ";
            ids += plan.docs[i].doc.id;
        }
        throw DataError("stream ended at " + std::to_string(position) +
                        " tokens before reaching offsets of: " + ids);
    }
    return report;
}

} // namespace winnow
