// Command line front end. Every pipeline stage is a subcommand reading and
// writing JSONL document shards (or binary token shards), so a full corpus
// build is a shell pipeline of small, restartable steps. Every run emits a
// machine-readable report with a config hash and counters; timing lives only
// in report files so identical runs stay byte-identical everywhere else.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "winnow/audit.hpp"
#include "winnow/corpus_io.hpp"
#include "winnow/dedup.hpp"
#include "winnow/document.hpp"
#include "winnow/errors.hpp"
#include "winnow/filtering.hpp"
#include "winnow/game.hpp"
#include "winnow/hash.hpp"
#include "winnow/mixing.hpp"
#include "winnow/ngram_index.hpp"
#include "winnow/packing.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace winnow;

namespace {

std::string hex16(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

class Stopwatch {
public:
    double ms() const {
        return std::chrono::duration<double, std::milli>(clock::now() - start_).count();
    }

private:
    using clock = std::chrono::steady_clock;
    clock::time_point start_ = clock::now();
};

// Options every subcommand accepts.
struct Common {
    int threads = 1;
    uint64_t seed = 0;
    bool dry_run = false;
    bool strict = false;
    std::string report_path; // "" = subcommand default, "-" = stdout
};

void add_common(CLI::App* sub, Common& c, uint64_t default_seed, const char* seed_help) {
    c.seed = default_seed;
    sub->add_option("--threads", c.threads, "worker threads; results are identical for any value")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--seed", c.seed, seed_help)->capture_default_str();
    sub->add_flag("--dry-run", c.dry_run, "validate inputs and print the report; write nothing");
    sub->add_flag("--strict", c.strict, "treat malformed input records as fatal");
    sub->add_option("--report", c.report_path, "run report path ('-' for stdout)");
}

// Collects config, counters and outputs for one run and emits the report
// plus the log lines. Reports printed to stdout omit wall_time_ms so that
// repeated runs compare byte-for-byte.
struct RunContext {
    std::string tool;
    const Common* common = nullptr;
    json config = json::object();
    json counters = json::object();
    std::vector<std::string> outputs;
    Stopwatch watch;

    json report_json(bool with_wall) const {
        json j;
        j["format"] = "winnow-report-v1";
        j["tool"] = tool;
        j["config"] = config;
        j["config_hash"] = hex16(fnv1a(config.dump()));
        j["seed"] = common->seed;
        j["threads"] = common->threads;
        j["dry_run"] = common->dry_run;
        j["counters"] = counters;
        j["outputs"] = outputs;
        if (with_wall) j["wall_time_ms"] = watch.ms();
        return j;
    }

    void finish(const std::string& fallback_report, const std::string& human) {
        std::string path = common->report_path.empty() ? fallback_report : common->report_path;
        if (common->dry_run) path = "-";
        if (path == "-") {
            std::cout << report_json(false).dump(2) << "\n";
        } else if (!path.empty()) {
            std::ofstream out(path);
            if (!out) throw IoError("cannot write report: " + path);
            out << report_json(true).dump(2) << "\n";
            if (!out) throw IoError("write failed: " + path);
        }
        std::ostringstream line;
        line << "[winnow] " << tool;
        for (const auto& [k, v] : counters.items())
            if (v.is_number() || v.is_boolean()) line << ' ' << k << '=' << v.dump();
        line << " wall_ms=" << static_cast<uint64_t>(watch.ms());
        std::cerr << line.str() << "\n";
        if (!human.empty()) std::cerr << "[winnow] " << tool << ": " << human << "\n";
    }
};

// --------------------------------------------------------------- corpus io

// Accepts a manifest.json, a directory containing one, or a bare
// .jsonl/.jsonl.gz shard.
ShardManifest open_corpus(const std::string& input) {
    fs::path p(input);
    if (fs::is_directory(p)) p /= "manifest.json";
    if (!fs::exists(p)) throw IoError("no such input: " + p.string());
    if (p.extension() == ".json") return ShardManifest::load(p);
    ShardManifest m;
    m.base_dir = p.parent_path();
    ShardEntry e;
    e.path = p.filename().string();
    e.bytes = fs::file_size(p);
    m.shards.push_back(std::move(e));
    return m;
}

ReadOptions read_options(const Common& c) {
    ReadOptions o;
    o.strict = c.strict;
    return o;
}

std::vector<Document> read_all(const std::string& input, const Common& c,
                               ReadCounters* rc = nullptr) {
    DocumentReader reader(open_corpus(input), read_options(c));
    std::vector<Document> docs;
    while (auto d = reader.next()) docs.push_back(std::move(*d));
    if (rc) *rc = reader.counters();
    return docs;
}

void note_read(json& counters, const ReadCounters& rc) {
    counters["docs_read"] = rc.docs;
    counters["records_skipped"] = rc.skipped;
    if (!rc.errors.empty()) counters["read_errors"] = rc.errors;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open file: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw DataError("invalid JSON: " + path);
    return j;
}

// "lang=path" entries -> loaded stopword lists; a bare path is the
// fallback list for unlisted languages.
std::map<std::string, StopwordList> load_stopword_args(const std::vector<std::string>& args) {
    std::map<std::string, StopwordList> lists;
    for (const auto& a : args) {
        const size_t eq = a.find('=');
        const std::string lang = eq == std::string::npos ? "" : a.substr(0, eq);
        const std::string path = eq == std::string::npos ? a : a.substr(eq + 1);
        if (path.empty()) throw UsageError("stopword argument needs lang=path: " + a);
        lists[lang] = StopwordList::load(path);
    }
    return lists;
}

json stopword_config(const std::vector<std::string>& args) {
    json j = json::array();
    for (const auto& a : args) j.push_back(a);
    return j;
}

// Runs fn over every document with `threads` workers; slots are written
// independently so the vector's order (and therefore all output) does not
// depend on the thread count.
void for_each_doc(std::vector<Document>& docs, int threads,
                  const std::function<void(Document&)>& fn) {
    if (threads <= 1 || docs.size() < 2) {
        for (auto& d : docs) fn(d);
        return;
    }
    std::atomic<size_t> cursor{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    const size_t n = std::min<size_t>(static_cast<size_t>(threads), docs.size());
    for (size_t t = 0; t < n; ++t) {
        pool.emplace_back([&] {
            for (size_t i = cursor.fetch_add(1); i < docs.size(); i = cursor.fetch_add(1)) {
                try {
                    fn(docs[i]);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

// ------------------------------------------------------------ subcommands

struct EnrichArgs {
    Common common;
    std::string input, output;
    std::vector<std::string> stopwords;
    uint64_t shard_docs = 100000;
    bool gzip = false;
};

void cmd_enrich(const EnrichArgs& a) {
    RunContext ctx{"enrich", &a.common};
    ctx.config = {{"input", a.input},
                  {"output", a.output},
                  {"stopwords", stopword_config(a.stopwords)},
                  {"shard_docs", a.shard_docs},
                  {"gzip", a.gzip}};
    FilterConfig cfg;
    cfg.stopwords = load_stopword_args(a.stopwords);
    ShardManifest in = open_corpus(a.input);
    if (a.common.dry_run) {
        ctx.finish("-", "validated " + std::to_string(in.shards.size()) + " input shard(s)");
        return;
    }

    DocumentReader reader(std::move(in), read_options(a.common));
    WriteOptions wopts;
    wopts.shard_limit_docs = a.shard_docs;
    wopts.gzip = a.gzip;
    ShardWriter writer(a.output, wopts);
    uint64_t written = 0;
    std::vector<Document> chunk;
    chunk.reserve(512);
    auto flush = [&] {
        for_each_doc(chunk, a.common.threads, [&](Document& d) { d = enrich(std::move(d), cfg); });
        for (auto& d : chunk) {
            writer.write(d);
            ++written;
        }
        chunk.clear();
    };
    while (auto d = reader.next()) {
        chunk.push_back(std::move(*d));
        if (chunk.size() == 512) flush();
    }
    flush();
    ShardManifest out = writer.finish();

    note_read(ctx.counters, reader.counters());
    ctx.counters["docs_out"] = written;
    ctx.counters["shards_out"] = out.shards.size();
    ctx.outputs.push_back((fs::path(a.output) / "manifest.json").string());
    ctx.finish((fs::path(a.output) / "run-report.json").string(),
               "enriched " + std::to_string(written) + " documents into " + a.output);
}

struct FilterArgs {
    Common common;
    std::string input, output;
    std::vector<std::string> stopwords;
    double min_words = 50, max_words = -1;
    double min_stop = 0.06;
    double max_dup_lines = 0.30;
    double max_non_alnum = 0.25;
    double max_ellipsis = -1;
    double min_word_len = -1, max_word_len = -1;
    bool no_stopword_rule = false;
    bool require_enriched = false;
    uint64_t shard_docs = 100000;
    bool gzip = false;
};

void cmd_filter(const FilterArgs& a) {
    RunContext ctx{"filter", &a.common};
    ctx.config = {{"input", a.input},
                  {"output", a.output},
                  {"stopwords", stopword_config(a.stopwords)},
                  {"min_words", a.min_words},
                  {"max_words", a.max_words},
                  {"min_stopword_fraction", a.min_stop},
                  {"max_duplicate_line_fraction", a.max_dup_lines},
                  {"max_non_alnum_fraction", a.max_non_alnum},
                  {"max_ellipsis_line_fraction", a.max_ellipsis},
                  {"min_mean_word_length", a.min_word_len},
                  {"max_mean_word_length", a.max_word_len},
                  {"no_stopword_rule", a.no_stopword_rule},
                  {"require_enriched", a.require_enriched}};

    FilterConfig cfg;
    cfg.word_count.min = a.min_words;
    if (a.max_words >= 0) cfg.word_count.max = a.max_words;
    cfg.stopword_fraction.min = a.min_stop;
    cfg.stopword_fraction.enabled = !a.no_stopword_rule;
    cfg.duplicate_line_fraction.max = a.max_dup_lines;
    cfg.non_alnum_fraction.max = a.max_non_alnum;
    if (a.max_ellipsis >= 0) {
        cfg.ellipsis_line_fraction.enabled = true;
        cfg.ellipsis_line_fraction.max = a.max_ellipsis;
    }
    if (a.min_word_len >= 0 || a.max_word_len >= 0) {
        cfg.mean_word_length.enabled = true;
        if (a.min_word_len >= 0) cfg.mean_word_length.min = a.min_word_len;
        if (a.max_word_len >= 0) cfg.mean_word_length.max = a.max_word_len;
    }
    cfg.stopwords = load_stopword_args(a.stopwords);
    cfg.validate();
    ShardManifest in = open_corpus(a.input);
    if (a.common.dry_run) {
        ctx.finish("-", "validated filter config against " + std::to_string(in.shards.size()) +
                            " input shard(s)");
        return;
    }

    DocumentReader reader(std::move(in), read_options(a.common));
    WriteOptions wopts;
    wopts.shard_limit_docs = a.shard_docs;
    wopts.gzip = a.gzip;
    ShardWriter writer(a.output, wopts);
    uint64_t kept = 0, dropped = 0;
    std::map<std::string, uint64_t> reasons;
    while (auto d = reader.next()) {
        const FilterDecision dec = heuristic_filter(*d, cfg, a.require_enriched);
        if (dec.keep) {
            writer.write(*d);
            ++kept;
        } else {
            ++dropped;
            reasons[dec.reason] += 1;
        }
    }
    writer.finish();

    note_read(ctx.counters, reader.counters());
    ctx.counters["kept"] = kept;
    ctx.counters["dropped"] = dropped;
    ctx.counters["drop_reasons"] = reasons;
    ctx.outputs.push_back((fs::path(a.output) / "manifest.json").string());
    ctx.finish((fs::path(a.output) / "run-report.json").string(),
               "kept " + std::to_string(kept) + " of " + std::to_string(kept + dropped) +
                   " documents");
}

struct GateArgs {
    Common common;
    std::string input, output;
    uint64_t shard_docs = 100000;
    bool gzip = false;
};

void cmd_gate(const GateArgs& a) {
    RunContext ctx{"gate", &a.common};
    ctx.config = {{"input", a.input}, {"output", a.output}};
    ShardManifest in = open_corpus(a.input);
    if (a.common.dry_run) {
        ctx.finish("-", "validated " + std::to_string(in.shards.size()) + " input shard(s)");
        return;
    }

    DocumentReader reader(std::move(in), read_options(a.common));
    WriteOptions wopts;
    wopts.shard_limit_docs = a.shard_docs;
    wopts.gzip = a.gzip;
    ShardWriter writer(a.output, wopts);
    uint64_t kept = 0, dropped = 0;
    std::map<std::string, uint64_t> buckets;
    while (auto d = reader.next()) {
        const GateDecision dec = bucket_gate(*d);
        if (dec.keep) {
            writer.write(*d);
            ++kept;
            buckets[dec.bucket] += 1;
        } else {
            ++dropped;
        }
    }
    writer.finish();

    note_read(ctx.counters, reader.counters());
    ctx.counters["kept"] = kept;
    ctx.counters["dropped"] = dropped;
    ctx.counters["kept_buckets"] = buckets;
    ctx.outputs.push_back((fs::path(a.output) / "manifest.json").string());
    ctx.finish((fs::path(a.output) / "run-report.json").string(),
               "kept " + std::to_string(kept) + " of " + std::to_string(kept + dropped) +
                   " documents across " + std::to_string(buckets.size()) + " buckets");
}

struct DedupArgs {
    Common common;
    std::string input, output, patterns;
    uint32_t splits = 10;
    uint32_t num_hashes = 128, bands = 16, rows = 8, shingle_words = 13;
    uint64_t shard_docs = 100000;
    bool gzip = false;
};

void cmd_dedup(const DedupArgs& a) {
    RunContext ctx{"dedup", &a.common};
    ctx.config = {{"input", a.input},       {"output", a.output},
                  {"patterns", a.patterns}, {"splits", a.splits},
                  {"num_hashes", a.num_hashes}, {"bands", a.bands},
                  {"rows", a.rows},         {"shingle_words", a.shingle_words}};

    MinHashConfig cfg;
    cfg.num_hashes = a.num_hashes;
    cfg.bands = a.bands;
    cfg.rows = a.rows;
    cfg.shingle_words = a.shingle_words;
    cfg.seed = a.common.seed;
    cfg.validate();
    ShingleNormalizer norm;
    if (!a.patterns.empty()) norm = ShingleNormalizer::load_patterns(a.patterns);
    ShardManifest in = open_corpus(a.input);
    if (a.common.dry_run) {
        ctx.finish("-", "validated dedup config against " + std::to_string(in.shards.size()) +
                            " input shard(s)");
        return;
    }

    ReadCounters rc;
    std::vector<Document> docs = read_all(a.input, a.common, &rc);
    const uint64_t n_in = docs.size();
    DedupCounters dc;
    std::vector<Document> survivors;
    if (a.splits <= 1) {
        DedupResult r = dedup_batch(std::move(docs), cfg, norm, &dc);
        ctx.counters["removed"] = r.removed;
        ctx.counters["clusters"] = r.clusters;
        survivors = std::move(r.survivors);
    } else {
        TwoStageResult r = two_stage_dedup(std::move(docs), cfg, norm, a.splits, &dc);
        ctx.counters["removed"] = r.stage1_removed + r.stage2_removed;
        ctx.counters["stage1_removed"] = r.stage1_removed;
        ctx.counters["stage2_removed"] = r.stage2_removed;
        ctx.counters["split_sizes"] = r.split_sizes;
        survivors = std::move(r.survivors);
    }

    WriteOptions wopts;
    wopts.shard_limit_docs = a.shard_docs;
    wopts.gzip = a.gzip;
    ShardWriter writer(a.output, wopts);
    for (const auto& d : survivors) writer.write(d);
    writer.finish();

    note_read(ctx.counters, rc);
    ctx.counters["survivors"] = survivors.size();
    ctx.counters["candidate_pairs"] = dc.candidate_pairs;
    ctx.counters["empty_shingle_docs"] = dc.empty_shingle_docs;
    ctx.outputs.push_back((fs::path(a.output) / "manifest.json").string());
    ctx.finish((fs::path(a.output) / "run-report.json").string(),
               std::to_string(n_in) + " documents -> " + std::to_string(survivors.size()) +
                   " survivors");
}

struct MixArgs {
    Common common;
    std::string schedule, output, tokenizer;
    std::vector<std::string> streams;
    uint64_t shard_docs = 100000;
    bool gzip = false;
};

void cmd_mix(const MixArgs& a) {
    RunContext ctx{"mix", &a.common};
    ctx.config = {{"schedule", a.schedule},
                  {"streams", stopword_config(a.streams)},
                  {"output", a.output},
                  {"tokenizer", a.tokenizer}};

    MixSchedule sched = MixSchedule::from_json(load_json_file(a.schedule));
    if (a.common.seed != 0) sched.seed = a.common.seed;
    if (!a.tokenizer.empty()) sched.tokenizer_id = a.tokenizer;
    auto tok = make_tokenizer(sched.tokenizer_id);

    std::map<std::string, StreamFactory> streams;
    for (const auto& s : a.streams) {
        const size_t eq = s.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == s.size())
            throw UsageError("stream argument needs name=path: " + s);
        const std::string name = s.substr(0, eq);
        const std::string path = s.substr(eq + 1);
        open_corpus(path); // fail early on bad paths
        const ReadOptions opts = read_options(a.common);
        streams[name] = [path, opts]() -> DocumentPull {
            auto reader = std::make_shared<DocumentReader>(open_corpus(path), opts);
            return [reader]() { return reader->next(); };
        };
    }
    for (const auto& name : sched.source_names())
        if (!streams.count(name)) throw UsageError("unregistered source: " + name);
    if (a.common.dry_run) {
        ctx.finish("-", "validated schedule with " + std::to_string(sched.phases.size()) +
                            " phases and " + std::to_string(streams.size()) + " streams");
        return;
    }

    WriteOptions wopts;
    wopts.shard_limit_docs = a.shard_docs;
    wopts.gzip = a.gzip;
    ShardWriter writer(a.output, wopts);
    MixReport report = run_schedule(sched, streams, *tok,
                                    [&](Document&& d, uint64_t) { writer.write(d); });
    writer.finish();

    ctx.counters["docs_total"] = report.docs_total;
    ctx.counters["tokens_total"] = report.tokens_total;
    ctx.counters["phases"] = json::array();
    for (const auto& p : report.phases) ctx.counters["phases"].push_back(p.to_json());
    ctx.outputs.push_back((fs::path(a.output) / "manifest.json").string());
    ctx.finish((fs::path(a.output) / "run-report.json").string(),
               "emitted " + std::to_string(report.docs_total) + " documents / " +
                   std::to_string(report.tokens_total) + " tokens across " +
                   std::to_string(report.phases.size()) + " phases");
}

struct PackArgs {
    Common common;
    std::string input, output, tokenizer = "byte";
    uint32_t seq_len = 4096, group_size = 8192;
    uint64_t shuffle_buffer = 0;
};

void cmd_pack(const PackArgs& a) {
    RunContext ctx{"pack", &a.common};
    ctx.config = {{"input", a.input},         {"output", a.output},
                  {"tokenizer", a.tokenizer}, {"seq_len", a.seq_len},
                  {"group_size", a.group_size}, {"shuffle_buffer", a.shuffle_buffer}};

    auto tok = make_tokenizer(a.tokenizer);
    if (a.seq_len < 2) throw UsageError("seq_len must be at least 2");
    if (a.group_size < 1) throw UsageError("group_size must be at least 1");
    ShardManifest in = open_corpus(a.input);
    if (a.common.dry_run) {
        ctx.finish("-", "validated pack config against " + std::to_string(in.shards.size()) +
                            " input shard(s)");
        return;
    }

    fs::create_directories(a.output);
    const fs::path tokens_path = fs::path(a.output) / "tokens.bin";
    const fs::path bounds_path = fs::path(a.output) / "boundaries.bin";
    TokenShardWriter writer(tokens_path.string(), bounds_path.string());
    GroupPacker packer(a.seq_len, a.group_size,
                       [&](const std::vector<uint32_t>& piece) { writer.write_tokens(piece); });

    DocumentReader reader(std::move(in), read_options(a.common));
    std::optional<ShuffleBuffer> shuffle;
    if (a.shuffle_buffer > 0)
        shuffle.emplace(a.shuffle_buffer, a.common.seed,
                        [&](TokenSequence&& ts) { packer.add(ts); });
    while (auto d = reader.next()) {
        TokenSequence ts{d->id, tokenize_document(*d, *tok)};
        if (shuffle) shuffle->add(std::move(ts));
        else packer.add(ts);
    }
    if (shuffle) shuffle->finish();
    const PackedBatchReport rep = packer.finish();
    writer.set_boundaries(packer.boundaries());
    writer.finish();

    note_read(ctx.counters, reader.counters());
    ctx.counters["groups"] = rep.groups;
    ctx.counters["sequences_in"] = rep.sequences_in;
    ctx.counters["tokens_in"] = rep.tokens_in;
    ctx.counters["tokens_emitted"] = rep.tokens_emitted;
    ctx.counters["tokens_wasted"] = rep.tokens_wasted;
    ctx.counters["waste_ratio"] = rep.waste_ratio();
    ctx.counters["boundaries"] = packer.boundaries().size();
    ctx.outputs.push_back(tokens_path.string());
    ctx.outputs.push_back(bounds_path.string());
    ctx.finish((fs::path(a.output) / "run-report.json").string(),
               "wrote " + std::to_string(rep.groups) + " groups, " +
                   std::to_string(rep.tokens_emitted) + " tokens");
}

struct IndexArgs {
    Common common;
    std::string input, output, mode = "word";
    uint32_t min_query = 8;
};

void cmd_index(const IndexArgs& a) {
    RunContext ctx{"index", &a.common};
    ctx.config = {{"input", a.input},
                  {"output", a.output},
                  {"mode", a.mode},
                  {"min_query", a.min_query}};
    NormalizationSpec spec;
    spec.mode = a.mode == "byte" ? NormalizationSpec::Mode::byte : NormalizationSpec::Mode::word;
    ShardManifest in = open_corpus(a.input);
    if (a.common.dry_run) {
        ctx.finish("-", "validated " + std::to_string(in.shards.size()) + " input shard(s)");
        return;
    }

    ReadCounters rc;
    std::vector<Document> docs = read_all(a.input, a.common, &rc);
    NGramIndex index = NGramIndex::build(docs, spec, a.min_query);
    index.save(a.output);

    note_read(ctx.counters, rc);
    ctx.counters["docs_indexed"] = index.doc_count();
    ctx.counters["tokens_indexed"] = index.token_count();
    ctx.counters["min_query_tokens"] = index.min_query_tokens();
    ctx.outputs.push_back(a.output);
    ctx.finish(a.output + ".report.json",
               "indexed " + std::to_string(index.doc_count()) + " documents (" +
                   std::to_string(index.token_count()) + " tokens) into " + a.output);
}

QueryMode parse_query_mode(const std::string& s) {
    if (s == "question") return QueryMode::question;
    if (s == "question-plus-answer") return QueryMode::question_plus_answer;
    throw UsageError("unknown query mode (want question|question-plus-answer): " + s);
}

struct ContamArgs {
    Common common;
    std::string index, bench, name, mode = "question", output = "-";
};

void cmd_contam(const ContamArgs& a) {
    RunContext ctx{"contam", &a.common};
    ctx.config = {{"index", a.index}, {"bench", a.bench}, {"name", a.name}, {"mode", a.mode},
                  {"output", a.output}};
    const QueryMode mode = parse_query_mode(a.mode);
    NGramIndex index = NGramIndex::load(a.index);
    BenchmarkSet bench = BenchmarkSet::load(a.bench, a.name);
    if (a.common.dry_run) {
        ctx.finish("-", "validated index and " + std::to_string(bench.samples.size()) +
                            " benchmark samples");
        return;
    }

    const ContaminationReport report = contamination_rate(index, bench, mode);
    const json payload = report.to_json();
    if (a.output == "-") {
        std::cout << payload.dump(2) << "\n";
    } else {
        std::ofstream out(a.output);
        if (!out) throw IoError("cannot write audit: " + a.output);
        out << payload.dump(2) << "\n";
        if (!out) throw IoError("write failed: " + a.output);
        ctx.outputs.push_back(a.output);
    }

    ctx.counters["queryable"] = report.queryable();
    ctx.counters["unqueryable"] = report.unqueryable.size();
    ctx.counters["leaked"] = report.leaked();
    ctx.counters["leak_rate"] = report.leak_rate();
    if (auto m = report.median_occurrences()) ctx.counters["median_occurrences"] = *m;
    std::ostringstream human;
    human << report.queryable() << " queryable samples, " << report.leaked()
          << " leaked (rate " << report.leak_rate() << ")";
    ctx.finish(a.output == "-" ? "-" : a.output + ".report.json", human.str());
}

struct SplitArgs {
    Common common;
    std::string index, bench, name, mode = "question";
    std::string out_contaminated, out_clean;
};

void cmd_split(const SplitArgs& a) {
    RunContext ctx{"split", &a.common};
    ctx.config = {{"index", a.index},
                  {"bench", a.bench},
                  {"name", a.name},
                  {"mode", a.mode},
                  {"out_contaminated", a.out_contaminated},
                  {"out_clean", a.out_clean}};
    const QueryMode mode = parse_query_mode(a.mode);
    NGramIndex index = NGramIndex::load(a.index);
    BenchmarkSet bench = BenchmarkSet::load(a.bench, a.name);
    if (a.common.dry_run) {
        ctx.finish("-", "validated index and " + std::to_string(bench.samples.size()) +
                            " benchmark samples");
        return;
    }

    const ContaminationReport report = contamination_rate(index, bench, mode);
    auto [contaminated, clean] = split_benchmark(report, bench);
    contaminated.save(a.out_contaminated);
    clean.save(a.out_clean);

    ctx.counters["queryable"] = report.queryable();
    ctx.counters["unqueryable"] = report.unqueryable.size();
    ctx.counters["contaminated"] = contaminated.samples.size();
    ctx.counters["clean"] = clean.samples.size();
    ctx.outputs.push_back(a.out_contaminated);
    ctx.outputs.push_back(a.out_clean);
    ctx.finish(a.out_contaminated + ".report.json",
               std::to_string(contaminated.samples.size()) + " contaminated / " +
                   std::to_string(clean.samples.size()) + " clean samples written");
}

struct GapArgs {
    Common common;
    std::string contaminated, clean, correctness, output = "-";
};

void cmd_gap(const GapArgs& a) {
    RunContext ctx{"gap", &a.common};
    ctx.config = {{"contaminated", a.contaminated},
                  {"clean", a.clean},
                  {"correctness", a.correctness},
                  {"output", a.output}};
    BenchmarkSet contaminated = BenchmarkSet::load(a.contaminated);
    BenchmarkSet clean = BenchmarkSet::load(a.clean);
    const auto correctness = load_correctness(a.correctness);
    if (a.common.dry_run) {
        ctx.finish("-", "validated " +
                            std::to_string(contaminated.samples.size() + clean.samples.size()) +
                            " samples and " + std::to_string(correctness.size()) +
                            " correctness entries");
        return;
    }

    const GapReport report = score_gap(correctness, contaminated, clean);
    const json payload = report.to_json();
    if (a.output == "-") {
        std::cout << payload.dump(2) << "\n";
    } else {
        std::ofstream out(a.output);
        if (!out) throw IoError("cannot write gap report: " + a.output);
        out << payload.dump(2) << "\n";
        if (!out) throw IoError("write failed: " + a.output);
        ctx.outputs.push_back(a.output);
    }

    ctx.counters["n_contaminated"] = report.overall.n_contaminated;
    ctx.counters["n_clean"] = report.overall.n_clean;
    if (report.overall.gap) ctx.counters["overall_gap"] = *report.overall.gap;
    std::ostringstream human;
    if (report.overall.gap) human << "overall gap " << *report.overall.gap << " points";
    else human << "gap undefined (one split is empty)";
    ctx.finish(a.output == "-" ? "-" : a.output + ".report.json", human.str());
}

std::unique_ptr<Scorer> make_scorer(const std::string& spec, FilterConfig cfg) {
    try {
        if (spec == "heuristic") return std::make_unique<HeuristicScorer>(std::move(cfg));
        if (spec.rfind("constant:", 0) == 0)
            return std::make_unique<ConstantScorer>(std::stod(spec.substr(9)));
        if (spec.rfind("precomputed:", 0) == 0)
            return std::make_unique<PrecomputedScorer>(PrecomputedScorer::load(spec.substr(12)));
    } catch (const std::invalid_argument&) {
        throw UsageError("cannot parse scorer spec: " + spec);
    }
    throw UsageError("unknown scorer (want heuristic|constant:V|precomputed:PATH): " + spec);
}

struct BiahsArgs {
    Common common;
    std::string hay, needles, scorer = "heuristic", output = "-";
    std::vector<std::string> stopwords;
};

void cmd_biahs(const BiahsArgs& a) {
    RunContext ctx{"biahs", &a.common};
    ctx.config = {{"hay", a.hay},
                  {"needles", a.needles},
                  {"scorer", a.scorer},
                  {"stopwords", stopword_config(a.stopwords)},
                  {"output", a.output}};
    FilterConfig cfg;
    cfg.stopwords = load_stopword_args(a.stopwords);
    auto scorer = make_scorer(a.scorer, cfg);
    BenchmarkSet bench = BenchmarkSet::load(a.needles);
    ShardManifest in = open_corpus(a.hay);
    if (a.common.dry_run) {
        ctx.finish("-", "validated haystack and " + std::to_string(bench.samples.size()) +
                            " needle samples");
        return;
    }

    ReadCounters rc;
    std::vector<Document> hay = read_all(a.hay, a.common, &rc);
    std::vector<Document> needles;
    needles.reserve(bench.samples.size());
    for (const auto& s : bench.samples)
        needles.push_back(render_needle(s, s.subset.empty() ? bench.name : s.subset));

    const BiahsResult result = biahs_run(hay, needles, *scorer);
    const json payload = result.to_json();
    if (a.output == "-") {
        std::cout << payload.dump(2) << "\n";
    } else {
        std::ofstream out(a.output);
        if (!out) throw IoError("cannot write ranking: " + a.output);
        out << payload.dump(2) << "\n";
        if (!out) throw IoError("write failed: " + a.output);
        ctx.outputs.push_back(a.output);
    }

    note_read(ctx.counters, rc);
    ctx.counters["total_docs"] = result.total_docs;
    ctx.counters["needles"] = result.needles.size();
    if (!result.needles.empty()) {
        ctx.counters["best_rank"] = result.needles.front().rank;
        ctx.counters["worst_rank"] = result.needles.back().rank;
    }
    ctx.finish(a.output == "-" ? "-" : a.output + ".report.json",
               "ranked " + std::to_string(result.needles.size()) + " needles among " +
                   std::to_string(result.total_docs) + " documents");
}

struct PoisonArgs {
    Common common;
    std::string input, poison, output, tokenizer = "byte";
    uint64_t total_tokens = 0;
    uint64_t shard_docs = 100000;
    bool gzip = false;
};

void cmd_poison(const PoisonArgs& a) {
    RunContext ctx{"poison", &a.common};
    ctx.config = {{"input", a.input},
                  {"poison", a.poison},
                  {"output", a.output},
                  {"tokenizer", a.tokenizer},
                  {"total_tokens", a.total_tokens}};
    auto tok = make_tokenizer(a.tokenizer);
    if (a.total_tokens == 0) throw UsageError("--total-tokens must be positive");
    std::vector<Document> poison_docs = read_all(a.poison, a.common);
    std::vector<PoisonDoc> planned;
    planned.reserve(poison_docs.size());
    uint64_t poison_tokens = 0;
    for (auto& d : poison_docs) {
        PoisonDoc p;
        p.tokens = tokenize_document(d, *tok).size();
        p.doc = std::move(d);
        poison_tokens += p.tokens;
        planned.push_back(std::move(p));
    }
    const PoisonPlan plan = schedule_poison(std::move(planned), a.total_tokens, a.common.seed);
    ShardManifest in = open_corpus(a.input);
    if (a.common.dry_run) {
        ctx.counters["poison_docs"] = plan.docs.size();
        ctx.counters["poison_tokens"] = poison_tokens;
        ctx.counters["token_ratio"] = plan.token_ratio();
        ctx.finish("-", "planned " + std::to_string(plan.docs.size()) + " insertions over " +
                            std::to_string(a.total_tokens) + " tokens");
        return;
    }

    DocumentReader reader(std::move(in), read_options(a.common));
    DocumentPull pull = [&]() { return reader.next(); };
    WriteOptions wopts;
    wopts.shard_limit_docs = a.shard_docs;
    wopts.gzip = a.gzip;
    ShardWriter writer(a.output, wopts);
    const InjectReport rep = inject(plan, pull, *tok, [&](Document&& d, bool injected) {
        if (injected) d.meta["poisoned"] = true;
        writer.write(d);
    });
    writer.finish();

    note_read(ctx.counters, reader.counters());
    ctx.counters["base_docs"] = rep.base_docs;
    ctx.counters["base_tokens"] = rep.base_tokens;
    ctx.counters["injected"] = rep.injected;
    ctx.counters["poison_tokens"] = poison_tokens;
    ctx.counters["token_ratio"] = plan.token_ratio();
    ctx.outputs.push_back((fs::path(a.output) / "manifest.json").string());
    std::ostringstream human;
    human << "planted " << rep.injected << " documents into a stream of " << rep.base_tokens
          << " tokens (ratio " << plan.token_ratio() << ")";
    ctx.finish((fs::path(a.output) / "run-report.json").string(), human.str());
}

struct GameArgs {
    Common common;
    double m = 1.0, alpha = 1.0, beta = 1.0, gamma = 0.1;
    std::string p = "pow:2";
};

GameParams game_params(const GameArgs& a) {
    GameParams params;
    params.m = a.m;
    params.alpha = a.alpha;
    params.beta = a.beta;
    params.gamma = a.gamma;
    params.p = DetectionProb::parse(a.p);
    params.validate();
    return params;
}

void cmd_game(const GameArgs& a) {
    RunContext ctx{"game", &a.common};
    ctx.config = {{"m", a.m}, {"alpha", a.alpha}, {"beta", a.beta}, {"gamma", a.gamma},
                  {"p", a.p}};
    const GameParams params = game_params(a);
    if (a.common.dry_run) {
        ctx.finish("-", "validated game parameters");
        return;
    }

    const Equilibrium eq = solve_equilibrium(params);
    std::cout << "c* = " << eq.c_star << "\n"
              << "regime = " << regime_name(eq.regime) << "\n"
              << "net_gain = " << eq.net_gain << "\n"
              << "kappa = " << eq.kappa << "\n";

    ctx.counters = eq.to_json();
    if (params.p.is_power() && params.p.power_exponent() > 1.0 && eq.kappa > 0.0)
        ctx.counters["analytic_c_star"] =
            analytic_power_cstar(eq.kappa, params.beta, params.p.power_exponent());
    std::ostringstream human;
    human << "equilibrium c* = " << eq.c_star << " (" << regime_name(eq.regime) << ")";
    // Default fallback "" writes no report file, keeping stdout to the
    // four result lines above; --report still works as everywhere else.
    ctx.finish("", human.str());
}

struct SweepArgs {
    GameArgs game;
    std::string axis;
    std::vector<double> values;
    std::string output = "-", svg;
};

void cmd_sweep(const SweepArgs& a) {
    RunContext ctx{"sweep", &a.game.common};
    ctx.config = {{"m", a.game.m},   {"alpha", a.game.alpha}, {"beta", a.game.beta},
                  {"gamma", a.game.gamma}, {"p", a.game.p},   {"axis", a.axis},
                  {"values", a.values},    {"output", a.output}, {"svg", a.svg}};
    const GameParams base = game_params(a.game);
    static const std::set<std::string> kAxes{"m", "alpha", "beta", "gamma", "p"};
    if (!kAxes.count(a.axis))
        throw UsageError("unknown sweep axis (want m|alpha|beta|gamma|p): " + a.axis);
    if (a.values.empty()) throw UsageError("sweep needs at least one value");
    if (a.game.common.dry_run) {
        ctx.finish("-", "validated sweep over " + std::to_string(a.values.size()) + " values");
        return;
    }

    const std::vector<SweepPoint> points = sweep(base, a.axis, a.values);
    json payload;
    payload["axis"] = a.axis;
    payload["points"] = json::array();
    uint64_t abstentions = 0;
    for (const auto& p : points) {
        json e = p.eq.to_json();
        e["value"] = p.value;
        payload["points"].push_back(std::move(e));
        if (p.eq.regime == Regime::abstain) ++abstentions;
    }
    if (a.output == "-") {
        std::cout << payload.dump(2) << "\n";
    } else {
        std::ofstream out(a.output);
        if (!out) throw IoError("cannot write sweep: " + a.output);
        out << payload.dump(2) << "\n";
        if (!out) throw IoError("write failed: " + a.output);
        ctx.outputs.push_back(a.output);
    }
    if (!a.svg.empty()) {
        std::ofstream out(a.svg);
        if (!out) throw IoError("cannot write svg: " + a.svg);
        out << render_sweep_svg(points, a.axis);
        if (!out) throw IoError("write failed: " + a.svg);
        ctx.outputs.push_back(a.svg);
    }

    ctx.counters["points"] = points.size();
    ctx.counters["abstentions"] = abstentions;
    ctx.finish(a.output == "-" ? "-" : a.output + ".report.json",
               "swept " + a.axis + " over " + std::to_string(points.size()) + " values (" +
                   std::to_string(abstentions) + " abstentions)");
}

// ------------------------------------------------------------------ main

void add_shard_opts(CLI::App* sub, uint64_t& shard_docs, bool& gzip) {
    sub->add_option("--shard-docs", shard_docs, "documents per output shard")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_flag("--gzip", gzip, "gzip output shards");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale corpus pipeline: filtering, quality gating, near-dedup,\n"
                 "phase mixing, token packing, and training-data audits"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read defaults from a TOML file (flags still win)");
    app.set_version_flag("--version", "winnow 0.1.0");

    EnrichArgs enrich_args;
    {
        auto* sub = app.add_subcommand("enrich", "compute per-document quality statistics");
        sub->add_option("--input", enrich_args.input, "manifest, directory, or .jsonl[.gz]")
            ->required()
            ->check(CLI::ExistingPath);
        sub->add_option("--output", enrich_args.output, "output shard directory")->required();
        sub->add_option("--stopwords", enrich_args.stopwords,
                        "stopword list as lang=path (repeatable)");
        add_shard_opts(sub, enrich_args.shard_docs, enrich_args.gzip);
        add_common(sub, enrich_args.common, 0, "unused; recorded in the report");
        sub->callback([&] { cmd_enrich(enrich_args); });
    }

    FilterArgs filter_args;
    {
        auto* sub = app.add_subcommand("filter", "drop documents violating heuristic thresholds");
        sub->add_option("--input", filter_args.input, "manifest, directory, or .jsonl[.gz]")
            ->required()
            ->check(CLI::ExistingPath);
        sub->add_option("--output", filter_args.output, "output shard directory")->required();
        sub->add_option("--stopwords", filter_args.stopwords,
                        "stopword list as lang=path (repeatable)");
        sub->add_option("--min-words", filter_args.min_words)->capture_default_str();
        sub->add_option("--max-words", filter_args.max_words, "-1 disables the upper bound")
            ->capture_default_str();
        sub->add_option("--min-stopword-frac", filter_args.min_stop)->capture_default_str();
        sub->add_option("--max-dup-line-frac", filter_args.max_dup_lines)->capture_default_str();
        sub->add_option("--max-non-alnum-frac", filter_args.max_non_alnum)->capture_default_str();
        sub->add_option("--max-ellipsis-frac", filter_args.max_ellipsis,
                        "enables the ellipsis rule when set");
        sub->add_option("--min-mean-word-len", filter_args.min_word_len,
                        "enables the word-length rule when set");
        sub->add_option("--max-mean-word-len", filter_args.max_word_len,
                        "enables the word-length rule when set");
        sub->add_flag("--no-stopword-rule", filter_args.no_stopword_rule,
                      "disable the stopword-fraction rule");
        sub->add_flag("--require-enriched", filter_args.require_enriched,
                      "fail on documents without enrichment stats");
        add_shard_opts(sub, filter_args.shard_docs, filter_args.gzip);
        add_common(sub, filter_args.common, 0, "unused; recorded in the report");
        sub->callback([&] { cmd_filter(filter_args); });
    }

    GateArgs gate_args;
    {
        auto* sub = app.add_subcommand("gate",
                                       "keep only the surviving quality/perplexity buckets");
        sub->add_option("--input", gate_args.input)->required()->check(CLI::ExistingPath);
        sub->add_option("--output", gate_args.output)->required();
        add_shard_opts(sub, gate_args.shard_docs, gate_args.gzip);
        add_common(sub, gate_args.common, 0, "unused; recorded in the report");
        sub->callback([&] { cmd_gate(gate_args); });
    }

    DedupArgs dedup_args;
    {
        auto* sub = app.add_subcommand("dedup", "near-duplicate removal via banded minhash");
        sub->add_option("--input", dedup_args.input)->required()->check(CLI::ExistingPath);
        sub->add_option("--output", dedup_args.output)->required();
        sub->add_option("--patterns", dedup_args.patterns,
                        "boilerplate words stripped before shingling")
            ->check(CLI::ExistingFile);
        sub->add_option("--splits", dedup_args.splits,
                        "hash splits for the two-stage pass; 1 = single batch")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        sub->add_option("--num-hashes", dedup_args.num_hashes)->capture_default_str();
        sub->add_option("--bands", dedup_args.bands)->capture_default_str();
        sub->add_option("--rows", dedup_args.rows)->capture_default_str();
        sub->add_option("--shingle-words", dedup_args.shingle_words)->capture_default_str();
        add_shard_opts(sub, dedup_args.shard_docs, dedup_args.gzip);
        add_common(sub, dedup_args.common, 1, "minhash permutation seed");
        sub->callback([&] { cmd_dedup(dedup_args); });
    }

    MixArgs mix_args;
    {
        auto* sub = app.add_subcommand("mix", "draw documents per a phase-weighted schedule");
        sub->add_option("--schedule", mix_args.schedule, "schedule JSON")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--stream", mix_args.streams, "source stream as name=path (repeatable)")
            ->required();
        sub->add_option("--output", mix_args.output)->required();
        sub->add_option("--tokenizer", mix_args.tokenizer, "override the schedule's tokenizer");
        add_shard_opts(sub, mix_args.shard_docs, mix_args.gzip);
        add_common(sub, mix_args.common, 0, "0 keeps the schedule's own seed");
        sub->callback([&] { cmd_mix(mix_args); });
    }

    PackArgs pack_args;
    {
        auto* sub = app.add_subcommand("pack", "tokenize and pack documents into token shards");
        sub->add_option("--input", pack_args.input)->required()->check(CLI::ExistingPath);
        sub->add_option("--output", pack_args.output, "directory for tokens.bin/boundaries.bin")
            ->required();
        sub->add_option("--tokenizer", pack_args.tokenizer)->capture_default_str();
        sub->add_option("--seq-len", pack_args.seq_len)->capture_default_str();
        sub->add_option("--group-size", pack_args.group_size)->capture_default_str();
        sub->add_option("--shuffle-buffer", pack_args.shuffle_buffer,
                        "window size for the pre-pack shuffle; 0 = off")
            ->capture_default_str();
        add_common(sub, pack_args.common, 1, "shuffle window seed");
        sub->callback([&] { cmd_pack(pack_args); });
    }

    IndexArgs index_args;
    {
        auto* sub = app.add_subcommand("index", "build an exact n-gram match index");
        sub->add_option("--input", index_args.input)->required()->check(CLI::ExistingPath);
        sub->add_option("--output", index_args.output, "index file path")->required();
        sub->add_option("--mode", index_args.mode)
            ->check(CLI::IsMember({"word", "byte"}))
            ->capture_default_str();
        sub->add_option("--min-query", index_args.min_query, "minimum query tokens")
            ->capture_default_str();
        add_common(sub, index_args.common, 0, "unused; recorded in the report");
        sub->callback([&] { cmd_index(index_args); });
    }

    ContamArgs contam_args;
    {
        auto* sub = app.add_subcommand("contam", "count benchmark samples leaked into a corpus");
        sub->add_option("--index", contam_args.index, "index file from `winnow index`")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--bench", contam_args.bench, "benchmark JSONL")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--name", contam_args.name, "benchmark name used in reports");
        sub->add_option("--mode", contam_args.mode)
            ->check(CLI::IsMember({"question", "question-plus-answer"}))
            ->capture_default_str();
        sub->add_option("--output", contam_args.output, "audit JSON path ('-' for stdout)")
            ->capture_default_str();
        add_common(sub, contam_args.common, 0, "unused; recorded in the report");
        sub->callback([&] { cmd_contam(contam_args); });
    }

    SplitArgs split_args;
    {
        auto* sub = app.add_subcommand("split",
                                       "partition a benchmark into contaminated/clean halves");
        sub->add_option("--index", split_args.index)->required()->check(CLI::ExistingFile);
        sub->add_option("--bench", split_args.bench)->required()->check(CLI::ExistingFile);
        sub->add_option("--name", split_args.name, "benchmark name used in reports");
        sub->add_option("--mode", split_args.mode)
            ->check(CLI::IsMember({"question", "question-plus-answer"}))
            ->capture_default_str();
        sub->add_option("--out-contaminated", split_args.out_contaminated)->required();
        sub->add_option("--out-clean", split_args.out_clean)->required();
        add_common(sub, split_args.common, 0, "unused; recorded in the report");
        sub->callback([&] { cmd_split(split_args); });
    }

    GapArgs gap_args;
    {
        auto* sub = app.add_subcommand("gap", "accuracy gap between benchmark splits");
        sub->add_option("--contaminated", gap_args.contaminated)
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--clean", gap_args.clean)->required()->check(CLI::ExistingFile);
        sub->add_option("--correctness", gap_args.correctness,
                        "JSONL of {id, correct} model results")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--output", gap_args.output, "gap JSON path ('-' for stdout)")
            ->capture_default_str();
        add_common(sub, gap_args.common, 0, "unused; recorded in the report");
        sub->callback([&] { cmd_gap(gap_args); });
    }

    BiahsArgs biahs_args;
    {
        auto* sub = app.add_subcommand(
            "biahs", "rank rendered benchmark needles inside a document haystack");
        sub->add_option("--hay", biahs_args.hay, "haystack corpus")
            ->required()
            ->check(CLI::ExistingPath);
        sub->add_option("--needles", biahs_args.needles, "benchmark JSONL")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--scorer", biahs_args.scorer, "heuristic|constant:V|precomputed:PATH")
            ->capture_default_str();
        sub->add_option("--stopwords", biahs_args.stopwords,
                        "stopword list as lang=path for the heuristic scorer (repeatable)");
        sub->add_option("--output", biahs_args.output, "ranking JSON path ('-' for stdout)")
            ->capture_default_str();
        add_common(sub, biahs_args.common, 0, "unused; recorded in the report");
        sub->callback([&] { cmd_biahs(biahs_args); });
    }

    PoisonArgs poison_args;
    {
        auto* sub = app.add_subcommand(
            "poison", "plant marker documents at seeded offsets in a stream");
        sub->add_option("--input", poison_args.input, "base corpus")
            ->required()
            ->check(CLI::ExistingPath);
        sub->add_option("--poison", poison_args.poison, "documents to plant (JSONL)")
            ->required()
            ->check(CLI::ExistingPath);
        sub->add_option("--output", poison_args.output)->required();
        sub->add_option("--total-tokens", poison_args.total_tokens,
                        "token length of the base stream the offsets target")
            ->required();
        sub->add_option("--tokenizer", poison_args.tokenizer)->capture_default_str();
        add_shard_opts(sub, poison_args.shard_docs, poison_args.gzip);
        add_common(sub, poison_args.common, 1, "offset sampling seed");
        sub->callback([&] { cmd_poison(poison_args); });
    }

    GameArgs game_args;
    {
        auto* sub = app.add_subcommand("game",
                                       "solve the contaminate-or-abstain equilibrium");
        sub->add_option("--m", game_args.m, "benchmark sensitivity")->capture_default_str();
        sub->add_option("--alpha", game_args.alpha, "linear contamination cost")
            ->capture_default_str();
        sub->add_option("--beta", game_args.beta, "detection penalty")->capture_default_str();
        sub->add_option("--gamma", game_args.gamma, "entry cost")->capture_default_str();
        sub->add_option("--p", game_args.p, "detection curve: pow:K | logistic:A,C0 | table:X=Y,...")
            ->capture_default_str();
        add_common(sub, game_args.common, 0, "unused; recorded in the report");
        sub->callback([&] { cmd_game(game_args); });
    }

    SweepArgs sweep_args;
    {
        auto* sub = app.add_subcommand("sweep", "solve the game across a parameter sweep");
        sub->add_option("--m", sweep_args.game.m)->capture_default_str();
        sub->add_option("--alpha", sweep_args.game.alpha)->capture_default_str();
        sub->add_option("--beta", sweep_args.game.beta)->capture_default_str();
        sub->add_option("--gamma", sweep_args.game.gamma)->capture_default_str();
        sub->add_option("--p", sweep_args.game.p)->capture_default_str();
        sub->add_option("--axis", sweep_args.axis, "m|alpha|beta|gamma|p")->required();
        sub->add_option("--values", sweep_args.values, "swept values (comma separated)")
            ->required()
            ->delimiter(',');
        sub->add_option("--output", sweep_args.output, "points JSON path ('-' for stdout)")
            ->capture_default_str();
        sub->add_option("--svg", sweep_args.svg, "optional SVG plot path");
        add_common(sub, sweep_args.game.common, 0, "unused; recorded in the report");
        sub->callback([&] { cmd_sweep(sweep_args); });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        CLI::App* where = &app;
        const auto subs = app.get_subcommands();
        if (!subs.empty()) where = subs.front();
        std::cerr << "usage error: " << e.what() << "\n\n" << where->help();
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
