#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>
#include <zlib.h>

#include "winnow/document.hpp"
#include "winnow/errors.hpp"

namespace winnow {

namespace fs = std::filesystem;

struct ShardEntry {
    std::string path; // relative to the manifest's directory
    uint64_t docs = 0;
    uint64_t bytes = 0;
    std::string crc32_hex;
};

// Ordered list of shard files plus per-shard counters. Ordering is
// lexicographic by path and fixed at save time.
struct ShardManifest {
    std::vector<ShardEntry> shards;
    fs::path base_dir;

    uint64_t total_docs() const {
        uint64_t n = 0;
        for (const auto& s : shards) n += s.docs;
        return n;
    }

    void save(const fs::path& path) const {
        nlohmann::json j;
        j["format"] = "winnow-manifest-v1";
        j["shards"] = nlohmann::json::array();
        for (const auto& s : shards) {
            j["shards"].push_back(
                {{"path", s.path}, {"docs", s.docs}, {"bytes", s.bytes}, {"crc32", s.crc32_hex}});
        }
        std::ofstream out(path);
        if (!out) throw IoError("cannot write manifest: " + path.string());
        out << j.dump(2) << "\n";
    }

    static ShardManifest load(const fs::path& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open manifest: " + path.string());
        nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
        if (j.is_discarded() || !j.contains("shards"))
            throw DataError("malformed manifest: " + path.string());
        ShardManifest m;
        m.base_dir = path.parent_path();
        for (const auto& e : j["shards"]) {
            ShardEntry s;
            s.path = e.at("path").get<std::string>();
            s.docs = e.at("docs").get<uint64_t>();
            s.bytes = e.at("bytes").get<uint64_t>();
            s.crc32_hex = e.value("crc32", "");
            m.shards.push_back(std::move(s));
        }
        std::sort(m.shards.begin(), m.shards.end(),
                  [](const ShardEntry& a, const ShardEntry& b) { return a.path < b.path; });
        return m;
    }
};

inline std::string crc32_hex_of_file(const fs::path& path) {
    gzFile raw = gzopen(path.string().c_str(), "rb");
    if (!raw) throw IoError("cannot open for checksum: " + path.string());
    // Checksum the bytes as stored on disk, not the decompressed stream.
    gzclose(raw);
    std::ifstream in(path, std::ios::binary);
    uLong crc = crc32(0L, Z_NULL, 0);
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        crc = crc32(crc, reinterpret_cast<const Bytef*>(buf), static_cast<uInt>(in.gcount()));
        if (in.eof()) break;
    }
    char hex[16];
    std::snprintf(hex, sizeof(hex), "%08lx", static_cast<unsigned long>(crc));
    return hex;
}

struct ReadOptions {
    bool strict = false; // true: malformed record is fatal
    size_t max_recorded_errors = 32;
};

struct ReadCounters {
    uint64_t docs = 0;
    uint64_t skipped = 0;
    std::vector<std::string> errors; // "shard:line: message", capped

    void note(const std::string& shard, uint64_t line, const std::string& msg, size_t cap) {
        ++skipped;
        if (errors.size() < cap)
            errors.push_back(shard + ":" + std::to_string(line) + ": " + msg);
    }
};

// Line reader over one shard file. gzopen reads both gzip and plain
// files, so .jsonl and .jsonl.gz go through the same path.
class LineReader {
public:
    explicit LineReader(const fs::path& path) : path_(path.string()) {
        file_ = gzopen(path.string().c_str(), "rb");
        if (!file_) throw IoError("cannot open shard: " + path.string());
    }
    ~LineReader() {
        if (file_) gzclose(file_);
    }
    LineReader(const LineReader&) = delete;
    LineReader& operator=(const LineReader&) = delete;

    bool next_line(std::string& line) {
        line.clear();
        char buf[1 << 16];
        while (true) {
            if (!gzgets(file_, buf, sizeof(buf))) {
                return !line.empty();
            }
            line += buf;
            if (!line.empty() && line.back() == '\n') {
                line.pop_back();
                if (!line.empty() && line.back() == '\r') line.pop_back();
                return true;
            }
            // long line: keep appending
        }
    }

    const std::string& path() const { return path_; }

private:
    std::string path_;
    gzFile file_ = nullptr;
};

// Streams documents shard by shard in manifest order. Constant memory in
// the corpus size; not shareable across threads.
class DocumentReader {
public:
    DocumentReader(ShardManifest manifest, ReadOptions options = {})
        : manifest_(std::move(manifest)), options_(options) {}

    explicit DocumentReader(const fs::path& manifest_path, ReadOptions options = {})
        : DocumentReader(ShardManifest::load(manifest_path), options) {}

    std::optional<Document> next() {
        std::string line;
        while (true) {
            if (!reader_) {
                if (shard_index_ >= manifest_.shards.size()) return std::nullopt;
                const fs::path p = manifest_.base_dir / manifest_.shards[shard_index_].path;
                if (!fs::exists(p)) throw IoError("missing shard: " + p.string());
                reader_ = std::make_unique<LineReader>(p);
                line_no_ = 0;
            }
            if (!reader_->next_line(line)) {
                reader_.reset();
                ++shard_index_;
                continue;
            }
            ++line_no_;
            if (line.empty()) continue;
            nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded()) {
                handle_malformed("invalid JSON");
                continue;
            }
            try {
                Document doc = document_from_json(j);
                ++counters_.docs;
                return doc;
            } catch (const DataError& e) {
                handle_malformed(e.what());
            }
        }
    }

    const ReadCounters& counters() const { return counters_; }

private:
    void handle_malformed(const std::string& msg) {
        const std::string shard = manifest_.shards[shard_index_].path;
        if (options_.strict)
            throw DataError(shard + ":" + std::to_string(line_no_) + ": " + msg);
        counters_.note(shard, line_no_, msg, options_.max_recorded_errors);
    }

    ShardManifest manifest_;
    ReadOptions options_;
    std::unique_ptr<LineReader> reader_;
    size_t shard_index_ = 0;
    uint64_t line_no_ = 0;
    ReadCounters counters_;
};

struct WriteOptions {
    uint64_t shard_limit_docs = 100000;
    bool gzip = false;
    std::string shard_prefix = "shard";
};

// Writes documents into fixed-size shards and produces the manifest.
// On abort (destruction before finish()) all partial output is removed.
class ShardWriter {
public:
    ShardWriter(fs::path dir, WriteOptions options = {})
        : dir_(std::move(dir)), options_(options) {
        if (options_.shard_limit_docs == 0)
            throw UsageError("shard size limit must be > 0");
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw IoError("cannot create output directory: " + dir_.string());
    }

    ~ShardWriter() {
        if (!finished_) cleanup();
    }
    ShardWriter(const ShardWriter&) = delete;
    ShardWriter& operator=(const ShardWriter&) = delete;

    void write(const Document& doc) {
        validate_for_write(doc);
        if (!out_.is_open() && !gz_) open_shard();
        const std::string line = document_to_json(doc).dump() + "\n";
        if (gz_) {
            if (gzwrite(gz_, line.data(), static_cast<unsigned>(line.size())) <= 0) {
                cleanup();
                throw IoError("gzip write failed: " + current_path_.string());
            }
        } else {
            out_ << line;
            if (!out_) {
                cleanup();
                throw IoError("write failed: " + current_path_.string());
            }
        }
        ++docs_in_shard_;
        if (docs_in_shard_ >= options_.shard_limit_docs) close_shard();
    }

    ShardManifest finish() {
        if (out_.is_open() || gz_) close_shard();
        ShardManifest manifest;
        manifest.base_dir = dir_;
        manifest.shards = shards_;
        std::sort(manifest.shards.begin(), manifest.shards.end(),
                  [](const ShardEntry& a, const ShardEntry& b) { return a.path < b.path; });
        manifest.save(dir_ / "manifest.json");
        finished_ = true;
        return manifest;
    }

private:
    void open_shard() {
        char name[64];
        std::snprintf(name, sizeof(name), "%s-%05zu.jsonl%s", options_.shard_prefix.c_str(),
                      shards_.size(), options_.gzip ? ".gz" : "");
        current_path_ = dir_ / name;
        created_.push_back(current_path_);
        if (options_.gzip) {
            gz_ = gzopen(current_path_.string().c_str(), "wb");
            if (!gz_) throw IoError("cannot open shard for write: " + current_path_.string());
        } else {
            out_.open(current_path_, std::ios::binary);
            if (!out_) throw IoError("cannot open shard for write: " + current_path_.string());
        }
        docs_in_shard_ = 0;
    }

    void close_shard() {
        if (gz_) {
            gzclose(gz_);
            gz_ = nullptr;
        }
        if (out_.is_open()) out_.close();
        ShardEntry e;
        e.path = current_path_.filename().string();
        e.docs = docs_in_shard_;
        e.bytes = fs::file_size(current_path_);
        e.crc32_hex = crc32_hex_of_file(current_path_);
        shards_.push_back(std::move(e));
        docs_in_shard_ = 0;
    }

    void cleanup() {
        if (gz_) {
            gzclose(gz_);
            gz_ = nullptr;
        }
        if (out_.is_open()) out_.close();
        for (const auto& p : created_) {
            std::error_code ec;
            fs::remove(p, ec);
        }
    }

    fs::path dir_;
    WriteOptions options_;
    std::ofstream out_;
    gzFile gz_ = nullptr;
    fs::path current_path_;
    uint64_t docs_in_shard_ = 0;
    std::vector<ShardEntry> shards_;
    std::vector<fs::path> created_;
    bool finished_ = false;
};

} // namespace winnow
