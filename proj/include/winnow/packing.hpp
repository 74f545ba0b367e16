#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "winnow/binio.hpp"
#include "winnow/document.hpp"
#include "winnow/errors.hpp"
#include "winnow/hash.hpp"
#include "winnow/rng.hpp"

namespace winnow {

struct TokenSequence {
    std::string doc_id;
    std::vector<uint32_t> tokens;
};

// Pluggable tokenizer. Implementations must be deterministic and total
// over valid UTF-8; ids stay below vocab_size().
class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::string name() const = 0;
    virtual uint32_t vocab_size() const = 0;
    virtual std::vector<uint32_t> encode(std::string_view text) const = 0;
};

// Reference tokenizer: one token per byte, vocabulary 256. Context-free,
// so chunked and direct tokenization agree exactly.
class ByteTokenizer : public Tokenizer {
public:
    std::string name() const override { return "byte"; }
    uint32_t vocab_size() const override { return 256; }
    std::vector<uint32_t> encode(std::string_view text) const override {
        std::vector<uint32_t> out;
        out.reserve(text.size());
        for (unsigned char c : text) out.push_back(c);
        return out;
    }
};

inline std::unique_ptr<Tokenizer> make_tokenizer(const std::string& id) {
    if (id == "byte") return std::make_unique<ByteTokenizer>();
    throw UsageError("unknown tokenizer id: " + id);
}

// Very long texts are tokenized in bounded chunks cut at UTF-8 character
// boundaries, then re-concatenated, to keep peak memory flat.
inline constexpr size_t kTokenizeChunkBytes = 1 << 20;

inline std::vector<uint32_t> tokenize_document(const Document& doc, const Tokenizer& tok,
                                               size_t chunk_bytes = kTokenizeChunkBytes) {
    if (doc.text.empty()) throw DataError("cannot tokenize empty text: id=" + doc.id);
    if (doc.text.size() <= chunk_bytes) return tok.encode(doc.text);

    std::vector<uint32_t> out;
    size_t start = 0;
    while (start < doc.text.size()) {
        size_t end = std::min(start + chunk_bytes, doc.text.size());
        // back off to a character boundary (never consumes the whole chunk)
        while (end < doc.text.size() && end > start + 1 &&
               (static_cast<unsigned char>(doc.text[end]) & 0xC0) == 0x80)
            --end;
        const auto part = tok.encode(std::string_view(doc.text).substr(start, end - start));
        out.insert(out.end(), part.begin(), part.end());
        start = end;
    }
    return out;
}

struct PackedBatchReport {
    uint64_t groups = 0;
    uint64_t sequences_in = 0;
    uint64_t tokens_in = 0;
    uint64_t tokens_emitted = 0;
    uint64_t tokens_wasted = 0;

    double waste_ratio() const {
        return tokens_in == 0 ? 0.0
                              : static_cast<double>(tokens_wasted) / static_cast<double>(tokens_in);
    }
};

// Group packer: concatenates each group of group_size input sequences and
// cuts the concatenation into fixed seq_len pieces, dropping the final
// sub-seq_len remainder of the group. Streams with O(seq_len) state.
//
// boundaries() records, per input sequence, the cumulative offset of its
// end within the *emitted* token stream (ends that fall inside a dropped
// remainder clamp to the group's emitted extent), so downstream readers
// can recover document extents from a sidecar file.
class GroupPacker {
public:
    GroupPacker(uint32_t seq_len, uint32_t group_size,
                std::function<void(const std::vector<uint32_t>&)> emit)
        : seq_len_(seq_len), group_size_(group_size), emit_(std::move(emit)) {
        if (seq_len < 2) throw UsageError("seq_len must be at least 2");
        if (group_size < 1) throw UsageError("group_size must be at least 1");
        carry_.reserve(seq_len_);
    }

    void add(const TokenSequence& seq) {
        if (seq.tokens.empty()) throw DataError("empty token sequence: id=" + seq.doc_id);
        report_.sequences_in += 1;
        report_.tokens_in += seq.tokens.size();
        size_t pos = 0;
        while (pos < seq.tokens.size()) {
            const size_t take = std::min<size_t>(seq_len_ - carry_.size(), seq.tokens.size() - pos);
            carry_.insert(carry_.end(), seq.tokens.begin() + pos, seq.tokens.begin() + pos + take);
            pos += take;
            if (carry_.size() == seq_len_) {
                emit_(carry_);
                report_.tokens_emitted += seq_len_;
                group_emitted_ += seq_len_;
                carry_.clear();
            }
        }
        if (++group_fill_ == group_size_) close_group();
        boundaries_.push_back(emitted_before_groups_ + group_emitted_ + carry_.size());
    }

    // Flush: the trailing partial group is closed like a full one.
    PackedBatchReport finish() {
        if (group_fill_ > 0) close_group();
        return report_;
    }

    const std::vector<uint64_t>& boundaries() const { return boundaries_; }

private:
    void close_group() {
        report_.tokens_wasted += carry_.size();
        // clamp any boundary recorded inside the dropped remainder
        const uint64_t emitted_end = emitted_before_groups_ + group_emitted_;
        for (auto it = boundaries_.rbegin(); it != boundaries_.rend() && *it > emitted_end; ++it)
            *it = emitted_end;
        carry_.clear();
        emitted_before_groups_ += group_emitted_;
        group_emitted_ = 0;
        group_fill_ = 0;
        report_.groups += 1;
    }

    uint32_t seq_len_;
    uint32_t group_size_;
    std::function<void(const std::vector<uint32_t>&)> emit_;
    std::vector<uint32_t> carry_;
    uint32_t group_fill_ = 0;
    uint64_t group_emitted_ = 0;
    uint64_t emitted_before_groups_ = 0;
    std::vector<uint64_t> boundaries_;
    PackedBatchReport report_;
};

// Repetition-smearing reorder: consecutive windows of buffer_size
// sequences are each written in a seeded random permutation, so exact
// copies that arrive adjacent end up far apart on disk. The multiset of
// sequences is unchanged; window w uses its own stream keyed by
// (seed, w) so output is independent of flush timing.
class ShuffleBuffer {
public:
    ShuffleBuffer(size_t buffer_size, uint64_t seed,
                  std::function<void(TokenSequence&&)> sink)
        : capacity_(buffer_size), seed_(seed), sink_(std::move(sink)) {
        if (buffer_size == 0) throw UsageError("buffer_size must be at least 1");
    }

    void add(TokenSequence&& seq) {
        held_.push_back(std::move(seq));
        if (held_.size() == capacity_) flush();
    }

    void finish() { flush(); }

private:
    void flush() {
        if (held_.empty()) return;
        std::vector<size_t> order(held_.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng rng(hash_at(seed_, window_++));
        rng.shuffle(order);
        for (size_t i : order) sink_(std::move(held_[i]));
        held_.clear();
    }

    size_t capacity_;
    uint64_t seed_;
    std::function<void(TokenSequence&&)> sink_;
    std::vector<TokenSequence> held_;
    uint64_t window_ = 0;
};

// Binary token shard: 8-byte magic, little-endian u16 version, u8 token
// width, then little-endian u32 token ids. Optional sidecar holds raw
// little-endian u64 cumulative token offsets, one per document.
inline constexpr char kTokenMagic[9] = "GPRNTOK1";
inline constexpr uint16_t kTokenVersion = 1;
inline constexpr uint8_t kTokenWidth = 4;

class TokenShardWriter {
public:
    explicit TokenShardWriter(const std::string& tokens_path, const std::string& offsets_path = "")
        : tokens_path_(tokens_path), offsets_path_(offsets_path) {
        out_.open(tokens_path, std::ios::binary | std::ios::trunc);
        if (!out_) throw IoError("cannot open token shard for writing: " + tokens_path);
        out_.write(kTokenMagic, 8);
        detail::put_u16(out_, kTokenVersion);
        out_.put(static_cast<char>(kTokenWidth));
    }

    ~TokenShardWriter() {
        if (!finished_) {
            out_.close();
            std::error_code ec;
            std::filesystem::remove(tokens_path_, ec);
        }
    }

    void write_tokens(const std::vector<uint32_t>& tokens) {
        for (uint32_t t : tokens) detail::put_u32(out_, t);
        total_ += tokens.size();
        if (!out_) throw IoError("write failed: " + tokens_path_);
    }

    // Marks the end of one document at the current stream position.
    void mark_boundary() { boundaries_.push_back(total_); }
    void set_boundaries(std::vector<uint64_t> b) { boundaries_ = std::move(b); }

    uint64_t total_tokens() const { return total_; }

    void finish() {
        out_.close();
        if (!out_) throw IoError("close failed: " + tokens_path_);
        if (!offsets_path_.empty()) {
            std::ofstream side(offsets_path_, std::ios::binary | std::ios::trunc);
            if (!side) throw IoError("cannot open offsets sidecar: " + offsets_path_);
            for (uint64_t b : boundaries_) detail::put_u64(side, b);
            side.close();
            if (!side) throw IoError("write failed: " + offsets_path_);
        }
        finished_ = true;
    }

private:
    std::string tokens_path_;
    std::string offsets_path_;
    std::ofstream out_;
    std::vector<uint64_t> boundaries_;
    uint64_t total_ = 0;
    bool finished_ = false;
};

struct TokenShard {
    std::vector<uint32_t> tokens;
    std::vector<uint64_t> boundaries; // empty when no sidecar was given
};

inline TokenShard read_token_shard(const std::string& tokens_path,
                                   const std::string& offsets_path = "") {
    std::ifstream in(tokens_path, std::ios::binary);
    if (!in) throw IoError("cannot open token shard: " + tokens_path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::string_view(magic, 8) != std::string_view(kTokenMagic, 8))
        throw DataError("bad token shard magic: " + tokens_path);
    unsigned char hdr[3];
    in.read(reinterpret_cast<char*>(hdr), 3);
    if (!in) throw DataError("truncated token shard header: " + tokens_path);
    const uint16_t version = static_cast<uint16_t>(hdr[0] | (hdr[1] << 8));
    if (version != kTokenVersion)
        throw DataError("unsupported token shard version " + std::to_string(version));
    if (hdr[2] != kTokenWidth)
        throw DataError("unsupported token width " + std::to_string(hdr[2]));

    TokenShard shard;
    unsigned char buf[4];
    while (in.read(reinterpret_cast<char*>(buf), 4))
        shard.tokens.push_back(static_cast<uint32_t>(buf[0]) | (static_cast<uint32_t>(buf[1]) << 8) |
                               (static_cast<uint32_t>(buf[2]) << 16) |
                               (static_cast<uint32_t>(buf[3]) << 24));
    if (in.gcount() != 0) throw DataError("trailing partial token in shard: " + tokens_path);

    if (!offsets_path.empty()) {
        std::ifstream side(offsets_path, std::ios::binary);
        if (!side) throw IoError("cannot open offsets sidecar: " + offsets_path);
        unsigned char ob[8];
        while (side.read(reinterpret_cast<char*>(ob), 8)) {
            uint64_t v = 0;
            for (int i = 7; i >= 0; --i) v = (v << 8) | ob[i];
            shard.boundaries.push_back(v);
        }
        if (side.gcount() != 0) throw DataError("trailing partial offset in sidecar");
    }
    return shard;
}

} // namespace winnow
