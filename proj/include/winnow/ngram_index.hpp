#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "winnow/binio.hpp"
#include "winnow/document.hpp"
#include "winnow/errors.hpp"
#include "winnow/hash.hpp"
#include "winnow/utf8.hpp"

namespace winnow {

// Exact-match index over a normalized token stream. Word mode lowercases,
// collapses Unicode whitespace and strips per-word edge punctuation; byte
// mode matches raw bytes. The normalization spec is hashed into the
// persisted header so indexes built under different specs cannot be
// silently compared.
struct NormalizationSpec {
    enum class Mode { word, byte };
    Mode mode = Mode::word;

    std::string spec_string() const {
        return mode == Mode::word ? "word:lower,ws-collapse,edge-punct-strip:v1" : "byte:v1";
    }
    uint64_t hash() const { return fnv1a(spec_string()); }

    // Word mode: the normalized word list. Idempotent: normalizing the
    // space-joined output reproduces it.
    std::vector<std::string> normalize_words(std::string_view text) const {
        std::vector<std::string> out;
        const std::string lowered = utf8::lowercase(std::string(text));
        for (const auto& raw : utf8::split_words(lowered)) {
            // strip leading/trailing non-word codepoints
            size_t begin = 0, end = raw.size();
            size_t pos = 0;
            size_t first_word = std::string::npos, last_word_end = std::string::npos;
            while (pos < raw.size()) {
                const size_t at = pos;
                const uint32_t cp = utf8::decode(raw, pos);
                if (cp != utf8::kInvalid && utf8::is_word_cp(cp)) {
                    if (first_word == std::string::npos) first_word = at;
                    last_word_end = pos;
                }
            }
            if (first_word == std::string::npos) continue; // punctuation-only token
            begin = first_word;
            end = last_word_end;
            out.emplace_back(raw.substr(begin, end - begin));
        }
        return out;
    }
};

struct MatchResult {
    uint64_t count = 0;
    std::vector<std::string> doc_ids;   // ascending, truncated at limit
    std::vector<uint64_t> positions;    // token offsets, when requested
};

namespace detail {

// Suffix array by prefix doubling with counting sort: O(n log n), fully
// deterministic. 32-bit internal positions cap a single index at 2^32-1
// tokens, which build_index checks up front.
inline std::vector<uint32_t> build_suffix_array(const std::vector<uint32_t>& text) {
    const uint32_t n = static_cast<uint32_t>(text.size());
    std::vector<uint32_t> sa(n);
    if (n == 0) return sa;

    std::vector<uint32_t> rank(n), next_rank(n), tmp(n), cnt;
    {
        const uint32_t maxv = *std::max_element(text.begin(), text.end());
        cnt.assign(static_cast<size_t>(maxv) + 1, 0);
        for (uint32_t v : text) ++cnt[v];
        uint32_t acc = 0;
        for (auto& c : cnt) {
            const uint32_t here = c;
            c = acc;
            acc += here;
        }
        for (uint32_t i = 0; i < n; ++i) sa[cnt[text[i]]++] = i;
        rank[sa[0]] = 0;
        for (uint32_t i = 1; i < n; ++i)
            rank[sa[i]] = rank[sa[i - 1]] + (text[sa[i]] != text[sa[i - 1]] ? 1 : 0);
    }

    for (uint64_t k = 1; rank[sa[n - 1]] != n - 1; k <<= 1) {
        // order by second key: suffixes with no i+k tail first (key 0),
        // then previous sa order shifted left by k
        uint32_t p = 0;
        for (uint32_t i = static_cast<uint32_t>(n - std::min<uint64_t>(k, n)); i < n; ++i)
            tmp[p++] = i;
        for (uint32_t i = 0; i < n; ++i)
            if (sa[i] >= k) tmp[p++] = static_cast<uint32_t>(sa[i] - k);
        // stable counting sort by first key
        const uint32_t classes = rank[sa[n - 1]] + 1;
        cnt.assign(classes, 0);
        for (uint32_t i = 0; i < n; ++i) ++cnt[rank[i]];
        uint32_t acc = 0;
        for (auto& c : cnt) {
            const uint32_t here = c;
            c = acc;
            acc += here;
        }
        for (uint32_t i = 0; i < n; ++i) sa[cnt[rank[tmp[i]]]++] = tmp[i];

        auto second = [&](uint32_t i) -> uint32_t {
            return i + k < n ? rank[static_cast<size_t>(i + k)] + 1 : 0;
        };
        next_rank[sa[0]] = 0;
        for (uint32_t i = 1; i < n; ++i) {
            const uint32_t a = sa[i - 1], b = sa[i];
            const bool differs = rank[a] != rank[b] || second(a) != second(b);
            next_rank[b] = next_rank[a] + (differs ? 1 : 0);
        }
        rank.swap(next_rank);
    }
    return sa;
}

} // namespace detail

inline constexpr char kIndexMagic[9] = "GPRNIDX1";
inline constexpr uint64_t kIndexVersion = 1;

class NGramIndex {
public:
    // Builds from documents in stream order. Token 0 is a document
    // separator that never appears inside a document, so no query can
    // match across a boundary.
    static NGramIndex build(const std::vector<Document>& docs, NormalizationSpec spec,
                            uint32_t min_query_tokens = 8) {
        NGramIndex idx;
        idx.spec_ = spec;
        idx.min_query_tokens_ = min_query_tokens;
        for (const auto& doc : docs) {
            idx.doc_starts_.push_back(idx.tokens_.size());
            idx.doc_ids_.push_back(doc.id);
            if (spec.mode == NormalizationSpec::Mode::word) {
                for (const auto& w : spec.normalize_words(doc.text))
                    idx.tokens_.push_back(idx.intern(w));
            } else {
                for (unsigned char c : doc.text)
                    idx.tokens_.push_back(static_cast<uint32_t>(c) + 1);
            }
            idx.tokens_.push_back(0); // separator
        }
        if (idx.tokens_.size() >= std::numeric_limits<uint32_t>::max())
            throw DataError("corpus exceeds one index's 32-bit address space; "
                            "build sharded indexes instead");
        idx.sa_ = detail::build_suffix_array(idx.tokens_);
        return idx;
    }

    uint32_t min_query_tokens() const { return min_query_tokens_; }
    const NormalizationSpec& spec() const { return spec_; }
    uint64_t token_count() const { return tokens_.size(); }
    uint64_t doc_count() const { return doc_ids_.size(); }

    // Token count the min-length rule sees, so callers can pre-screen
    // queries without triggering the error path.
    uint64_t query_token_count(std::string_view query) const {
        if (spec_.mode == NormalizationSpec::Mode::word)
            return spec_.normalize_words(query).size();
        return query.size();
    }

    MatchResult count(std::string_view query) const {
        const auto q = encode_query(query);
        MatchResult r;
        if (!q) return r; // a query word absent from the corpus vocabulary
        const auto [lo, hi] = range(*q);
        r.count = hi - lo;
        return r;
    }

    MatchResult locate(std::string_view query, size_t limit,
                       bool with_positions = false) const {
        const auto q = encode_query(query);
        MatchResult r;
        if (!q) return r;
        const auto [lo, hi] = range(*q);
        r.count = hi - lo;
        std::vector<std::string> ids;
        for (uint64_t i = lo; i < hi; ++i) {
            ids.push_back(doc_ids_[doc_of(sa_[i])]);
            if (with_positions) r.positions.push_back(sa_[i]);
        }
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        if (ids.size() > limit) ids.resize(limit);
        r.doc_ids = std::move(ids);
        if (with_positions) std::sort(r.positions.begin(), r.positions.end());
        return r;
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open index for writing: " + path);
        out.write(kIndexMagic, 8);
        detail::put_u64(out, kIndexVersion);
        detail::put_u64(out, spec_.hash());
        const char mode_tag[8] = {spec_.mode == NormalizationSpec::Mode::word ? 'w' : 'b'};
        out.write(mode_tag, 8);
        detail::put_u64(out, min_query_tokens_);
        detail::put_u64(out, tokens_.size());
        detail::put_u64(out, doc_ids_.size());
        detail::put_u64(out, vocab_words_.size());
        for (uint32_t t : tokens_) detail::put_u32(out, t);
        if (tokens_.size() % 2) detail::put_u32(out, 0); // keep u64 records aligned
        for (uint32_t s : sa_) detail::put_u64(out, s);
        for (uint64_t s : doc_starts_) detail::put_u64(out, s);
        for (const auto& id : doc_ids_) put_string(out, id);
        for (const auto& w : vocab_words_) put_string(out, w);
        out.close();
        if (!out) throw IoError("write failed: " + path);
    }

    static NGramIndex load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open index: " + path);
        char magic[8];
        in.read(magic, 8);
        if (!in || std::string_view(magic, 8) != std::string_view(kIndexMagic, 8))
            throw DataError("bad index magic: " + path);
        if (detail::get_u64(in) != kIndexVersion)
            throw DataError("unsupported index version: " + path);
        const uint64_t spec_hash = detail::get_u64(in);
        char mode_tag[8];
        in.read(mode_tag, 8);
        NGramIndex idx;
        idx.spec_.mode =
            mode_tag[0] == 'w' ? NormalizationSpec::Mode::word : NormalizationSpec::Mode::byte;
        if (idx.spec_.hash() != spec_hash)
            throw DataError("index normalization spec mismatch: " + path);
        idx.min_query_tokens_ = static_cast<uint32_t>(detail::get_u64(in));
        const uint64_t n = detail::get_u64(in);
        const uint64_t d = detail::get_u64(in);
        const uint64_t v = detail::get_u64(in);
        idx.tokens_.resize(n);
        for (auto& t : idx.tokens_) t = detail::get_u32(in);
        if (n % 2) detail::get_u32(in);
        idx.sa_.resize(n);
        for (auto& s : idx.sa_) {
            const uint64_t pos = detail::get_u64(in);
            s = static_cast<uint32_t>(pos);
        }
        idx.doc_starts_.resize(d);
        for (auto& s : idx.doc_starts_) s = detail::get_u64(in);
        idx.doc_ids_.resize(d);
        for (auto& id : idx.doc_ids_) id = get_string(in);
        idx.vocab_words_.resize(v);
        for (uint64_t i = 0; i < v; ++i) {
            idx.vocab_words_[i] = get_string(in);
            idx.vocab_.emplace(idx.vocab_words_[i], static_cast<uint32_t>(i + 1));
        }
        if (!in) throw DataError("truncated index file: " + path);
        return idx;
    }

private:
    uint32_t intern(const std::string& word) {
        auto [it, fresh] = vocab_.emplace(word, static_cast<uint32_t>(vocab_words_.size() + 1));
        if (fresh) vocab_words_.push_back(word);
        return it->second;
    }

    // nullopt means some query token cannot occur in this corpus at all.
    std::optional<std::vector<uint32_t>> encode_query(std::string_view query) const {
        std::vector<uint32_t> q;
        uint64_t n_tokens = 0;
        if (spec_.mode == NormalizationSpec::Mode::word) {
            const auto words = spec_.normalize_words(query);
            n_tokens = words.size();
            check_length(n_tokens);
            for (const auto& w : words) {
                auto it = vocab_.find(w);
                if (it == vocab_.end()) return std::nullopt;
                q.push_back(it->second);
            }
        } else {
            n_tokens = query.size();
            check_length(n_tokens);
            for (unsigned char c : query) q.push_back(static_cast<uint32_t>(c) + 1);
        }
        return q;
    }

    void check_length(uint64_t n_tokens) const {
        if (n_tokens < min_query_tokens_)
            throw UsageError("query has " + std::to_string(n_tokens) +
                             " tokens after normalization; minimum is " +
                             std::to_string(min_query_tokens_));
    }

    // [lo, hi) over sa_ of suffixes starting with q.
    std::pair<uint64_t, uint64_t> range(const std::vector<uint32_t>& q) const {
        auto cmp = [&](uint32_t pos) -> int { // suffix vs q over q's length
            for (size_t j = 0; j < q.size(); ++j) {
                if (pos + j >= tokens_.size()) return -1;
                const uint32_t t = tokens_[pos + j];
                if (t != q[j]) return t < q[j] ? -1 : 1;
            }
            return 0;
        };
        uint64_t lo = std::partition_point(sa_.begin(), sa_.end(),
                                           [&](uint32_t p) { return cmp(p) < 0; }) -
                      sa_.begin();
        uint64_t hi = std::partition_point(sa_.begin() + lo, sa_.end(),
                                           [&](uint32_t p) { return cmp(p) == 0; }) -
                      sa_.begin();
        return {lo, hi};
    }

    size_t doc_of(uint64_t position) const {
        auto it = std::upper_bound(doc_starts_.begin(), doc_starts_.end(), position);
        return static_cast<size_t>(it - doc_starts_.begin()) - 1;
    }

    static void put_string(std::ostream& out, const std::string& s) {
        detail::put_u64(out, s.size());
        out.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
    static std::string get_string(std::istream& in) {
        const uint64_t len = detail::get_u64(in);
        std::string s(len, '\0');
        in.read(s.data(), static_cast<std::streamsize>(len));
        return s;
    }

    NormalizationSpec spec_;
    uint32_t min_query_tokens_ = 8;
    std::vector<uint32_t> tokens_;
    std::vector<uint32_t> sa_;
    std::vector<uint64_t> doc_starts_;
    std::vector<std::string> doc_ids_;
    std::unordered_map<std::string, uint32_t> vocab_;
    std::vector<std::string> vocab_words_;
};

} // namespace winnow
