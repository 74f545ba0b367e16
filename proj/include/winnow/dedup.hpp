#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "winnow/document.hpp"
#include "winnow/errors.hpp"
#include "winnow/hash.hpp"
#include "winnow/utf8.hpp"

namespace winnow {

// Text canonicalized before shingling: lowercase, runs of whitespace
// collapsed to single spaces, and any configured boilerplate patterns
// (e.g. date words) removed so that near-copies differing only in a
// dateline still collide.
struct ShingleNormalizer {
    std::vector<std::string> strip_patterns; // matched as lowercase whole words

    static ShingleNormalizer load_patterns(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open pattern list: " + path);
        ShingleNormalizer n;
        std::string line;
        while (std::getline(in, line)) {
            while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
            if (!line.empty()) n.strip_patterns.push_back(utf8::lowercase(line));
        }
        return n;
    }

    std::vector<std::string> normalize_words(std::string_view text) const {
        const std::string lowered = utf8::lowercase(std::string(text));
        std::vector<std::string> out;
        for (const auto& w : utf8::split_words(lowered)) {
            std::string word(w);
            if (!strip_patterns.empty() &&
                std::find(strip_patterns.begin(), strip_patterns.end(), word) !=
                    strip_patterns.end())
                continue;
            out.push_back(std::move(word));
        }
        return out;
    }

    std::string normalize(std::string_view text) const {
        const auto words = normalize_words(text);
        std::string out;
        for (size_t i = 0; i < words.size(); ++i) {
            if (i) out.push_back(' ');
            out += words[i];
        }
        return out;
    }
};

struct MinHashConfig {
    uint32_t num_hashes = 128;
    uint32_t bands = 16;     // num_hashes = bands * rows
    uint32_t rows = 8;
    uint32_t shingle_words = 13;
    uint64_t seed = 1;

    void validate() const {
        if (num_hashes == 0 || bands == 0 || rows == 0)
            throw UsageError("minhash parameters must be positive");
        if (bands * rows != num_hashes)
            throw UsageError("bands * rows must equal num_hashes");
        if (shingle_words == 0) throw UsageError("shingle size must be positive");
    }
};

// 64-bit hashes of the word k-grams of the normalized text. A text
// shorter than k words yields exactly one shingle covering all of it,
// so short documents still dedup against identical short documents.
inline std::vector<uint64_t> shingle_hashes(std::string_view text, const ShingleNormalizer& norm,
                                            uint32_t k) {
    const auto words = norm.normalize_words(text);
    std::vector<uint64_t> out;
    if (words.empty()) return out;
    if (words.size() < k) {
        std::string joined;
        for (size_t i = 0; i < words.size(); ++i) {
            if (i) joined.push_back(' ');
            joined += words[i];
        }
        out.push_back(fnv1a(joined));
        return out;
    }
    std::string window;
    for (size_t i = 0; i + k <= words.size(); ++i) {
        window.clear();
        for (size_t j = 0; j < k; ++j) {
            if (j) window.push_back(' ');
            window += words[i + j];
        }
        out.push_back(fnv1a(window));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

using Signature = std::vector<uint64_t>;

// Per-slot permutation is the splitmix finalizer keyed by a counter-derived
// seed; the signature slot is the minimum over the document's shingles.
inline Signature minhash_signature(const std::vector<uint64_t>& shingles,
                                   const MinHashConfig& cfg) {
    Signature sig(cfg.num_hashes, ~0ull);
    if (shingles.empty()) return sig;
    for (uint32_t i = 0; i < cfg.num_hashes; ++i) {
        const uint64_t slot_seed = hash_at(cfg.seed, i);
        uint64_t best = ~0ull;
        for (uint64_t sh : shingles) {
            const uint64_t h = mix64(sh ^ slot_seed);
            if (h < best) best = h;
        }
        sig[i] = best;
    }
    return sig;
}

inline double signature_similarity(const Signature& a, const Signature& b) {
    if (a.size() != b.size() || a.empty()) throw UsageError("signature size mismatch");
    size_t same = 0;
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i] == b[i]) ++same;
    return static_cast<double>(same) / a.size();
}

// One 64-bit key per band, hashing that band's rows together.
inline std::vector<uint64_t> band_keys(const Signature& sig, const MinHashConfig& cfg) {
    std::vector<uint64_t> keys(cfg.bands);
    for (uint32_t b = 0; b < cfg.bands; ++b) {
        uint64_t h = fnv1a_u64(b + 1);
        for (uint32_t r = 0; r < cfg.rows; ++r)
            h = fnv1a_u64(h ^ sig[b * cfg.rows + r]);
        keys[b] = h;
    }
    return keys;
}

// P(some band matches) for Jaccard similarity s: 1 - (1 - s^rows)^bands.
inline double candidate_probability(double s, const MinHashConfig& cfg) {
    return 1.0 - std::pow(1.0 - std::pow(s, cfg.rows), cfg.bands);
}

class UnionFind {
public:
    explicit UnionFind(size_t n) : parent_(n), rank_(n, 0) {
        std::iota(parent_.begin(), parent_.end(), size_t{0});
    }

    size_t find(size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]]; // path halving
            x = parent_[x];
        }
        return x;
    }

    void unite(size_t a, size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (rank_[a] < rank_[b]) std::swap(a, b);
        parent_[b] = a;
        if (rank_[a] == rank_[b]) ++rank_[a];
    }

private:
    std::vector<size_t> parent_;
    std::vector<size_t> rank_;
};

struct DedupResult {
    std::vector<Document> survivors;  // representative per cluster, input order
    uint64_t clusters = 0;
    uint64_t removed = 0;
};

struct DedupCounters {
    uint64_t input_docs = 0;
    uint64_t empty_shingle_docs = 0; // kept as-is, never clustered
    uint64_t candidate_pairs = 0;    // band collisions before clustering
};

// Banded-LSH near-dedup over one batch of documents held in memory.
// Cluster representative is the lexicographically smallest id; its
// dup_count meta becomes the sum of member weights (a member's existing
// dup_count, default 1), so total weight is conserved across rounds.
inline DedupResult dedup_batch(std::vector<Document> docs, const MinHashConfig& cfg,
                               const ShingleNormalizer& norm,
                               DedupCounters* counters = nullptr) {
    cfg.validate();
    const size_t n = docs.size();
    if (counters) counters->input_docs += n;

    {
        std::unordered_set<std::string_view> ids;
        ids.reserve(n);
        for (const auto& d : docs)
            if (!ids.insert(d.id).second) throw DataError("duplicate document id: " + d.id);
    }

    std::vector<Signature> sigs(n);
    std::vector<bool> clusterable(n, false);
    for (size_t i = 0; i < n; ++i) {
        const auto shingles = shingle_hashes(docs[i].text, norm, cfg.shingle_words);
        if (shingles.empty()) {
            if (counters) ++counters->empty_shingle_docs;
            continue;
        }
        sigs[i] = minhash_signature(shingles, cfg);
        clusterable[i] = true;
    }

    UnionFind uf(n);
    {
        // band index -> (band key -> first doc seen); later docs with the
        // same key in the same band are candidate pairs and are united.
        std::unordered_map<uint64_t, size_t> bucket;
        for (uint32_t b = 0; b < cfg.bands; ++b) {
            bucket.clear();
            for (size_t i = 0; i < n; ++i) {
                if (!clusterable[i]) continue;
                uint64_t h = fnv1a_u64(b + 1);
                for (uint32_t r = 0; r < cfg.rows; ++r)
                    h = fnv1a_u64(h ^ sigs[i][b * cfg.rows + r]);
                auto [it, fresh] = bucket.emplace(h, i);
                if (!fresh) {
                    if (counters) ++counters->candidate_pairs;
                    uf.unite(it->second, i);
                }
            }
        }
    }

    // Pick each cluster's smallest-id member and pool the weights.
    std::unordered_map<size_t, size_t> rep; // root -> index of smallest id
    std::unordered_map<size_t, uint64_t> weight;
    for (size_t i = 0; i < n; ++i) {
        const size_t root = clusterable[i] ? uf.find(i) : i;
        auto [it, fresh] = rep.emplace(root, i);
        if (!fresh && docs[i].id < docs[it->second].id) it->second = i;
        weight[root] += dup_count(docs[i]);
    }

    DedupResult result;
    result.clusters = rep.size();
    result.removed = n - rep.size();
    result.survivors.reserve(rep.size());
    for (size_t i = 0; i < n; ++i) {
        const size_t root = clusterable[i] ? uf.find(i) : i;
        if (rep.at(root) != i) continue;
        Document d = std::move(docs[i]);
        d.meta["dup_count"] = weight.at(root);
        result.survivors.push_back(std::move(d));
    }
    return result;
}

// Split assignment must depend only on the id so that both stages and
// any re-run agree on where a document lives.
inline uint32_t split_of(std::string_view id, uint32_t splits) {
    if (splits == 0) throw UsageError("splits must be positive");
    return static_cast<uint32_t>(mix64(fnv1a(id)) % splits);
}

struct TwoStageResult {
    std::vector<Document> survivors;
    uint64_t stage1_removed = 0;
    uint64_t stage2_removed = 0;
    std::vector<uint64_t> split_sizes;
};

// Stage 1 dedups each hash-assigned split independently (bounded memory
// per split); stage 2 dedups the pooled survivors to catch cross-split
// duplicates. Weights compose: every input document's weight ends up in
// exactly one final survivor's dup_count.
inline TwoStageResult two_stage_dedup(std::vector<Document> docs, const MinHashConfig& cfg,
                                      const ShingleNormalizer& norm, uint32_t splits = 10,
                                      DedupCounters* counters = nullptr) {
    if (splits == 0) throw UsageError("splits must be positive");
    TwoStageResult result;
    result.split_sizes.assign(splits, 0);

    std::vector<std::vector<Document>> parts(splits);
    for (auto& d : docs) {
        const uint32_t s = split_of(d.id, splits);
        result.split_sizes[s]++;
        parts[s].push_back(std::move(d));
    }
    docs.clear();

    std::vector<Document> pooled;
    for (uint32_t s = 0; s < splits; ++s) {
        if (parts[s].empty()) continue;
        auto r = dedup_batch(std::move(parts[s]), cfg, norm, counters);
        result.stage1_removed += r.removed;
        for (auto& d : r.survivors) pooled.push_back(std::move(d));
    }

    auto final_round = dedup_batch(std::move(pooled), cfg, norm, nullptr);
    result.stage2_removed = final_round.removed;
    result.survivors = std::move(final_round.survivors);
    return result;
}

} // namespace winnow
