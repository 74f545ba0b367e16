#pragma once

// Shared test utilities: temp dirs, synthetic corpora, naive oracles, and
// the statistical helpers the randomized tests lean on.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "winnow/dedup.hpp"
#include "winnow/document.hpp"
#include "winnow/filtering.hpp"
#include "winnow/ngram_index.hpp"
#include "winnow/rng.hpp"

namespace wtest {

class TempDir {
public:
    TempDir() {
        auto base = std::filesystem::temp_directory_path();
        for (int i = 0;; ++i) {
            auto candidate = base / ("winnow-test-" + std::to_string(::getpid()) + "-" +
                                     std::to_string(counter_++) + "-" + std::to_string(i));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path_ = candidate;
                return;
            }
        }
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    static inline int counter_ = 0;
    std::filesystem::path path_;
};

inline winnow::Document make_doc(std::string id, std::string text, std::string lang = "en",
                                 std::string source = "src") {
    winnow::Document d;
    d.id = std::move(id);
    d.text = std::move(text);
    d.lang = std::move(lang);
    d.source = std::move(source);
    return d;
}

// English-looking word soup: function words mixed with content words so
// the default heuristic filters keep it.
inline const std::vector<std::string>& word_pool() {
    static const std::vector<std::string> pool = [] {
        std::vector<std::string> p = {"the",  "be",   "to",   "of",   "and",  "that",
                                      "have", "with", "for",  "not",  "on",   "as"};
        const char* stems[] = {"river",  "castle", "engine", "garden", "model",  "window",
                               "market", "signal", "branch", "stone",  "valley", "copper",
                               "harbor", "meadow", "lantern", "craft",  "timber", "spiral",
                               "ember",  "quarry", "willow", "falcon", "ridge",  "anchor"};
        for (const char* a : stems)
            for (const char* b : stems) p.push_back(std::string(a) + b);
        return p;
    }();
    return pool;
}

inline std::string random_text(winnow::Rng& rng, size_t words) {
    const auto& pool = word_pool();
    std::string out;
    for (size_t i = 0; i < words; ++i) {
        if (i) out.push_back(i % 13 == 0 ? '\n' : ' ');
        // every third word a stopword keeps stopword_fraction near 0.33
        if (i % 3 == 0) out += pool[rng.next_below(12)];
        else out += pool[12 + rng.next_below(pool.size() - 12)];
    }
    return out;
}

inline winnow::FilterConfig test_filter_config() {
    winnow::FilterConfig cfg;
    winnow::StopwordList en;
    en.words = {"the", "be", "to", "of", "and", "that", "have", "with"};
    cfg.stopwords["en"] = std::move(en);
    winnow::StopwordList fr;
    fr.words = {"le", "la", "les", "de", "des", "et", "que", "avec", "pour", "dans"};
    cfg.stopwords["fr"] = std::move(fr);
    return cfg;
}

// Exact word-shingle Jaccard, the quantity the near-dedup banding targets.
inline double shingle_jaccard(const std::string& a, const std::string& b,
                              const winnow::ShingleNormalizer& norm, uint32_t k) {
    auto sa = winnow::shingle_hashes(a, norm, k);
    auto sb = winnow::shingle_hashes(b, norm, k);
    std::set<uint64_t> A(sa.begin(), sa.end()), B(sb.begin(), sb.end());
    size_t inter = 0;
    for (uint64_t x : A) inter += B.count(x);
    const size_t uni = A.size() + B.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Builds a near-duplicate of `text` by replacing `replacements` words
// spaced far apart, which lowers shingle Jaccard in a controlled way.
inline std::string perturb_words(const std::string& text, size_t replacements,
                                 winnow::Rng& rng) {
    std::vector<std::string> words;
    {
        std::string cur;
        for (char c : text) {
            if (c == ' ' || c == '\n') {
                if (!cur.empty()) words.push_back(cur);
                cur.clear();
            } else cur.push_back(c);
        }
        if (!cur.empty()) words.push_back(cur);
    }
    const size_t stride = replacements == 0 ? words.size() : words.size() / (replacements + 1);
    for (size_t r = 1; r <= replacements && r * stride < words.size(); ++r)
        words[r * stride] = "swapped" + std::to_string(rng.next_u64() % 1000000);
    std::string out;
    for (size_t i = 0; i < words.size(); ++i) {
        if (i) out.push_back(' ');
        out += words[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Naive n-gram oracle: counts occurrences of the normalized query in each
// document independently (so matches can never span documents).

inline uint64_t naive_count(const std::vector<winnow::Document>& docs,
                            const std::string& query, const winnow::NormalizationSpec& spec) {
    uint64_t total = 0;
    if (spec.mode == winnow::NormalizationSpec::Mode::word) {
        const auto q = spec.normalize_words(query);
        if (q.empty()) return 0;
        for (const auto& d : docs) {
            const auto t = spec.normalize_words(d.text);
            if (t.size() < q.size()) continue;
            for (size_t i = 0; i + q.size() <= t.size(); ++i)
                if (std::equal(q.begin(), q.end(), t.begin() + i)) ++total;
        }
    } else {
        if (query.empty()) return 0;
        for (const auto& d : docs) {
            size_t pos = 0;
            while ((pos = d.text.find(query, pos)) != std::string::npos) {
                ++total;
                ++pos;
            }
        }
    }
    return total;
}

inline std::vector<std::string> naive_doc_ids(const std::vector<winnow::Document>& docs,
                                              const std::string& query,
                                              const winnow::NormalizationSpec& spec) {
    std::vector<std::string> out;
    for (const auto& d : docs)
        if (naive_count({d}, query, spec) > 0) out.push_back(d.id);
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------
// Statistics

// Chi-square goodness-of-fit p-value for observed counts vs expected
// probabilities.
inline double chi_square_p(const std::vector<uint64_t>& observed,
                           const std::vector<double>& probs) {
    if (observed.size() != probs.size() || observed.size() < 2)
        throw std::invalid_argument("chi_square_p: size mismatch");
    uint64_t n = 0;
    for (uint64_t o : observed) n += o;
    double stat = 0.0;
    for (size_t i = 0; i < observed.size(); ++i) {
        const double e = probs[i] * static_cast<double>(n);
        if (e <= 0.0) throw std::invalid_argument("chi_square_p: zero expected cell");
        const double d = static_cast<double>(observed[i]) - e;
        stat += d * d / e;
    }
    boost::math::chi_squared dist(static_cast<double>(observed.size() - 1));
    return boost::math::cdf(boost::math::complement(dist, stat));
}

// One-sample Kolmogorov–Smirnov test against U(0,1): asymptotic p-value
// with the Stephens small-sample correction. (The installed boost.math
// predates its KS distribution, so the series is rolled here, test-side.)
inline double ks_uniform_p(std::vector<double> xs) {
    const size_t n = xs.size();
    if (n == 0) throw std::invalid_argument("ks_uniform_p: empty sample");
    std::sort(xs.begin(), xs.end());
    double d = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double cdf = std::min(1.0, std::max(0.0, xs[i]));
        d = std::max(d, cdf - static_cast<double>(i) / n);
        d = std::max(d, static_cast<double>(i + 1) / n - cdf);
    }
    const double sn = std::sqrt(static_cast<double>(n));
    const double t = (sn + 0.12 + 0.11 / sn) * d;
    double sum = 0.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = 2.0 * (j % 2 == 1 ? 1.0 : -1.0) * std::exp(-2.0 * j * j * t * t);
        sum += term;
        if (std::abs(term) < 1e-12) break;
    }
    return std::min(1.0, std::max(0.0, sum));
}

} // namespace wtest
