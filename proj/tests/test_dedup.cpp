#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "support/fixtures.hpp"
#include "winnow/dedup.hpp"

using namespace winnow;
using wtest::make_doc;
using Catch::Approx;

namespace {

MinHashConfig small_cfg() {
    MinHashConfig cfg; // 16 bands x 8 rows, 13-word shingles
    cfg.seed = 42;
    return cfg;
}

} // namespace

TEST_CASE("shingling: short texts collapse to one shingle, long texts slide", "[dedup]") {
    ShingleNormalizer norm;
    CHECK(shingle_hashes("one two three", norm, 13).size() == 1);
    CHECK(shingle_hashes("", norm, 13).empty());

    Rng rng(1);
    const std::string text = wtest::random_text(rng, 100);
    // 100 words, window 13 -> 88 shingles (all distinct with random words)
    CHECK(shingle_hashes(text, norm, 13).size() == 88);
}

TEST_CASE("shingle normalization: case, whitespace, and stripped patterns", "[dedup]") {
    ShingleNormalizer norm;
    const auto a = shingle_hashes("The Quick   Brown\nFox", norm, 2);
    const auto b = shingle_hashes("the quick brown fox", norm, 2);
    CHECK(a == b);

    ShingleNormalizer strip;
    strip.strip_patterns = {"lundi", "mardi"};
    const auto c = shingle_hashes("lundi the quick brown fox", strip, 2);
    const auto d = shingle_hashes("the quick MARDI brown fox", strip, 2);
    CHECK(c == d);
    CHECK(strip.normalize("Lundi  le\tChat") == "le chat");
}

TEST_CASE("minhash signatures estimate shingle jaccard", "[dedup]") {
    const auto cfg = small_cfg();
    ShingleNormalizer norm;
    Rng rng(2);
    const std::string base = wtest::random_text(rng, 500);
    const std::string twin = wtest::perturb_words(base, 2, rng);
    const double j = wtest::shingle_jaccard(base, twin, norm, cfg.shingle_words);
    REQUIRE(j > 0.8); // construction sanity

    const auto sig_a = minhash_signature(shingle_hashes(base, norm, 13), cfg);
    const auto sig_b = minhash_signature(shingle_hashes(twin, norm, 13), cfg);
    REQUIRE(sig_a.size() == 128);
    const double sim = signature_similarity(sig_a, sig_b);
    // 128 slots: 5 sigma of sqrt(j(1-j)/128) is about 0.14
    CHECK(std::abs(sim - j) < 0.15);

    const std::string other = wtest::random_text(rng, 500);
    CHECK(signature_similarity(sig_a, minhash_signature(shingle_hashes(other, norm, 13), cfg)) <
          0.2);
    CHECK(minhash_signature(shingle_hashes(base, norm, 13), cfg) == sig_a); // deterministic
}

TEST_CASE("candidate probability follows the banding formula", "[dedup]") {
    const auto cfg = small_cfg();
    CHECK(candidate_probability(1.0, cfg) == Approx(1.0));
    CHECK(candidate_probability(0.0, cfg) == Approx(0.0));
    CHECK(candidate_probability(0.7, cfg) ==
          Approx(1.0 - std::pow(1.0 - std::pow(0.7, 8), 16)));
}

TEST_CASE("dedup merges exact and near duplicates, keeps smallest id, pools weight",
          "[dedup]") {
    const auto cfg = small_cfg();
    ShingleNormalizer norm;
    Rng rng(3);
    const std::string text = wtest::random_text(rng, 300);

    std::vector<Document> docs;
    docs.push_back(make_doc("b-copy", text));
    docs.push_back(make_doc("a-copy", text));               // same text, smaller id
    docs.push_back(make_doc("c-near", wtest::perturb_words(text, 1, rng)));
    docs.push_back(make_doc("d-other", wtest::random_text(rng, 300)));

    DedupCounters counters;
    const auto result = dedup_batch(docs, cfg, norm, &counters);
    REQUIRE(result.survivors.size() == 2);
    CHECK(result.clusters == 2);
    CHECK(result.removed == 2);
    CHECK(result.survivors[0].id == "a-copy");
    CHECK(dup_count(result.survivors[0]) == 3);
    CHECK(result.survivors[1].id == "d-other");
    CHECK(dup_count(result.survivors[1]) == 1);
    CHECK(counters.input_docs == 4);
    CHECK(counters.candidate_pairs > 0);
}

TEST_CASE("dedup conserves total weight and composes existing dup_counts", "[dedup]") {
    const auto cfg = small_cfg();
    ShingleNormalizer norm;
    Rng rng(4);
    std::vector<Document> docs;
    uint64_t weight_in = 0;
    for (int i = 0; i < 50; ++i) {
        Document d = make_doc("d" + std::to_string(i), wtest::random_text(rng, 150));
        if (i % 7 == 0) {
            d.meta["dup_count"] = 3; // pre-pooled weight from an earlier round
        }
        weight_in += dup_count(d);
        // plant a near-copy of every fifth doc
        if (i % 5 == 0) {
            Document copy = make_doc("d" + std::to_string(i) + "-copy",
                                     wtest::perturb_words(d.text, 1, rng));
            weight_in += 1;
            docs.push_back(std::move(copy));
        }
        docs.push_back(std::move(d));
    }
    const auto result = dedup_batch(docs, cfg, norm, nullptr);
    uint64_t weight_out = 0;
    for (const auto& d : result.survivors) weight_out += dup_count(d);
    CHECK(weight_out == weight_in);
    CHECK(result.survivors.size() < docs.size());
}

TEST_CASE("documents with no shingles survive unclustered", "[dedup]") {
    const auto cfg = small_cfg();
    ShingleNormalizer norm;
    norm.strip_patterns = {"lundi"};
    std::vector<Document> docs;
    docs.push_back(make_doc("p1", "  \t \n ")); // whitespace only
    docs.push_back(make_doc("p2", "lundi Lundi LUNDI")); // all words stripped
    DedupCounters counters;
    const auto result = dedup_batch(docs, cfg, norm, &counters);
    CHECK(result.survivors.size() == 2); // never merged, never clustered
    CHECK(counters.empty_shingle_docs == 2);
}

TEST_CASE("duplicate ids are rejected", "[dedup]") {
    const auto cfg = small_cfg();
    ShingleNormalizer norm;
    std::vector<Document> docs{make_doc("same", "text one"), make_doc("same", "text two")};
    CHECK_THROWS_AS(dedup_batch(docs, cfg, norm, nullptr), DataError);
}

TEST_CASE("banding smoke: high-similarity pairs collide, low-similarity pairs do not",
          "[dedup]") {
    const auto cfg = small_cfg();
    ShingleNormalizer norm;
    Rng rng(5);
    int high_hits = 0, low_hits = 0;
    const int pairs = 60;
    for (int i = 0; i < pairs; ++i) {
        const std::string a = wtest::random_text(rng, 400);
        const std::string near = wtest::perturb_words(a, 2, rng); // jaccard ~0.87
        const std::string far = wtest::random_text(rng, 400);

        const auto ka = band_keys(minhash_signature(shingle_hashes(a, norm, 13), cfg), cfg);
        const auto kn = band_keys(minhash_signature(shingle_hashes(near, norm, 13), cfg), cfg);
        const auto kf = band_keys(minhash_signature(shingle_hashes(far, norm, 13), cfg), cfg);
        bool hit_near = false, hit_far = false;
        for (uint32_t b = 0; b < cfg.bands; ++b) {
            hit_near |= ka[b] == kn[b];
            hit_far |= ka[b] == kf[b];
        }
        high_hits += hit_near;
        low_hits += hit_far;
    }
    // P(candidate) at j~0.87 is ~0.98; at j~0 it is ~0.
    CHECK(high_hits >= pairs - 5);
    CHECK(low_hits == 0);
}

TEST_CASE("split assignment is a pure function of the id", "[dedup]") {
    CHECK(split_of("doc-1", 10) == split_of("doc-1", 10));
    CHECK_THROWS_AS(split_of("doc-1", 0), UsageError);
    // spread: 1000 ids over 10 splits, each split gets a reasonable share
    std::vector<int> counts(10, 0);
    for (int i = 0; i < 1000; ++i) ++counts[split_of("id-" + std::to_string(i), 10)];
    for (int c : counts) {
        CHECK(c > 50);
        CHECK(c < 200);
    }
}

TEST_CASE("two-stage dedup matches single-stage on a planted corpus", "[dedup]") {
    const auto cfg = small_cfg();
    ShingleNormalizer norm;
    Rng rng(6);
    std::vector<Document> docs;
    for (int i = 0; i < 300; ++i) {
        Document d = make_doc("base-" + std::to_string(i), wtest::random_text(rng, 200));
        if (i % 3 == 0)
            docs.push_back(make_doc("copy-" + std::to_string(i),
                                    wtest::perturb_words(d.text, 1, rng)));
        docs.push_back(std::move(d));
    }

    const auto single = dedup_batch(docs, cfg, norm, nullptr);
    const auto staged = two_stage_dedup(docs, cfg, norm, 10, nullptr);

    std::set<std::string> single_ids, staged_ids;
    for (const auto& d : single.survivors) single_ids.insert(d.id);
    for (const auto& d : staged.survivors) staged_ids.insert(d.id);
    CHECK(single_ids == staged_ids);

    uint64_t single_weight = 0, staged_weight = 0;
    for (const auto& d : single.survivors) single_weight += dup_count(d);
    for (const auto& d : staged.survivors) staged_weight += dup_count(d);
    CHECK(single_weight == docs.size());
    CHECK(staged_weight == docs.size());

    uint64_t split_total = 0;
    for (uint64_t s : staged.split_sizes) split_total += s;
    CHECK(split_total == docs.size());
    CHECK(staged.stage1_removed + staged.stage2_removed == docs.size() - staged_ids.size());
}

TEST_CASE("minhash config is validated", "[dedup]") {
    MinHashConfig cfg;
    cfg.bands = 10; // 10 * 8 != 128
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg.bands = 16;
    cfg.shingle_words = 0;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
}
