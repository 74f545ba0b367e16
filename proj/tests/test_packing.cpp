#include <catch2/catch_amalgamated.hpp>

#include <numeric>

#include "support/fixtures.hpp"
#include "winnow/packing.hpp"

using namespace winnow;
using wtest::make_doc;

namespace {

// Reference packer: materializes each group and cuts it in one go.
struct NaivePacked {
    std::vector<uint32_t> emitted;
    std::vector<uint64_t> boundaries;
    uint64_t wasted = 0;
};

NaivePacked naive_pack(const std::vector<std::vector<uint32_t>>& docs, uint32_t seq_len,
                       uint32_t group_size) {
    NaivePacked out;
    for (size_t g = 0; g * group_size < docs.size(); ++g) {
        const size_t begin = g * group_size;
        const size_t end = std::min(docs.size(), begin + group_size);
        std::vector<uint32_t> concat;
        std::vector<uint64_t> ends; // cumulative within the group
        for (size_t i = begin; i < end; ++i) {
            concat.insert(concat.end(), docs[i].begin(), docs[i].end());
            ends.push_back(concat.size());
        }
        const uint64_t keep = concat.size() / seq_len * seq_len;
        const uint64_t base = out.emitted.size();
        out.emitted.insert(out.emitted.end(), concat.begin(), concat.begin() + keep);
        out.wasted += concat.size() - keep;
        for (uint64_t e : ends) out.boundaries.push_back(base + std::min(e, keep));
    }
    return out;
}

} // namespace

TEST_CASE("byte tokenizer maps bytes to ids", "[packing]") {
    ByteTokenizer tok;
    CHECK(tok.encode("ab") == std::vector<uint32_t>{97, 98});
    CHECK(tok.vocab_size() == 256);
    CHECK(make_tokenizer("byte")->name() == "byte");
    CHECK_THROWS_AS(make_tokenizer("sentencepiece"), UsageError);
    // high bytes stay unsigned
    CHECK(tok.encode("\xC3\xA9") == std::vector<uint32_t>{0xC3, 0xA9});
}

TEST_CASE("document tokenization is chunk-invariant", "[packing]") {
    ByteTokenizer tok;
    CHECK_THROWS_AS(tokenize_document(make_doc("e", ""), tok), DataError);

    SECTION("small chunks over multi-byte text") {
        std::string text;
        for (int i = 0; i < 300; ++i) text += (i % 3 == 0) ? "é" : "a"; // mixes 1- and 2-byte chars
        const Document d = make_doc("d", text);
        const auto direct = tok.encode(d.text);
        for (size_t chunk : {3u, 5u, 7u, 64u})
            CHECK(tokenize_document(d, tok, chunk) == direct);
    }
    SECTION("a document larger than the default chunk") {
        Document d = make_doc("big", std::string(2'000'000, 'x'));
        d.text[0] = 'a';
        d.text.back() = 'z';
        const auto toks = tokenize_document(d, tok); // crosses the 1 MiB chunk boundary
        REQUIRE(toks.size() == 2'000'000);
        CHECK(toks.front() == 'a');
        CHECK(toks.back() == 'z');
        CHECK(toks[1'000'000] == 'x');
    }
}

TEST_CASE("packing a five-token doc at seq_len four wastes one token", "[packing]") {
    std::vector<std::vector<uint32_t>> emitted;
    GroupPacker packer(4, 16, [&](const std::vector<uint32_t>& s) { emitted.push_back(s); });
    packer.add({"d", {1, 2, 3, 4, 5}});
    const auto report = packer.finish();
    REQUIRE(emitted.size() == 1);
    CHECK(emitted[0] == std::vector<uint32_t>{1, 2, 3, 4});
    CHECK(report.sequences_in == 1);
    CHECK(report.tokens_in == 5);
    CHECK(report.tokens_emitted == 4);
    CHECK(report.tokens_wasted == 1);
    CHECK(report.groups == 1);
    CHECK(packer.boundaries() == std::vector<uint64_t>{4}); // end clamped into the emitted extent
}

TEST_CASE("groups totaling an exact multiple emit with zero waste", "[packing]") {
    size_t count = 0;
    GroupPacker packer(4, 2, [&](const std::vector<uint32_t>& s) {
        ++count;
        CHECK(s.size() == 4);
    });
    packer.add({"a", {1, 2, 3}});
    packer.add({"b", {4, 5, 6, 7, 8}}); // group closes at 8 tokens
    const auto report = packer.finish();
    CHECK(count == 2);
    CHECK(report.tokens_wasted == 0);
    CHECK(report.tokens_emitted == 8);
    CHECK(packer.boundaries() == std::vector<uint64_t>{3, 8});
}

TEST_CASE("empty sequences are rejected by the packer", "[packing]") {
    GroupPacker packer(4, 2, [](const std::vector<uint32_t>&) {});
    CHECK_THROWS_AS(packer.add({"empty", {}}), DataError);
    CHECK_THROWS_AS(GroupPacker(1, 2, [](const std::vector<uint32_t>&) {}), UsageError);
    CHECK_THROWS_AS(GroupPacker(4, 0, [](const std::vector<uint32_t>&) {}), UsageError);
}

TEST_CASE("streamed packing matches the materializing reference", "[packing]") {
    Rng rng(404);
    for (int run = 0; run < 30; ++run) {
        const uint32_t seq_len = 2 + static_cast<uint32_t>(rng.next_below(15));
        const uint32_t group_size = 1 + static_cast<uint32_t>(rng.next_below(5));
        const size_t n_docs = rng.next_below(40);
        std::vector<std::vector<uint32_t>> docs(n_docs);
        uint64_t total_in = 0;
        for (auto& d : docs) {
            d.resize(1 + rng.next_below(50));
            for (auto& t : d) t = static_cast<uint32_t>(rng.next_below(1000));
            total_in += d.size();
        }

        std::vector<uint32_t> emitted;
        GroupPacker packer(seq_len, group_size, [&](const std::vector<uint32_t>& s) {
            REQUIRE(s.size() == seq_len);
            emitted.insert(emitted.end(), s.begin(), s.end());
        });
        for (size_t i = 0; i < docs.size(); ++i)
            packer.add({"d" + std::to_string(i), docs[i]});
        const auto report = packer.finish();

        const auto expect = naive_pack(docs, seq_len, group_size);
        CHECK(emitted == expect.emitted);
        CHECK(packer.boundaries() == expect.boundaries);
        CHECK(report.tokens_in == total_in);
        CHECK(report.tokens_emitted + report.tokens_wasted == report.tokens_in);
        CHECK(report.tokens_emitted == emitted.size());
        // per-group waste is strictly below seq_len
        CHECK(report.tokens_wasted <= report.groups * (seq_len - 1));
        CHECK(std::is_sorted(packer.boundaries().begin(), packer.boundaries().end()));
        if (!packer.boundaries().empty())
            CHECK(packer.boundaries().back() == report.tokens_emitted);
    }
}

TEST_CASE("full-scale group stays under the 0.01% waste bound", "[packing]") {
    // 8,192 docs averaging ~5,000 tokens in one group at seq_len 4,096:
    // waste is the sub-4,096 remainder of a ~41M-token group.
    Rng rng(2024);
    uint64_t emitted_seqs = 0;
    GroupPacker packer(4096, 8192,
                       [&](const std::vector<uint32_t>&) { ++emitted_seqs; });
    TokenSequence seq;
    for (int i = 0; i < 8192; ++i) {
        seq.doc_id = "d" + std::to_string(i);
        seq.tokens.assign(4000 + rng.next_below(2001), 7); // 4,000..6,000, mean 5,000
        packer.add(seq);
    }
    const auto report = packer.finish();
    CHECK(report.groups == 1);
    CHECK(report.tokens_wasted < 4096);
    CHECK(report.waste_ratio() <= 4095.0 / 40'960'000.0);
    CHECK(report.tokens_emitted == emitted_seqs * 4096);
}

TEST_CASE("shuffle buffer of size one preserves order", "[packing]") {
    std::vector<std::string> out;
    ShuffleBuffer buf(1, 99, [&](TokenSequence&& s) { out.push_back(s.doc_id); });
    for (int i = 0; i < 5; ++i) buf.add({"d" + std::to_string(i), {1}});
    buf.finish();
    CHECK(out == std::vector<std::string>{"d0", "d1", "d2", "d3", "d4"});
    CHECK_THROWS_AS(ShuffleBuffer(0, 1, [](TokenSequence&&) {}), UsageError);
}

TEST_CASE("shuffle buffer permutes within windows and is seed-stable", "[packing]") {
    auto run = [](uint64_t seed) {
        std::vector<std::string> out;
        ShuffleBuffer buf(10, seed, [&](TokenSequence&& s) { out.push_back(s.doc_id); });
        for (int i = 0; i < 25; ++i) buf.add({"d" + std::to_string(i), {uint32_t(i)}});
        buf.finish();
        return out;
    };
    const auto a = run(5);
    REQUIRE(a.size() == 25);
    // each window holds exactly its own input, permuted
    for (size_t w = 0; w < 3; ++w) {
        const size_t lo = w * 10, hi = std::min<size_t>(25, lo + 10);
        std::set<std::string> got(a.begin() + lo, a.begin() + hi);
        std::set<std::string> want;
        for (size_t i = lo; i < hi; ++i) want.insert("d" + std::to_string(i));
        CHECK(got == want);
    }
    CHECK(run(5) == a);
    CHECK(run(6) != a);
}

TEST_CASE("shuffling smears adjacent duplicates apart", "[packing]") {
    // 100 duplicated docs arrive as adjacent pairs inside a 1,000-doc window.
    // A uniform permutation leaves a given pair adjacent with probability
    // exactly 2/B, so the expected adjacent-duplicate count is 2k/B = 0.2
    // (versus 100 before shuffling). Averaged over 1,000 seeds the observed
    // mean must stay below 5x that expectation.
    const size_t B = 1000, k = 100;
    std::vector<uint32_t> stream_ids; // content id per stream slot
    for (size_t i = 0; i < k; ++i) {
        stream_ids.push_back(static_cast<uint32_t>(i));
        stream_ids.push_back(static_cast<uint32_t>(i));
    }
    for (size_t i = 0; i < B - 2 * k; ++i) stream_ids.push_back(static_cast<uint32_t>(k + i));

    size_t before = 0;
    for (size_t i = 0; i + 1 < stream_ids.size(); ++i)
        if (stream_ids[i] == stream_ids[i + 1]) ++before;
    REQUIRE(before == k);

    uint64_t adjacent_total = 0;
    for (uint64_t seed = 0; seed < 1000; ++seed) {
        std::vector<uint32_t> out;
        out.reserve(B);
        ShuffleBuffer buf(B, seed, [&](TokenSequence&& s) { out.push_back(s.tokens[0]); });
        for (uint32_t id : stream_ids) buf.add({"", {id}});
        buf.finish();
        for (size_t i = 0; i + 1 < out.size(); ++i)
            if (out[i] == out[i + 1]) ++adjacent_total;
    }
    const double mean = adjacent_total / 1000.0;
    const double expected = 2.0 * k / B; // 0.2
    CHECK(mean <= 5.0 * expected);
    CHECK(mean >= expected / 2.0); // sanity: the permutation is genuinely uniform-ish
}

TEST_CASE("token shards carry the exact binary header", "[packing]") {
    wtest::TempDir dir;
    const auto tokens_path = (dir.path() / "s.tok").string();
    const auto offsets_path = (dir.path() / "s.idx").string();
    {
        TokenShardWriter w(tokens_path, offsets_path);
        w.write_tokens({1, 258, 0x01020304});
        w.set_boundaries({2, 3});
        w.finish();
    }
    std::ifstream in(tokens_path, std::ios::binary);
    std::vector<unsigned char> raw((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    REQUIRE(raw.size() == 8 + 2 + 1 + 3 * 4);
    CHECK(std::string(raw.begin(), raw.begin() + 8) == "GPRNTOK1");
    CHECK(raw[8] == 1);  // version, little-endian u16
    CHECK(raw[9] == 0);
    CHECK(raw[10] == 4); // token width in bytes
    CHECK(raw[11] == 1); // first token id, LE
    CHECK(raw[15] == 2); // second token 258 = 0x0102
    CHECK(raw[16] == 1);
    CHECK(raw[19] == 0x04); // third token LE low byte
    CHECK(raw[22] == 0x01);

    const auto shard = read_token_shard(tokens_path, offsets_path);
    CHECK(shard.tokens == std::vector<uint32_t>{1, 258, 0x01020304});
    CHECK(shard.boundaries == std::vector<uint64_t>{2, 3});
}

TEST_CASE("corrupt token shards are rejected", "[packing]") {
    wtest::TempDir dir;
    const auto path = (dir.path() / "bad.tok").string();

    SECTION("wrong magic") {
        std::ofstream(path, std::ios::binary) << "NOTMAGIC" << std::string(3, '\0');
        CHECK_THROWS_AS(read_token_shard(path), DataError);
    }
    SECTION("trailing partial token") {
        {
            TokenShardWriter w(path);
            w.write_tokens({1, 2});
            w.finish();
        }
        std::ofstream app(path, std::ios::binary | std::ios::app);
        app.write("\x05\x05", 2);
        app.close();
        CHECK_THROWS_AS(read_token_shard(path), DataError);
    }
    SECTION("unsupported version") {
        std::ofstream out(path, std::ios::binary);
        out.write(kTokenMagic, 8);
        detail::put_u16(out, 9);
        out.put(4);
        out.close();
        CHECK_THROWS_AS(read_token_shard(path), DataError);
    }
    SECTION("missing file") { CHECK_THROWS_AS(read_token_shard(path), IoError); }
    SECTION("abandoned writer cleans up its partial file") {
        { TokenShardWriter w(path); w.write_tokens({1}); }
        CHECK_FALSE(std::filesystem::exists(path));
    }
}
