#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "docent/corpus.hpp"
#include "docent/error.hpp"
#include "docent/text.hpp"
#include "test_support.hpp"

using namespace docent;
using docent::testing::fixture_path;
using docent::testing::sliding_window_oracle;
using docent::testing::TempDir;

namespace {

std::vector<CharSpan> spans_of(const std::vector<TextChunk>& chunks) {
    std::vector<CharSpan> out;
    for (const auto& c : chunks) out.push_back(c.span);
    return out;
}

void write(const std::filesystem::path& p, const std::string& s) {
    std::ofstream(p, std::ios::binary) << s;
}

}  // namespace

TEST(CleanText, NormalizesLineEndingsAndBlankLines) {
    EXPECT_EQ(clean_text("a\r\nb\rc"), "a\nb\nc");
    EXPECT_EQ(clean_text("a\n\n\n\n\nb"), "a\n\nb");
    EXPECT_EQ(clean_text("a\n   \n\t\n\nb"), "a\n\nb");
    EXPECT_EQ(clean_text("\n\n  Title\n\nBody.  \n\n"), "Title\n\nBody.");
    EXPECT_EQ(clean_text(" \n\t \n"), "");
}

TEST(CleanText, IsIdempotent) {
    std::mt19937_64 rng(7);
    const std::vector<std::string> alphabet = {"a", "b", " ", "\t", "\n", "\r", "\r\n", ".", "\xC3\xA9"};
    for (int i = 0; i < 500; ++i) {
        const auto raw = docent::testing::random_text(rng, alphabet, 0, 80);
        const auto once = clean_text(raw);
        EXPECT_EQ(clean_text(once), once) << raw;
        EXPECT_EQ(once.find("\n\n\n"), std::string::npos);
        EXPECT_EQ(once.find('\r'), std::string::npos);
    }
}

TEST(Splitter, ThreeWindowsForTwentyFiveHundredChars) {
    const std::string text(2500, 'x');
    const auto chunks = split_recursive(text, {});
    const std::vector<CharSpan> want = {{0, 1000}, {800, 1800}, {1600, 2500}};
    EXPECT_EQ(spans_of(chunks), want);
}

TEST(Splitter, MatchesSlidingWindowOnSeparatorFreeText) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::size_t> size_dist(1, 300);
    for (int i = 0; i < 200; ++i) {
        const std::size_t size = size_dist(rng);
        const std::size_t overlap = std::uniform_int_distribution<std::size_t>(0, size - 1)(rng);
        const auto text = docent::testing::random_text(rng, {"a", "b", "c", "\xC3\xA4"}, 0, 2000);
        const auto n = text::decode_utf8(text).size();
        SplitOptions opts{size, overlap, {"\n\n", "\n", ". ", " ", ""}};
        const auto chunks = split_recursive(text, opts);
        ASSERT_EQ(spans_of(chunks), sliding_window_oracle(n, size, overlap)) << "size=" << size << " overlap=" << overlap;
        const auto cps = text::decode_utf8(text);
        for (const auto& c : chunks) {
            EXPECT_EQ(c.text, text::encode_utf8(std::u32string_view(cps).substr(c.span.start, c.span.size())));
        }
    }
}

TEST(Splitter, ReconstructsMixedText) {
    std::mt19937_64 rng(13);
    const std::vector<std::string> alphabet = {"word", "dome", " ", " ", ". ", "\n", "\n\n", "x", "\xE2\x82\xAC"};
    for (int i = 0; i < 200; ++i) {
        const auto text = docent::testing::random_text(rng, alphabet, 0, 600);
        SplitOptions opts{50 + static_cast<std::size_t>(i % 7) * 20, static_cast<std::size_t>(i % 5) * 8,
                          {"\n\n", "\n", ". ", " ", ""}};
        const auto chunks = split_recursive(text, opts);
        EXPECT_EQ(reconstruct_text(chunks), text);
        for (size_t k = 0; k < chunks.size(); ++k) {
            EXPECT_LE(chunks[k].span.size(), opts.chunk_size);
            EXPECT_EQ(chunks[k].index, k);
            if (k > 0) {
                EXPECT_LE(chunks[k].span.start, chunks[k - 1].span.end);
                EXPECT_GT(chunks[k].span.end, chunks[k - 1].span.end);
                EXPECT_LE(chunks[k - 1].span.end - chunks[k].span.start, opts.chunk_overlap);
            } else {
                EXPECT_EQ(chunks[k].span.start, 0u);
            }
        }
    }
}

TEST(Splitter, PrefersParagraphBoundaries) {
    const std::string para(60, 'a');
    const std::string text = para + "\n\n" + para + "\n\n" + para;
    const auto chunks = split_recursive(text, {130, 0, {"\n\n", "\n", ". ", " ", ""}});
    ASSERT_EQ(chunks.size(), 2u);
    EXPECT_EQ(chunks[0].text, para + "\n\n" + para + "\n\n");
    EXPECT_EQ(chunks[1].text, para);
}

TEST(Splitter, RejectsInvalidOptions) {
    EXPECT_THROW(split_recursive("abc", {0, 0, {""}}), ConfigError);
    EXPECT_THROW(split_recursive("abc", {10, 10, {""}}), ConfigError);
    EXPECT_THROW(split_recursive("abc", {10, 2, {" "}}), ConfigError);
    EXPECT_TRUE(split_recursive("", {}).empty());
}

TEST(Metadata, ParsesAndNamesBadFields) {
    const auto [m, id] = parse_metadata(nlohmann::json{
        {"author", "A"}, {"title", "T"}, {"publication_type", "book"}, {"relevance", "Adjacent"}, {"doc_id", "d1"}});
    EXPECT_EQ(m.relevance, RelevanceClass::adjacent);
    EXPECT_EQ(id, "d1");

    try {
        parse_metadata(nlohmann::json{{"author", "A"}, {"title", "T"}, {"publication_type", ""}, {"relevance", "primary"}});
        FAIL();
    } catch (const IngestError& e) {
        EXPECT_NE(std::string(e.what()).find("relevance"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("adjacent"), std::string::npos);
    }
    EXPECT_THROW(parse_metadata(nlohmann::json{{"title", "T"}, {"publication_type", ""}, {"relevance", "main"}}),
                 IngestError);
    EXPECT_THROW(parse_metadata(nlohmann::json{{"author", ""}, {"title", "T"}, {"publication_type", ""}, {"relevance", "main"}}),
                 IngestError);
}

TEST(Ingest, StampsEveryChunkWithMetadata) {
    DocumentMetadata meta{"A", "T", "article", RelevanceClass::relevant};
    const std::string raw = "First paragraph.\r\n\r\n\r\nSecond paragraph with more words in it.";
    auto [doc, chunks] = make_document("doc", raw, meta, {30, 5, {"\n\n", "\n", ". ", " ", ""}});
    EXPECT_EQ(doc.text, "First paragraph.\n\nSecond paragraph with more words in it.");
    ASSERT_FALSE(chunks.empty());
    for (size_t i = 0; i < chunks.size(); ++i) {
        EXPECT_EQ(chunks[i].chunk_id, "doc#" + std::to_string(i));
        EXPECT_EQ(chunks[i].metadata, meta);
        EXPECT_EQ(chunks[i].doc_id, "doc");
    }
    EXPECT_THROW(make_document("doc", " \n ", meta, {}), IngestError);
    EXPECT_THROW(make_document("doc", "bad \xFF", meta, {}), IngestError);
}

TEST(Ingest, LoadsFixtureCorpusSortedByName) {
    const auto docs = load_corpus(fixture_path("corpus"), {200, 40, {"\n\n", "\n", ". ", " ", ""}});
    ASSERT_EQ(docs.size(), 3u);
    EXPECT_EQ(docs[0].document.doc_id, "ashford_survey");
    EXPECT_EQ(docs[0].document.metadata.relevance, RelevanceClass::main);
    EXPECT_EQ(docs[1].document.metadata.relevance, RelevanceClass::relevant);
    EXPECT_EQ(docs[2].document.metadata.relevance, RelevanceClass::adjacent);
    for (const auto& d : docs) EXPECT_GT(d.chunks.size(), 0u);
}

TEST(Ingest, RejectsMissingSidecarAndDuplicateIds) {
    TempDir dir;
    write(dir / "a.txt", "alpha");
    EXPECT_THROW(load_corpus(dir.path(), {}), IngestError);

    write(dir / "a.meta.json", R"({"author":"A","title":"T","publication_type":"","relevance":"main","doc_id":"same"})");
    write(dir / "b.txt", "beta");
    write(dir / "b.meta.json", R"({"author":"A","title":"T","publication_type":"","relevance":"main","doc_id":"same"})");
    EXPECT_THROW(load_corpus(dir.path(), {}), IngestError);
}
