#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "docent/eval_harness.hpp"
#include "test_support.hpp"

using namespace docent;
using docent::testing::fixture_path;
using docent::testing::TempDir;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::string fx(const std::string& rel) { return fixture_path(rel).string(); }

class CliTest : public ::testing::Test {
protected:
    TempDir dir;
    std::string index() const { return (dir / "corpus.idx").string(); }

    void ingest() {
        const auto r = run_cli({"ingest", "--corpus", fx("corpus"), "--config", fx("config.json"), "--index", index()});
        ASSERT_EQ(r.code, 0) << r.err;
    }
};

}  // namespace

TEST_F(CliTest, IngestPrintsChunkCounts) {
    const auto r = run_cli({"ingest", "--corpus", fx("corpus"), "--config", fx("config.json"), "--index", index()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "ashford_survey\t3\nbrenner_quarries\t2\nokafor_trade\t2\n");
    EXPECT_TRUE(std::filesystem::exists(index()));
}

TEST_F(CliTest, AskPrintsTheScriptedAnswer) {
    ingest();
    const auto r = run_cli({"ask", "What is the roof made of?", "--config", fx("config.json"), "--index", index()});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "The roof is a single limestone dome.\n");
}

TEST_F(CliTest, AskHonoursEndpointEnvironment) {
    ingest();
    ::setenv("DOCENT_CHAT_URL", "stub://env-chat?reply=From%20the%20environment.", 1);
    const auto r = run_cli({"ask", "What is the roof made of?", "--config", fx("config.json"), "--index", index()});
    ::unsetenv("DOCENT_CHAT_URL");
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "From the environment.\n");
}

TEST_F(CliTest, AskTraceIsJson) {
    ingest();
    const auto r = run_cli(
        {"ask", "What is the roof made of?", "--config", fx("config.json"), "--index", index(), "--trace"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j.at("answer"), "The roof is a single limestone dome.");
    EXPECT_FALSE(j.at("refused").get<bool>());
    EXPECT_EQ(j.at("trace").at("hits").size(), 4u);
    EXPECT_EQ(j.at("trace").at("assembled_messages").size(), 2u);
}

TEST_F(CliTest, AskSessionFileCarriesHistory) {
    ingest();
    const auto session = (dir / "session.json").string();
    ASSERT_EQ(run_cli({"ask", "First?", "--config", fx("config.json"), "--index", index(), "--session", session}).code,
              0);
    ASSERT_EQ(run_cli({"ask", "Second?", "--config", fx("config.json"), "--index", index(), "--session", session}).code,
              0);
    ASSERT_EQ(run_cli({"ask", "Third?", "--config", fx("config.json"), "--index", index(), "--session", session}).code,
              0);
    const auto j = nlohmann::json::parse(read_file(session));
    // Window of two exchanges.
    EXPECT_NE(j.dump().find("Third?"), std::string::npos);
    EXPECT_NE(j.dump().find("Second?"), std::string::npos);
    EXPECT_EQ(j.dump().find("First?"), std::string::npos);
}

TEST_F(CliTest, AskWithLabelPicksTheConfig) {
    ingest();
    const auto r = run_cli({"ask", "How was it moved?", "--config", fx("configs.json"), "--label",
                            "StubEmbed + StubChat + No relevance", "--index", index()});
    // Both configs in the file share the embedder, so the config.json index serves either.
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "It was moved by raft.\n");
    EXPECT_EQ(run_cli({"ask", "Q?", "--config", fx("configs.json"), "--label", "nope", "--index", index()}).code, 2);
}

TEST_F(CliTest, MissingIndexIsRuntimeFailure) {
    const auto r = run_cli({"ask", "Q?", "--config", fx("config.json"), "--index", (dir / "none.idx").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("index not found"), std::string::npos);
}

TEST_F(CliTest, MalformedConfigIsUsageError) {
    const auto bad = dir / "bad.json";
    std::ofstream(bad) << "{ not json";
    EXPECT_EQ(run_cli({"ingest", "--corpus", fx("corpus"), "--config", bad.string(), "--index", index()}).code, 2);
    std::ofstream(bad, std::ios::trunc) << R"({"chunk_size": 10, "chunk_overlap": 20})";
    EXPECT_EQ(run_cli({"ingest", "--corpus", fx("corpus"), "--config", bad.string(), "--index", index()}).code, 2);
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run_cli({}).code, 2);
    EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
    EXPECT_EQ(run_cli({"ingest", "--bogus"}).code, 2);
    EXPECT_EQ(run_cli({"ingest", "--corpus", "/definitely/not/here", "--config", "c", "--index", "i"}).code, 2);
    EXPECT_EQ(run_cli({"ask", "--config", "c", "--index", "i"}).code, 2);
}

TEST(Cli, HelpListsFlags) {
    const auto top = run_cli({"--help"});
    EXPECT_EQ(top.code, 0);
    for (const char* sub : {"ingest", "serve", "ask", "eval", "persona"}) {
        EXPECT_NE(top.out.find(sub), std::string::npos) << sub;
    }
    const auto ev = run_cli({"eval", "--help"});
    EXPECT_EQ(ev.code, 0);
    for (const char* flag : {"--qa", "--configs", "--out-csv", "--out-md", "--runs"}) {
        EXPECT_NE(ev.out.find(flag), std::string::npos) << flag;
    }
    const auto serve = run_cli({"serve", "--help"});
    EXPECT_NE(serve.out.find("--addr"), std::string::npos);
}

TEST(Cli, PersonaValidate) {
    const auto good = run_cli({"persona", "validate", std::string(DOCENT_DATA_DIR) + "/persona.example.json"});
    EXPECT_EQ(good.code, 0) << good.out;
    EXPECT_EQ(good.out, "ok\n");

    TempDir dir;
    const auto bad = dir / "bad.json";
    std::ofstream(bad) << R"({"realm": "nowhere"})";
    const auto r = run_cli({"persona", "validate", bad.string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_FALSE(r.out.empty());
}

TEST(Cli, PersonaManifest) {
    const auto r = run_cli({"persona", "manifest", std::string(DOCENT_DATA_DIR) + "/persona.example.json"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(nlohmann::json::accept(r.out));
}

TEST_F(CliTest, EvalWritesReportsMatchingTheLibrary) {
    const auto csv = dir / "out.csv";
    const auto md = dir / "out.md";
    const auto details = dir / "details.csv";
    const auto r = run_cli({"eval", "--qa", fx("qa.json"), "--configs", fx("configs.json"), "--out-csv", csv.string(),
                            "--out-md", md.string(), "--details-csv", details.string(), "--corpus", fx("corpus"),
                            "--runs", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    ASSERT_TRUE(std::filesystem::exists(csv));
    ASSERT_TRUE(std::filesystem::exists(md));
    EXPECT_EQ(r.out, read_file(md));

    const auto configs = load_rag_configs(fx("configs.json"));
    std::vector<SourceDocument> corpus;
    for (auto& d : load_corpus(fixture_path("corpus"), configs.front().split_options())) {
        corpus.push_back(std::move(d.document));
    }
    RoutingGateway gateway;
    eval::MatrixOptions opts;
    opts.judge.n_runs = 3;
    const auto report = eval::run_matrix(configs, eval::load_qa_set(fx("qa.json")), persona::default_profile(), corpus,
                                         gateway, opts);
    EXPECT_EQ(read_file(csv), eval::to_csv(report));
    EXPECT_EQ(read_file(md), eval::to_markdown(report));
    EXPECT_EQ(read_file(details), eval::details_to_csv(report));
}

TEST_F(CliTest, EvalFromIndexMatchesCorpus) {
    ingest();
    const auto a = dir / "a.csv";
    const auto b = dir / "b.csv";
    const auto md = (dir / "x.md").string();
    const std::vector<std::string> common = {"eval", "--qa", fx("qa.json"), "--configs", fx("configs.json"),
                                             "--out-md", md, "--runs", "2"};
    auto with_corpus = common;
    with_corpus.insert(with_corpus.end(), {"--out-csv", a.string(), "--corpus", fx("corpus")});
    auto with_index = common;
    with_index.insert(with_index.end(), {"--out-csv", b.string(), "--index", index()});
    ASSERT_EQ(run_cli(with_corpus).code, 0);
    ASSERT_EQ(run_cli(with_index).code, 0);
    EXPECT_EQ(read_file(a), read_file(b));
}

TEST_F(CliTest, EvalNeedsExactlyOneSource) {
    const std::vector<std::string> args = {"eval", "--qa", fx("qa.json"), "--configs", fx("configs.json"),
                                           "--out-csv", (dir / "a.csv").string(), "--out-md",
                                           (dir / "a.md").string()};
    EXPECT_EQ(run_cli(args).code, 2);
}
