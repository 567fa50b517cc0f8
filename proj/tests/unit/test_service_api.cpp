#include <gtest/gtest.h>

#include <condition_variable>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "docent/service_api.hpp"
#include "docent/stub_gateway.hpp"
#include "test_support.hpp"

using namespace docent;
using namespace docent::service;
using docent::testing::SteeringFixture;
using docent::testing::TempDir;
using nlohmann::json;

namespace {

// Holds eval chat calls until released so runs stay active for a while.
class GatedGateway : public StubGateway {
public:
    using StubGateway::StubGateway;

    void close_gate() {
        std::lock_guard lock(m_);
        open_ = false;
    }
    void open_gate() {
        {
            std::lock_guard lock(m_);
            open_ = true;
        }
        cv_.notify_all();
    }

protected:
    std::string do_chat(const ModelRef& model, std::span<const ChatMessage> messages,
                        const GenerationParams& params) override {
        {
            std::unique_lock lock(m_);
            cv_.wait(lock, [this] { return open_; });
        }
        return StubGateway::do_chat(model, messages, params);
    }

private:
    std::mutex m_;
    std::condition_variable cv_;
    bool open_ = true;
};

json doc_body(const SourceDocument& d) {
    return {{"doc_id", d.doc_id},
            {"text", d.text},
            {"metadata",
             {{"author", d.metadata.author},
              {"title", d.metadata.title},
              {"publication_type", d.metadata.publication_type},
              {"relevance", std::string(to_string(d.metadata.relevance))}}}};
}

class ServiceTest : public ::testing::Test {
protected:
    TempDir dir;
    SteeringFixture fx;
    GatedGateway stub{StubGateway::Options{SteeringFixture::kDim, 42}};
    std::unique_ptr<ServiceApi> api;

    void SetUp() override {
        fx.install(stub);
        stub.set_default_reply("Score: [[4]]");
        start();
    }

    std::vector<RagConfig> configs() const {
        RagConfig steered = fx.config();
        steered.label = "steered";
        steered.rerank_enabled = true;
        steered.rerank_weights = {
            {RelevanceClass::main, 2.0}, {RelevanceClass::relevant, 1.0}, {RelevanceClass::adjacent, 1.0}};
        RagConfig plain = fx.config();
        plain.label = "plain";
        RagConfig wide = fx.config();
        wide.label = "wide";
        wide.chunk_size = 500;
        wide.chunk_overlap = 50;
        return {steered, plain, wide};
    }

    ServiceOptions options() const {
        ServiceOptions o;
        o.index_path = dir / "corpus.idx";
        o.judge.n_runs = 3;
        return o;
    }

    void start(ServiceOptions o) {
        api.reset();
        api = std::make_unique<ServiceApi>(stub, configs(), persona::default_profile(), std::move(o));
    }
    void start() { start(options()); }

    Response call(const std::string& method, const std::string& path, const json& body = nullptr,
                  std::map<std::string, std::string> headers = {}) {
        Request r{method, path, body.is_null() ? "" : body.dump(), std::move(headers)};
        return api->handle(r);
    }

    void upload_fixture() {
        for (const auto& d : fx.documents()) ASSERT_EQ(call("POST", "/corpus/documents", doc_body(d)).status, 201);
    }

    std::string new_session() {
        const auto r = call("POST", "/sessions");
        EXPECT_EQ(r.status, 201);
        return r.body.at("session_id").get<std::string>();
    }

    std::vector<std::string> hit_order(const Response& r) {
        std::vector<std::string> ids;
        for (const auto& h : r.body.at("trace").at("hits")) ids.push_back(h.at("doc_id").get<std::string>());
        return ids;
    }

    std::vector<eval::QAPair> qa() const {
        return {{"q1", "What is the dome made of?", "The dome is one block of limestone."},
                {"q2", "How was the block moved?", "By raft along the coast."},
                {"q3", "Who cut the block?", "Quarry workers."}};
    }
};

}  // namespace

TEST_F(ServiceTest, HealthAndPersona) {
    const auto h = call("GET", "/health");
    EXPECT_EQ(h.status, 200);
    EXPECT_EQ(h.body.at("documents"), 0);
    const auto p = call("GET", "/persona");
    EXPECT_EQ(p.status, 200);
    EXPECT_EQ(p.body.at("profile"), persona::to_json(persona::default_profile()));
}

TEST_F(ServiceTest, AskReturnsAnswerAndTrace) {
    upload_fixture();
    const auto sid = new_session();
    const auto r = call("POST", "/sessions/" + sid + "/ask", {{"question", SteeringFixture::kQuestion}});
    ASSERT_EQ(r.status, 200) << r.body.dump();
    EXPECT_EQ(r.body.at("answer"), "Score: [[4]]");
    EXPECT_FALSE(r.body.at("refused").get<bool>());
    EXPECT_LE(r.body.at("trace").at("hits").size(), 4u);
    EXPECT_EQ(hit_order(r), (std::vector<std::string>{"survey", "trade", "quarries"}));
}

TEST_F(ServiceTest, AskValidation) {
    const auto sid = new_session();
    const auto empty = call("POST", "/sessions/" + sid + "/ask", {{"question", "   "}});
    EXPECT_EQ(empty.status, 422);
    EXPECT_EQ(empty.body.at("code"), "invalid_request");
    EXPECT_EQ(call("POST", "/sessions/" + sid + "/ask", json::object()).status, 422);
    const auto unknown = call("POST", "/sessions/nope/ask", {{"question", "hi"}});
    EXPECT_EQ(unknown.status, 404);
    EXPECT_EQ(unknown.body.at("code"), "unknown_session");
    const auto bad_json = api->handle(Request{"POST", "/sessions/" + sid + "/ask", "{oops", {}});
    EXPECT_EQ(bad_json.status, 400);
}

TEST_F(ServiceTest, AskOnEmptyCorpusRefuses) {
    const auto sid = new_session();
    const auto before = stub.chat_call_count();
    const auto r = call("POST", "/sessions/" + sid + "/ask", {{"question", SteeringFixture::kQuestion}});
    ASSERT_EQ(r.status, 200);
    EXPECT_TRUE(r.body.at("refused").get<bool>());
    EXPECT_EQ(stub.chat_call_count(), before);
}

TEST_F(ServiceTest, GatewayFailureIs502WithPartialTrace) {
    upload_fixture();
    const auto sid = new_session();
    stub.fail_next_chats(1, GatewayError(GatewayError::Kind::status, "HTTP 500", 500));
    const auto r = call("POST", "/sessions/" + sid + "/ask", {{"question", SteeringFixture::kQuestion}});
    EXPECT_EQ(r.status, 502);
    EXPECT_EQ(r.body.at("code"), "gateway_error");
    EXPECT_EQ(r.body.at("detail").at("kind"), "status");
    EXPECT_EQ(r.body.at("detail").at("http_status"), 500);
    EXPECT_EQ(r.body.at("detail").at("trace").at("hits").size(), 3u);
}

TEST_F(ServiceTest, CorpusListingAndDeletion) {
    upload_fixture();
    const auto list = call("GET", "/corpus/documents");
    ASSERT_EQ(list.status, 200);
    ASSERT_EQ(list.body.at("documents").size(), 3u);
    EXPECT_EQ(list.body.at("documents")[0].at("doc_id"), "quarries");
    EXPECT_EQ(list.body.at("documents")[0].at("chunk_count"), 1);

    const auto one = call("GET", "/corpus/documents/trade");
    EXPECT_EQ(one.status, 200);
    EXPECT_EQ(one.body.at("text"), "Rafts carried heavy cargo along the coast.");
    EXPECT_EQ(one.body.at("metadata").at("relevance"), "adjacent");
    EXPECT_EQ(call("GET", "/corpus/documents/missing").status, 404);

    EXPECT_EQ(call("DELETE", "/corpus/documents/trade").status, 200);
    EXPECT_EQ(call("GET", "/corpus/documents").body.at("documents").size(), 2u);
    EXPECT_EQ(call("DELETE", "/corpus/documents/trade").status, 404);
}

TEST_F(ServiceTest, ClearedCorpusRefuses) {
    upload_fixture();
    EXPECT_EQ(call("DELETE", "/corpus/documents").body.at("removed_documents"), 3);
    const auto sid = new_session();
    const auto r = call("POST", "/sessions/" + sid + "/ask", {{"question", SteeringFixture::kQuestion}});
    EXPECT_TRUE(r.body.at("refused").get<bool>());
    EXPECT_EQ(call("GET", "/health").body.at("chunks"), 0);
}

TEST_F(ServiceTest, UploadValidation) {
    auto body = doc_body(fx.documents()[0]);
    body["metadata"]["relevance"] = "primary";
    const auto bad = call("POST", "/corpus/documents", body);
    EXPECT_EQ(bad.status, 422);
    EXPECT_EQ(bad.body.at("code"), "invalid_metadata");

    auto no_text = doc_body(fx.documents()[0]);
    no_text.erase("text");
    EXPECT_EQ(call("POST", "/corpus/documents", no_text).status, 422);

    auto no_meta = doc_body(fx.documents()[0]);
    no_meta.erase("metadata");
    EXPECT_EQ(call("POST", "/corpus/documents", no_meta).status, 422);

    auto no_id = doc_body(fx.documents()[0]);
    no_id.erase("doc_id");
    EXPECT_EQ(call("POST", "/corpus/documents", no_id).status, 422);
    EXPECT_EQ(call("GET", "/corpus/documents").body.at("documents").size(), 0u);
}

TEST_F(ServiceTest, ReuploadReplacesTheDocument) {
    upload_fixture();
    auto body = doc_body(fx.documents()[0]);
    body["text"] = "A much longer replacement text. " + std::string(3000, 'x');
    const auto r = call("POST", "/corpus/documents", body);
    ASSERT_EQ(r.status, 201);
    EXPECT_GT(r.body.at("chunk_count").get<int>(), 1);
    EXPECT_EQ(call("GET", "/corpus/documents").body.at("documents").size(), 3u);
    EXPECT_EQ(call("GET", "/health").body.at("chunks"), 2 + r.body.at("chunk_count").get<int>());
}

TEST_F(ServiceTest, RelabelFlipsTheRanking) {
    upload_fixture();
    const auto sid = new_session();
    // main weight 2.0: survey 0.80 -> 1.60 leads, trade 0.90 stays.
    auto r = call("POST", "/sessions/" + sid + "/ask", {{"question", SteeringFixture::kQuestion}});
    EXPECT_EQ(hit_order(r), (std::vector<std::string>{"survey", "trade", "quarries"}));

    const auto patched = call("PATCH", "/corpus/documents/trade/metadata", {{"relevance", "main"}});
    ASSERT_EQ(patched.status, 200) << patched.body.dump();
    EXPECT_EQ(patched.body.at("relevance"), "main");

    // trade is now main as well: 0.90 -> 1.80 beats 1.60.
    const auto sid2 = new_session();
    r = call("POST", "/sessions/" + sid2 + "/ask", {{"question", SteeringFixture::kQuestion}});
    EXPECT_EQ(hit_order(r), (std::vector<std::string>{"trade", "survey", "quarries"}));
    EXPECT_NEAR(r.body.at("trace").at("hits")[0].at("adjusted_score").get<double>(), 1.8, 1e-6);
}

TEST_F(ServiceTest, RelabelValidation) {
    upload_fixture();
    const auto bad = call("PATCH", "/corpus/documents/trade/metadata", {{"relevance", "primary"}});
    EXPECT_EQ(bad.status, 422);
    EXPECT_EQ(bad.body.at("code"), "invalid_relevance");
    EXPECT_EQ(bad.body.at("detail").at("allowed"), (json{"main", "relevant", "adjacent"}));
    EXPECT_EQ(call("PATCH", "/corpus/documents/trade/metadata", {{"title", "x"}}).status, 422);
    EXPECT_EQ(call("PATCH", "/corpus/documents/ghost/metadata", {{"relevance", "main"}}).status, 404);
    EXPECT_EQ(call("GET", "/corpus/documents/trade").body.at("metadata").at("relevance"), "adjacent");
}

TEST_F(ServiceTest, ActiveConfigSwitching) {
    upload_fixture();
    auto cfgs = call("GET", "/configs");
    EXPECT_EQ(cfgs.body.at("active"), "steered");
    EXPECT_EQ(cfgs.body.at("configs").size(), 3u);

    const auto unknown = call("PUT", "/configs/active", {{"label", "nope"}});
    EXPECT_EQ(unknown.status, 404);
    EXPECT_EQ(unknown.body.at("code"), "unknown_config");

    auto r = call("PUT", "/configs/active", {{"label", "plain"}});
    ASSERT_EQ(r.status, 200);
    EXPECT_FALSE(r.body.at("reindexed").get<bool>());
    EXPECT_EQ(api->active_label(), "plain");

    // No reranking under "plain": base order.
    const auto sid = new_session();
    EXPECT_EQ(hit_order(call("POST", "/sessions/" + sid + "/ask", {{"question", SteeringFixture::kQuestion}})),
              (std::vector<std::string>{"trade", "survey", "quarries"}));

    r = call("PUT", "/configs/active", {{"label", "wide"}});
    ASSERT_EQ(r.status, 200);
    EXPECT_TRUE(r.body.at("reindexed").get<bool>());
    EXPECT_EQ(call("GET", "/health").body.at("chunks"), 3);
}

TEST_F(ServiceTest, QaSets) {
    EXPECT_EQ(call("GET", "/qa-sets/none").status, 404);
    ASSERT_EQ(call("PUT", "/qa-sets/small", eval::to_json(qa())).status, 200);
    EXPECT_EQ(call("GET", "/qa-sets").body.at("qa_sets").size(), 1u);
    EXPECT_EQ(call("GET", "/qa-sets/small").body.at("pairs").size(), 3u);
    EXPECT_EQ(call("PUT", "/qa-sets/bad", json::array()).status, 422);
}

TEST_F(ServiceTest, EvalRunCompletes) {
    upload_fixture();
    api->put_qa_set("small", qa());
    const auto sub = call("POST", "/eval/runs", {{"config_labels", {"plain"}}, {"qa_set_id", "small"}});
    ASSERT_EQ(sub.status, 202) << sub.body.dump();
    EXPECT_EQ(sub.body.at("run_id"), "run-000001");
    api->wait_for_eval_idle();

    const auto run = call("GET", "/eval/runs/run-000001");
    ASSERT_EQ(run.status, 200);
    EXPECT_EQ(run.body.at("status"), "done") << run.body.dump();
    ASSERT_EQ(run.body.at("report").at("rows").size(), 1u);
    EXPECT_EQ(run.body.at("report").at("details").size(), 3u);
    EXPECT_DOUBLE_EQ(run.body.at("report").at("rows")[0].at("judge_mean").get<double>(), 4.0);
    EXPECT_NE(run.body.at("markdown").get<std::string>().find("| Embedding |"), std::string::npos);
    EXPECT_EQ(call("GET", "/eval/runs").body.at("runs").size(), 1u);
}

TEST_F(ServiceTest, EvalRunValidation) {
    api->put_qa_set("small", qa());
    EXPECT_EQ(call("GET", "/eval/runs/run-999999").status, 404);
    EXPECT_EQ(call("POST", "/eval/runs", {{"config_labels", {"nope"}}, {"qa_set_id", "small"}}).status, 404);
    EXPECT_EQ(call("POST", "/eval/runs", {{"config_labels", {"plain"}}, {"qa_set_id", "nope"}}).status, 404);
    EXPECT_EQ(call("POST", "/eval/runs", {{"config_labels", json::array()}, {"qa_set_id", "small"}}).status, 422);
    EXPECT_EQ(call("POST", "/eval/runs", {{"qa_set_id", "small"}}).status, 422);
}

TEST_F(ServiceTest, ActiveRunConflictsAndQueueLimit) {
    auto o = options();
    o.eval_queue_capacity = 1;
    start(o);
    upload_fixture();
    api->put_qa_set("small", qa());

    stub.close_gate();
    ASSERT_EQ(call("POST", "/eval/runs", {{"config_labels", {"plain"}}, {"qa_set_id", "small"}}).status, 202);
    const auto dup = call("POST", "/eval/runs", {{"config_labels", {"plain"}}, {"qa_set_id", "small"}});
    EXPECT_EQ(dup.status, 409);
    EXPECT_EQ(dup.body.at("code"), "run_active");

    // Wait until the worker has taken the first run, then fill the queue.
    for (int i = 0; i < 500 && call("GET", "/eval/runs/run-000001").body.at("status") != "running"; ++i) {
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    EXPECT_EQ(call("POST", "/eval/runs", {{"config_labels", {"steered"}}, {"qa_set_id", "small"}}).status, 202);
    const auto full = call("POST", "/eval/runs", {{"config_labels", {"wide"}}, {"qa_set_id", "small"}});
    EXPECT_EQ(full.status, 503);
    EXPECT_EQ(full.body.at("code"), "queue_full");

    stub.open_gate();
    api->wait_for_eval_idle();
    EXPECT_EQ(call("GET", "/eval/runs/run-000001").body.at("status"), "done");
    EXPECT_EQ(call("GET", "/eval/runs/run-000002").body.at("status"), "done");
    EXPECT_EQ(call("POST", "/eval/runs", {{"config_labels", {"plain"}}, {"qa_set_id", "small"}}).status, 202);
    api->wait_for_eval_idle();
}

TEST_F(ServiceTest, StateSurvivesRestart) {
    upload_fixture();
    call("PATCH", "/corpus/documents/trade/metadata", {{"relevance", "relevant"}});
    call("PUT", "/configs/active", {{"label", "plain"}});
    api->put_qa_set("small", qa());
    call("POST", "/eval/runs", {{"config_labels", {"plain"}}, {"qa_set_id", "small"}});
    api->wait_for_eval_idle();

    start();
    EXPECT_EQ(api->active_label(), "plain");
    EXPECT_EQ(call("GET", "/corpus/documents").body.at("documents").size(), 3u);
    EXPECT_EQ(call("GET", "/corpus/documents/trade").body.at("metadata").at("relevance"), "relevant");
    EXPECT_EQ(call("GET", "/qa-sets/small").status, 200);
    EXPECT_EQ(call("GET", "/eval/runs/run-000001").body.at("status"), "done");
    const auto next = call("POST", "/eval/runs", {{"config_labels", {"steered"}}, {"qa_set_id", "small"}});
    EXPECT_EQ(next.body.at("run_id"), "run-000002");
    api->wait_for_eval_idle();

    const auto sid = new_session();
    const auto r = call("POST", "/sessions/" + sid + "/ask", {{"question", SteeringFixture::kQuestion}});
    EXPECT_EQ(r.body.at("trace").at("hits").size(), 3u);
}

TEST_F(ServiceTest, InterruptedRunsFailOnRestart) {
    api.reset();
    const auto runs = std::filesystem::path(dir / "corpus.idx.state") / "runs";
    std::filesystem::create_directories(runs);
    std::ofstream(runs / "run-000007.json")
        << json{{"run_id", "run-000007"}, {"status", "running"}, {"config_labels", {"plain"}}, {"qa_set_id", "x"}}
               .dump();
    start();
    const auto r = call("GET", "/eval/runs/run-000007");
    EXPECT_EQ(r.body.at("status"), "failed");
    EXPECT_NE(r.body.at("error").get<std::string>().find("restart"), std::string::npos);
    api->put_qa_set("small", qa());
    EXPECT_EQ(call("POST", "/eval/runs", {{"config_labels", {"plain"}}, {"qa_set_id", "small"}}).body.at("run_id"),
              "run-000008");
    api->wait_for_eval_idle();
}

TEST_F(ServiceTest, IndexWrittenElsewhereWins) {
    api.reset();
    // Index built outside the service, with no documents.json beside it.
    fx.build_index(stub, fx.config()).save(dir / "corpus.idx");
    start();
    const auto docs = call("GET", "/corpus/documents").body.at("documents");
    ASSERT_EQ(docs.size(), 3u);
    EXPECT_EQ(call("GET", "/corpus/documents/survey").body.at("text"), "The dome is a single block of limestone.");
}

TEST_F(ServiceTest, BearerTokenAndCors) {
    auto o = options();
    o.bearer_token = "s3cret";
    o.cors_origin = "http://localhost:5173";
    start(o);
    const auto denied = call("GET", "/health");
    EXPECT_EQ(denied.status, 401);
    EXPECT_EQ(denied.body.at("code"), "unauthorized");
    EXPECT_EQ(denied.headers.at("Access-Control-Allow-Origin"), "http://localhost:5173");
    EXPECT_EQ(call("GET", "/health", nullptr, {{"authorization", "Bearer wrong"}}).status, 401);
    EXPECT_EQ(call("GET", "/health", nullptr, {{"authorization", "Bearer s3cret"}}).status, 200);
    const auto pre = call("OPTIONS", "/corpus/documents");
    EXPECT_EQ(pre.status, 204);
    EXPECT_NE(pre.headers.at("Access-Control-Allow-Methods").find("PATCH"), std::string::npos);
}

TEST_F(ServiceTest, UnknownRouteIs404) {
    const auto r = call("GET", "/nowhere");
    EXPECT_EQ(r.status, 404);
    EXPECT_EQ(r.body.at("code"), "no_route");
    EXPECT_TRUE(r.body.contains("message"));
}

TEST_F(ServiceTest, HttpRoundTrip) {
    HttpServer server(*api);
    const int port = server.bind("127.0.0.1", 0);
    std::thread t([&] { server.listen(); });

    httplib::Client client("127.0.0.1", port);
    client.set_connection_timeout(std::chrono::seconds(2));
    for (int i = 0; i < 200; ++i) {
        if (client.Get("/health")) break;
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    const auto health = client.Get("/health");
    ASSERT_TRUE(health);
    EXPECT_EQ(health->status, 200);
    EXPECT_EQ(health->get_header_value("Access-Control-Allow-Origin"), "*");
    EXPECT_EQ(json::parse(health->body).at("status"), "ok");

    const auto created = client.Post("/corpus/documents", doc_body(fx.documents()[0]).dump(), "application/json");
    ASSERT_TRUE(created);
    EXPECT_EQ(created->status, 201);

    const auto patched = client.Patch("/corpus/documents/survey/metadata", R"({"relevance":"primary"})",
                                      "application/json");
    ASSERT_TRUE(patched);
    EXPECT_EQ(patched->status, 422);

    server.stop();
    t.join();
}

TEST(ParseAddr, Forms) {
    EXPECT_EQ(parse_addr("127.0.0.1:8080"), (std::pair<std::string, int>{"127.0.0.1", 8080}));
    EXPECT_EQ(parse_addr("0.0.0.0:0"), (std::pair<std::string, int>{"0.0.0.0", 0}));
    EXPECT_THROW(parse_addr("localhost"), ConfigError);
    EXPECT_THROW(parse_addr("host:port"), ConfigError);
    EXPECT_THROW(parse_addr("host:70000"), ConfigError);
    EXPECT_THROW(parse_addr(":80"), ConfigError);
}

TEST(ServiceConstruction, RejectsBadSetups) {
    TempDir dir;
    StubGateway stub;
    ServiceOptions o;
    o.index_path = dir / "i.idx";
    EXPECT_THROW(ServiceApi(stub, {}, persona::default_profile(), o), ConfigError);
    RagConfig a, b;
    a.label = b.label = "same";
    EXPECT_THROW(ServiceApi(stub, {a, b}, persona::default_profile(), o), ConfigError);
    o.index_path.clear();
    EXPECT_THROW(ServiceApi(stub, {a}, persona::default_profile(), o), ConfigError);
}
