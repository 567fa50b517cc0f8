#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "docent/corpus.hpp"
#include "docent/eval_harness.hpp"
#include "docent/model_gateway.hpp"
#include "docent/persona.hpp"
#include "docent/rag_config.hpp"
#include "docent/session.hpp"
#include "docent/vector_index.hpp"

namespace docent::service {

struct Request {
    std::string method;
    std::string path;  // query string ignored
    std::string body;
    std::map<std::string, std::string> headers;  // lower-case names
};

struct Response {
    int status = 200;
    nlohmann::json body;
    std::map<std::string, std::string> headers;
};

/// Every non-2xx response carries {"code", "message", "detail"?}.
class ApiError : public Error {
public:
    ApiError(int status, std::string code, const std::string& message, nlohmann::json detail = nullptr)
        : Error(message), status_(status), code_(std::move(code)), detail_(std::move(detail)) {}

    int status() const { return status_; }
    const std::string& code() const { return code_; }
    const nlohmann::json& detail() const { return detail_; }
    nlohmann::json body() const;

private:
    int status_;
    std::string code_;
    nlohmann::json detail_;
};

struct ServiceOptions {
    std::filesystem::path index_path;
    /// Configs, metadata, QA sets and reports. Empty: `<index_path>.state`.
    std::filesystem::path state_dir;
    std::string cors_origin = "*";
    /// When set, every request except OPTIONS needs "Authorization: Bearer <token>".
    std::string bearer_token;
    std::size_t eval_queue_capacity = 8;
    std::size_t eval_parallelism = 1;
    JudgeOptions judge;
};

enum class RunStatus { pending, running, done, failed };
std::string_view to_string(RunStatus s);

struct EvalRun {
    std::string run_id;
    RunStatus status = RunStatus::pending;
    std::vector<std::string> config_labels;
    std::string qa_set_id;
    std::optional<eval::EvalReport> report;
    std::string error;
};

nlohmann::json to_json(const EvalRun& run);

/// Request router over the engine. Transport-free so it can be driven
/// directly; HttpServer puts it on a socket.
///
/// Routes:
///   GET    /health
///   POST   /sessions                       GET /persona
///   POST   /sessions/{id}/ask
///   GET    /corpus/documents               POST /corpus/documents
///   GET    /corpus/documents/{id}          DELETE /corpus/documents[/{id}]
///   PATCH  /corpus/documents/{id}/metadata
///   GET    /configs                        PUT /configs/active
///   GET    /qa-sets                        GET|PUT /qa-sets/{id}
///   GET    /eval/runs                      POST /eval/runs
///   GET    /eval/runs/{id}
class ServiceApi {
public:
    /// Loads the index (a missing file is an empty corpus) and any state left
    /// by a previous instance.
    ServiceApi(ModelGateway& gateway, std::vector<RagConfig> configs, persona::PersonaProfile persona,
               ServiceOptions opts);
    ~ServiceApi();

    ServiceApi(const ServiceApi&) = delete;
    ServiceApi& operator=(const ServiceApi&) = delete;

    Response handle(const Request& request);

    /// Registers a QA set under `id` and persists it.
    void put_qa_set(const std::string& id, std::vector<eval::QAPair> pairs);

    /// Blocks until the eval queue is empty and no run is executing.
    void wait_for_eval_idle();

    std::string active_label() const;

private:
    struct DocumentEntry {
        SourceDocument document;
        std::size_t chunk_count = 0;
    };

    Response route(const Request& request);

    Response create_session();
    Response ask(const std::string& session_id, const nlohmann::json& body);
    Response list_documents();
    Response get_document(const std::string& doc_id);
    Response add_document(const nlohmann::json& body);
    Response patch_metadata(const std::string& doc_id, const nlohmann::json& body);
    Response delete_document(const std::string& doc_id);
    Response clear_documents();
    Response list_configs();
    Response set_active(const nlohmann::json& body);
    Response list_qa_sets();
    Response get_qa_set(const std::string& id);
    Response store_qa_set(const std::string& id, const nlohmann::json& body);
    Response submit_run(const nlohmann::json& body);
    Response list_runs();
    Response get_run(const std::string& run_id);

    const RagConfig& active_config() const;
    const RagConfig* find_config(const std::string& label) const;
    nlohmann::json document_json(const DocumentEntry& e) const;
    void load_state();
    void save_index_locked() const;
    void save_documents_locked() const;
    void save_active_locked() const;
    void save_run(const EvalRun& run) const;
    void eval_worker();
    void execute_run(const std::string& run_id);

    ModelGateway& gateway_;
    std::vector<RagConfig> configs_;
    persona::PersonaProfile persona_;
    persona::CompiledPrompt compiled_;
    ServiceOptions opts_;
    SessionStore sessions_;

    // Corpus state: index, documents and the active config.
    mutable std::shared_mutex corpus_mutex_;
    VectorIndex index_;
    std::map<std::string, DocumentEntry> documents_;
    std::size_t active_ = 0;
    std::uint64_t corpus_generation_ = 0;  // bumped by every document mutation

    mutable std::mutex qa_mutex_;
    std::map<std::string, std::vector<eval::QAPair>> qa_sets_;

    mutable std::mutex runs_mutex_;
    std::condition_variable runs_cv_;
    std::map<std::string, EvalRun> runs_;
    std::deque<std::string> queue_;
    bool worker_busy_ = false;
    bool stopping_ = false;
    std::uint64_t next_run_ = 1;
    std::thread worker_;
};

/// Minimal HTTP front end for a ServiceApi.
class HttpServer {
public:
    explicit HttpServer(ServiceApi& api);
    ~HttpServer();

    /// Binds `host:port` (port 0 picks a free port) and returns the bound port.
    int bind(const std::string& host, int port);
    /// Serves until stop(); call after bind().
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Splits "HOST:PORT"; throws ConfigError on a malformed address.
std::pair<std::string, int> parse_addr(const std::string& addr);

}  // namespace docent::service
