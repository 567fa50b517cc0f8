#include "docent/service_api.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <httplib.h>

#include "docent/retrieval_engine.hpp"
#include "docent/text.hpp"

namespace docent::service {

namespace fs = std::filesystem;
using nlohmann::json;

nlohmann::json ApiError::body() const {
    json j{{"code", code_}, {"message", what()}};
    if (!detail_.is_null()) j["detail"] = detail_;
    return j;
}

std::string_view to_string(RunStatus s) {
    switch (s) {
        case RunStatus::pending: return "pending";
        case RunStatus::running: return "running";
        case RunStatus::done: return "done";
        case RunStatus::failed: return "failed";
    }
    return "pending";
}

namespace {

RunStatus parse_status(const std::string& s) {
    for (auto st : {RunStatus::pending, RunStatus::running, RunStatus::done, RunStatus::failed}) {
        if (to_string(st) == s) return st;
    }
    throw ConfigError("unknown run status '" + s + "'");
}

EvalRun run_from_json(const json& j) {
    EvalRun run;
    run.run_id = j.at("run_id").get<std::string>();
    run.status = parse_status(j.at("status").get<std::string>());
    run.config_labels = j.at("config_labels").get<std::vector<std::string>>();
    run.qa_set_id = j.at("qa_set_id").get<std::string>();
    if (j.contains("report") && !j.at("report").is_null()) run.report = eval::report_from_json(j.at("report"));
    run.error = j.value("error", "");
    return run;
}

void write_json_atomic(const fs::path& path, const json& j) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << j.dump(2) << '\n';
        if (!out) throw Error("cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
}

json read_json(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    return json::parse(in);
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    const std::string p = path.substr(0, path.find('?'));
    std::stringstream ss(p);
    std::string seg;
    while (std::getline(ss, seg, '/')) {
        if (!seg.empty()) parts.push_back(seg);
    }
    return parts;
}

json allowed_relevance() {
    json allowed = json::array();
    for (auto r : kAllRelevanceClasses) allowed.push_back(std::string(to_string(r)));
    return allowed;
}

// Configs that index identically share chunks and vectors.
bool same_index_shape(const RagConfig& a, const RagConfig& b) {
    return a.chunk_size == b.chunk_size && a.chunk_overlap == b.chunk_overlap && a.separators == b.separators &&
           a.embedding_model.endpoint == b.embedding_model.endpoint &&
           a.embedding_model.model_id == b.embedding_model.model_id;
}

std::string require_string(const json& body, const char* field) {
    if (!body.contains(field) || !body.at(field).is_string()) {
        throw ApiError(422, "invalid_request", std::string("'") + field + "' must be a string",
                       json{{"field", field}});
    }
    return body.at(field).get<std::string>();
}

std::string fmt_run_id(std::uint64_t n) {
    std::string digits = std::to_string(n);
    if (digits.size() < 6) digits.insert(0, 6 - digits.size(), '0');
    return "run-" + digits;
}

Response ok(json body, int status = 200) { return Response{status, std::move(body), {}}; }

}  // namespace

nlohmann::json to_json(const EvalRun& run) {
    json j{{"run_id", run.run_id},
           {"status", std::string(to_string(run.status))},
           {"config_labels", run.config_labels},
           {"qa_set_id", run.qa_set_id}};
    if (run.report) {
        j["report"] = eval::to_json(*run.report);
        j["markdown"] = eval::to_markdown(*run.report);
    }
    if (!run.error.empty()) j["error"] = run.error;
    return j;
}

// --- construction and persistence --------------------------------------------

ServiceApi::ServiceApi(ModelGateway& gateway, std::vector<RagConfig> configs, persona::PersonaProfile persona,
                       ServiceOptions opts)
    : gateway_(gateway), configs_(std::move(configs)), persona_(std::move(persona)), opts_(std::move(opts)) {
    if (configs_.empty()) throw ConfigError("the service needs at least one config");
    std::set<std::string> labels;
    for (const auto& c : configs_) {
        validate(c);
        if (!labels.insert(c.effective_label()).second) {
            throw ConfigError("duplicate config label '" + c.effective_label() + "'");
        }
    }
    if (opts_.index_path.empty()) throw ConfigError("index path must be set");
    if (opts_.eval_queue_capacity == 0) throw ConfigError("eval queue capacity must be positive");
    if (opts_.state_dir.empty()) opts_.state_dir = opts_.index_path.string() + ".state";
    compiled_ = persona::compile_system_prompt(persona_);
    load_state();
    worker_ = std::thread([this] { eval_worker(); });
}

ServiceApi::~ServiceApi() {
    {
        std::lock_guard lock(runs_mutex_);
        stopping_ = true;
    }
    runs_cv_.notify_all();
    if (worker_.joinable()) worker_.join();
}

void ServiceApi::load_state() {
    fs::create_directories(opts_.state_dir / "runs");
    fs::create_directories(opts_.state_dir / "qa_sets");

    if (fs::exists(opts_.index_path)) index_ = VectorIndex::load(opts_.index_path);

    std::map<std::string, std::size_t> chunk_counts;
    for (const auto& r : index_.records()) ++chunk_counts[r.payload.doc_id];

    const fs::path docs_file = opts_.state_dir / "documents.json";
    if (fs::exists(docs_file)) {
        for (const auto& d : read_json(docs_file)) {
            DocumentEntry e;
            e.document.doc_id = d.at("doc_id").get<std::string>();
            e.document.text = d.at("text").get<std::string>();
            e.document.metadata = parse_metadata(d.at("metadata")).first;
            e.chunk_count = chunk_counts[e.document.doc_id];
            documents_.emplace(e.document.doc_id, std::move(e));
        }
    }
    // The index wins when the two disagree, e.g. after `docent ingest`
    // rewrote it; its payloads carry enough to rebuild the documents.
    const bool consistent = documents_.size() == chunk_counts.size() &&
                            std::all_of(documents_.begin(), documents_.end(),
                                        [&](const auto& kv) { return chunk_counts.count(kv.first) > 0; });
    if (!consistent) {
        documents_.clear();
        for (auto& doc : documents_from_index(index_)) {
            auto id = doc.doc_id;
            const auto count = chunk_counts[id];
            documents_.emplace(std::move(id), DocumentEntry{std::move(doc), count});
        }
    }

    const fs::path active_file = opts_.state_dir / "active.json";
    if (fs::exists(active_file)) {
        const auto label = read_json(active_file).value("label", "");
        for (size_t i = 0; i < configs_.size(); ++i) {
            if (configs_[i].effective_label() == label) active_ = i;
        }
    }

    for (const auto& entry : fs::directory_iterator(opts_.state_dir / "qa_sets")) {
        if (entry.path().extension() != ".json") continue;
        qa_sets_[entry.path().stem().string()] = eval::qa_set_from_json(read_json(entry.path()));
    }

    for (const auto& entry : fs::directory_iterator(opts_.state_dir / "runs")) {
        if (entry.path().extension() != ".json") continue;
        auto run = run_from_json(read_json(entry.path()));
        if (run.status == RunStatus::pending || run.status == RunStatus::running) {
            run.status = RunStatus::failed;
            run.error = "interrupted by a service restart";
            save_run(run);
        }
        const auto dash = run.run_id.rfind('-');
        if (dash != std::string::npos) {
            try {
                next_run_ = std::max<std::uint64_t>(next_run_, std::stoull(run.run_id.substr(dash + 1)) + 1);
            } catch (const std::exception&) {
            }
        }
        runs_.emplace(run.run_id, std::move(run));
    }
}

void ServiceApi::save_index_locked() const { index_.save(opts_.index_path); }

void ServiceApi::save_documents_locked() const {
    json arr = json::array();
    for (const auto& [id, e] : documents_) {
        arr.push_back({{"doc_id", id}, {"text", e.document.text}, {"metadata", to_json(e.document.metadata)}});
    }
    write_json_atomic(opts_.state_dir / "documents.json", arr);
}

void ServiceApi::save_active_locked() const {
    write_json_atomic(opts_.state_dir / "active.json", json{{"label", configs_[active_].effective_label()}});
}

void ServiceApi::save_run(const EvalRun& run) const {
    write_json_atomic(opts_.state_dir / "runs" / (run.run_id + ".json"), to_json(run));
}

const RagConfig& ServiceApi::active_config() const { return configs_[active_]; }

std::string ServiceApi::active_label() const {
    std::shared_lock lock(corpus_mutex_);
    return configs_[active_].effective_label();
}

const RagConfig* ServiceApi::find_config(const std::string& label) const {
    for (const auto& c : configs_) {
        if (c.effective_label() == label) return &c;
    }
    return nullptr;
}

// --- dispatch -----------------------------------------------------------------

Response ServiceApi::handle(const Request& request) {
    Response res;
    if (request.method == "OPTIONS") {
        res.status = 204;
    } else if (!opts_.bearer_token.empty() &&
               [&] {
                   auto it = request.headers.find("authorization");
                   return it == request.headers.end() || it->second != "Bearer " + opts_.bearer_token;
               }()) {
        const ApiError e(401, "unauthorized", "missing or invalid bearer token");
        res = Response{e.status(), e.body(), {}};
    } else {
        try {
            res = route(request);
        } catch (const ApiError& e) {
            res = Response{e.status(), e.body(), {}};
        } catch (const NotFoundError& e) {
            res = Response{404, ApiError(404, "not_found", e.what()).body(), {}};
        } catch (const GatewayError& e) {
            res = Response{502, ApiError(502, "gateway_error", e.what(),
                                         json{{"kind", std::string(to_string(e.kind()))}, {"http_status", e.http_status()}})
                                    .body(),
                           {}};
        } catch (const ConfigError& e) {
            res = Response{422, ApiError(422, "invalid_config", e.what()).body(), {}};
        } catch (const IngestError& e) {
            res = Response{422, ApiError(422, "invalid_document", e.what()).body(), {}};
        } catch (const std::exception& e) {
            res = Response{500, ApiError(500, "internal_error", e.what()).body(), {}};
        }
    }
    res.headers["Access-Control-Allow-Origin"] = opts_.cors_origin;
    res.headers["Access-Control-Allow-Methods"] = "GET, POST, PUT, PATCH, DELETE, OPTIONS";
    res.headers["Access-Control-Allow-Headers"] = "Content-Type, Authorization";
    return res;
}

Response ServiceApi::route(const Request& request) {
    const auto p = split_path(request.path);
    const auto& m = request.method;

    json body = json::object();
    if (!text::trim(request.body).empty()) {
        try {
            body = json::parse(request.body);
        } catch (const json::parse_error& e) {
            throw ApiError(400, "invalid_json", std::string("request body is not valid JSON: ") + e.what());
        }
    }

    auto is = [&](std::initializer_list<const char*> pattern) {
        if (p.size() != pattern.size()) return false;
        size_t i = 0;
        for (const char* seg : pattern) {
            if (std::string_view(seg) != "*" && p[i] != seg) return false;
            ++i;
        }
        return true;
    };

    if (m == "GET" && is({"health"})) {
        std::shared_lock lock(corpus_mutex_);
        return ok({{"status", "ok"}, {"documents", documents_.size()}, {"chunks", index_.size()}});
    }
    if (m == "GET" && is({"persona"})) {
        return ok({{"profile", persona::to_json(persona_)}, {"manifest", persona::capability_manifest(persona_)}});
    }
    if (m == "POST" && is({"sessions"})) return create_session();
    if (m == "POST" && is({"sessions", "*", "ask"})) return ask(p[1], body);
    if (is({"corpus", "documents"})) {
        if (m == "GET") return list_documents();
        if (m == "POST") return add_document(body);
        if (m == "DELETE") return clear_documents();
    }
    if (is({"corpus", "documents", "*"})) {
        if (m == "GET") return get_document(p[2]);
        if (m == "DELETE") return delete_document(p[2]);
    }
    if (m == "PATCH" && is({"corpus", "documents", "*", "metadata"})) return patch_metadata(p[2], body);
    if (m == "GET" && is({"configs"})) return list_configs();
    if (m == "PUT" && is({"configs", "active"})) return set_active(body);
    if (m == "GET" && is({"qa-sets"})) return list_qa_sets();
    if (is({"qa-sets", "*"})) {
        if (m == "GET") return get_qa_set(p[1]);
        if (m == "PUT") return store_qa_set(p[1], body);
    }
    if (is({"eval", "runs"})) {
        if (m == "GET") return list_runs();
        if (m == "POST") return submit_run(body);
    }
    if (m == "GET" && is({"eval", "runs", "*"})) return get_run(p[2]);

    throw ApiError(404, "no_route", "no route for " + m + " " + request.path);
}

// --- sessions -----------------------------------------------------------------

Response ServiceApi::create_session() { return ok({{"session_id", sessions_.create()}}, 201); }

Response ServiceApi::ask(const std::string& session_id, const json& body) {
    if (!sessions_.contains(session_id)) {
        throw ApiError(404, "unknown_session", "unknown session '" + session_id + "'");
    }
    if (!body.is_object() || !body.contains("question") || !body.at("question").is_string() ||
        text::trim(body.at("question").get<std::string>()).empty()) {
        throw ApiError(422, "invalid_request", "'question' must be a non-empty string", json{{"field", "question"}});
    }
    const auto question = body.at("question").get<std::string>();

    std::shared_lock lock(corpus_mutex_);
    const RagConfig cfg = active_config();
    RetrievalEngine engine(gateway_, index_);
    AnswerResult result;
    try {
        sessions_.with_session(session_id, [&](ChatSession& s) { result = engine.answer(s, question, cfg, compiled_); });
    } catch (const AnswerError& e) {
        throw ApiError(502, "gateway_error", e.what(),
                       json{{"kind", std::string(to_string(e.cause().kind()))},
                            {"http_status", e.cause().http_status()},
                            {"trace", to_json(e.partial_trace())}});
    }
    return ok({{"answer", result.answer}, {"refused", result.trace.refused}, {"trace", to_json(result.trace)}});
}

// --- corpus -------------------------------------------------------------------

json ServiceApi::document_json(const DocumentEntry& e) const {
    return json{{"doc_id", e.document.doc_id},
                {"metadata", to_json(e.document.metadata)},
                {"chunk_count", e.chunk_count},
                {"char_count", text::decode_utf8(e.document.text).size()}};
}

Response ServiceApi::list_documents() {
    std::shared_lock lock(corpus_mutex_);
    json docs = json::array();
    for (const auto& [id, e] : documents_) docs.push_back(document_json(e));
    return ok({{"documents", docs}});
}

Response ServiceApi::get_document(const std::string& doc_id) {
    std::shared_lock lock(corpus_mutex_);
    const auto it = documents_.find(doc_id);
    if (it == documents_.end()) throw ApiError(404, "unknown_document", "unknown document '" + doc_id + "'");
    auto j = document_json(it->second);
    j["text"] = it->second.document.text;
    return ok(j);
}

Response ServiceApi::add_document(const json& body) {
    if (!body.is_object()) throw ApiError(422, "invalid_request", "body must be a JSON object");
    const auto raw = require_string(body, "text");
    if (!body.contains("metadata")) {
        throw ApiError(422, "invalid_metadata", "'metadata' is required", json{{"field", "metadata"}});
    }
    std::pair<DocumentMetadata, std::optional<std::string>> meta;
    try {
        meta = parse_metadata(body.at("metadata"));
    } catch (const IngestError& e) {
        throw ApiError(422, "invalid_metadata", e.what(), json{{"allowed_relevance", allowed_relevance()}});
    }
    std::string doc_id = meta.second.value_or("");
    if (body.contains("doc_id")) doc_id = require_string(body, "doc_id");
    if (text::trim(doc_id).empty()) {
        throw ApiError(422, "invalid_request", "'doc_id' is required", json{{"field", "doc_id"}});
    }

    // Embed outside the write lock; redo if the active index shape changed meanwhile.
    for (;;) {
        RagConfig cfg;
        {
            std::shared_lock lock(corpus_mutex_);
            cfg = active_config();
        }
        auto [doc, chunks] = make_document(doc_id, raw, meta.first, cfg.split_options());
        auto records = embed_chunks(gateway_, cfg.embedding_model, chunks);

        std::unique_lock lock(corpus_mutex_);
        if (!same_index_shape(cfg, active_config())) continue;
        index_.erase_document(doc.doc_id);
        try {
            index_.upsert(records);
        } catch (const IndexError& e) {
            throw ApiError(422, "index_rejected", e.what());
        }
        const size_t count = chunks.size();
        documents_[doc_id] = DocumentEntry{std::move(doc), count};
        ++corpus_generation_;
        save_index_locked();
        save_documents_locked();
        return ok({{"doc_id", doc_id}, {"chunk_count", count}}, 201);
    }
}

Response ServiceApi::patch_metadata(const std::string& doc_id, const json& body) {
    std::unique_lock lock(corpus_mutex_);
    const auto it = documents_.find(doc_id);
    if (it == documents_.end()) throw ApiError(404, "unknown_document", "unknown document '" + doc_id + "'");
    if (!body.is_object()) throw ApiError(422, "invalid_request", "body must be a JSON object");
    for (const auto& [key, value] : body.items()) {
        if (key != "relevance") {
            throw ApiError(422, "invalid_request", "only 'relevance' can be changed after ingestion",
                           json{{"field", key}});
        }
    }
    if (body.contains("relevance")) {
        const auto& v = body.at("relevance");
        const auto parsed = v.is_string() ? parse_relevance(v.get<std::string>()) : std::nullopt;
        if (!parsed) {
            throw ApiError(422, "invalid_relevance",
                           "invalid relevance " + v.dump() + " (allowed: main, relevant, adjacent)",
                           json{{"field", "relevance"}, {"allowed", allowed_relevance()}});
        }
        index_.relabel_document(doc_id, *parsed);
        it->second.document.metadata.relevance = *parsed;
        ++corpus_generation_;
        save_index_locked();
        save_documents_locked();
    }
    auto j = to_json(it->second.document.metadata);
    j["doc_id"] = doc_id;
    return ok(j);
}

Response ServiceApi::delete_document(const std::string& doc_id) {
    std::unique_lock lock(corpus_mutex_);
    const auto it = documents_.find(doc_id);
    if (it == documents_.end()) throw ApiError(404, "unknown_document", "unknown document '" + doc_id + "'");
    const auto removed = index_.erase_document(doc_id);
    documents_.erase(it);
    ++corpus_generation_;
    save_index_locked();
    save_documents_locked();
    return ok({{"doc_id", doc_id}, {"removed_chunks", removed}});
}

Response ServiceApi::clear_documents() {
    std::unique_lock lock(corpus_mutex_);
    const auto removed = documents_.size();
    index_.clear();
    documents_.clear();
    ++corpus_generation_;
    save_index_locked();
    save_documents_locked();
    return ok({{"removed_documents", removed}});
}

// --- configs ------------------------------------------------------------------

Response ServiceApi::list_configs() {
    std::shared_lock lock(corpus_mutex_);
    json arr = json::array();
    for (const auto& c : configs_) arr.push_back(to_json(c));
    return ok({{"active", active_config().effective_label()}, {"configs", arr}});
}

Response ServiceApi::set_active(const json& body) {
    if (!body.is_object()) throw ApiError(422, "invalid_request", "body must be a JSON object");
    const auto label = require_string(body, "label");
    const RagConfig* target = find_config(label);
    if (!target) throw ApiError(404, "unknown_config", "unknown config label '" + label + "'");
    const size_t target_idx = static_cast<size_t>(target - configs_.data());

    for (;;) {
        std::vector<SourceDocument> docs;
        std::uint64_t generation = 0;
        bool rebuild = false;
        {
            std::unique_lock lock(corpus_mutex_);
            if (same_index_shape(active_config(), *target)) {
                active_ = target_idx;
                save_active_locked();
                return ok({{"active", label}, {"reindexed", false}});
            }
            for (const auto& [id, e] : documents_) docs.push_back(e.document);
            generation = corpus_generation_;
            rebuild = true;
        }

        // Re-chunk and re-embed without blocking readers of the current index.
        VectorIndex fresh;
        std::map<std::string, size_t> counts;
        for (const auto& doc : docs) {
            const auto chunks = chunk_document(doc, target->split_options());
            fresh.upsert(embed_chunks(gateway_, target->embedding_model, chunks));
            counts[doc.doc_id] = chunks.size();
        }

        std::unique_lock lock(corpus_mutex_);
        if (generation != corpus_generation_ || !rebuild) continue;
        index_ = std::move(fresh);
        for (auto& [id, e] : documents_) e.chunk_count = counts[id];
        active_ = target_idx;
        ++corpus_generation_;
        save_index_locked();
        save_documents_locked();
        save_active_locked();
        return ok({{"active", label}, {"reindexed", true}});
    }
}

// --- QA sets ------------------------------------------------------------------

void ServiceApi::put_qa_set(const std::string& id, std::vector<eval::QAPair> pairs) {
    if (text::trim(id).empty() || id.find_first_of("/\\.") != std::string::npos) {
        throw ConfigError("invalid QA set id '" + id + "'");
    }
    std::lock_guard lock(qa_mutex_);
    write_json_atomic(opts_.state_dir / "qa_sets" / (id + ".json"), eval::to_json(pairs));
    qa_sets_[id] = std::move(pairs);
}

Response ServiceApi::list_qa_sets() {
    std::lock_guard lock(qa_mutex_);
    json arr = json::array();
    for (const auto& [id, pairs] : qa_sets_) arr.push_back({{"qa_set_id", id}, {"pairs", pairs.size()}});
    return ok({{"qa_sets", arr}});
}

Response ServiceApi::get_qa_set(const std::string& id) {
    std::lock_guard lock(qa_mutex_);
    const auto it = qa_sets_.find(id);
    if (it == qa_sets_.end()) throw ApiError(404, "unknown_qa_set", "unknown QA set '" + id + "'");
    return ok({{"qa_set_id", id}, {"pairs", eval::to_json(it->second)}});
}

Response ServiceApi::store_qa_set(const std::string& id, const json& body) {
    const json& pairs = body.is_object() && body.contains("pairs") ? body.at("pairs") : body;
    put_qa_set(id, eval::qa_set_from_json(pairs));
    return ok({{"qa_set_id", id}, {"pairs", pairs.size()}});
}

// --- eval runs ----------------------------------------------------------------

Response ServiceApi::submit_run(const json& body) {
    if (!body.is_object() || !body.contains("config_labels") || !body.at("config_labels").is_array() ||
        body.at("config_labels").empty()) {
        throw ApiError(422, "invalid_request", "'config_labels' must be a non-empty array",
                       json{{"field", "config_labels"}});
    }
    std::vector<std::string> labels;
    for (const auto& l : body.at("config_labels")) {
        if (!l.is_string()) {
            throw ApiError(422, "invalid_request", "config labels must be strings", json{{"field", "config_labels"}});
        }
        labels.push_back(l.get<std::string>());
        if (!find_config(labels.back())) {
            throw ApiError(404, "unknown_config", "unknown config label '" + labels.back() + "'");
        }
    }
    const auto qa_id = require_string(body, "qa_set_id");
    {
        std::lock_guard lock(qa_mutex_);
        if (!qa_sets_.count(qa_id)) throw ApiError(404, "unknown_qa_set", "unknown QA set '" + qa_id + "'");
    }

    std::set<std::string> wanted(labels.begin(), labels.end());
    std::lock_guard lock(runs_mutex_);
    for (const auto& [id, run] : runs_) {
        if (run.status != RunStatus::pending && run.status != RunStatus::running) continue;
        if (std::set<std::string>(run.config_labels.begin(), run.config_labels.end()) == wanted) {
            throw ApiError(409, "run_active", "run " + id + " is already active for this label set",
                           json{{"run_id", id}});
        }
    }
    if (queue_.size() >= opts_.eval_queue_capacity) {
        throw ApiError(503, "queue_full", "the eval queue is full");
    }
    EvalRun run;
    run.run_id = fmt_run_id(next_run_++);
    run.config_labels = labels;
    run.qa_set_id = qa_id;
    save_run(run);
    const auto id = run.run_id;
    runs_.emplace(id, std::move(run));
    queue_.push_back(id);
    runs_cv_.notify_all();
    return ok({{"run_id", id}, {"status", "pending"}}, 202);
}

Response ServiceApi::list_runs() {
    std::lock_guard lock(runs_mutex_);
    json arr = json::array();
    for (const auto& [id, run] : runs_) {
        arr.push_back({{"run_id", id},
                       {"status", std::string(to_string(run.status))},
                       {"config_labels", run.config_labels},
                       {"qa_set_id", run.qa_set_id}});
    }
    return ok({{"runs", arr}});
}

Response ServiceApi::get_run(const std::string& run_id) {
    std::lock_guard lock(runs_mutex_);
    const auto it = runs_.find(run_id);
    if (it == runs_.end()) throw ApiError(404, "unknown_run", "unknown eval run '" + run_id + "'");
    return ok(to_json(it->second));
}

void ServiceApi::wait_for_eval_idle() {
    std::unique_lock lock(runs_mutex_);
    runs_cv_.wait(lock, [this] { return queue_.empty() && !worker_busy_; });
}

void ServiceApi::eval_worker() {
    for (;;) {
        std::string run_id;
        {
            std::unique_lock lock(runs_mutex_);
            runs_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
            if (stopping_) return;
            run_id = queue_.front();
            queue_.pop_front();
            worker_busy_ = true;
            auto& run = runs_.at(run_id);
            run.status = RunStatus::running;
            save_run(run);
        }
        execute_run(run_id);
        {
            std::lock_guard lock(runs_mutex_);
            worker_busy_ = false;
        }
        runs_cv_.notify_all();
    }
}

void ServiceApi::execute_run(const std::string& run_id) {
    std::vector<std::string> labels;
    std::string qa_id;
    {
        std::lock_guard lock(runs_mutex_);
        labels = runs_.at(run_id).config_labels;
        qa_id = runs_.at(run_id).qa_set_id;
    }

    std::optional<eval::EvalReport> report;
    std::string error;
    try {
        std::vector<RagConfig> configs;
        for (const auto& l : labels) configs.push_back(*find_config(l));
        std::vector<eval::QAPair> qa;
        {
            std::lock_guard lock(qa_mutex_);
            qa = qa_sets_.at(qa_id);
        }
        std::vector<SourceDocument> corpus;
        {
            std::shared_lock lock(corpus_mutex_);
            for (const auto& [id, e] : documents_) corpus.push_back(e.document);
        }
        report = eval::run_matrix(configs, qa, persona_, corpus, gateway_, {opts_.judge, opts_.eval_parallelism});
    } catch (const std::exception& e) {
        error = e.what();
    }

    std::lock_guard lock(runs_mutex_);
    auto& run = runs_.at(run_id);
    run.status = report ? RunStatus::done : RunStatus::failed;
    run.report = std::move(report);
    run.error = error;
    save_run(run);
}

// --- HTTP front end -----------------------------------------------------------

struct HttpServer::Impl {
    explicit Impl(ServiceApi& a) : api(a) {}
    ServiceApi& api;
    httplib::Server server;
};

HttpServer::HttpServer(ServiceApi& api) : impl_(std::make_unique<Impl>(api)) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
        Request r;
        r.method = req.method;
        r.path = req.path;
        r.body = req.body;
        for (const auto& [k, v] : req.headers) r.headers[text::to_lower_ascii(k)] = v;
        const auto out = impl_->api.handle(r);
        res.status = out.status;
        for (const auto& [k, v] : out.headers) res.set_header(k, v);
        if (!out.body.is_null()) res.set_content(out.body.dump(), "application/json");
    };
    auto& s = impl_->server;
    s.Get(".*", handler);
    s.Post(".*", handler);
    s.Put(".*", handler);
    s.Patch(".*", handler);
    s.Delete(".*", handler);
    s.Options(".*", handler);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    auto& s = impl_->server;
    if (port == 0) {
        const int bound = s.bind_to_any_port(host);
        if (bound < 0) throw Error("cannot bind " + host);
        return bound;
    }
    if (!s.bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_) impl_->server.stop();
}

std::pair<std::string, int> parse_addr(const std::string& addr) {
    const auto colon = addr.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == addr.size()) {
        throw ConfigError("address must be HOST:PORT, got '" + addr + "'");
    }
    const auto port_str = addr.substr(colon + 1);
    if (!std::all_of(port_str.begin(), port_str.end(), [](char c) { return c >= '0' && c <= '9'; }) ||
        port_str.size() > 5) {
        throw ConfigError("invalid port in '" + addr + "'");
    }
    const int port = std::stoi(port_str);
    if (port > 65535) throw ConfigError("invalid port in '" + addr + "'");
    return {addr.substr(0, colon), port};
}

}  // namespace docent::service
