#include "cli.hpp"

#include <algorithm>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "docent/corpus.hpp"
#include "docent/eval_harness.hpp"
#include "docent/model_gateway.hpp"
#include "docent/persona.hpp"
#include "docent/rag_config.hpp"
#include "docent/retrieval_engine.hpp"
#include "docent/service_api.hpp"
#include "docent/session.hpp"
#include "docent/vector_index.hpp"

namespace docent::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Malformed JSON input files are usage errors, like bad flags.
json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path);
    out << content;
    if (!out) throw Error("cannot write " + path);
}

persona::PersonaProfile load_persona(const std::string& path) {
    if (path.empty()) return persona::default_profile();
    return persona::parse_profile(read_json_file(path));
}

HttpGatewayOptions gateway_options(const RagConfig& cfg) {
    HttpGatewayOptions o;
    o.timeout = cfg.gateway_timeout;
    o.max_retries = cfg.gateway_retries;
    return o;
}

const RagConfig& pick_config(const std::vector<RagConfig>& configs, const std::string& label) {
    if (label.empty()) return configs.front();
    for (const auto& c : configs) {
        if (c.effective_label() == label) return c;
    }
    throw ConfigError("no config labelled '" + label + "'");
}

struct IngestArgs {
    std::string corpus, config, index;
};

int cmd_ingest(const IngestArgs& a, std::ostream& out) {
    const auto cfg = load_rag_config(a.config);
    RoutingGateway gateway(gateway_options(cfg));
    const auto docs = load_corpus(a.corpus, cfg.split_options());
    VectorIndex index;
    for (const auto& d : docs) {
        index.upsert(embed_chunks(gateway, cfg.embedding_model, d.chunks));
        out << d.document.doc_id << '\t' << d.chunks.size() << '\n';
    }
    if (const auto parent = fs::path(a.index).parent_path(); !parent.empty()) fs::create_directories(parent);
    index.save(a.index);
    return kOk;
}

struct AskArgs {
    std::string question, session, config, index, persona, label;
    bool trace = false;
};

int cmd_ask(const AskArgs& a, std::ostream& out, std::ostream& err) {
    const auto configs = load_rag_configs(a.config);
    const auto& cfg = pick_config(configs, a.label);
    const auto profile = load_persona(a.persona);
    if (!fs::exists(a.index)) throw IndexError("index not found: " + a.index);
    const auto index = VectorIndex::load(a.index);

    ChatSession session("cli");
    if (!a.session.empty() && fs::exists(a.session)) session = ChatSession::from_json(read_json_file(a.session));

    RoutingGateway gateway(gateway_options(cfg));
    RetrievalEngine engine(gateway, index);
    AnswerResult result;
    try {
        result = engine.answer(session, a.question, cfg, profile);
    } catch (const AnswerError& e) {
        err << "error: " << e.what() << '\n';
        if (a.trace) out << json{{"error", e.what()}, {"trace", to_json(e.partial_trace())}}.dump(2) << '\n';
        return kRuntimeFailure;
    }
    if (!a.session.empty()) write_text_file(a.session, session.to_json().dump(2) + "\n");

    if (a.trace) {
        out << json{{"answer", result.answer}, {"refused", result.trace.refused}, {"trace", to_json(result.trace)}}
                   .dump(2)
            << '\n';
    } else {
        out << result.answer << '\n';
    }
    return kOk;
}

struct EvalArgs {
    std::string qa, configs, out_csv, out_md, details_csv, corpus, index, persona;
    std::size_t runs = 15;
    std::size_t jobs = 1;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    const auto configs = load_rag_configs(a.configs);
    const auto qa = eval::load_qa_set(a.qa);
    const auto profile = load_persona(a.persona);
    if (a.corpus.empty() == a.index.empty()) throw ConfigError("eval needs exactly one of --corpus or --index");

    std::vector<SourceDocument> corpus;
    if (!a.corpus.empty()) {
        for (auto& d : load_corpus(a.corpus, configs.front().split_options())) corpus.push_back(std::move(d.document));
    } else {
        corpus = documents_from_index(VectorIndex::load(a.index));
    }

    RoutingGateway gateway(gateway_options(configs.front()));
    eval::MatrixOptions opts;
    opts.judge.n_runs = a.runs;
    opts.parallelism = a.jobs;
    const auto report = eval::run_matrix(configs, qa, profile, corpus, gateway, opts);

    write_text_file(a.out_csv, eval::to_csv(report));
    write_text_file(a.out_md, eval::to_markdown(report));
    if (!a.details_csv.empty()) write_text_file(a.details_csv, eval::details_to_csv(report));
    out << eval::to_markdown(report);

    std::size_t failed = 0;
    for (const auto& r : report.rows) failed += r.n_failed;
    return failed == 0 ? kOk : kRuntimeFailure;
}

struct ServeArgs {
    std::string addr = "127.0.0.1:8080", config, index, persona, state, cors_origin = "*", token;
    std::vector<std::string> qa_sets;
    std::size_t jobs = 1;
    std::size_t runs = 15;
};

int cmd_serve(const ServeArgs& a, std::ostream& out) {
    const auto [host, port] = service::parse_addr(a.addr);
    auto configs = load_rag_configs(a.config);
    RoutingGateway gateway(gateway_options(configs.front()));

    service::ServiceOptions opts;
    opts.index_path = a.index;
    opts.state_dir = a.state;
    opts.cors_origin = a.cors_origin;
    opts.bearer_token = a.token;
    opts.eval_parallelism = a.jobs;
    opts.judge.n_runs = a.runs;

    // Block the stop signals before any thread starts so only the waiter sees them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    service::ServiceApi api(gateway, std::move(configs), load_persona(a.persona), opts);
    for (const auto& path : a.qa_sets) api.put_qa_set(fs::path(path).stem().string(), eval::load_qa_set(path));

    service::HttpServer server(api);
    const int bound = server.bind(host, port);
    out << "listening on " << host << ':' << bound << std::endl;

    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        server.stop();
    });
    server.listen();
    // listen() can also return on its own; wake the waiter in that case.
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    return kOk;
}

int cmd_persona_validate(const std::string& path, std::ostream& out) {
    const auto violations = persona::validate_profile(read_json_file(path));
    if (violations.empty()) {
        out << "ok\n";
        return kOk;
    }
    for (const auto& v : violations) out << v.str() << '\n';
    return kUsageError;
}

int cmd_persona_manifest(const std::string& path, std::ostream& out) {
    out << persona::capability_manifest(load_persona(path)).dump(2) << '\n';
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Curator-steerable retrieval QA over small scholarly corpora", "docent"};
    app.require_subcommand(1);

    IngestArgs ingest;
    auto* ingest_cmd = app.add_subcommand("ingest", "Chunk, embed and index a corpus directory");
    ingest_cmd->add_option("--corpus", ingest.corpus, "Directory of <name>.txt + <name>.meta.json pairs")
        ->required()
        ->check(CLI::ExistingDirectory);
    ingest_cmd->add_option("--config", ingest.config, "RagConfig JSON file")->required();
    ingest_cmd->add_option("--index", ingest.index, "Index file to write")->required();

    ServeArgs serve;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
    serve_cmd->add_option("--addr", serve.addr, "Listen address HOST:PORT")->capture_default_str();
    serve_cmd->add_option("--config", serve.config, "RagConfig JSON file (one config or a list)")->required();
    serve_cmd->add_option("--index", serve.index, "Index file (created on first upload)")->required();
    serve_cmd->add_option("--persona", serve.persona, "Persona profile JSON file");
    serve_cmd->add_option("--state", serve.state, "State directory (default <index>.state)");
    serve_cmd->add_option("--cors-origin", serve.cors_origin, "Allowed CORS origin")->capture_default_str();
    serve_cmd->add_option("--token", serve.token, "Require this bearer token on every request");
    serve_cmd->add_option("--qa", serve.qa_sets, "QA set JSON file to register (id = file stem)");
    serve_cmd->add_option("--jobs", serve.jobs, "Parallel matrix cells per eval run")->capture_default_str();
    serve_cmd->add_option("--runs", serve.runs, "Judge runs per answer")->capture_default_str();

    AskArgs ask;
    auto* ask_cmd = app.add_subcommand("ask", "Answer one question");
    ask_cmd->add_option("question", ask.question, "The question")->required();
    ask_cmd->add_option("--session", ask.session, "Session window JSON file, read and updated");
    ask_cmd->add_option("--config", ask.config, "RagConfig JSON file")->required();
    ask_cmd->add_option("--label", ask.label, "Config label when the file holds several");
    ask_cmd->add_option("--index", ask.index, "Index file")->required();
    ask_cmd->add_option("--persona", ask.persona, "Persona profile JSON file");
    ask_cmd->add_flag("--trace", ask.trace, "Print {answer, refused, trace} as JSON");

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "Run a configuration matrix over a QA set");
    eval_cmd->add_option("--qa", ev.qa, "QA set JSON file")->required();
    eval_cmd->add_option("--configs", ev.configs, "RagConfig list JSON file")->required();
    eval_cmd->add_option("--out-csv", ev.out_csv, "Summary CSV output")->required();
    eval_cmd->add_option("--out-md", ev.out_md, "Markdown table output")->required();
    eval_cmd->add_option("--details-csv", ev.details_csv, "Per-question CSV output");
    eval_cmd->add_option("--corpus", ev.corpus, "Corpus directory")->check(CLI::ExistingDirectory);
    eval_cmd->add_option("--index", ev.index, "Rebuild the corpus from this index instead");
    eval_cmd->add_option("--persona", ev.persona, "Persona profile JSON file");
    eval_cmd->add_option("--runs", ev.runs, "Judge runs per answer")->capture_default_str()->check(CLI::PositiveNumber);
    eval_cmd->add_option("--jobs", ev.jobs, "Parallel matrix cells")->capture_default_str()->check(CLI::PositiveNumber);

    std::string persona_file;
    auto* persona_cmd = app.add_subcommand("persona", "Persona profile tools");
    persona_cmd->require_subcommand(1);
    auto* validate_cmd = persona_cmd->add_subcommand("validate", "Print profile violations");
    validate_cmd->add_option("file", persona_file, "Profile JSON file")->required();
    auto* manifest_cmd = persona_cmd->add_subcommand("manifest", "Print the capability manifest");
    manifest_cmd->add_option("file", persona_file, "Profile JSON file")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsageError;
    }

    try {
        if (*ingest_cmd) return cmd_ingest(ingest, out);
        if (*serve_cmd) return cmd_serve(serve, out);
        if (*ask_cmd) return cmd_ask(ask, out, err);
        if (*eval_cmd) return cmd_eval(ev, out);
        if (*validate_cmd) return cmd_persona_validate(persona_file, out);
        if (*manifest_cmd) return cmd_persona_manifest(persona_file, out);
    } catch (const persona::ProfileError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeFailure;
    }
    return kUsageError;
}

}  // namespace docent::cli
