#include "docent/eval_harness.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "docent/retrieval_engine.hpp"
#include "docent/text.hpp"
#include "docent/vector_index.hpp"

namespace docent::eval {

std::vector<QAPair> qa_set_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw ConfigError("QA set must be a JSON array");
    std::vector<QAPair> out;
    std::set<std::string> ids;
    for (const auto& item : j) {
        QAPair p;
        try {
            p.id = item.at("id").get<std::string>();
            p.question = item.at("question").get<std::string>();
            p.reference_answer = item.at("reference_answer").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("QA pair: ") + e.what());
        }
        if (text::trim(p.id).empty() || text::trim(p.question).empty() || text::trim(p.reference_answer).empty()) {
            throw ConfigError("QA pair '" + p.id + "' has an empty field");
        }
        if (!ids.insert(p.id).second) throw ConfigError("duplicate QA pair id '" + p.id + "'");
        out.push_back(std::move(p));
    }
    if (out.empty()) throw ConfigError("QA set is empty");
    return out;
}

std::vector<QAPair> load_qa_set(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read QA set " + path);
    try {
        return qa_set_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

nlohmann::json to_json(const std::vector<QAPair>& set) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : set) {
        arr.push_back({{"id", p.id}, {"question", p.question}, {"reference_answer", p.reference_answer}});
    }
    return arr;
}

// --- rendering ----------------------------------------------------------------

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string fixed(double v, int decimals) {
    if (!std::isfinite(v)) return "";
    return fmt::format("{:.{}f}", v, decimals);
}

std::string md_cell(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '|') out += "\\|";
        else if (c == '\n') out += ' ';
        else out += c;
    }
    return out;
}

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

double number_or_nan(const nlohmann::json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

std::string to_csv(const EvalReport& report) {
    std::string out = "config_label,embedding,chat,metadata,meteor,semantic_f1,llm_judge,n_pairs,n_failed\n";
    for (const auto& r : report.rows) {
        out += csv_field(r.config_label) + "," + csv_field(r.embedding_model) + "," + csv_field(r.chat_model) + "," +
               csv_field(r.metadata_mode) + "," + fixed(r.meteor_mean, 6) + "," + fixed(r.semantic_f1_mean, 6) + "," +
               fixed(r.judge_mean, 6) + "," + std::to_string(r.n_pairs) + "," + std::to_string(r.n_failed) + "\n";
    }
    return out;
}

std::string details_to_csv(const EvalReport& report) {
    std::string out =
        "config_label,qa_id,refused,meteor,semantic_precision,semantic_recall,semantic_f1,llm_judge,judge_runs,error,"
        "candidate\n";
    for (const auto& c : report.details) {
        const bool ok = c.ok();
        out += csv_field(c.config_label) + "," + csv_field(c.qa_id) + "," + (c.refused ? "true" : "false") + "," +
               (ok ? fixed(c.meteor, 6) : "") + "," + (ok ? fixed(c.semantic.precision, 6) : "") + "," +
               (ok ? fixed(c.semantic.recall, 6) : "") + "," + (ok ? fixed(c.semantic.f1, 6) : "") + "," +
               (c.verdict ? fixed(c.verdict->mean, 6) : "") + "," +
               (c.verdict ? std::to_string(c.verdict->n_runs()) : "") + "," + csv_field(c.error.value_or("")) + "," +
               csv_field(c.candidate) + "\n";
    }
    return out;
}

std::string to_markdown(const EvalReport& report) {
    std::string out = "| Embedding | Chat | Metadata | METEOR | F1-semantic | LLM-judge |\n";
    out += "|---|---|---|---|---|---|\n";
    for (const auto& r : report.rows) {
        auto num = [](double v, int d) { return std::isfinite(v) ? fixed(v, d) : std::string("n/a"); };
        out += "| " + md_cell(r.embedding_model) + " | " + md_cell(r.chat_model) + " | " + md_cell(r.metadata_mode) +
               " | " + num(r.meteor_mean, 3) + " | " + num(r.semantic_f1_mean, 3) + " | " + num(r.judge_mean, 2) +
               " |\n";
    }
    return out;
}

nlohmann::json to_json(const EvalReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"config_label", r.config_label},
                        {"embedding_model", r.embedding_model},
                        {"chat_model", r.chat_model},
                        {"metadata_mode", r.metadata_mode},
                        {"meteor_mean", finite_or_null(r.meteor_mean)},
                        {"semantic_f1_mean", finite_or_null(r.semantic_f1_mean)},
                        {"judge_mean", finite_or_null(r.judge_mean)},
                        {"n_pairs", r.n_pairs},
                        {"n_failed", r.n_failed}});
    }
    nlohmann::json details = nlohmann::json::array();
    for (const auto& c : report.details) {
        nlohmann::json d{{"config_label", c.config_label},
                         {"qa_id", c.qa_id},
                         {"candidate", c.candidate},
                         {"refused", c.refused},
                         {"meteor", c.meteor},
                         {"semantic", {{"precision", c.semantic.precision},
                                       {"recall", c.semantic.recall},
                                       {"f1", c.semantic.f1}}},
                         {"judge", c.verdict ? to_json(*c.verdict) : nlohmann::json(nullptr)},
                         {"error", c.error ? nlohmann::json(*c.error) : nlohmann::json(nullptr)}};
        details.push_back(std::move(d));
    }
    return nlohmann::json{{"rows", rows}, {"details", details}};
}

EvalReport report_from_json(const nlohmann::json& j) {
    EvalReport report;
    for (const auto& r : j.at("rows")) {
        EvalRow row;
        row.config_label = r.at("config_label").get<std::string>();
        row.embedding_model = r.at("embedding_model").get<std::string>();
        row.chat_model = r.at("chat_model").get<std::string>();
        row.metadata_mode = r.at("metadata_mode").get<std::string>();
        row.meteor_mean = number_or_nan(r.at("meteor_mean"));
        row.semantic_f1_mean = number_or_nan(r.at("semantic_f1_mean"));
        row.judge_mean = number_or_nan(r.at("judge_mean"));
        row.n_pairs = r.at("n_pairs").get<std::size_t>();
        row.n_failed = r.at("n_failed").get<std::size_t>();
        report.rows.push_back(std::move(row));
    }
    for (const auto& d : j.at("details")) {
        EvalCell c;
        c.config_label = d.at("config_label").get<std::string>();
        c.qa_id = d.at("qa_id").get<std::string>();
        c.candidate = d.at("candidate").get<std::string>();
        c.refused = d.at("refused").get<bool>();
        c.meteor = d.at("meteor").get<double>();
        c.semantic.precision = d.at("semantic").at("precision").get<double>();
        c.semantic.recall = d.at("semantic").at("recall").get<double>();
        c.semantic.f1 = d.at("semantic").at("f1").get<double>();
        if (const auto& jv = d.at("judge"); !jv.is_null()) {
            JudgeVerdict v;
            v.mean = jv.at("mean").get<double>();
            v.run_scores = jv.at("run_scores").get<std::vector<int>>();
            v.failed_runs = jv.at("failed_runs").get<std::size_t>();
            for (const auto& run : jv.at("runs")) {
                JudgeRun r;
                if (!run.at("score").is_null()) r.score = run.at("score").get<int>();
                r.outputs = run.at("outputs").get<std::vector<std::string>>();
                v.runs.push_back(std::move(r));
            }
            c.verdict = std::move(v);
        }
        if (const auto& e = d.at("error"); !e.is_null()) c.error = e.get<std::string>();
        report.details.push_back(std::move(c));
    }
    return report;
}

void summarize(EvalRow& row, const std::vector<EvalCell>& cells) {
    double meteor_sum = 0.0, f1_sum = 0.0, judge_sum = 0.0;
    std::size_t ok = 0;
    row.n_pairs = 0;
    row.n_failed = 0;
    for (const auto& c : cells) {
        if (c.config_label != row.config_label) continue;
        ++row.n_pairs;
        if (!c.ok() || !c.verdict) {
            ++row.n_failed;
            continue;
        }
        ++ok;
        meteor_sum += c.meteor;
        f1_sum += c.semantic.f1;
        judge_sum += c.verdict->mean;
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double n = static_cast<double>(ok);
    row.meteor_mean = ok ? meteor_sum / n : nan;
    row.semantic_f1_mean = ok ? f1_sum / n : nan;
    row.judge_mean = ok ? judge_sum / n : nan;
}

// --- matrix -------------------------------------------------------------------

namespace {

std::string index_key(const RagConfig& cfg) {
    std::string key = std::to_string(cfg.chunk_size) + "|" + std::to_string(cfg.chunk_overlap) + "|" +
                      cfg.embedding_model.endpoint + "|" + cfg.embedding_model.model_id;
    for (const auto& s : cfg.separators) key += "|" + s;
    return key;
}

struct BuiltIndex {
    VectorIndex index;
    std::optional<std::string> error;
};

BuiltIndex build_index(const RagConfig& cfg, const std::vector<SourceDocument>& corpus, ModelGateway& gateway) {
    BuiltIndex out;
    try {
        for (const auto& doc : corpus) {
            const auto chunks = chunk_document(doc, cfg.split_options());
            out.index.upsert(embed_chunks(gateway, cfg.embedding_model, chunks));
        }
    } catch (const Error& e) {
        out.error = std::string("indexing failed: ") + e.what();
    }
    return out;
}

void run_cell(EvalCell& cell, const RagConfig& cfg, const QAPair& pair, const persona::CompiledPrompt& prompt,
              const BuiltIndex& built, ModelGateway& gateway, const MatrixOptions& opts) {
    if (built.error) {
        cell.error = *built.error;
        return;
    }
    try {
        RetrievalEngine engine(gateway, built.index);
        ChatSession session("eval");
        const auto result = engine.answer(session, pair.question, cfg, prompt);
        cell.candidate = result.answer;
        cell.refused = result.trace.refused;
        cell.meteor = metrics::meteor(cell.candidate, pair.reference_answer);
        cell.semantic = metrics::semantic_f1(cell.candidate, pair.reference_answer, gateway, cfg.embedding_model);
        JudgeOptions jopts = opts.judge;
        jopts.temperature = cfg.judge_temperature;
        cell.verdict = judge(pair.question, pair.reference_answer, cell.candidate, gateway, cfg.judge_model, jopts);
    } catch (const JudgeError& e) {
        cell.verdict = e.partial();
        cell.error = std::string("judge: ") + e.what();
    } catch (const Error& e) {
        cell.error = e.what();
    }
}

}  // namespace

EvalReport run_matrix(const std::vector<RagConfig>& configs, const std::vector<QAPair>& qa_set,
                      const persona::PersonaProfile& persona, const std::vector<SourceDocument>& corpus,
                      ModelGateway& gateway, const MatrixOptions& opts) {
    if (configs.empty()) throw ConfigError("run_matrix needs at least one config");
    if (qa_set.empty()) throw ConfigError("run_matrix needs at least one QA pair");
    for (const auto& c : configs) validate(c);
    const auto prompt = persona::compile_system_prompt(persona);

    // Configs sharing chunking and embedder share one index.
    std::map<std::string, BuiltIndex> indexes;
    std::vector<const BuiltIndex*> index_of(configs.size());
    for (size_t i = 0; i < configs.size(); ++i) {
        const auto key = index_key(configs[i]);
        auto it = indexes.find(key);
        if (it == indexes.end()) it = indexes.emplace(key, build_index(configs[i], corpus, gateway)).first;
        index_of[i] = &it->second;
    }

    EvalReport report;
    report.details.resize(configs.size() * qa_set.size());
    for (size_t c = 0; c < configs.size(); ++c) {
        for (size_t q = 0; q < qa_set.size(); ++q) {
            auto& cell = report.details[c * qa_set.size() + q];
            cell.config_label = configs[c].effective_label();
            cell.qa_id = qa_set[q].id;
        }
    }

    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i = next++; i < report.details.size(); i = next++) {
            const size_t c = i / qa_set.size();
            const size_t q = i % qa_set.size();
            run_cell(report.details[i], configs[c], qa_set[q], prompt, *index_of[c], gateway, opts);
        }
    };
    const size_t threads = std::min(std::max<size_t>(opts.parallelism, 1), report.details.size());
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }

    for (const auto& cfg : configs) {
        EvalRow row;
        row.config_label = cfg.effective_label();
        row.embedding_model = cfg.embedding_model.display_name();
        row.chat_model = cfg.chat_model.display_name();
        row.metadata_mode = cfg.effective_metadata_mode();
        summarize(row, report.details);
        report.rows.push_back(std::move(row));
    }
    return report;
}

}  // namespace docent::eval
