#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "docent/corpus.hpp"
#include "docent/judge.hpp"
#include "docent/metrics.hpp"
#include "docent/model_gateway.hpp"
#include "docent/persona.hpp"
#include "docent/rag_config.hpp"

namespace docent::eval {

struct QAPair {
    std::string id;
    std::string question;
    std::string reference_answer;
};

/// JSON array of {"id", "question", "reference_answer"}; all non-empty, ids unique.
std::vector<QAPair> qa_set_from_json(const nlohmann::json& j);
std::vector<QAPair> load_qa_set(const std::string& path);
nlohmann::json to_json(const std::vector<QAPair>& set);

/// One (config, question) cell of the matrix.
struct EvalCell {
    std::string config_label;
    std::string qa_id;
    std::string candidate;
    bool refused = false;
    double meteor = 0.0;
    metrics::PrfScore semantic;
    std::optional<JudgeVerdict> verdict;
    std::optional<std::string> error;

    bool ok() const { return !error.has_value(); }
};

/// Per-config means over the cells that completed.
struct EvalRow {
    std::string config_label;
    std::string embedding_model;
    std::string chat_model;
    std::string metadata_mode;
    double meteor_mean = 0.0;
    double semantic_f1_mean = 0.0;
    double judge_mean = 0.0;
    std::size_t n_pairs = 0;
    std::size_t n_failed = 0;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    std::vector<EvalCell> details;
};

/// Machine report: one line per config, fixed six-decimal numbers.
std::string to_csv(const EvalReport& report);
/// Per-cell detail table.
std::string details_to_csv(const EvalReport& report);
/// Human report laid out as Embedding | Chat | Metadata | METEOR | F1-semantic | LLM-judge.
std::string to_markdown(const EvalReport& report);

nlohmann::json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

/// Fills the means of `row` from `cells` (failed cells are excluded; NaN when none succeeded).
void summarize(EvalRow& row, const std::vector<EvalCell>& cells);

struct MatrixOptions {
    JudgeOptions judge;
    std::size_t parallelism = 1;
};

/// For every config: chunk and embed the corpus with that config's splitter
/// and embedder, then answer every question in a fresh session and score the
/// answer with METEOR, semantic F1 and the judge. Cell failures are recorded
/// and never abort the matrix. Rows and details are ordered configs-then-pairs.
EvalReport run_matrix(const std::vector<RagConfig>& configs, const std::vector<QAPair>& qa_set,
                      const persona::PersonaProfile& persona, const std::vector<SourceDocument>& corpus,
                      ModelGateway& gateway, const MatrixOptions& opts = {});

}  // namespace docent::eval
