#pragma once

#include <chrono>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "docent/corpus.hpp"
#include "docent/model_gateway.hpp"

namespace docent {

using RerankWeights = std::map<RelevanceClass, double>;

/// One experimental setup of the QA chain.
struct RagConfig {
    std::string label;
    ModelRef embedding_model{"stub://embed", "stub-embed", ModelKind::embedding};
    ModelRef chat_model{"stub://chat", "stub-chat", ModelKind::chat};
    ModelRef judge_model{"stub://judge", "stub-judge", ModelKind::chat};

    double generation_temperature = 0.3;
    double judge_temperature = 0.1;
    std::size_t top_k = 4;
    std::size_t chunk_size = 1000;
    std::size_t chunk_overlap = 200;
    std::vector<std::string> separators = {"\n\n", "\n", ". ", " ", ""};
    std::size_t memory_window = 2;

    bool criteria_expansion = true;
    bool rerank_enabled = false;
    RerankWeights rerank_weights = {
        {RelevanceClass::main, 1.0}, {RelevanceClass::relevant, 1.0}, {RelevanceClass::adjacent, 1.0}};
    double refusal_threshold = -1.0;  // -1 disables the hard threshold
    std::string refusal_message;      // empty: the built-in refusal text

    /// Report column; empty derives "Relevance" / "No relevance" from the steering switches.
    std::string metadata_mode;

    std::chrono::milliseconds gateway_timeout{120'000};
    int gateway_retries = 2;

    SplitOptions split_options() const { return {chunk_size, chunk_overlap, separators}; }
    std::string effective_label() const;
    std::string effective_metadata_mode() const;
    const std::string& effective_refusal_message() const;
};

/// Throws ConfigError naming the first offending field.
void validate(const RagConfig& cfg);

/// Missing keys take their defaults; unknown keys are rejected.
RagConfig rag_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RagConfig& cfg);

/// Accepts a single config object, an array of them, or {"configs": [...]}.
std::vector<RagConfig> rag_configs_from_json(const nlohmann::json& j);

RagConfig load_rag_config(const std::string& path);
std::vector<RagConfig> load_rag_configs(const std::string& path);

/// Applies DOCENT_EMBED_URL, DOCENT_CHAT_URL and DOCENT_JUDGE_URL when set.
void apply_endpoint_overrides(RagConfig& cfg);

}  // namespace docent
