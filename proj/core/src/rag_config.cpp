#include "docent/rag_config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>

#include "docent/prompt_templates.hpp"

namespace docent {

std::string RagConfig::effective_metadata_mode() const {
    if (!metadata_mode.empty()) return metadata_mode;
    return criteria_expansion || rerank_enabled ? "Relevance" : "No relevance";
}

std::string RagConfig::effective_label() const {
    if (!label.empty()) return label;
    return embedding_model.display_name() + " + " + chat_model.display_name() + " + " + effective_metadata_mode();
}

const std::string& RagConfig::effective_refusal_message() const {
    static const std::string kDefault(templates::kDefaultRefusalMessage);
    return refusal_message.empty() ? kDefault : refusal_message;
}

void validate(const RagConfig& cfg) {
    validate(cfg.embedding_model);
    validate(cfg.chat_model);
    validate(cfg.judge_model);
    if (cfg.embedding_model.kind != ModelKind::embedding) throw ConfigError("embedding_model must be an embedding model");
    if (cfg.chat_model.kind != ModelKind::chat) throw ConfigError("chat_model must be a chat model");
    if (cfg.judge_model.kind != ModelKind::chat) throw ConfigError("judge_model must be a chat model");
    if (!std::isfinite(cfg.generation_temperature) || cfg.generation_temperature < 0) {
        throw ConfigError("generation_temperature must be finite and >= 0");
    }
    if (!std::isfinite(cfg.judge_temperature) || cfg.judge_temperature < 0) {
        throw ConfigError("judge_temperature must be finite and >= 0");
    }
    if (cfg.top_k < 1) throw ConfigError("top_k must be >= 1");
    if (cfg.chunk_size < 1) throw ConfigError("chunk_size must be >= 1");
    if (cfg.chunk_overlap >= cfg.chunk_size) throw ConfigError("chunk_overlap must be smaller than chunk_size");
    if (cfg.separators.empty() || !cfg.separators.back().empty()) {
        throw ConfigError("separators must end with the empty string");
    }
    if (cfg.memory_window < 1) throw ConfigError("memory_window must be >= 1");
    for (auto rc : kAllRelevanceClasses) {
        auto it = cfg.rerank_weights.find(rc);
        if (it == cfg.rerank_weights.end()) {
            throw ConfigError("rerank_weights is missing a weight for '" + std::string(to_string(rc)) + "'");
        }
        if (!std::isfinite(it->second) || it->second < 0) {
            throw ConfigError("rerank weight for '" + std::string(to_string(rc)) + "' must be finite and >= 0");
        }
    }
    if (!(cfg.refusal_threshold >= -1.0 && cfg.refusal_threshold <= 1.0)) {
        throw ConfigError("refusal_threshold must lie in [-1, 1]");
    }
    if (cfg.gateway_timeout.count() <= 0) throw ConfigError("gateway_timeout_ms must be positive");
    if (cfg.gateway_retries < 0) throw ConfigError("gateway_retries must be >= 0");
}

namespace {

const std::set<std::string> kKnownKeys = {
    "label",          "embedding_model",   "chat_model",         "judge_model",     "generation_temperature",
    "judge_temperature", "top_k",          "chunk_size",         "chunk_overlap",   "separators",
    "memory_window",  "criteria_expansion", "rerank_enabled",    "rerank_weights",  "refusal_threshold",
    "refusal_message", "metadata_mode",    "gateway_timeout_ms", "gateway_retries"};

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("config field '") + key + "' has the wrong type");
    }
}

std::size_t read_count(const nlohmann::json& j, const char* key, std::size_t fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ConfigError(std::string("config field '") + key + "' must be a non-negative integer");
    }
    return v.get<std::size_t>();
}

}  // namespace

RagConfig rag_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (!kKnownKeys.contains(key)) throw ConfigError("unknown config field '" + key + "'");
    }

    RagConfig cfg;
    read(j, "label", cfg.label);
    if (j.contains("embedding_model")) cfg.embedding_model = model_ref_from_json(j.at("embedding_model"), ModelKind::embedding);
    if (j.contains("chat_model")) cfg.chat_model = model_ref_from_json(j.at("chat_model"), ModelKind::chat);
    if (j.contains("judge_model")) cfg.judge_model = model_ref_from_json(j.at("judge_model"), ModelKind::chat);
    read(j, "generation_temperature", cfg.generation_temperature);
    read(j, "judge_temperature", cfg.judge_temperature);
    cfg.top_k = read_count(j, "top_k", cfg.top_k);
    cfg.chunk_size = read_count(j, "chunk_size", cfg.chunk_size);
    cfg.chunk_overlap = read_count(j, "chunk_overlap", cfg.chunk_overlap);
    read(j, "separators", cfg.separators);
    cfg.memory_window = read_count(j, "memory_window", cfg.memory_window);
    read(j, "criteria_expansion", cfg.criteria_expansion);
    read(j, "rerank_enabled", cfg.rerank_enabled);
    if (j.contains("rerank_weights")) {
        const auto& w = j.at("rerank_weights");
        if (!w.is_object()) throw ConfigError("rerank_weights must be an object");
        RerankWeights weights;
        for (const auto& [key, value] : w.items()) {
            const auto rc = parse_relevance(key);
            if (!rc) throw ConfigError("rerank_weights has unknown class '" + key + "'");
            if (!value.is_number()) throw ConfigError("rerank weight for '" + key + "' must be a number");
            weights[*rc] = value.get<double>();
        }
        cfg.rerank_weights = std::move(weights);
    }
    read(j, "refusal_threshold", cfg.refusal_threshold);
    read(j, "refusal_message", cfg.refusal_message);
    read(j, "metadata_mode", cfg.metadata_mode);
    cfg.gateway_timeout = std::chrono::milliseconds(read_count(j, "gateway_timeout_ms", cfg.gateway_timeout.count()));
    if (j.contains("gateway_retries")) cfg.gateway_retries = static_cast<int>(read_count(j, "gateway_retries", 0));

    validate(cfg);
    return cfg;
}

nlohmann::json to_json(const RagConfig& cfg) {
    nlohmann::json weights = nlohmann::json::object();
    for (const auto& [rc, w] : cfg.rerank_weights) weights[std::string(to_string(rc))] = w;
    return nlohmann::json{{"label", cfg.effective_label()},
                          {"embedding_model", to_json(cfg.embedding_model)},
                          {"chat_model", to_json(cfg.chat_model)},
                          {"judge_model", to_json(cfg.judge_model)},
                          {"generation_temperature", cfg.generation_temperature},
                          {"judge_temperature", cfg.judge_temperature},
                          {"top_k", cfg.top_k},
                          {"chunk_size", cfg.chunk_size},
                          {"chunk_overlap", cfg.chunk_overlap},
                          {"separators", cfg.separators},
                          {"memory_window", cfg.memory_window},
                          {"criteria_expansion", cfg.criteria_expansion},
                          {"rerank_enabled", cfg.rerank_enabled},
                          {"rerank_weights", weights},
                          {"refusal_threshold", cfg.refusal_threshold},
                          {"refusal_message", cfg.effective_refusal_message()},
                          {"metadata_mode", cfg.effective_metadata_mode()},
                          {"gateway_timeout_ms", cfg.gateway_timeout.count()},
                          {"gateway_retries", cfg.gateway_retries}};
}

std::vector<RagConfig> rag_configs_from_json(const nlohmann::json& j) {
    const nlohmann::json* list = &j;
    if (j.is_object() && j.contains("configs")) list = &j.at("configs");
    std::vector<RagConfig> out;
    if (list->is_array()) {
        for (const auto& item : *list) out.push_back(rag_config_from_json(item));
    } else {
        out.push_back(rag_config_from_json(*list));
    }
    if (out.empty()) throw ConfigError("config list is empty");
    std::set<std::string> labels;
    for (const auto& c : out) {
        if (!labels.insert(c.effective_label()).second) throw ConfigError("duplicate config label '" + c.effective_label() + "'");
    }
    return out;
}

namespace {

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

}  // namespace

RagConfig load_rag_config(const std::string& path) {
    auto cfg = rag_config_from_json(read_json_file(path));
    apply_endpoint_overrides(cfg);
    return cfg;
}

std::vector<RagConfig> load_rag_configs(const std::string& path) {
    auto cfgs = rag_configs_from_json(read_json_file(path));
    for (auto& c : cfgs) apply_endpoint_overrides(c);
    return cfgs;
}

void apply_endpoint_overrides(RagConfig& cfg) {
    if (const char* v = std::getenv("DOCENT_EMBED_URL"); v && *v) cfg.embedding_model.endpoint = v;
    if (const char* v = std::getenv("DOCENT_CHAT_URL"); v && *v) cfg.chat_model.endpoint = v;
    if (const char* v = std::getenv("DOCENT_JUDGE_URL"); v && *v) cfg.judge_model.endpoint = v;
    validate(cfg);
}

}  // namespace docent
