#include <gtest/gtest.h>

#include <fstream>

#include "docent/error.hpp"
#include "docent/rag_config.hpp"
#include "test_support.hpp"

using namespace docent;
using nlohmann::json;

TEST(RagConfig, DefaultsCarryTheReferenceSetup) {
    const auto cfg = rag_config_from_json(json::object());
    EXPECT_EQ(cfg.chunk_size, 1000u);
    EXPECT_EQ(cfg.chunk_overlap, 200u);
    EXPECT_EQ(cfg.top_k, 4u);
    EXPECT_DOUBLE_EQ(cfg.generation_temperature, 0.3);
    EXPECT_DOUBLE_EQ(cfg.judge_temperature, 0.1);
    EXPECT_EQ(cfg.memory_window, 2u);
    EXPECT_TRUE(cfg.criteria_expansion);
    EXPECT_FALSE(cfg.rerank_enabled);
    EXPECT_EQ(cfg.effective_metadata_mode(), "Relevance");
}

TEST(RagConfig, RoundTripsThroughJson) {
    auto cfg = rag_config_from_json(json{{"label", "x"},
                                         {"top_k", 7},
                                         {"rerank_enabled", true},
                                         {"rerank_weights", {{"main", 1.5}, {"relevant", 1.0}, {"adjacent", 0.5}}},
                                         {"refusal_threshold", 0.2},
                                         {"separators", {"\n", ""}}});
    const auto again = rag_config_from_json(to_json(cfg));
    EXPECT_EQ(to_json(again), to_json(cfg));
    EXPECT_EQ(again.rerank_weights.at(RelevanceClass::adjacent), 0.5);
}

TEST(RagConfig, RejectsBadValues) {
    EXPECT_THROW(rag_config_from_json(json{{"chunk_size", 100}, {"chunk_overlap", 100}}), ConfigError);
    EXPECT_THROW(rag_config_from_json(json{{"top_k", 0}}), ConfigError);
    EXPECT_THROW(rag_config_from_json(json{{"top_k", -1}}), ConfigError);
    EXPECT_THROW(rag_config_from_json(json{{"generation_temperature", -0.5}}), ConfigError);
    EXPECT_THROW(rag_config_from_json(json{{"topk", 4}}), ConfigError);
    EXPECT_THROW(rag_config_from_json(json{{"rerank_weights", {{"primary", 1.0}}}}), ConfigError);
    EXPECT_THROW(rag_config_from_json(json{{"chat_model", {{"endpoint", "ftp://x"}, {"model_id", "m"}}}}), ConfigError);
    EXPECT_THROW(rag_config_from_json(json{{"top_k", "four"}}), ConfigError);
}

TEST(RagConfig, LabelsDeriveFromModelsAndMode) {
    RagConfig cfg;
    cfg.embedding_model.short_name = "Qwen3";
    cfg.chat_model.short_name = "Llama3.3";
    EXPECT_EQ(cfg.effective_label(), "Qwen3 + Llama3.3 + Relevance");
    cfg.criteria_expansion = false;
    EXPECT_EQ(cfg.effective_label(), "Qwen3 + Llama3.3 + No relevance");
    cfg.metadata_mode = "Custom";
    EXPECT_EQ(cfg.effective_metadata_mode(), "Custom");
}

TEST(RagConfig, ListsAcceptSeveralShapesAndRejectDuplicates) {
    const json one{{"label", "a"}};
    EXPECT_EQ(rag_configs_from_json(one).size(), 1u);
    EXPECT_EQ(rag_configs_from_json(json::array({one, json{{"label", "b"}}})).size(), 2u);
    EXPECT_EQ(rag_configs_from_json(json{{"configs", json::array({one})}}).size(), 1u);
    EXPECT_THROW(rag_configs_from_json(json::array({one, one})), ConfigError);
    EXPECT_THROW(rag_configs_from_json(json::array()), ConfigError);
}

TEST(RagConfig, FixtureFilesParse) {
    EXPECT_EQ(load_rag_configs(docent::testing::fixture_path("configs.json").string()).size(), 2u);
    EXPECT_EQ(load_rag_config(docent::testing::fixture_path("config.json").string()).chunk_size, 200u);
    EXPECT_EQ(load_rag_configs(std::string(DOCENT_DATA_DIR) + "/config.example.json").size(), 2u);
    EXPECT_THROW(load_rag_config("/nonexistent/config.json"), ConfigError);
}
