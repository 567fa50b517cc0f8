#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "docent/model_gateway.hpp"
#include "docent/persona.hpp"
#include "docent/rag_config.hpp"
#include "docent/session.hpp"
#include "docent/vector_index.hpp"

namespace docent {

/// Everything the pipeline saw and produced for one question.
struct AnswerTrace {
    std::string original_question;
    std::string condensed_question;
    std::vector<RetrievalHit> hits;
    std::vector<ChatMessage> assembled_messages;
    bool refused = false;
    std::string answer_text;
};

nlohmann::json to_json(const AnswerTrace& t);

struct AnswerResult {
    std::string answer;
    AnswerTrace trace;
};

/// A gateway failure inside answer(); carries the trace up to the failing stage.
class AnswerError : public Error {
public:
    AnswerError(const std::string& message, AnswerTrace partial, GatewayError cause)
        : Error(message), partial_(std::move(partial)), cause_(std::move(cause)) {}

    const AnswerTrace& partial_trace() const { return partial_; }
    const GatewayError& cause() const { return cause_; }

private:
    AnswerTrace partial_;
    GatewayError cause_;
};

/// Rewrites a follow-up into a standalone question. Returns `question`
/// unchanged without a model call when the session window is empty.
std::string condense_question(ModelGateway& gateway, const ChatSession& session, std::string_view question,
                              const RagConfig& cfg);

/// adjusted = base * weight[class], stable sort descending, ranks reassigned.
/// Throws ConfigError when a class present in `hits` has no weight.
std::vector<RetrievalHit> rerank(std::vector<RetrievalHit> hits, const RerankWeights& weights);

/// "SOURCE: <author>, <title> (<publication_type>, relevance=<class>)"
std::string source_header(const DocumentMetadata& m);

std::vector<ChatMessage> assemble_prompt(const persona::CompiledPrompt& compiled, std::span<const RetrievalHit> hits,
                                         std::string_view question, const RagConfig& cfg);

/// Embeds chunk texts in batches and turns them into unit-norm index records.
std::vector<EmbeddingRecord> embed_chunks(ModelGateway& gateway, const ModelRef& model, std::span<const Chunk> chunks,
                                          std::size_t batch_size = 32);

/// The conversational retrieval QA chain over a read-only vector store.
class RetrievalEngine {
public:
    RetrievalEngine(ModelGateway& gateway, const VectorStore& store) : gateway_(gateway), store_(store) {}

    /// condense -> embed -> search(top_k) -> rerank? -> threshold -> assemble
    /// -> generate -> remember. Refuses without a generation call when no hit
    /// survives. Throws AnswerError on gateway failure; the session is left
    /// untouched in that case.
    AnswerResult answer(ChatSession& session, std::string_view question, const RagConfig& cfg,
                        const persona::CompiledPrompt& persona);

    AnswerResult answer(ChatSession& session, std::string_view question, const RagConfig& cfg,
                        const persona::PersonaProfile& persona);

private:
    ModelGateway& gateway_;
    const VectorStore& store_;
};

}  // namespace docent
