#include "docent/retrieval_engine.hpp"

#include <algorithm>

#include "docent/prompt_templates.hpp"
#include "docent/text.hpp"

namespace docent {

nlohmann::json to_json(const AnswerTrace& t) {
    nlohmann::json hits = nlohmann::json::array();
    for (const auto& h : t.hits) hits.push_back(to_json(h));
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& m : t.assembled_messages) messages.push_back(to_json(m));
    return nlohmann::json{{"original_question", t.original_question},
                          {"condensed_question", t.condensed_question},
                          {"hits", hits},
                          {"assembled_messages", messages},
                          {"refused", t.refused},
                          {"answer_text", t.answer_text}};
}

std::string condense_question(ModelGateway& gateway, const ChatSession& session, std::string_view question,
                              const RagConfig& cfg) {
    if (session.empty()) return std::string(question);

    std::string history = "Conversation history:\n";
    for (const auto& e : session.window()) {
        history += "User: " + e.question + "\n";
        history += "Assistant: " + e.answer + "\n";
    }
    history += "\nFinal question: ";
    history += question;

    const std::vector<ChatMessage> messages = {
        {ChatRole::system, std::string(templates::kCondenseInstruction)},
        {ChatRole::user, std::move(history)},
    };
    auto rewritten = gateway.chat(cfg.chat_model, messages, GenerationParams{cfg.generation_temperature});
    if (rewritten.empty()) return std::string(question);
    return rewritten;
}

std::vector<RetrievalHit> rerank(std::vector<RetrievalHit> hits, const RerankWeights& weights) {
    for (auto& h : hits) {
        const auto rc = h.payload.metadata.relevance;
        auto it = weights.find(rc);
        if (it == weights.end()) {
            throw ConfigError("no rerank weight for relevance class '" + std::string(to_string(rc)) + "'");
        }
        h.adjusted_score = h.base_score * it->second;
    }
    std::stable_sort(hits.begin(), hits.end(),
                     [](const RetrievalHit& a, const RetrievalHit& b) { return a.adjusted_score > b.adjusted_score; });
    for (size_t i = 0; i < hits.size(); ++i) hits[i].rank = i + 1;
    return hits;
}

std::string source_header(const DocumentMetadata& m) {
    return "SOURCE: " + m.author + ", " + m.title + " (" + m.publication_type +
           ", relevance=" + std::string(to_string(m.relevance)) + ")";
}

std::vector<ChatMessage> assemble_prompt(const persona::CompiledPrompt& compiled, std::span<const RetrievalHit> hits,
                                         std::string_view question, const RagConfig& cfg) {
    std::string system = compiled.system_prompt;
    if (cfg.criteria_expansion && compiled.criteria_clause) system += " " + *compiled.criteria_clause;

    std::string user = "Context:\n\n";
    if (hits.empty()) {
        user += templates::kNoSourcesRetrieved;
        user += "\n\n";
    }
    for (const auto& h : hits) {
        user += source_header(h.payload.metadata) + "\n" + std::string(text::trim(h.payload.text)) + "\n\n";
    }
    user += "Question: ";
    user += question;

    return {{ChatRole::system, std::move(system)}, {ChatRole::user, std::move(user)}};
}

std::vector<EmbeddingRecord> embed_chunks(ModelGateway& gateway, const ModelRef& model, std::span<const Chunk> chunks,
                                          std::size_t batch_size) {
    std::vector<EmbeddingRecord> records;
    records.reserve(chunks.size());
    batch_size = std::max<std::size_t>(batch_size, 1);
    for (size_t begin = 0; begin < chunks.size(); begin += batch_size) {
        const size_t end = std::min(chunks.size(), begin + batch_size);
        std::vector<std::string> texts;
        for (size_t i = begin; i < end; ++i) texts.push_back(chunks[i].text);
        const auto vectors = gateway.embed_texts(model, texts);
        for (size_t i = begin; i < end; ++i) records.push_back(make_record(chunks[i], vectors[i - begin]));
    }
    return records;
}

AnswerResult RetrievalEngine::answer(ChatSession& session, std::string_view question, const RagConfig& cfg,
                                     const persona::PersonaProfile& persona) {
    return answer(session, question, cfg, persona::compile_system_prompt(persona));
}

AnswerResult RetrievalEngine::answer(ChatSession& session, std::string_view question, const RagConfig& cfg,
                                     const persona::CompiledPrompt& persona) {
    if (text::trim(question).empty()) throw ConfigError("question must be non-empty");

    AnswerTrace trace;
    trace.original_question = std::string(question);
    try {
        trace.condensed_question = condense_question(gateway_, session, question, cfg);

        const std::vector<std::string> query_text = {trace.condensed_question};
        const auto query = normalized(gateway_.embed_texts(cfg.embedding_model, query_text).front());

        auto hits = store_.search(query, cfg.top_k);
        if (cfg.rerank_enabled) hits = rerank(std::move(hits), cfg.rerank_weights);
        if (cfg.refusal_threshold > -1.0) {
            std::erase_if(hits, [&](const RetrievalHit& h) { return h.adjusted_score < cfg.refusal_threshold; });
        }
        trace.hits = std::move(hits);

        if (trace.hits.empty()) {
            trace.refused = true;
            trace.answer_text = cfg.effective_refusal_message();
        } else {
            trace.assembled_messages = assemble_prompt(persona, trace.hits, trace.condensed_question, cfg);
            trace.answer_text =
                gateway_.chat(cfg.chat_model, trace.assembled_messages, GenerationParams{cfg.generation_temperature});
        }
    } catch (const GatewayError& e) {
        throw AnswerError(std::string("gateway failure: ") + e.what(), std::move(trace), e);
    }

    session.push({trace.original_question, trace.answer_text}, cfg.memory_window);
    AnswerResult result{trace.answer_text, std::move(trace)};
    return result;
}

}  // namespace docent
