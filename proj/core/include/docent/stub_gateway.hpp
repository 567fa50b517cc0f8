#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "docent/model_gateway.hpp"

namespace docent {

/// Deterministic in-process provider for tests and offline runs.
///
/// Embeddings: a fixed vector when one was registered for the exact text,
/// otherwise a hash of (seed, text) expanded to `dim` values in [-1, 1).
/// Chat: queued replies first, then the first matching rule (substring of
/// the last user message), then the fixed default reply, else echo of the
/// last user message. Every call is captured.
class StubGateway : public ModelGateway {
public:
    struct Options {
        std::size_t dim = 64;
        std::uint64_t seed = 42;
    };

    struct ChatCall {
        ModelRef model;
        std::vector<ChatMessage> messages;
        GenerationParams params;
    };

    StubGateway() : StubGateway(Options{}) {}
    explicit StubGateway(Options opts) : opts_(opts) {}

    void set_embedding(const std::string& text, Embedding vector);
    void queue_replies(std::vector<std::string> replies);
    void add_rule(std::string needle, std::string reply);
    void set_default_reply(std::optional<std::string> reply);
    /// Makes the next `count` chat calls throw `error`.
    void fail_next_chats(std::size_t count, GatewayError error);

    std::size_t chat_call_count() const;
    std::size_t embed_call_count() const;
    std::vector<ChatCall> chat_calls() const;
    std::vector<std::vector<std::string>> embed_inputs() const;
    void reset_captures();

    /// The vector the stub produces for `text`, without recording a call.
    Embedding vector_for(const std::string& text) const;

protected:
    std::vector<Embedding> do_embed_texts(const ModelRef& model, std::span<const std::string> texts) override;
    std::string do_chat(const ModelRef& model, std::span<const ChatMessage> messages,
                        const GenerationParams& params) override;

private:
    Embedding hashed_vector(const std::string& text) const;

    Options opts_;
    mutable std::mutex mutex_;
    std::map<std::string, Embedding> fixed_;
    std::deque<std::string> queued_;
    std::vector<std::pair<std::string, std::string>> rules_;
    std::optional<std::string> default_reply_;
    std::size_t failures_left_ = 0;
    std::optional<GatewayError> failure_;
    std::vector<ChatCall> chat_calls_;
    std::vector<std::vector<std::string>> embed_inputs_;
};

}  // namespace docent
