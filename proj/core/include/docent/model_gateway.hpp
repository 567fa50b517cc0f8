#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "docent/error.hpp"

namespace docent {

enum class ModelKind { embedding, chat };

std::string_view to_string(ModelKind k);

struct ModelRef {
    std::string endpoint;  // http(s)://host[:port][/base] or stub://name[?params]
    std::string model_id;
    ModelKind kind = ModelKind::chat;
    std::string short_name;    // display name in reports; falls back to model_id
    std::string bearer_token;  // passed through as "Authorization: Bearer ..."

    const std::string& display_name() const { return short_name.empty() ? model_id : short_name; }
    bool operator==(const ModelRef&) const = default;
};

/// Throws ConfigError when the endpoint is not a well-formed URL or the model id is empty.
void validate(const ModelRef& ref);

ModelRef model_ref_from_json(const nlohmann::json& j, ModelKind kind);
nlohmann::json to_json(const ModelRef& ref);

enum class ChatRole { system, user, assistant };

std::string_view to_string(ChatRole r);
ChatRole parse_chat_role(std::string_view s);

struct ChatMessage {
    ChatRole role = ChatRole::user;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

nlohmann::json to_json(const ChatMessage& m);

struct GenerationParams {
    double temperature = 0.3;
    std::optional<int> max_tokens;
    std::optional<std::uint64_t> seed;
};

using Embedding = std::vector<double>;

struct TokenEmbedding {
    std::string token;
    Embedding vector;
};

class GatewayError : public Error {
public:
    enum class Kind { invalid_request, transport, timeout, status, count_mismatch, malformed_body };

    GatewayError(Kind kind, const std::string& message, int http_status = 0)
        : Error(message), kind_(kind), http_status_(http_status) {}

    Kind kind() const { return kind_; }
    int http_status() const { return http_status_; }
    /// Only failures that never reached a server response are retried.
    bool retryable() const { return kind_ == Kind::transport || kind_ == Kind::timeout; }

private:
    Kind kind_;
    int http_status_;
};

std::string_view to_string(GatewayError::Kind k);

/// The only path to model inference. Public entry points enforce the call
/// contract (non-empty input, model kind, result count and dimension) and
/// delegate transport to the do_* hooks.
class ModelGateway {
public:
    virtual ~ModelGateway() = default;

    /// One unnormalized vector per input text, same order.
    std::vector<Embedding> embed_texts(const ModelRef& model, std::span<const std::string> texts);

    /// Word tokens of `text`, each embedded on its own (context-free).
    std::vector<TokenEmbedding> embed_tokens(const ModelRef& model, std::string_view text);

    /// Assistant reply with surrounding whitespace removed.
    std::string chat(const ModelRef& model, std::span<const ChatMessage> messages, const GenerationParams& params);

protected:
    virtual std::vector<Embedding> do_embed_texts(const ModelRef& model, std::span<const std::string> texts) = 0;
    virtual std::string do_chat(const ModelRef& model, std::span<const ChatMessage> messages,
                                const GenerationParams& params) = 0;
};

struct HttpGatewayOptions {
    std::chrono::milliseconds timeout{120'000};
    int max_retries = 2;
    std::chrono::milliseconds backoff_base{200};
};

/// JSON-over-HTTP client for OpenAI-style `/embeddings` and `/chat/completions` endpoints.
class HttpGateway : public ModelGateway {
public:
    explicit HttpGateway(HttpGatewayOptions opts = {}) : opts_(opts) {}

    static nlohmann::json embeddings_request(const ModelRef& model, std::span<const std::string> texts);
    static nlohmann::json chat_request(const ModelRef& model, std::span<const ChatMessage> messages,
                                       const GenerationParams& params);

protected:
    std::vector<Embedding> do_embed_texts(const ModelRef& model, std::span<const std::string> texts) override;
    std::string do_chat(const ModelRef& model, std::span<const ChatMessage> messages,
                        const GenerationParams& params) override;

private:
    nlohmann::json post_json(const ModelRef& model, const std::string& route, const nlohmann::json& body);

    HttpGatewayOptions opts_;
};

class StubGateway;

/// Dispatches on the endpoint scheme: `stub://` endpoints go to in-process
/// stub providers (one per distinct endpoint string), everything else to HTTP.
///
/// Stub endpoint parameters: `dim` (embedding size, default 64), `seed`
/// (default 42), `reply` (percent-encoded fixed chat reply; echo when absent).
class RoutingGateway : public ModelGateway {
public:
    explicit RoutingGateway(HttpGatewayOptions opts = {});
    ~RoutingGateway() override;

    /// The stub behind a `stub://` endpoint, created on first use.
    StubGateway& stub_for(const std::string& endpoint);

protected:
    std::vector<Embedding> do_embed_texts(const ModelRef& model, std::span<const std::string> texts) override;
    std::string do_chat(const ModelRef& model, std::span<const ChatMessage> messages,
                        const GenerationParams& params) override;

private:
    HttpGateway http_;
    std::mutex mutex_;
    std::map<std::string, std::unique_ptr<StubGateway>> stubs_;
};

}  // namespace docent
