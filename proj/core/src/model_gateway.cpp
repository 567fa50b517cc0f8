#include "docent/model_gateway.hpp"

#include <cmath>
#include <thread>

#include <httplib.h>

#include "docent/stub_gateway.hpp"
#include "docent/text.hpp"

namespace docent {

std::string_view to_string(ModelKind k) { return k == ModelKind::embedding ? "embedding" : "chat"; }

std::string_view to_string(ChatRole r) {
    switch (r) {
        case ChatRole::system: return "system";
        case ChatRole::user: return "user";
        case ChatRole::assistant: return "assistant";
    }
    return "user";
}

ChatRole parse_chat_role(std::string_view s) {
    if (s == "system") return ChatRole::system;
    if (s == "user") return ChatRole::user;
    if (s == "assistant") return ChatRole::assistant;
    throw ConfigError("unknown chat role '" + std::string(s) + "'");
}

std::string_view to_string(GatewayError::Kind k) {
    switch (k) {
        case GatewayError::Kind::invalid_request: return "invalid_request";
        case GatewayError::Kind::transport: return "transport";
        case GatewayError::Kind::timeout: return "timeout";
        case GatewayError::Kind::status: return "status";
        case GatewayError::Kind::count_mismatch: return "count_mismatch";
        case GatewayError::Kind::malformed_body: return "malformed_body";
    }
    return "transport";
}

nlohmann::json to_json(const ChatMessage& m) {
    return nlohmann::json{{"role", std::string(to_string(m.role))}, {"content", m.content}};
}

namespace {

struct ParsedUrl {
    std::string scheme;
    std::string authority;  // host[:port]
    std::string path;       // without trailing slash
    std::map<std::string, std::string> query;
};

std::string percent_decode(std::string_view s) {
    std::string out;
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%' && i + 2 < s.size() && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
            std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
            out.push_back(static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16)));
            i += 2;
        } else if (s[i] == '+') {
            out.push_back(' ');
        } else {
            out.push_back(s[i]);
        }
    }
    return out;
}

std::optional<ParsedUrl> parse_url(std::string_view url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos || scheme_end == 0) return std::nullopt;
    ParsedUrl u;
    u.scheme = text::to_lower_ascii(url.substr(0, scheme_end));
    for (char c : u.scheme) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '+' && c != '-' && c != '.') return std::nullopt;
    }
    auto rest = url.substr(scheme_end + 3);
    std::string_view query;
    if (const auto q = rest.find('?'); q != std::string_view::npos) {
        query = rest.substr(q + 1);
        rest = rest.substr(0, q);
    }
    const auto slash = rest.find('/');
    u.authority = std::string(rest.substr(0, slash));
    if (u.authority.empty()) return std::nullopt;
    for (char c : u.authority) {
        if (std::isspace(static_cast<unsigned char>(c))) return std::nullopt;
    }
    if (slash != std::string_view::npos) u.path = std::string(rest.substr(slash));
    while (!u.path.empty() && u.path.back() == '/') u.path.pop_back();

    while (!query.empty()) {
        const auto amp = query.find('&');
        const auto pair = query.substr(0, amp);
        const auto eq = pair.find('=');
        if (eq == std::string_view::npos) {
            u.query[percent_decode(pair)] = "";
        } else {
            u.query[percent_decode(pair.substr(0, eq))] = percent_decode(pair.substr(eq + 1));
        }
        if (amp == std::string_view::npos) break;
        query = query.substr(amp + 1);
    }
    return u;
}

bool is_stub(const ModelRef& ref) { return ref.endpoint.rfind("stub://", 0) == 0; }

}  // namespace

void validate(const ModelRef& ref) {
    const auto url = parse_url(ref.endpoint);
    if (!url || (url->scheme != "http" && url->scheme != "https" && url->scheme != "stub")) {
        throw ConfigError("model endpoint '" + ref.endpoint + "' is not a well-formed http(s):// or stub:// URL");
    }
    if (text::trim(ref.model_id).empty()) throw ConfigError("model_id must be non-empty");
}

ModelRef model_ref_from_json(const nlohmann::json& j, ModelKind kind) {
    if (!j.is_object()) throw ConfigError("model reference must be an object");
    ModelRef ref;
    ref.kind = kind;
    try {
        ref.endpoint = j.at("endpoint").get<std::string>();
        ref.model_id = j.at("model_id").get<std::string>();
        ref.short_name = j.value("short_name", std::string{});
        ref.bearer_token = j.value("bearer_token", std::string{});
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("model reference: ") + e.what());
    }
    validate(ref);
    return ref;
}

nlohmann::json to_json(const ModelRef& ref) {
    nlohmann::json j{{"endpoint", ref.endpoint}, {"model_id", ref.model_id}};
    if (!ref.short_name.empty()) j["short_name"] = ref.short_name;
    // bearer tokens are never serialized
    return j;
}

// --- contract enforcement ---------------------------------------------------

std::vector<Embedding> ModelGateway::embed_texts(const ModelRef& model, std::span<const std::string> texts) {
    if (model.kind != ModelKind::embedding) {
        throw GatewayError(GatewayError::Kind::invalid_request, "model '" + model.model_id + "' is not an embedding model");
    }
    if (texts.empty()) throw GatewayError(GatewayError::Kind::invalid_request, "embed_texts needs at least one text");

    auto vectors = do_embed_texts(model, texts);
    if (vectors.size() != texts.size()) {
        throw GatewayError(GatewayError::Kind::count_mismatch, "provider returned " + std::to_string(vectors.size()) +
                                                                   " vectors for " + std::to_string(texts.size()) +
                                                                   " inputs");
    }
    const size_t dim = vectors.front().size();
    for (const auto& v : vectors) {
        if (v.empty() || v.size() != dim) {
            throw GatewayError(GatewayError::Kind::malformed_body, "provider returned inconsistent embedding dimensions");
        }
        for (double x : v) {
            if (!std::isfinite(x)) throw GatewayError(GatewayError::Kind::malformed_body, "non-finite embedding value");
        }
    }
    return vectors;
}

std::vector<TokenEmbedding> ModelGateway::embed_tokens(const ModelRef& model, std::string_view text) {
    if (text.empty()) throw GatewayError(GatewayError::Kind::invalid_request, "embed_tokens needs non-empty text");
    auto tokens = text::tokenize_words(text);
    if (tokens.empty()) throw GatewayError(GatewayError::Kind::invalid_request, "text contains no word tokens");
    auto vectors = embed_texts(model, tokens);
    std::vector<TokenEmbedding> out;
    out.reserve(tokens.size());
    for (size_t i = 0; i < tokens.size(); ++i) out.push_back({std::move(tokens[i]), std::move(vectors[i])});
    return out;
}

std::string ModelGateway::chat(const ModelRef& model, std::span<const ChatMessage> messages,
                               const GenerationParams& params) {
    if (model.kind != ModelKind::chat) {
        throw GatewayError(GatewayError::Kind::invalid_request, "model '" + model.model_id + "' is not a chat model");
    }
    if (messages.empty()) throw GatewayError(GatewayError::Kind::invalid_request, "chat needs at least one message");
    for (const auto& m : messages) {
        if (m.role != ChatRole::assistant && m.content.empty()) {
            throw GatewayError(GatewayError::Kind::invalid_request,
                               std::string(to_string(m.role)) + " message content must be non-empty");
        }
    }
    if (!std::isfinite(params.temperature) || params.temperature < 0) {
        throw GatewayError(GatewayError::Kind::invalid_request, "temperature must be finite and >= 0");
    }
    return std::string(text::trim(do_chat(model, messages, params)));
}

// --- HTTP -------------------------------------------------------------------

nlohmann::json HttpGateway::embeddings_request(const ModelRef& model, std::span<const std::string> texts) {
    return nlohmann::json{{"model", model.model_id}, {"input", std::vector<std::string>(texts.begin(), texts.end())}};
}

nlohmann::json HttpGateway::chat_request(const ModelRef& model, std::span<const ChatMessage> messages,
                                         const GenerationParams& params) {
    nlohmann::json msgs = nlohmann::json::array();
    for (const auto& m : messages) msgs.push_back(to_json(m));
    nlohmann::json body{{"model", model.model_id}, {"messages", msgs}, {"temperature", params.temperature}};
    if (params.max_tokens) body["max_tokens"] = *params.max_tokens;
    if (params.seed) body["seed"] = *params.seed;
    return body;
}

nlohmann::json HttpGateway::post_json(const ModelRef& model, const std::string& route, const nlohmann::json& body) {
    const auto url = parse_url(model.endpoint);
    if (!url || (url->scheme != "http" && url->scheme != "https")) {
        throw GatewayError(GatewayError::Kind::invalid_request, "not an HTTP endpoint: " + model.endpoint);
    }
    if (url->scheme == "https") {
        throw GatewayError(GatewayError::Kind::invalid_request, "https endpoints are not supported by this build");
    }

    httplib::Client client(url->scheme + "://" + url->authority);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(opts_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(opts_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    if (!model.bearer_token.empty()) client.set_bearer_token_auth(model.bearer_token);

    const std::string path = url->path + route;
    const std::string payload = body.dump();

    for (int attempt = 0;; ++attempt) {
        auto res = client.Post(path, payload, "application/json");
        if (!res) {
            const auto err = res.error();
            const auto kind = err == httplib::Error::ConnectionTimeout ? GatewayError::Kind::timeout
                                                                        : GatewayError::Kind::transport;
            if (attempt < opts_.max_retries) {
                std::this_thread::sleep_for(opts_.backoff_base * (1 << attempt));
                continue;
            }
            throw GatewayError(kind, "request to " + model.endpoint + path + " failed after " +
                                         std::to_string(attempt + 1) + " attempt(s): " + httplib::to_string(err));
        }
        if (res->status < 200 || res->status >= 300) {
            throw GatewayError(GatewayError::Kind::status,
                               model.endpoint + path + " returned HTTP " + std::to_string(res->status), res->status);
        }
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::parse_error& e) {
            throw GatewayError(GatewayError::Kind::malformed_body, std::string("response is not JSON: ") + e.what());
        }
    }
}

std::vector<Embedding> HttpGateway::do_embed_texts(const ModelRef& model, std::span<const std::string> texts) {
    const auto body = post_json(model, "/embeddings", embeddings_request(model, texts));
    std::vector<Embedding> out;
    try {
        for (const auto& item : body.at("data")) out.push_back(item.at("embedding").get<Embedding>());
    } catch (const nlohmann::json::exception& e) {
        throw GatewayError(GatewayError::Kind::malformed_body, std::string("malformed embeddings body: ") + e.what());
    }
    return out;
}

std::string HttpGateway::do_chat(const ModelRef& model, std::span<const ChatMessage> messages,
                                 const GenerationParams& params) {
    const auto body = post_json(model, "/chat/completions", chat_request(model, messages, params));
    try {
        return body.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw GatewayError(GatewayError::Kind::malformed_body, std::string("malformed chat body: ") + e.what());
    }
}

// --- routing ----------------------------------------------------------------

RoutingGateway::RoutingGateway(HttpGatewayOptions opts) : http_(opts) {}

RoutingGateway::~RoutingGateway() = default;

StubGateway& RoutingGateway::stub_for(const std::string& endpoint) {
    std::lock_guard lock(mutex_);
    auto it = stubs_.find(endpoint);
    if (it != stubs_.end()) return *it->second;

    const auto url = parse_url(endpoint);
    if (!url || url->scheme != "stub") throw ConfigError("not a stub endpoint: " + endpoint);
    StubGateway::Options opts;
    try {
        if (auto d = url->query.find("dim"); d != url->query.end()) opts.dim = std::stoul(d->second);
        if (auto s = url->query.find("seed"); s != url->query.end()) opts.seed = std::stoull(s->second);
    } catch (const std::exception&) {
        throw ConfigError("invalid stub endpoint parameters: " + endpoint);
    }
    if (opts.dim == 0) throw ConfigError("stub dim must be positive: " + endpoint);
    auto stub = std::make_unique<StubGateway>(opts);
    if (auto r = url->query.find("reply"); r != url->query.end()) stub->set_default_reply(r->second);
    return *stubs_.emplace(endpoint, std::move(stub)).first->second;
}

std::vector<Embedding> RoutingGateway::do_embed_texts(const ModelRef& model, std::span<const std::string> texts) {
    if (is_stub(model)) return stub_for(model.endpoint).embed_texts(model, texts);
    return http_.embed_texts(model, texts);
}

std::string RoutingGateway::do_chat(const ModelRef& model, std::span<const ChatMessage> messages,
                                    const GenerationParams& params) {
    if (is_stub(model)) return stub_for(model.endpoint).chat(model, messages, params);
    return http_.chat(model, messages, params);
}

}  // namespace docent
