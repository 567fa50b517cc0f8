#include "docent/stub_gateway.hpp"

namespace docent {

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t h) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

void StubGateway::set_embedding(const std::string& text, Embedding vector) {
    std::lock_guard lock(mutex_);
    fixed_[text] = std::move(vector);
}

void StubGateway::queue_replies(std::vector<std::string> replies) {
    std::lock_guard lock(mutex_);
    for (auto& r : replies) queued_.push_back(std::move(r));
}

void StubGateway::add_rule(std::string needle, std::string reply) {
    std::lock_guard lock(mutex_);
    rules_.emplace_back(std::move(needle), std::move(reply));
}

void StubGateway::set_default_reply(std::optional<std::string> reply) {
    std::lock_guard lock(mutex_);
    default_reply_ = std::move(reply);
}

void StubGateway::fail_next_chats(std::size_t count, GatewayError error) {
    std::lock_guard lock(mutex_);
    failures_left_ = count;
    failure_ = std::move(error);
}

std::size_t StubGateway::chat_call_count() const {
    std::lock_guard lock(mutex_);
    return chat_calls_.size();
}

std::size_t StubGateway::embed_call_count() const {
    std::lock_guard lock(mutex_);
    return embed_inputs_.size();
}

std::vector<StubGateway::ChatCall> StubGateway::chat_calls() const {
    std::lock_guard lock(mutex_);
    return chat_calls_;
}

std::vector<std::vector<std::string>> StubGateway::embed_inputs() const {
    std::lock_guard lock(mutex_);
    return embed_inputs_;
}

void StubGateway::reset_captures() {
    std::lock_guard lock(mutex_);
    chat_calls_.clear();
    embed_inputs_.clear();
}

Embedding StubGateway::hashed_vector(const std::string& text) const {
    std::uint64_t state = fnv1a(text, 0xcbf29ce484222325ULL ^ opts_.seed);
    Embedding v(opts_.dim);
    for (auto& x : v) {
        // 53 random bits mapped to [-1, 1)
        x = static_cast<double>(splitmix64(state) >> 11) * (2.0 / 9007199254740992.0) - 1.0;
    }
    return v;
}

Embedding StubGateway::vector_for(const std::string& text) const {
    std::lock_guard lock(mutex_);
    if (auto it = fixed_.find(text); it != fixed_.end()) return it->second;
    return hashed_vector(text);
}

std::vector<Embedding> StubGateway::do_embed_texts(const ModelRef&, std::span<const std::string> texts) {
    std::lock_guard lock(mutex_);
    embed_inputs_.emplace_back(texts.begin(), texts.end());
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        auto it = fixed_.find(t);
        out.push_back(it != fixed_.end() ? it->second : hashed_vector(t));
    }
    return out;
}

std::string StubGateway::do_chat(const ModelRef& model, std::span<const ChatMessage> messages,
                                 const GenerationParams& params) {
    std::lock_guard lock(mutex_);
    chat_calls_.push_back({model, std::vector<ChatMessage>(messages.begin(), messages.end()), params});

    if (failures_left_ > 0) {
        --failures_left_;
        throw *failure_;
    }
    if (!queued_.empty()) {
        auto reply = std::move(queued_.front());
        queued_.pop_front();
        return reply;
    }

    std::string last_user;
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->role == ChatRole::user) {
            last_user = it->content;
            break;
        }
    }
    for (const auto& [needle, reply] : rules_) {
        if (last_user.find(needle) != std::string::npos) return reply;
    }
    if (default_reply_) return *default_reply_;
    return last_user;
}

}  // namespace docent
