#include "docent/session.hpp"

#include <random>

#include "docent/error.hpp"

namespace docent {

void ChatSession::push(Exchange exchange, std::size_t capacity) {
    window_.push_back(std::move(exchange));
    while (window_.size() > capacity) window_.pop_front();
}

nlohmann::json ChatSession::to_json() const {
    nlohmann::json window = nlohmann::json::array();
    for (const auto& e : window_) window.push_back({{"question", e.question}, {"answer", e.answer}});
    return nlohmann::json{{"session_id", id_}, {"window", window}};
}

ChatSession ChatSession::from_json(const nlohmann::json& j) {
    try {
        ChatSession s(j.value("session_id", std::string{}));
        for (const auto& e : j.at("window")) {
            s.window_.push_back({e.at("question").get<std::string>(), e.at("answer").get<std::string>()});
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed session file: ") + e.what());
    }
}

std::string SessionStore::create() {
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    static constexpr char kHex[] = "0123456789abcdef";
    std::unique_lock lock(mutex_);
    for (;;) {
        std::string id = "s-";
        auto bits = rng();
        for (int i = 0; i < 16; ++i, bits >>= 4) id.push_back(kHex[bits & 0xF]);
        auto slot = std::make_shared<Slot>();
        slot->session = ChatSession(id);
        if (sessions_.emplace(id, std::move(slot)).second) return id;
    }
}

bool SessionStore::contains(const std::string& id) const {
    std::shared_lock lock(mutex_);
    return sessions_.contains(id);
}

void SessionStore::with_session(const std::string& id, const std::function<void(ChatSession&)>& fn) {
    std::shared_ptr<Slot> slot;
    {
        std::shared_lock lock(mutex_);
        auto it = sessions_.find(id);
        if (it == sessions_.end()) throw NotFoundError("unknown session '" + id + "'");
        slot = it->second;
    }
    std::lock_guard lock(slot->mutex);
    fn(slot->session);
}

}  // namespace docent
