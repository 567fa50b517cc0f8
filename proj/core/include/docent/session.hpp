#pragma once

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace docent {

struct Exchange {
    std::string question;
    std::string answer;

    bool operator==(const Exchange&) const = default;
};

/// Conversation memory used only to rephrase follow-up questions. Holds the
/// most recent exchanges, oldest first.
class ChatSession {
public:
    ChatSession() = default;
    explicit ChatSession(std::string id) : id_(std::move(id)) {}

    const std::string& id() const { return id_; }
    const std::deque<Exchange>& window() const { return window_; }
    bool empty() const { return window_.empty(); }

    /// Appends and evicts from the front until at most `capacity` remain.
    void push(Exchange exchange, std::size_t capacity);

    nlohmann::json to_json() const;
    static ChatSession from_json(const nlohmann::json& j);

private:
    std::string id_;
    std::deque<Exchange> window_;
};

/// Thread-safe session registry. A session is locked for the duration of a
/// `with_session` call, so concurrent asks on one session serialize while
/// different sessions proceed independently.
class SessionStore {
public:
    std::string create();
    bool contains(const std::string& id) const;

    /// Throws NotFoundError for an unknown id.
    void with_session(const std::string& id, const std::function<void(ChatSession&)>& fn);

private:
    struct Slot {
        std::mutex mutex;
        ChatSession session;
    };

    mutable std::shared_mutex mutex_;
    std::map<std::string, std::shared_ptr<Slot>> sessions_;
};

}  // namespace docent
