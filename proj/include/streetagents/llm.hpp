#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "streetagents/errors.hpp"

namespace streetagents {

struct ChatMessage {
    std::string role; // "user" or "assistant"
    std::string text;
};

// One chat-completion request: a system context plus alternating turns.
struct ChatExchange {
    std::string system;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_reply_tokens = 512;

    void validate() const {
        if (system.empty()) throw ValidationError("chat exchange: empty system text");
        if (messages.empty()) throw ValidationError("chat exchange: no messages");
        for (std::size_t i = 0; i < messages.size(); ++i) {
            const auto expected = (i % 2 == 0) ? "user" : "assistant";
            if (messages[i].role != expected) {
                throw ValidationError("chat exchange: roles must alternate starting with "
                                      "user (message " +
                                      std::to_string(i) + " is '" + messages[i].role + "')");
            }
        }
        if (temperature < 0.0 || temperature > 2.0) {
            throw ValidationError("chat exchange: temperature out of [0,2]");
        }
        if (max_reply_tokens <= 0) {
            throw ValidationError("chat exchange: max_reply_tokens must be positive");
        }
    }
};

// Rough budget heuristic: a token is about four characters.
inline int estimate_tokens(std::string_view text) {
    return static_cast<int>((text.size() + 3) / 4);
}

inline int exchange_prompt_tokens(const ChatExchange& ex) {
    int total = estimate_tokens(ex.system);
    for (const auto& m : ex.messages) total += estimate_tokens(m.text);
    return total;
}

// Per-call accounting row, accumulated into the run record.
struct ExchangeRecord {
    std::string kind; // "summary", "decision", "memory_note", "importance", ...
    int prompt_tokens = 0;
    int reply_tokens = 0;
};

using ExchangeLog = std::vector<ExchangeRecord>;

class Backend {
public:
    virtual ~Backend() = default;
    // Returns the assistant reply for the exchange. Throws BackendError on failure.
    virtual std::string complete(const ChatExchange& exchange) = 0;
    virtual std::string describe() const = 0;
};

// Completes an exchange and books the token estimates under `kind`.
inline std::string ask(Backend& backend, const ChatExchange& exchange,
                       const std::string& kind, ExchangeLog* log) {
    exchange.validate();
    std::string reply = backend.complete(exchange);
    if (log) {
        log->push_back({kind, exchange_prompt_tokens(exchange), estimate_tokens(reply)});
    }
    return reply;
}

} // namespace streetagents
