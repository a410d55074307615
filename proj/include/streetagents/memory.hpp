#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "streetagents/clock.hpp"
#include "streetagents/errors.hpp"
#include "streetagents/llm.hpp"
#include "streetagents/prompts.hpp"

namespace streetagents {

enum class MemoryKind { Observation, Decision, Reflection };

constexpr std::string_view to_string(MemoryKind k) {
    switch (k) {
    case MemoryKind::Observation: return "observation";
    case MemoryKind::Decision: return "decision";
    default: return "reflection";
    }
}

inline MemoryKind memory_kind_from(std::string_view s) {
    if (s == "observation") return MemoryKind::Observation;
    if (s == "decision") return MemoryKind::Decision;
    if (s == "reflection") return MemoryKind::Reflection;
    throw ParseError("unknown memory kind '" + std::string(s) + "'");
}

struct MemoryEntry {
    std::int64_t timestamp = 0;
    int importance = 1; // 1..10
    std::string text;
    MemoryKind kind = MemoryKind::Observation;

    bool operator==(const MemoryEntry&) const = default;
};

// Append-only, timestamp-monotone observation log for one agent and one run.
class MemoryStream {
public:
    explicit MemoryStream(std::string owner) : owner_(std::move(owner)) {}

    const std::string& owner() const { return owner_; }
    const std::vector<MemoryEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    void record(std::string text, int importance, std::int64_t timestamp,
                MemoryKind kind = MemoryKind::Observation) {
        if (text.empty()) throw ValidationError("memory text must be non-empty");
        if (importance < 1 || importance > 10) {
            throw ValidationError("memory importance out of [1,10]");
        }
        if (!entries_.empty() && timestamp < entries_.back().timestamp) {
            throw ValidationError("memory clock regression: " + std::to_string(timestamp) +
                                  " < " + std::to_string(entries_.back().timestamp));
        }
        entries_.push_back({timestamp, importance, std::move(text), kind});
    }

    // Top-k by importance, newer entries first among equals.
    std::vector<MemoryEntry> retrieve(std::size_t k) const {
        std::vector<std::size_t> order(entries_.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [this](std::size_t a, std::size_t b) {
            if (entries_[a].importance != entries_[b].importance) {
                return entries_[a].importance > entries_[b].importance;
            }
            return a > b; // appended later = newer
        });
        if (order.size() > k) order.resize(k);
        std::vector<MemoryEntry> result;
        result.reserve(order.size());
        for (auto i : order) result.push_back(entries_[i]);
        return result;
    }

private:
    std::string owner_;
    std::vector<MemoryEntry> entries_;
};

// Renders entries chronologically as "[timestamp] text" lines, dropping the
// least important (oldest first among equals) until the estimate fits.
inline std::string render_context(std::vector<MemoryEntry> entries, int token_budget) {
    if (token_budget <= 0) throw ValidationError("token budget must be positive");
    std::stable_sort(entries.begin(), entries.end(),
                     [](const MemoryEntry& a, const MemoryEntry& b) {
                         return a.timestamp < b.timestamp;
                     });
    auto render = [](const std::vector<MemoryEntry>& es) {
        std::string out;
        for (std::size_t i = 0; i < es.size(); ++i) {
            if (i) out += "\n";
            out += "[" + format_memory_timestamp(es[i].timestamp) + "] " + es[i].text;
        }
        return out;
    };
    std::string block = render(entries);
    while (!entries.empty() && estimate_tokens(block) > token_budget) {
        std::size_t drop = 0;
        for (std::size_t i = 1; i < entries.size(); ++i) {
            if (entries[i].importance < entries[drop].importance) drop = i;
        }
        entries.erase(entries.begin() + static_cast<std::ptrdiff_t>(drop));
        block = render(entries);
    }
    return block;
}

namespace detail {

// First integer appearing in the reply, if any.
inline std::optional<int> first_integer(const std::string& text) {
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (std::isdigit(static_cast<unsigned char>(text[i]))) {
            std::size_t j = i;
            long value = 0;
            while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) {
                value = value * 10 + (text[j] - '0');
                if (value > 1000000) break;
                ++j;
            }
            return static_cast<int>(value);
        }
    }
    return std::nullopt;
}

} // namespace detail

// Asks the backend to rate the memory's poignancy on the 1..10 anchor scale.
// Numeric out-of-range replies are clamped; a reply with no integer at all is
// re-prompted once and then rejected.
inline int score_importance(const std::string& text, Backend& backend,
                            ExchangeLog* log = nullptr) {
    if (text.empty()) throw ValidationError("cannot score an empty memory text");
    ChatExchange ex;
    ex.system = "You rate how memorable street observations are.";
    ex.messages.push_back({"user", prompts::build_importance_prompt(text)});
    ex.max_reply_tokens = 8;
    std::string reply = ask(backend, ex, "importance", log);
    auto value = detail::first_integer(reply);
    if (!value) {
        ex.messages.push_back({"assistant", reply});
        ex.messages.push_back(
            {"user", "Respond with a single integer between 1 and 10 only."});
        reply = ask(backend, ex, "importance", log);
        value = detail::first_integer(reply);
        if (!value) {
            throw ParseError("importance reply contained no integer: '" + reply + "'");
        }
    }
    return std::clamp(*value, 1, 10);
}

} // namespace streetagents
