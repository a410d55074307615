#pragma once

#include <atomic>
#include <cctype>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "streetagents/agent.hpp"
#include "streetagents/environment.hpp"
#include "streetagents/llm.hpp"
#include "streetagents/memory.hpp"
#include "streetagents/simulation.hpp"
#include "streetagents/vision.hpp"

namespace streetagents {

enum class Attribute { Safety, Liveliness };

constexpr std::string_view to_string(Attribute a) {
    return a == Attribute::Safety ? "safety" : "liveliness";
}

constexpr std::string_view attribute_title(Attribute a) {
    return a == Attribute::Safety ? "Safety" : "Liveliness";
}

inline std::optional<Attribute> attribute_from(std::string_view s) {
    if (s == "safety" || s == "Safety") return Attribute::Safety;
    if (s == "liveliness" || s == "Liveliness") return Attribute::Liveliness;
    return std::nullopt;
}

struct ParsedRating {
    int score = 0;
    std::string reason;
    std::string to_ten;
    std::string to_one;
};

struct RatingRecord {
    std::string agent;
    NodeId scene;
    Attribute attribute = Attribute::Safety;
    int score = 0;
    std::string reason;
    std::string to_ten;
    std::string to_one;
    std::string raw_response;
    bool failed = false;
    std::string error;
};

namespace ratingdetail {

inline std::string trim(std::string s) {
    const auto junk = [](unsigned char c) {
        return std::isspace(c) != 0 || c == '.' || c == ',';
    };
    std::size_t begin = 0;
    while (begin < s.size() && junk(static_cast<unsigned char>(s[begin]))) ++begin;
    std::size_t end = s.size();
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(begin, end - begin);
}

inline const std::regex& score_pattern() {
    static const std::regex re(
        R"(([A-Za-z]+)'s\s+(Safety|Liveliness)\s+Rating\s+for\s+Scene\s+([A-Za-z0-9]+)\s+is\s+(\d+))",
        std::regex::icase);
    return re;
}

inline const std::regex& to_ten_pattern() {
    static const std::regex re(
        R"(To\s+(elevate|increase|raise|improve|enhance)\b[^.\n]{0,160}?\bto\s+(a\s+)?(perfect\s+)?10\b)",
        std::regex::icase);
    return re;
}

inline const std::regex& to_one_pattern() {
    static const std::regex re(
        R"(To\s+(decrease|reduce|lower|drop)\b[^.\n]{0,160}?\bto\s+(a\s+)?1\b)",
        std::regex::icase);
    return re;
}

} // namespace ratingdetail

// Parses a free-form rating response. The primary pattern is
// "<Name>'s <Attribute> Rating for Scene <X> is <N>"; without it, the first
// standalone integer in [1,10] is used. An out-of-range claim is rejected,
// never clamped.
inline ParsedRating parse_rating(const std::string& text) {
    using namespace ratingdetail;
    ParsedRating parsed;
    std::smatch m;
    std::size_t reason_start = 0;
    if (std::regex_search(text, m, score_pattern())) {
        const long value = std::strtol(m[4].str().c_str(), nullptr, 10);
        if (value < 1 || value > 10) {
            throw ParseError("rating score " + std::to_string(value) + " out of [1,10]");
        }
        parsed.score = static_cast<int>(value);
        reason_start = static_cast<std::size_t>(m.position(0) + m.length(0));
    } else {
        static const std::regex integer_re(R"((^|[^\w])(\d+)([^\w]|$))");
        bool found = false;
        auto begin = std::sregex_iterator(text.begin(), text.end(), integer_re);
        for (auto it = begin; it != std::sregex_iterator(); ++it) {
            const long value = std::strtol((*it)[2].str().c_str(), nullptr, 10);
            if (value >= 1 && value <= 10) {
                parsed.score = static_cast<int>(value);
                reason_start =
                    static_cast<std::size_t>(it->position(2) + it->length(2));
                found = true;
                break;
            }
        }
        if (!found) throw ParseError("no rating integer in [1,10] found");
    }

    std::size_t ten_start = std::string::npos;
    std::size_t one_start = std::string::npos;
    std::smatch ten_m, one_m;
    std::string rest = text.substr(reason_start);
    if (std::regex_search(rest, ten_m, to_ten_pattern())) {
        ten_start = reason_start + static_cast<std::size_t>(ten_m.position(0));
    }
    if (std::regex_search(rest, one_m, to_one_pattern())) {
        one_start = reason_start + static_cast<std::size_t>(one_m.position(0));
    }
    const std::size_t reason_end = std::min(ten_start, one_start);
    parsed.reason = trim(text.substr(
        reason_start,
        reason_end == std::string::npos ? std::string::npos : reason_end - reason_start));
    if (ten_start != std::string::npos) {
        const std::size_t end = one_start != std::string::npos && one_start > ten_start
                                    ? one_start - ten_start
                                    : std::string::npos;
        parsed.to_ten = trim(text.substr(ten_start, end));
    }
    if (one_start != std::string::npos) {
        const std::size_t end = ten_start != std::string::npos && ten_start > one_start
                                    ? ten_start - one_start
                                    : std::string::npos;
        parsed.to_one = trim(text.substr(one_start, end));
    }
    if (parsed.reason.empty()) parsed.reason = trim(text);
    return parsed;
}

// One rating cell. Re-prompts once on malformed output; throws ParseError if
// the second attempt is still unusable.
inline RatingRecord rate_scene(AgentState& state, const NodeId& scene,
                               const SceneFeatures& features, Attribute attribute,
                               Backend& backend, std::int64_t now,
                               const PromptSettings& settings, ExchangeLog* log = nullptr) {
    const auto facts = features_to_facts(features);
    const std::string definition = attribute == Attribute::Safety
                                       ? prompts::kSafetyDefinition
                                       : prompts::kLivelinessDefinition;
    ChatExchange ex;
    ex.system = agent_context(state, now, settings);
    ex.temperature = settings.temperature;
    ex.max_reply_tokens = settings.max_reply_tokens;
    ex.messages.push_back(
        {"user", prompts::build_rating_prompt(state.name, scene,
                                              std::string(attribute_title(attribute)),
                                              definition, facts)});

    RatingRecord record;
    record.agent = state.name;
    record.scene = scene;
    record.attribute = attribute;
    for (int attempt = 0; attempt < 2; ++attempt) {
        const std::string reply = ask(backend, ex, "rating", log);
        record.raw_response = reply;
        try {
            const ParsedRating parsed = parse_rating(reply);
            if (parsed.reason.empty() || parsed.to_ten.empty() || parsed.to_one.empty()) {
                throw ParseError("rating response missing reason or suggestion spans");
            }
            record.score = parsed.score;
            record.reason = parsed.reason;
            record.to_ten = parsed.to_ten;
            record.to_one = parsed.to_one;
            return record;
        } catch (const ParseError& e) {
            if (attempt == 1) throw;
            ex.messages.push_back({"assistant", reply});
            ex.messages.push_back(
                {"user", "That response was not usable (" + std::string(e.what()) +
                             "). Respond in the exact requested format with an integer "
                             "rating between 1 and 10, the reason, what would raise the "
                             "rating to 10, and what would lower it to 1."});
        }
    }
    throw ParseError("unreachable");
}

struct RatingConfig {
    PromptSettings prompt;
    std::int64_t clock_start = parse_civil_time("2023-11-02T12:43:21");
    std::int64_t clock_increment = 45;
    std::uint64_t seed = 0;
    // Per-agent memories carried over from a prior run (name -> entries).
    std::map<std::string, std::vector<MemoryEntry>> initial_memories;
};

struct RatingMatrix {
    std::vector<RatingRecord> records; // agent-major, scene order, safety first
    std::vector<std::string> agents;
    std::vector<NodeId> scenes;
};

// Every agent rates every scene for both attributes, scenes served in
// environment order. A cell that still fails after the re-prompt becomes an
// explicit failure record; the matrix always completes.
inline RatingMatrix rate_all(const EnvironmentGraph& env,
                             const std::vector<Persona>& personas,
                             const SceneProvider& scenes, const BackendFactory& make_backend,
                             const RatingConfig& config, int parallelism = 1) {
    if (personas.empty()) throw ValidationError("rate_all requires at least one persona");
    RatingMatrix matrix;
    matrix.scenes = env.node_ids();
    for (const auto& p : personas) matrix.agents.push_back(p.name);

    std::vector<std::vector<RatingRecord>> per_agent(personas.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        while (true) {
            const std::size_t pi = next.fetch_add(1);
            if (pi >= personas.size()) return;
            const Persona& persona = personas[pi];
            auto backend = make_backend(derive_run_seed(config.seed, pi, 0));

            AgentState state(persona, persona.name, env.target_label(),
                             prompts::default_status(env.target_label()), env.start());
            SimClock clock{config.clock_start, config.clock_increment};
            if (auto it = config.initial_memories.find(persona.name);
                it != config.initial_memories.end()) {
                for (const auto& m : it->second) {
                    state.memory.record(m.text, m.importance, m.timestamp, m.kind);
                }
                if (!it->second.empty()) {
                    clock.now = std::max(clock.now, it->second.back().timestamp);
                }
            }

            std::vector<RatingRecord>& out = per_agent[pi];
            for (const auto& node_id : env.node_ids()) {
                const Node& node = env.node(node_id);
                for (Attribute attr : {Attribute::Safety, Attribute::Liveliness}) {
                    clock.advance();
                    RatingRecord record;
                    try {
                        if (!node.scenes) {
                            throw ProviderError("node '" + node_id +
                                                "' has no scene references");
                        }
                        const SceneFeatures features = scenes.fetch(node.scenes->front);
                        record = rate_scene(state, node_id, features, attr, *backend,
                                            clock.now, config.prompt, nullptr);
                        state.memory.record(
                            record.agent + " rated scene " + node_id + " " +
                                std::to_string(record.score) + " out of 10 for " +
                                std::string(to_string(attr)) + ". " + record.reason,
                            5, clock.now, MemoryKind::Decision);
                    } catch (const Error& e) {
                        record.agent = persona.name;
                        record.scene = node_id;
                        record.attribute = attr;
                        record.failed = true;
                        record.error = e.what();
                    }
                    out.push_back(std::move(record));
                }
            }
        }
    };

    if (parallelism <= 1 || personas.size() <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        const int n = std::min<int>(parallelism, static_cast<int>(personas.size()));
        for (int t = 0; t < n; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    for (auto& rows : per_agent) {
        for (auto& r : rows) matrix.records.push_back(std::move(r));
    }
    return matrix;
}

// {agent -> {scene -> {safety, liveliness}}}; failed cells appear under
// "failures" instead.
inline nlohmann::ordered_json matrix_to_json(const RatingMatrix& matrix) {
    nlohmann::ordered_json j;
    j["scores"] = nlohmann::ordered_json::object();
    j["failures"] = nlohmann::ordered_json::array();
    for (const auto& agent : matrix.agents) {
        j["scores"][agent] = nlohmann::ordered_json::object();
        for (const auto& scene : matrix.scenes) {
            j["scores"][agent][scene] = nlohmann::ordered_json::object();
        }
    }
    for (const auto& r : matrix.records) {
        if (r.failed) {
            j["failures"].push_back({{"agent", r.agent},
                                     {"scene", r.scene},
                                     {"attribute", std::string(to_string(r.attribute))},
                                     {"error", r.error}});
        } else {
            j["scores"][r.agent][r.scene][std::string(to_string(r.attribute))] = r.score;
        }
    }
    return j;
}

inline std::string matrix_to_csv(const RatingMatrix& matrix) {
    std::string csv = "agent,node,attribute,score\n";
    for (const auto& r : matrix.records) {
        if (r.failed) continue;
        csv += r.agent + "," + r.scene + "," + std::string(to_string(r.attribute)) + "," +
               std::to_string(r.score) + "\n";
    }
    return csv;
}

// Per-agent, per-attribute min/max/range of the successful scores.
inline nlohmann::ordered_json matrix_stats_json(const RatingMatrix& matrix) {
    nlohmann::ordered_json stats = nlohmann::ordered_json::object();
    for (const auto& agent : matrix.agents) {
        for (Attribute attr : {Attribute::Safety, Attribute::Liveliness}) {
            int lo = 11, hi = 0;
            for (const auto& r : matrix.records) {
                if (r.failed || r.agent != agent || r.attribute != attr) continue;
                lo = std::min(lo, r.score);
                hi = std::max(hi, r.score);
            }
            if (hi == 0) continue; // no successful cells
            stats[agent][std::string(to_string(attr))] = {
                {"min", lo}, {"max", hi}, {"range", hi - lo}};
        }
    }
    return stats;
}

inline nlohmann::ordered_json rating_records_to_json(const RatingMatrix& matrix) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : matrix.records) {
        nlohmann::ordered_json j;
        j["agent"] = r.agent;
        j["scene"] = r.scene;
        j["attribute"] = std::string(to_string(r.attribute));
        if (r.failed) {
            j["failed"] = true;
            j["error"] = r.error;
        } else {
            j["score"] = r.score;
            j["reason"] = r.reason;
            j["to_ten"] = r.to_ten;
            j["to_one"] = r.to_one;
        }
        arr.push_back(std::move(j));
    }
    return arr;
}

} // namespace streetagents
