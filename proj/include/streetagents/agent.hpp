#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "streetagents/clock.hpp"
#include "streetagents/direction.hpp"
#include "streetagents/environment.hpp"
#include "streetagents/errors.hpp"
#include "streetagents/llm.hpp"
#include "streetagents/memory.hpp"
#include "streetagents/prompts.hpp"
#include "streetagents/vision.hpp"

namespace streetagents {

struct Persona {
    std::string name;
    int age = 18;
    std::vector<std::string> traits;
    std::string backstory;

    void validate() const {
        if (name.empty()) throw ValidationError("persona name must be non-empty");
        if (age < 18) throw ValidationError("persona '" + name + "': age must be >= 18");
        if (traits.empty()) {
            throw ValidationError("persona '" + name + "': traits must be non-empty");
        }
    }

    bool operator==(const Persona&) const = default;
};

inline Persona persona_from_json(const nlohmann::json& j) {
    Persona p;
    try {
        p.name = j.at("name").get<std::string>();
        p.age = j.at("age").get<int>();
        for (const auto& t : j.at("traits")) p.traits.push_back(t.get<std::string>());
        p.backstory = j.at("backstory").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("persona: ") + e.what());
    }
    p.validate();
    return p;
}

inline nlohmann::ordered_json persona_to_json(const Persona& p) {
    return nlohmann::ordered_json{
        {"name", p.name}, {"age", p.age}, {"traits", p.traits}, {"backstory", p.backstory}};
}

inline std::vector<Persona> load_personas(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open personas file '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("personas file '" + path + "': " + e.what());
    }
    if (!doc.is_array()) throw ParseError("personas file must hold a JSON list");
    std::vector<Persona> personas;
    for (const auto& j : doc) personas.push_back(persona_from_json(j));
    return personas;
}

struct AgentState {
    std::optional<Persona> persona;
    std::string name;         // persona name, or the configured trial name
    std::string target_label;
    std::string status;
    NodeId current;
    std::vector<NodeId> visited; // begins with the start node
    int steps_taken = 0;
    MemoryStream memory;

    AgentState(std::optional<Persona> p, std::string agent_name, std::string target,
               std::string status_text, NodeId start)
        : persona(std::move(p)),
          name(std::move(agent_name)),
          target_label(std::move(target)),
          status(std::move(status_text)),
          current(start),
          visited{start},
          memory(name) {}
};

// One candidate move offered to the agent.
struct DirectionOption {
    Direction dir = Direction::Forward;
    NodeId destination;
    std::string summary; // empty for the came-from direction
    bool came_from = false;
    bool previously_visited = false;
};

struct Decision {
    Direction chosen = Direction::Forward;
    std::string justification;
    std::map<Direction, std::string> rejections;
    std::string raw_response;
    bool fallback = false;
    int reprompts = 0;
};

// Knobs shared by every prompt-building operation in a run.
struct PromptSettings {
    int k_retrieve = 15;
    int token_budget = 1200;
    double temperature = 0.0;
    int max_reply_tokens = 512;
};

namespace agentdetail {

inline std::string to_lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

// Scans a REACT-format response for the direction of the first non-negated
// "wish(es) to go" clause.
inline std::optional<Direction> parse_wish_direction(const std::string& response) {
    const std::string lower = to_lower(response);
    std::size_t pos = 0;
    while ((pos = lower.find("wish", pos)) != std::string::npos) {
        // "wish to go" / "wishes to go"
        std::size_t after = pos + 4;
        if (lower.compare(after, 2, "es") == 0) after += 2;
        if (lower.compare(after, 6, " to go") != 0) {
            pos += 4;
            continue;
        }
        const std::size_t window_start = pos >= 24 ? pos - 24 : 0;
        const std::string before = lower.substr(window_start, pos - window_start);
        if (before.find("not ") != std::string::npos) {
            pos += 4;
            continue;
        }
        const std::string clause = lower.substr(after, 80);
        std::size_t best_at = std::string::npos;
        Direction best = Direction::Forward;
        for (Direction d : kDirectionOrder) {
            const std::string word(to_string(d));
            std::size_t at = clause.find(word);
            while (at != std::string::npos) {
                const bool start_ok = at == 0 || !std::isalpha(static_cast<unsigned char>(
                                                     clause[at - 1]));
                const std::size_t end = at + word.size();
                const bool end_ok =
                    end >= clause.size() ||
                    !std::isalpha(static_cast<unsigned char>(clause[end]));
                if (start_ok && end_ok) break;
                at = clause.find(word, at + 1);
            }
            if (at != std::string::npos && at < best_at) {
                best_at = at;
                best = d;
            }
        }
        if (best_at != std::string::npos) return best;
        pos += 4;
    }
    return std::nullopt;
}

// Per-direction rejection reasons from "does not wish to go ... because ..."
// clauses. Best-effort; an unparseable response simply yields fewer entries.
inline std::map<Direction, std::string> parse_rejections(const std::string& response) {
    std::map<Direction, std::string> rejections;
    const std::string lower = to_lower(response);
    std::size_t pos = 0;
    while ((pos = lower.find("not wish to go", pos)) != std::string::npos) {
        const std::size_t clause_start = pos + 14;
        std::size_t dir_at = std::string::npos;
        std::optional<Direction> dir;
        for (Direction d : kDirectionOrder) {
            const auto at = lower.find(std::string(to_string(d)), clause_start);
            if (at != std::string::npos && at < clause_start + 60 && at < dir_at) {
                dir_at = at;
                dir = d;
            }
        }
        const auto because = lower.find("because", clause_start);
        if (dir && because != std::string::npos) {
            std::size_t reason_start = because + 7;
            while (reason_start < response.size() &&
                   (response[reason_start] == ' ' || response[reason_start] == ',')) {
                ++reason_start;
            }
            std::size_t reason_end = lower.find(" wish to go", reason_start);
            std::size_t alt_end = lower.find(" does not wish", reason_start);
            if (alt_end != std::string::npos &&
                (reason_end == std::string::npos || alt_end < reason_end)) {
                reason_end = alt_end;
            }
            if (reason_end == std::string::npos) reason_end = response.size();
            // Back off to the sentence owning the next clause.
            std::string reason = response.substr(reason_start, reason_end - reason_start);
            if (auto dot = reason.rfind(". "); reason_end != response.size() &&
                                               dot != std::string::npos) {
                reason.resize(dot + 1);
            }
            while (!reason.empty() &&
                   std::isspace(static_cast<unsigned char>(reason.back()))) {
                reason.pop_back();
            }
            if (!reason.empty()) rejections.emplace(*dir, reason);
        }
        pos = clause_start;
    }
    return rejections;
}

inline std::string justification_from(const std::string& response, Direction chosen) {
    const std::string lower = to_lower(response);
    std::size_t pos = 0;
    while ((pos = lower.find("wish", pos)) != std::string::npos) {
        const std::size_t window_start = pos >= 24 ? pos - 24 : 0;
        if (lower.substr(window_start, pos - window_start).find("not ") !=
            std::string::npos) {
            pos += 4;
            continue;
        }
        const auto dir_at = lower.find(std::string(to_string(chosen)), pos);
        const auto because = lower.find("because", pos);
        if (dir_at == std::string::npos || because == std::string::npos ||
            because < dir_at) {
            pos += 4;
            continue;
        }
        std::size_t start = because + 7;
        while (start < response.size() &&
               (response[start] == ' ' || response[start] == ',')) {
            ++start;
        }
        std::size_t end = lower.find(" does not wish", start);
        if (end == std::string::npos) end = response.size();
        std::string reason = response.substr(start, end - start);
        if (end != response.size()) {
            if (auto dot = reason.rfind(". "); dot != std::string::npos) {
                reason.resize(dot + 1);
            }
        }
        while (!reason.empty() && std::isspace(static_cast<unsigned char>(reason.back()))) {
            reason.pop_back();
        }
        if (!reason.empty()) return reason;
        pos += 4;
    }
    return response; // fall back to the raw text; must stay non-empty
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::string indefinite_article(const std::string& noun) {
    if (noun.empty()) return "a";
    switch (std::tolower(static_cast<unsigned char>(noun.front()))) {
    case 'a': case 'e': case 'i': case 'o': case 'u': return "an";
    default: return "a";
    }
}

inline std::string list_with_articles(const std::vector<std::string>& labels) {
    std::vector<std::string> parts;
    parts.reserve(labels.size());
    for (const auto& l : labels) parts.push_back(indefinite_article(l) + " " + l);
    if (parts.empty()) return "";
    if (parts.size() == 1) return parts.front();
    std::string out;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) out += parts[i] + ", ";
    out += "and " + parts.back();
    return out;
}

} // namespace agentdetail

// The system text shared by decisions, interviews, and ratings.
inline std::string agent_context(const AgentState& state, std::int64_t now,
                                 const PromptSettings& settings) {
    prompts::ContextInputs in;
    in.name = state.name;
    if (state.persona) {
        in.age_text = std::to_string(state.persona->age);
        in.traits = prompts::join(state.persona->traits, ", ");
        in.backstory = state.persona->backstory;
    }
    in.time_text = format_memory_timestamp(now);
    in.status = state.status;
    if (!state.memory.empty()) {
        in.memory_block = render_context(
            state.memory.retrieve(static_cast<std::size_t>(settings.k_retrieve)),
            settings.token_budget);
    }
    return prompts::build_agent_context(in);
}

// The per-step observation shown to the agent before it chooses a direction.
inline std::string build_decision_observation(const AgentState& state,
                                              const std::vector<DirectionOption>& options) {
    std::string text;
    if (state.steps_taken == 0) {
        text = state.name + " comes out at location " + state.current + ".";
    } else {
        text = "Now " + state.name + " has to decide on moving further.";
    }
    std::vector<std::string> dir_names;
    for (const auto& o : options) dir_names.emplace_back(to_string(o.dir));
    text += " The directions in which " + state.name + " can move are " +
            prompts::join(dir_names, ", ") + ".";
    for (const auto& o : options) {
        if (o.came_from) {
            text += "\n" + state.name + " came here to " + state.current + " from the " +
                    std::string(to_string(o.dir)) + " direction, so " + state.name +
                    " already saw what is there in that direction.";
        }
    }
    for (const auto& o : options) {
        if (o.came_from) continue;
        text += "\nIn the " + std::string(to_string(o.dir)) + " direction " + state.name +
                " sees: " + o.summary;
        if (o.previously_visited) text += " (previously visited)";
    }
    return text;
}

// Asks the backend for a REACT-format decision; re-prompts up to three times
// on unparseable or unavailable directions, then falls back to a seeded
// choice among the least recently visited options.
inline Decision decide_direction(const AgentState& state,
                                 const std::vector<DirectionOption>& options,
                                 Backend& backend, std::int64_t now,
                                 const PromptSettings& settings, std::uint64_t seed,
                                 ExchangeLog* log = nullptr) {
    if (options.empty()) throw ValidationError("no directions offered");
    for (const auto& o : options) {
        if (!o.came_from && o.summary.empty()) {
            throw ValidationError("direction option without a scene summary");
        }
    }
    const std::string observation = build_decision_observation(state, options);
    ChatExchange ex;
    ex.system = agent_context(state, now, settings);
    ex.temperature = settings.temperature;
    ex.max_reply_tokens = settings.max_reply_tokens;
    ex.messages.push_back(
        {"user",
         prompts::build_decision_prompt(state.name, state.target_label, observation)});

    auto offered = [&options](Direction d) {
        for (const auto& o : options) {
            if (o.dir == d) return true;
        }
        return false;
    };

    Decision decision;
    std::string reply;
    for (int attempt = 0; attempt < 4; ++attempt) {
        reply = ask(backend, ex, "decision", log);
        const auto dir = agentdetail::parse_wish_direction(reply);
        if (dir && offered(*dir)) {
            decision.chosen = *dir;
            decision.raw_response = reply;
            decision.justification = agentdetail::justification_from(reply, *dir);
            decision.rejections = agentdetail::parse_rejections(reply);
            decision.reprompts = attempt;
            return decision;
        }
        if (attempt < 3) {
            std::vector<std::string> names;
            for (const auto& o : options) names.emplace_back(to_string(o.dir));
            ex.messages.push_back({"assistant", reply});
            ex.messages.push_back(
                {"user", "That response did not name an available direction. Choose one "
                         "of: " +
                             prompts::join(names, ", ") +
                             ". Use the exact REACT format."});
        }
    }

    // Protocol violation: pick among the least recently visited destinations.
    std::vector<std::size_t> candidates;
    long best_rank = -2;
    for (std::size_t i = 0; i < options.size(); ++i) {
        long last = -1;
        for (std::size_t v = 0; v < state.visited.size(); ++v) {
            if (state.visited[v] == options[i].destination) last = static_cast<long>(v);
        }
        if (candidates.empty() || last < best_rank) {
            candidates = {i};
            best_rank = last;
        } else if (last == best_rank) {
            candidates.push_back(i);
        }
    }
    const auto pick = candidates[agentdetail::splitmix64(
                                     seed ^ static_cast<std::uint64_t>(state.steps_taken)) %
                                 candidates.size()];
    decision.chosen = options[pick].dir;
    decision.raw_response = reply;
    decision.justification = "fallback after repeated protocol violations";
    decision.fallback = true;
    decision.reprompts = 3;
    return decision;
}

// What the scene provider yielded for the node the agent just reached.
struct ArrivalView {
    std::string front_summary; // cached preview summary or freshly produced
    SceneFeatures front;
    std::optional<SceneFeatures> left;
    std::optional<SceneFeatures> right;
};

struct ArrivalOutcome {
    std::string observation; // engine-composed narration
    std::string note;        // backend-condensed memory text (stored verbatim)
    bool found = false;
    int importance = 1;
};

// Composes the arrival narration, checks every consulted heading for the
// target, asks the backend to condense the narration into a memory note, and
// records the note with a fresh importance score.
inline ArrivalOutcome observe_arrival(AgentState& state, const ArrivalView& view,
                                      const NodeId& came_from, Direction moved,
                                      Backend& backend, std::int64_t now,
                                      const PromptSettings& settings,
                                      ExchangeLog* log = nullptr) {
    ArrivalOutcome outcome;
    outcome.found = contains_target(view.front, state.target_label) ||
                    (view.left && contains_target(*view.left, state.target_label)) ||
                    (view.right && contains_target(*view.right, state.target_label));

    std::string obs = "After coming from location " + came_from + ", " + state.name +
                      " moved " + std::string(to_string(moved)) + " to " + state.current +
                      ", " + state.name +
                      " looks on right and left sides of the street to find the " +
                      state.target_label + ".";
    auto cats = [](const SceneFeatures& f) {
        std::vector<std::string> labels;
        for (const auto& c : f.categories) labels.push_back(c.label);
        return agentdetail::list_with_articles(labels);
    };
    if (view.left && !view.left->categories.empty()) {
        obs += " The scenes appears to be a combination of " + cats(*view.left) + ",";
        if (view.right && !view.right->categories.empty()) {
            obs += " combination of " + cats(*view.right) + ".";
        } else {
            obs.back() = '.';
        }
    } else if (view.right && !view.right->categories.empty()) {
        obs += " The scenes appears to be a combination of " + cats(*view.right) + ".";
    }
    obs += " Overall, " + view.front_summary;
    obs += outcome.found
               ? " The " + state.target_label + " is found at this location!"
               : " No sign of " + state.target_label + " yet.";
    outcome.observation = obs;

    ChatExchange ex;
    ex.system = agent_context(state, now, settings);
    ex.temperature = settings.temperature;
    ex.max_reply_tokens = settings.max_reply_tokens;
    ex.messages.push_back({"user", prompts::build_memory_note_prompt(obs)});
    outcome.note = ask(backend, ex, "memory_note", log);
    if (outcome.note.empty()) outcome.note = obs;

    outcome.importance = score_importance(outcome.note, backend, log);
    state.memory.record(outcome.note, outcome.importance, now, MemoryKind::Observation);
    return outcome;
}

// Post-run question answered from persona plus retrieved memories.
inline std::string interview(const AgentState& state, const std::string& question,
                             Backend& backend, std::int64_t now,
                             const PromptSettings& settings, ExchangeLog* log = nullptr) {
    if (state.memory.empty()) {
        throw ValidationError("cannot interview an agent with an empty memory stream");
    }
    ChatExchange ex;
    ex.system = agent_context(state, now, settings);
    ex.temperature = settings.temperature;
    ex.max_reply_tokens = settings.max_reply_tokens;
    ex.messages.push_back({"user", prompts::build_interview_prompt(question)});
    return ask(backend, ex, "interview", log);
}

} // namespace streetagents
