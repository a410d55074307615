#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "streetagents/agent.hpp"
#include "streetagents/clock.hpp"
#include "streetagents/environment.hpp"
#include "streetagents/llm.hpp"
#include "streetagents/memory.hpp"
#include "streetagents/vision.hpp"

namespace streetagents {

struct RunConfig {
    std::string environment_path; // informational, echoed into records
    std::optional<Persona> persona;
    std::string agent_name = "Max"; // used when no persona is attached
    std::string status;             // empty = default template for the target
    int step_cap = 50;
    PromptSettings prompt;
    std::int64_t clock_start = parse_civil_time("2023-11-02T12:43:21");
    std::int64_t clock_increment = 45;
    std::uint64_t seed = 0;
    std::vector<std::string> interview_questions;
};

struct StepRecord {
    int index = 0; // 1-based move number
    NodeId from;
    NodeId to;
    Direction direction = Direction::Forward;
    bool fallback = false;
    int reprompts = 0;
    std::string justification;
    std::map<Direction, std::string> rejections;
    std::string observation;
    std::string note;
    int importance = 1;
    bool found = false;
    int prompt_tokens = 0;
    int reply_tokens = 0;
};

struct RunRecord {
    std::string agent;
    std::optional<Persona> persona;
    std::string status;
    std::string target;
    std::string backend;
    std::string environment_path;
    std::uint64_t env_hash = 0;
    std::uint64_t seed = 0;
    int step_cap = 0;
    int k_retrieve = 0;
    int token_budget = 0;
    std::int64_t clock_start = 0;
    std::int64_t clock_increment = 0;
    std::vector<NodeId> path;
    std::vector<StepRecord> steps;
    std::string outcome; // "found" | "step_capped" | "error"
    std::string error;
    std::vector<ExchangeRecord> exchanges;
    int prompt_tokens_total = 0;
    int reply_tokens_total = 0;
    std::vector<MemoryEntry> memory;
    std::vector<std::pair<std::string, std::string>> interview;
};

namespace detail {

inline std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::uint64_t hash_from_hex(const std::string& s) {
    return std::strtoull(s.c_str(), nullptr, 16);
}

} // namespace detail

inline nlohmann::ordered_json run_record_to_json(const RunRecord& r) {
    nlohmann::ordered_json j;
    j["v"] = 1;
    j["agent"] = r.agent;
    j["persona"] = r.persona ? nlohmann::ordered_json(persona_to_json(*r.persona))
                             : nlohmann::ordered_json(nullptr);
    j["status"] = r.status;
    j["target"] = r.target;
    j["backend"] = r.backend;
    j["environment"] = r.environment_path;
    j["env_hash"] = detail::hash_hex(r.env_hash);
    j["seed"] = r.seed;
    j["step_cap"] = r.step_cap;
    j["k_retrieve"] = r.k_retrieve;
    j["token_budget"] = r.token_budget;
    j["clock_start"] = r.clock_start;
    j["clock_increment"] = r.clock_increment;
    j["path"] = r.path;
    j["steps"] = nlohmann::ordered_json::array();
    for (const auto& s : r.steps) {
        nlohmann::ordered_json sj;
        sj["index"] = s.index;
        sj["from"] = s.from;
        sj["to"] = s.to;
        sj["direction"] = std::string(to_string(s.direction));
        sj["fallback"] = s.fallback;
        sj["reprompts"] = s.reprompts;
        sj["justification"] = s.justification;
        sj["rejections"] = nlohmann::ordered_json::object();
        for (const auto& [dir, reason] : s.rejections) {
            sj["rejections"][std::string(to_string(dir))] = reason;
        }
        sj["observation"] = s.observation;
        sj["note"] = s.note;
        sj["importance"] = s.importance;
        sj["found"] = s.found;
        sj["prompt_tokens"] = s.prompt_tokens;
        sj["reply_tokens"] = s.reply_tokens;
        j["steps"].push_back(std::move(sj));
    }
    j["outcome"] = r.outcome;
    if (!r.error.empty()) j["error"] = r.error;
    j["exchanges"] = nlohmann::ordered_json::array();
    for (const auto& e : r.exchanges) {
        j["exchanges"].push_back({{"kind", e.kind},
                                  {"prompt_tokens", e.prompt_tokens},
                                  {"reply_tokens", e.reply_tokens}});
    }
    j["prompt_tokens_total"] = r.prompt_tokens_total;
    j["reply_tokens_total"] = r.reply_tokens_total;
    j["memory"] = nlohmann::ordered_json::array();
    for (const auto& m : r.memory) {
        j["memory"].push_back({{"timestamp", m.timestamp},
                               {"importance", m.importance},
                               {"text", m.text},
                               {"kind", std::string(to_string(m.kind))}});
    }
    j["interview"] = nlohmann::ordered_json::array();
    for (const auto& [q, a] : r.interview) {
        j["interview"].push_back({{"question", q}, {"answer", a}});
    }
    return j;
}

inline RunRecord run_record_from_json(const nlohmann::json& j) {
    RunRecord r;
    try {
        if (j.at("v").get<int>() != 1) {
            throw ParseError("unsupported run record schema version");
        }
        r.agent = j.at("agent").get<std::string>();
        if (!j.at("persona").is_null()) r.persona = persona_from_json(j.at("persona"));
        r.status = j.at("status").get<std::string>();
        r.target = j.at("target").get<std::string>();
        r.backend = j.at("backend").get<std::string>();
        r.environment_path = j.at("environment").get<std::string>();
        r.env_hash = detail::hash_from_hex(j.at("env_hash").get<std::string>());
        r.seed = j.at("seed").get<std::uint64_t>();
        r.step_cap = j.at("step_cap").get<int>();
        r.k_retrieve = j.at("k_retrieve").get<int>();
        r.token_budget = j.at("token_budget").get<int>();
        r.clock_start = j.at("clock_start").get<std::int64_t>();
        r.clock_increment = j.at("clock_increment").get<std::int64_t>();
        r.path = j.at("path").get<std::vector<std::string>>();
        for (const auto& sj : j.at("steps")) {
            StepRecord s;
            s.index = sj.at("index").get<int>();
            s.from = sj.at("from").get<std::string>();
            s.to = sj.at("to").get<std::string>();
            const auto dir = direction_from(sj.at("direction").get<std::string>());
            if (!dir) throw ParseError("bad direction in step record");
            s.direction = *dir;
            s.fallback = sj.at("fallback").get<bool>();
            s.reprompts = sj.at("reprompts").get<int>();
            s.justification = sj.at("justification").get<std::string>();
            for (const auto& [d, reason] : sj.at("rejections").items()) {
                const auto rd = direction_from(d);
                if (!rd) throw ParseError("bad direction in rejection map");
                s.rejections[*rd] = reason.get<std::string>();
            }
            s.observation = sj.at("observation").get<std::string>();
            s.note = sj.at("note").get<std::string>();
            s.importance = sj.at("importance").get<int>();
            s.found = sj.at("found").get<bool>();
            s.prompt_tokens = sj.at("prompt_tokens").get<int>();
            s.reply_tokens = sj.at("reply_tokens").get<int>();
            r.steps.push_back(std::move(s));
        }
        r.outcome = j.at("outcome").get<std::string>();
        if (j.contains("error")) r.error = j.at("error").get<std::string>();
        for (const auto& ej : j.at("exchanges")) {
            r.exchanges.push_back({ej.at("kind").get<std::string>(),
                                   ej.at("prompt_tokens").get<int>(),
                                   ej.at("reply_tokens").get<int>()});
        }
        r.prompt_tokens_total = j.at("prompt_tokens_total").get<int>();
        r.reply_tokens_total = j.at("reply_tokens_total").get<int>();
        for (const auto& mj : j.at("memory")) {
            MemoryEntry m;
            m.timestamp = mj.at("timestamp").get<std::int64_t>();
            m.importance = mj.at("importance").get<int>();
            m.text = mj.at("text").get<std::string>();
            m.kind = memory_kind_from(mj.at("kind").get<std::string>());
            r.memory.push_back(std::move(m));
        }
        for (const auto& ij : j.at("interview")) {
            r.interview.emplace_back(ij.at("question").get<std::string>(),
                                     ij.at("answer").get<std::string>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("run record: ") + e.what());
    }
    return r;
}

// Executes one wayfinding run: preview the options, decide, move, observe,
// remember — until the target is found or the step cap is hit. The memory
// stream always starts empty.
inline RunRecord run_wayfinding(const EnvironmentGraph& env, const RunConfig& config,
                                Backend& backend, const SceneProvider& scenes) {
    if (config.step_cap < 1) throw ValidationError("step_cap must be >= 1");
    const std::string name = config.persona ? config.persona->name : config.agent_name;
    const std::string status =
        config.status.empty() ? prompts::default_status(env.target_label()) : config.status;

    RunRecord record;
    record.agent = name;
    record.persona = config.persona;
    record.status = status;
    record.target = env.target_label();
    record.backend = backend.describe();
    record.environment_path = config.environment_path;
    record.env_hash = env.content_hash();
    record.seed = config.seed;
    record.step_cap = config.step_cap;
    record.k_retrieve = config.prompt.k_retrieve;
    record.token_budget = config.prompt.token_budget;
    record.clock_start = config.clock_start;
    record.clock_increment = config.clock_increment;

    AgentState state(config.persona, name, env.target_label(), status, env.start());
    SimClock clock{config.clock_start, config.clock_increment};
    ExchangeLog log;
    std::map<std::string, std::string> summary_cache; // scene ref -> summary text
    std::optional<Direction> last_moved;
    bool found = false;

    auto front_ref = [&env](const NodeId& id) -> const std::string& {
        const Node& node = env.node(id);
        if (!node.scenes) {
            throw ProviderError("node '" + id + "' has no scene references");
        }
        return node.scenes->front;
    };
    auto summary_for = [&](const NodeId& id) -> std::string {
        const std::string& ref = front_ref(id);
        if (auto it = summary_cache.find(ref); it != summary_cache.end()) {
            return it->second;
        }
        const SceneSummary s =
            summarize(scenes.fetch(ref), id, Heading::Front, backend, &log);
        summary_cache[ref] = s.text;
        return s.text;
    };

    try {
        while (state.steps_taken < config.step_cap) {
            std::vector<DirectionOption> options;
            for (const auto& [dir, dest] : env.available_directions(state.current)) {
                DirectionOption opt;
                opt.dir = dir;
                opt.destination = dest;
                opt.came_from = last_moved && dir == reverse(*last_moved);
                opt.previously_visited =
                    std::find(state.visited.begin(), state.visited.end(), dest) !=
                    state.visited.end();
                if (!opt.came_from) opt.summary = summary_for(dest);
                options.push_back(std::move(opt));
            }

            const std::size_t log_mark = log.size();
            const Decision decision = decide_direction(state, options, backend, clock.now,
                                                       config.prompt, config.seed, &log);
            const NodeId from = state.current;
            const auto dest = env.neighbor(state.current, decision.chosen);
            state.current = *dest;
            state.visited.push_back(*dest);
            ++state.steps_taken;
            last_moved = decision.chosen;
            clock.advance();

            ArrivalView view;
            const std::string& ref = front_ref(state.current);
            view.front = scenes.fetch(ref);
            view.front_summary = summary_for(state.current);
            const Node& node = env.node(state.current);
            if (!node.scenes->left.empty() && scenes.has(node.scenes->left)) {
                view.left = scenes.fetch(node.scenes->left);
            }
            if (!node.scenes->right.empty() && scenes.has(node.scenes->right)) {
                view.right = scenes.fetch(node.scenes->right);
            }
            const ArrivalOutcome arrival = observe_arrival(
                state, view, from, decision.chosen, backend, clock.now, config.prompt, &log);

            StepRecord step;
            step.index = state.steps_taken;
            step.from = from;
            step.to = state.current;
            step.direction = decision.chosen;
            step.fallback = decision.fallback;
            step.reprompts = decision.reprompts;
            step.justification = decision.justification;
            step.rejections = decision.rejections;
            step.observation = arrival.observation;
            step.note = arrival.note;
            step.importance = arrival.importance;
            step.found = arrival.found;
            for (std::size_t i = log_mark; i < log.size(); ++i) {
                step.prompt_tokens += log[i].prompt_tokens;
                step.reply_tokens += log[i].reply_tokens;
            }
            record.steps.push_back(std::move(step));

            if (arrival.found) {
                found = true;
                break;
            }
        }
        record.outcome = found ? "found" : "step_capped";

        if (!config.interview_questions.empty() && !state.memory.empty()) {
            for (const auto& q : config.interview_questions) {
                record.interview.emplace_back(
                    q, interview(state, q, backend, clock.now, config.prompt, &log));
            }
        }
    } catch (const Error& e) {
        record.outcome = "error";
        record.error = e.what();
    }

    record.path = state.visited;
    record.memory = state.memory.entries();
    record.exchanges = log;
    for (const auto& e : log) {
        record.prompt_tokens_total += e.prompt_tokens;
        record.reply_tokens_total += e.reply_tokens;
    }
    return record;
}

// Deterministic per-run seed from (base seed, persona index, run index).
inline std::uint64_t derive_run_seed(std::uint64_t base, std::size_t persona_idx,
                                     std::size_t run_idx) {
    using agentdetail::splitmix64;
    std::uint64_t h = splitmix64(base ^ 0xA0761D6478BD642Full);
    h = splitmix64(h + persona_idx + 1);
    h = splitmix64(h + run_idx + 1);
    return h;
}

using BackendFactory = std::function<std::shared_ptr<Backend>(std::uint64_t run_seed)>;

// Runs |personas| x runs_per_persona independent simulations. Results come
// back in (persona, run) order regardless of scheduling; per-run failures are
// captured in their records and do not abort the batch.
inline std::vector<RunRecord> run_batch(const EnvironmentGraph& env,
                                        const std::vector<Persona>& personas,
                                        int runs_per_persona, const RunConfig& base,
                                        const BackendFactory& make_backend,
                                        const SceneProvider& scenes, int parallelism = 1) {
    if (personas.empty()) throw ValidationError("run_batch requires at least one persona");
    if (runs_per_persona < 1) throw ValidationError("runs_per_persona must be >= 1");
    if (parallelism < 1) parallelism = 1;

    struct Job {
        std::size_t persona_idx;
        std::size_t run_idx;
    };
    std::vector<Job> jobs;
    for (std::size_t p = 0; p < personas.size(); ++p) {
        for (std::size_t r = 0; r < static_cast<std::size_t>(runs_per_persona); ++r) {
            jobs.push_back({p, r});
        }
    }
    std::vector<RunRecord> results(jobs.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            const Job& job = jobs[i];
            RunConfig config = base;
            config.persona = personas[job.persona_idx];
            config.seed = derive_run_seed(base.seed, job.persona_idx, job.run_idx);
            try {
                auto backend = make_backend(config.seed);
                results[i] = run_wayfinding(env, config, *backend, scenes);
            } catch (const Error& e) {
                RunRecord r;
                r.agent = personas[job.persona_idx].name;
                r.persona = personas[job.persona_idx];
                r.status = base.status.empty() ? prompts::default_status(env.target_label())
                                               : base.status;
                r.target = env.target_label();
                r.environment_path = base.environment_path;
                r.env_hash = env.content_hash();
                r.seed = config.seed;
                r.step_cap = base.step_cap;
                r.k_retrieve = base.prompt.k_retrieve;
                r.token_budget = base.prompt.token_budget;
                r.clock_start = base.clock_start;
                r.clock_increment = base.clock_increment;
                r.path = {env.start()};
                r.outcome = "error";
                r.error = e.what();
                results[i] = std::move(r);
            }
        }
    };

    if (parallelism == 1 || jobs.size() <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        const int n = std::min<int>(parallelism, static_cast<int>(jobs.size()));
        threads.reserve(static_cast<std::size_t>(n));
        for (int t = 0; t < n; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    return results;
}

struct PathAggregation {
    std::map<std::pair<NodeId, NodeId>, int> edge_counts; // undirected, key sorted
    std::map<std::string, int> path_counts;
};

inline std::string path_key(const std::vector<NodeId>& path) {
    bool all_single = true;
    for (const auto& n : path) {
        if (n.size() != 1) {
            all_single = false;
            break;
        }
    }
    std::string key;
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (i && !all_single) key += "-";
        key += path[i];
    }
    return key;
}

// Undirected edge-usage counts plus exact-path frequencies over a batch.
// Refuses record sets that mix environments.
inline PathAggregation aggregate_edge_frequencies(const std::vector<RunRecord>& records) {
    PathAggregation agg;
    std::optional<std::uint64_t> env_hash;
    for (const auto& r : records) {
        if (env_hash && *env_hash != r.env_hash) {
            throw ValidationError("run records mix different environments");
        }
        env_hash = r.env_hash;
        for (std::size_t i = 0; i + 1 < r.path.size(); ++i) {
            auto key = std::minmax(r.path[i], r.path[i + 1]);
            ++agg.edge_counts[{key.first, key.second}];
        }
        ++agg.path_counts[path_key(r.path)];
    }
    return agg;
}

// DOT rendering of edge frequencies (penwidth scales with count).
inline std::string aggregation_to_dot(const PathAggregation& agg) {
    std::string dot = "graph paths {\n";
    for (const auto& [edge, count] : agg.edge_counts) {
        dot += "  \"" + edge.first + "\" -- \"" + edge.second + "\" [penwidth=" +
               std::to_string(count) + ", label=" + std::to_string(count) + "];\n";
    }
    dot += "}\n";
    return dot;
}

inline void persist_runs(const std::vector<RunRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    for (const auto& r : records) {
        out << run_record_to_json(r).dump() << "\n";
    }
    if (!out) throw Error("write to '" + path + "' failed");
}

inline std::vector<RunRecord> load_runs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open run log '" + path + "'");
    std::vector<RunRecord> records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            records.push_back(run_record_from_json(nlohmann::json::parse(line)));
        } catch (const Error& e) {
            throw ParseError("run log '" + path + "' line " + std::to_string(line_no) +
                             ": " + e.what());
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("run log '" + path + "' line " + std::to_string(line_no) +
                             ": " + e.what());
        }
    }
    return records;
}

} // namespace streetagents
