// Operator entry point: validate environments, run simulations, rating
// experiments, interviews, log analysis, and optional imagery fetching.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "streetagents/http_backend.hpp"
#include "streetagents/http_scene_provider.hpp"
#include "streetagents/streetagents.hpp"

namespace fs = std::filesystem;
using namespace streetagents;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;   // validation / configuration errors
constexpr int kExitPartial = 2;  // some runs or cells failed

struct AppConfig {
    std::string environment;
    std::string personas;
    std::string scenes;          // canned feature store (JSON file)
    std::string scenes_endpoint; // remote feature provider (HTTP)
    std::string backend = "mock";
    std::string transcript; // replay backend
    std::string endpoint;   // remote backend
    std::string model = "gpt-3.5-turbo";
    std::string api_key_env = "STREETAGENTS_API_KEY";
    std::string agent_name = "Max";
    std::string status;
    std::string clock_start = "2023-11-02T12:43:21";
    std::int64_t clock_increment = 45;
    int step_cap = 50;
    int runs = 1;
    std::uint64_t seed = 0;
    int parallelism = 1;
    int k_retrieve = 15;
    int token_budget = 1200;
    int max_in_flight = 4;
    int requests_per_minute = 60;
    std::string out;
    std::vector<std::string> interview_questions;
};

AppConfig load_app_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("config file '" + path + "': " + e.what());
    }
    AppConfig c;
    auto str = [&](const char* key, std::string& out) {
        if (j.contains(key)) out = j.at(key).get<std::string>();
    };
    str("environment", c.environment);
    str("personas", c.personas);
    str("scenes", c.scenes);
    str("scenes_endpoint", c.scenes_endpoint);
    str("backend", c.backend);
    str("transcript", c.transcript);
    str("endpoint", c.endpoint);
    str("model", c.model);
    str("api_key_env", c.api_key_env);
    str("agent_name", c.agent_name);
    str("status", c.status);
    str("clock_start", c.clock_start);
    str("out", c.out);
    if (j.contains("clock_increment")) c.clock_increment = j.at("clock_increment").get<std::int64_t>();
    if (j.contains("step_cap")) c.step_cap = j.at("step_cap").get<int>();
    if (j.contains("runs")) c.runs = j.at("runs").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("parallelism")) c.parallelism = j.at("parallelism").get<int>();
    if (j.contains("k_retrieve")) c.k_retrieve = j.at("k_retrieve").get<int>();
    if (j.contains("token_budget")) c.token_budget = j.at("token_budget").get<int>();
    if (j.contains("max_in_flight")) c.max_in_flight = j.at("max_in_flight").get<int>();
    if (j.contains("requests_per_minute")) {
        c.requests_per_minute = j.at("requests_per_minute").get<int>();
    }
    if (j.contains("interview_questions")) {
        c.interview_questions =
            j.at("interview_questions").get<std::vector<std::string>>();
    }
    return c;
}

void require_exists(const std::string& path, const char* what) {
    if (!path.empty() && !fs::exists(path)) {
        throw ValidationError(std::string(what) + " path does not exist: '" + path + "'");
    }
}

void validate_app_config(const AppConfig& c) {
    if (c.backend != "mock" && c.backend != "replay" && c.backend != "remote") {
        throw ValidationError("backend must be one of mock|replay|remote, got '" +
                              c.backend + "'");
    }
    if (c.backend == "replay" && c.transcript.empty()) {
        throw ValidationError("replay backend requires a transcript path");
    }
    if (c.backend == "remote" && c.endpoint.empty()) {
        throw ValidationError("remote backend requires an endpoint");
    }
    require_exists(c.environment, "environment");
    require_exists(c.personas, "personas");
    require_exists(c.scenes, "scene store");
    require_exists(c.transcript, "transcript");
}

// The replay and remote backends are shared across all runs: replay so the
// transcript is consumed in order, remote so rate caps apply to the whole
// batch. The mock backend is seeded per run.
BackendFactory make_backend_factory(const AppConfig& c,
                                    std::shared_ptr<ReplayBackend>* replay_out = nullptr) {
    if (c.backend == "mock") {
        return [](std::uint64_t seed) { return std::make_shared<MockBackend>(seed); };
    }
    if (c.backend == "replay") {
        auto shared = std::make_shared<ReplayBackend>(
            ReplayBackend::load_entries(c.transcript), c.transcript);
        if (replay_out) *replay_out = shared;
        return [shared](std::uint64_t) { return shared; };
    }
    RemoteBackendConfig rc;
    rc.base_url = c.endpoint;
    rc.model = c.model;
    rc.api_key = api_key_from_env(c.api_key_env.c_str());
    rc.max_in_flight = c.max_in_flight;
    rc.requests_per_minute = c.requests_per_minute;
    auto shared = std::make_shared<RemoteBackend>(rc);
    return [shared](std::uint64_t) { return shared; };
}

std::unique_ptr<SceneProvider> make_scene_provider(const AppConfig& c) {
    if (!c.scenes.empty()) {
        return std::make_unique<CannedSceneStore>(CannedSceneStore::load(c.scenes));
    }
    if (!c.scenes_endpoint.empty()) {
        return std::make_unique<RemoteSceneProvider>(c.scenes_endpoint);
    }
    throw ValidationError("no scene source configured (need 'scenes' or 'scenes_endpoint')");
}

RunConfig make_run_config(const AppConfig& c) {
    RunConfig rc;
    rc.environment_path = c.environment;
    rc.agent_name = c.agent_name;
    rc.status = c.status;
    rc.step_cap = c.step_cap;
    rc.seed = c.seed;
    rc.clock_start = parse_civil_time(c.clock_start);
    rc.clock_increment = c.clock_increment;
    rc.prompt.k_retrieve = c.k_retrieve;
    rc.prompt.token_budget = c.token_budget;
    rc.interview_questions = c.interview_questions;
    return rc;
}

void write_text_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    out << content;
}

int cmd_validate(const std::string& env_path) {
    const EnvironmentGraph env = EnvironmentGraph::load(env_path);
    std::cout << env.node_ids().size() << " nodes, " << env.directed_edge_count()
              << " directed edges\n";
    std::cout << "start " << env.start() << ", target " << env.target_node() << " ('"
              << env.target_label() << "')\n";
    if (const auto d = env.shortest_path_length(env.start(), env.target_node())) {
        std::cout << "shortest start-to-target path: " << *d << " moves\n";
    }
    std::cout << "valid\n";
    return kExitOk;
}

int cmd_simulate(const AppConfig& cfg) {
    validate_app_config(cfg);
    if (cfg.environment.empty()) throw ValidationError("simulate requires an environment");
    const EnvironmentGraph env = EnvironmentGraph::load(cfg.environment);
    const auto provider = make_scene_provider(cfg);
    const BackendFactory factory = make_backend_factory(cfg);
    const RunConfig base = make_run_config(cfg);

    std::vector<RunRecord> records;
    if (!cfg.personas.empty()) {
        const auto personas = load_personas(cfg.personas);
        records = run_batch(env, personas, cfg.runs, base, factory, *provider,
                            cfg.parallelism);
    } else {
        for (int ri = 0; ri < cfg.runs; ++ri) {
            RunConfig config = base;
            config.seed = derive_run_seed(base.seed, 0, static_cast<std::size_t>(ri));
            auto backend = factory(config.seed);
            records.push_back(run_wayfinding(env, config, *backend, *provider));
        }
    }

    const std::string out_path = cfg.out.empty() ? "runs.jsonl" : cfg.out;
    if (fs::path(out_path).has_parent_path()) {
        fs::create_directories(fs::path(out_path).parent_path());
    }
    persist_runs(records, out_path);

    int errors = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const RunRecord& r = records[i];
        std::cout << "run " << i << ": agent=" << r.agent << " seed=" << r.seed
                  << " outcome=" << r.outcome << " path=" << path_key(r.path);
        if (!r.error.empty()) std::cout << " error=" << r.error;
        std::cout << "\n";
        if (r.outcome == "error") ++errors;
    }
    std::cout << records.size() << " runs written to " << out_path << "\n";
    if (errors > 0) {
        std::cerr << errors << " run(s) errored\n";
        return kExitPartial;
    }
    return kExitOk;
}

int cmd_rate(const AppConfig& cfg) {
    validate_app_config(cfg);
    if (cfg.environment.empty()) throw ValidationError("rate requires an environment");
    if (cfg.personas.empty()) throw ValidationError("rate requires a personas file");
    const EnvironmentGraph env = EnvironmentGraph::load(cfg.environment);
    const auto personas = load_personas(cfg.personas);
    const auto provider = make_scene_provider(cfg);
    const BackendFactory factory = make_backend_factory(cfg);

    RatingConfig rc;
    rc.seed = cfg.seed;
    rc.clock_start = parse_civil_time(cfg.clock_start);
    rc.clock_increment = cfg.clock_increment;
    rc.prompt.k_retrieve = cfg.k_retrieve;
    rc.prompt.token_budget = cfg.token_budget;

    const RatingMatrix matrix =
        rate_all(env, personas, *provider, factory, rc, cfg.parallelism);

    const fs::path out_dir = cfg.out.empty() ? fs::path(".") : fs::path(cfg.out);
    write_text_file(out_dir / "ratings.json", matrix_to_json(matrix).dump(2) + "\n");
    write_text_file(out_dir / "ratings.csv", matrix_to_csv(matrix));
    write_text_file(out_dir / "rating_stats.json", matrix_stats_json(matrix).dump(2) + "\n");
    write_text_file(out_dir / "rating_records.json",
                    rating_records_to_json(matrix).dump(2) + "\n");

    int failures = 0;
    for (const auto& r : matrix.records) {
        if (r.failed) {
            ++failures;
            std::cerr << "failed cell: " << r.agent << " / " << r.scene << " / "
                      << to_string(r.attribute) << ": " << r.error << "\n";
        }
    }
    std::cout << matrix.records.size() << " rating records (" << failures
              << " failed) written to " << out_dir.string() << "\n";
    return failures > 0 ? kExitPartial : kExitOk;
}

int cmd_interview(const AppConfig& cfg, const std::string& log_path,
                  const std::string& agent, int run_index,
                  const std::vector<std::string>& questions) {
    require_exists(log_path, "run log");
    std::vector<RunRecord> records = load_runs(log_path);
    int seen = 0;
    RunRecord* record = nullptr;
    for (auto& r : records) {
        if (r.agent == agent) {
            if (seen == run_index) {
                record = &r;
                break;
            }
            ++seen;
        }
    }
    if (!record) {
        throw ValidationError("no run " + std::to_string(run_index) + " for agent '" +
                              agent + "' in '" + log_path + "'");
    }

    AgentState state(record->persona, record->agent, record->target, record->status,
                     record->path.empty() ? NodeId("?") : record->path.back());
    for (const auto& m : record->memory) {
        state.memory.record(m.text, m.importance, m.timestamp, m.kind);
    }
    const std::int64_t now =
        (record->memory.empty() ? record->clock_start
                                : record->memory.back().timestamp) +
        record->clock_increment;

    const BackendFactory factory = make_backend_factory(cfg);
    auto backend = factory(record->seed);
    PromptSettings settings;
    settings.k_retrieve = record->k_retrieve > 0 ? record->k_retrieve : settings.k_retrieve;
    settings.token_budget =
        record->token_budget > 0 ? record->token_budget : settings.token_budget;

    auto ask_one = [&](const std::string& q) {
        const std::string answer = interview(state, q, *backend, now, settings);
        std::cout << answer << "\n";
        record->interview.emplace_back(q, answer);
    };

    if (!questions.empty()) {
        for (const auto& q : questions) ask_one(q);
    } else {
        std::cerr << "interviewing " << agent << "; empty line ends the session\n";
        std::string line;
        while (std::cerr << "? " && std::getline(std::cin, line) && !line.empty()) {
            ask_one(line);
        }
    }
    persist_runs(records, log_path);
    return kExitOk;
}

int cmd_analyze(const std::vector<std::string>& log_paths, const std::string& out_dot) {
    std::vector<RunRecord> records;
    for (const auto& path : log_paths) {
        require_exists(path, "run log");
        auto batch = load_runs(path);
        records.insert(records.end(), std::make_move_iterator(batch.begin()),
                       std::make_move_iterator(batch.end()));
    }
    const PathAggregation agg = aggregate_edge_frequencies(records);

    std::vector<std::pair<std::string, int>> paths(agg.path_counts.begin(),
                                                   agg.path_counts.end());
    std::sort(paths.begin(), paths.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    std::cout << "path\tcount\n";
    for (const auto& [key, count] : paths) std::cout << key << "\t" << count << "\n";
    std::cout << "\nedge\tcount\n";
    for (const auto& [edge, count] : agg.edge_counts) {
        std::cout << edge.first << "-" << edge.second << "\t" << count << "\n";
    }
    if (!out_dot.empty()) {
        write_text_file(out_dot, aggregation_to_dot(agg));
        std::cout << "\nDOT graph written to " << out_dot << "\n";
    }
    return kExitOk;
}

int cmd_fetch_scenes(const std::string& env_path, const std::string& out_dir,
                     const std::string& key_env, int width, int height) {
    const EnvironmentGraph env = EnvironmentGraph::load(env_path);
    const std::string key = api_key_from_env(key_env.c_str());
    if (key.empty()) {
        throw ValidationError("imagery API key env var '" + key_env + "' is not set");
    }
    bool any_geo = false;
    for (const auto& id : env.node_ids()) {
        if (env.node(id).geo) any_geo = true;
    }
    if (!any_geo) {
        std::cerr << "environment has no geo anchors; nothing to fetch\n";
        return kExitOk;
    }
    fs::create_directories(out_dir);

    int downloaded = 0, skipped = 0, failed = 0;
    const std::pair<const char*, Direction> headings[] = {
        {"front", Direction::Forward}, {"left", Direction::Left},
        {"right", Direction::Right}};
    for (const auto& id : env.node_ids()) {
        const Node& node = env.node(id);
        if (!node.geo) continue;
        for (const auto& [label, dir] : headings) {
            const fs::path file = fs::path(out_dir) / (id + "_" + label + ".jpg");
            if (fs::exists(file)) {
                ++skipped;
                continue;
            }
            const std::string url = street_view_url(*node.geo, dir, width, height, key);
            const auto scheme_end = url.find("://");
            const auto path_start = url.find('/', scheme_end + 3);
            httplib::Client client(url.substr(0, path_start));
            client.set_read_timeout(60);
            auto res = client.Get(url.substr(path_start));
            if (!res || res->status != 200) {
                ++failed;
                std::cerr << "node " << id << " " << label << ": "
                          << (res ? "HTTP " + std::to_string(res->status)
                                  : "transport error: " + httplib::to_string(res.error()))
                          << "\n";
                continue;
            }
            std::ofstream out(file, std::ios::binary);
            out << res->body;
            ++downloaded;
        }
    }
    std::cout << "downloaded " << downloaded << ", skipped " << skipped << ", failed "
              << failed << "\n";
    return failed > 0 ? kExitPartial : kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"street-scene wayfinding agents"};
    app.require_subcommand(1);

    std::string config_path, env_override, out_override, backend_override;
    std::optional<std::uint64_t> seed_override;
    std::optional<int> runs_override, step_cap_override, parallelism_override;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "config file (JSON)");
        sub->add_option("--env", env_override, "environment file");
        sub->add_option("--backend", backend_override, "backend kind: remote|mock|replay");
        sub->add_option("--seed", seed_override, "base seed");
        sub->add_option("--runs", runs_override, "runs per persona");
        sub->add_option("--step-cap", step_cap_override, "max moves per run");
        sub->add_option("--out", out_override, "output path");
        sub->add_option("--parallelism", parallelism_override, "worker threads");
    };

    CLI::App* validate = app.add_subcommand("validate", "load and validate an environment");
    std::string validate_env;
    validate->add_option("environment", validate_env, "environment file");
    add_common(validate);

    CLI::App* simulate = app.add_subcommand("simulate", "run wayfinding simulations");
    add_common(simulate);

    CLI::App* rate = app.add_subcommand("rate", "rate every scene with every persona");
    add_common(rate);

    CLI::App* interview_cmd =
        app.add_subcommand("interview", "interview an agent from a run log");
    std::string itv_log, itv_agent;
    int itv_run = 0;
    std::vector<std::string> itv_questions;
    interview_cmd->add_option("--log", itv_log, "run log (JSONL)")->required();
    interview_cmd->add_option("--agent", itv_agent, "agent name")->required();
    interview_cmd->add_option("--run", itv_run, "run index for that agent");
    interview_cmd->add_option("--question", itv_questions,
                              "question (repeatable; omit for interactive mode)");
    add_common(interview_cmd);

    CLI::App* analyze = app.add_subcommand("analyze", "aggregate run logs");
    std::vector<std::string> analyze_logs;
    analyze->add_option("logs", analyze_logs, "run logs (JSONL)")->required();
    add_common(analyze);

    CLI::App* fetch = app.add_subcommand("fetch-scenes", "download street-view imagery");
    std::string fetch_key_env = "STREETVIEW_API_KEY";
    int fetch_w = 400, fetch_h = 400;
    fetch->add_option("--key-env", fetch_key_env, "env var holding the imagery API key");
    fetch->add_option("--width", fetch_w, "image width");
    fetch->add_option("--height", fetch_h, "image height");
    add_common(fetch);

    CLI11_PARSE(app, argc, argv);

    try {
        AppConfig cfg;
        if (!config_path.empty()) cfg = load_app_config(config_path);
        if (!env_override.empty()) cfg.environment = env_override;
        if (!backend_override.empty()) cfg.backend = backend_override;
        if (!out_override.empty()) cfg.out = out_override;
        if (seed_override) cfg.seed = *seed_override;
        if (runs_override) cfg.runs = *runs_override;
        if (step_cap_override) cfg.step_cap = *step_cap_override;
        if (parallelism_override) cfg.parallelism = *parallelism_override;

        if (validate->parsed()) {
            const std::string path = !validate_env.empty() ? validate_env : cfg.environment;
            if (path.empty()) throw ValidationError("validate requires an environment path");
            return cmd_validate(path);
        }
        if (simulate->parsed()) return cmd_simulate(cfg);
        if (rate->parsed()) return cmd_rate(cfg);
        if (interview_cmd->parsed()) {
            return cmd_interview(cfg, itv_log, itv_agent, itv_run, itv_questions);
        }
        if (analyze->parsed()) return cmd_analyze(analyze_logs, out_override);
        if (fetch->parsed()) {
            if (cfg.environment.empty()) {
                throw ValidationError("fetch-scenes requires an environment path");
            }
            const std::string out_dir = cfg.out.empty() ? "imagery" : cfg.out;
            return cmd_fetch_scenes(cfg.environment, out_dir, fetch_key_env, fetch_w,
                                    fetch_h);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
