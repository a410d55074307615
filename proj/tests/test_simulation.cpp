#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "streetagents/mock_backend.hpp"
#include "streetagents/replay_backend.hpp"
#include "streetagents/simulation.hpp"

using namespace streetagents;

namespace {

const std::string kDataDir = STREETAGENTS_DATA_DIR;
const std::string kFixtureDir = STREETAGENTS_FIXTURE_DIR;

RunConfig trial_config() {
    RunConfig config;
    config.environment_path = kDataDir + "/trial_env.json";
    config.agent_name = "Max";
    config.status = "Want to explore the city and find a tree-house around to write a "
                    "story about it.";
    config.step_cap = 2;
    config.seed = 7;
    return config;
}

std::string batch_digest(const std::vector<RunRecord>& records) {
    std::string out;
    for (const auto& r : records) out += run_record_to_json(r).dump() + "\n";
    return out;
}

std::string temp_path(const std::string& stem) {
    return (std::filesystem::temp_directory_path() / stem).string();
}

} // namespace

TEST_CASE("replayed transcript reproduces the recorded two-step walk", "[simulation]") {
    const auto env = EnvironmentGraph::load(kDataDir + "/trial_env.json");
    const auto scenes = CannedSceneStore::load(kFixtureDir + "/trial_scenes.json");
    auto backend = ReplayBackend::load(kFixtureDir + "/trial_replay.jsonl");

    const auto record = run_wayfinding(env, trial_config(), backend, scenes);

    CHECK(record.agent == "Max");
    CHECK_FALSE(record.persona.has_value());
    CHECK(record.target == "tree-house");
    CHECK(record.status.find("write a story about it") != std::string::npos);
    CHECK(record.backend.find("replay(") == 0);
    CHECK(record.env_hash == env.content_hash());
    CHECK(record.outcome == "step_capped");
    CHECK(record.error.empty());
    CHECK(record.path == std::vector<NodeId>{"A", "B", "C"});

    REQUIRE(record.steps.size() == 2);
    const auto& first = record.steps[0];
    CHECK(first.index == 1);
    CHECK(first.from == "A");
    CHECK(first.to == "B");
    CHECK(first.direction == Direction::Forward);
    CHECK_FALSE(first.fallback);
    CHECK(first.reprompts == 0);
    CHECK(first.justification.find("based on the observation") == 0);
    CHECK(first.justification.find("shows a lively environment.") != std::string::npos);
    REQUIRE(first.rejections.count(Direction::Right) == 1);
    CHECK(first.rejections.at(Direction::Right).find("seems to not have tree-house") !=
          std::string::npos);
    CHECK(first.note.find("After leaving location A, Max proceeded forward to B") == 0);
    CHECK(first.importance == 6);
    CHECK_FALSE(first.found);
    CHECK(first.observation.find("After coming from location A, Max moved forward to B") ==
          0);

    const auto& second = record.steps[1];
    CHECK(second.index == 2);
    CHECK(second.from == "B");
    CHECK(second.to == "C");
    CHECK(second.direction == Direction::Forward);
    REQUIRE(second.rejections.count(Direction::Backward) == 1);
    CHECK(second.note.find("Following Max's departure from location B") == 0);
    CHECK(second.importance == 5);
    CHECK_FALSE(second.found);

    REQUIRE(record.memory.size() == 2);
    CHECK(record.memory[0].text == record.steps[0].note);
    CHECK(record.memory[1].text == record.steps[1].note);
    CHECK(record.memory[0].importance == 6);
    CHECK(record.memory[1].importance == 5);
    CHECK(record.memory[0].timestamp == record.clock_start + 45);
    CHECK(record.memory[1].timestamp == record.clock_start + 90);

    CHECK(record.exchanges.size() == 9);
    CHECK(record.prompt_tokens_total > 0);
    CHECK(record.reply_tokens_total > 0);
    CHECK(record.interview.empty());
    CHECK(backend.fully_consumed());
    CHECK(backend.warnings().empty());
}

TEST_CASE("a step cap of one stops after a single move", "[simulation]") {
    const auto env = EnvironmentGraph::load(kDataDir + "/trial_env.json");
    const auto scenes = CannedSceneStore::load(kFixtureDir + "/trial_scenes.json");
    auto backend = ReplayBackend::load(kFixtureDir + "/trial_replay.jsonl");

    auto config = trial_config();
    config.step_cap = 1;
    const auto record = run_wayfinding(env, config, backend, scenes);

    CHECK(record.outcome == "step_capped");
    CHECK(record.path == std::vector<NodeId>{"A", "B"});
    CHECK(record.steps.size() == 1);
    CHECK(record.memory.size() == 1);
    CHECK(backend.consumed() == 5); // two previews, decision, note, importance
}

TEST_CASE("the mock backend walks the bundled city to the restaurant", "[simulation]") {
    const auto env = EnvironmentGraph::load(kDataDir + "/synthetic_env.json");
    const auto scenes = CannedSceneStore::load(kDataDir + "/synthetic_scenes.json");

    RunConfig config;
    config.environment_path = kDataDir + "/synthetic_env.json";
    config.seed = 1;

    SECTION("without a persona") {
        MockBackend backend(1);
        const auto record = run_wayfinding(env, config, backend, scenes);
        CHECK(record.outcome == "found");
        CHECK(path_key(record.path) == "ABCGKLP");
        CHECK(record.steps.size() == 6);
        CHECK(record.steps.back().found);
        CHECK(record.memory.size() == 6);
        CHECK(record.status == "Want to explore the city and find a restaurant around.");
        for (const auto& step : record.steps) {
            CHECK_FALSE(step.fallback);
            CHECK(step.reprompts == 0);
        }
    }
    SECTION("with a persona, same route") {
        config.persona = load_personas(kDataDir + "/personas.json").front();
        MockBackend backend(9);
        const auto record = run_wayfinding(env, config, backend, scenes);
        CHECK(record.agent == "Emily");
        CHECK(record.outcome == "found");
        CHECK(path_key(record.path) == "ABCGKLP");
    }
}

TEST_CASE("run records survive a JSON round trip", "[simulation]") {
    const auto env = EnvironmentGraph::load(kDataDir + "/synthetic_env.json");
    const auto scenes = CannedSceneStore::load(kDataDir + "/synthetic_scenes.json");
    RunConfig config;
    config.environment_path = kDataDir + "/synthetic_env.json";
    config.persona = load_personas(kDataDir + "/personas.json").front();
    config.interview_questions = {"What did you see?"};
    MockBackend backend(3);
    const auto record = run_wayfinding(env, config, backend, scenes);
    REQUIRE(record.interview.size() == 1);

    const auto j = run_record_to_json(record);
    const auto round = run_record_from_json(j);
    CHECK(run_record_to_json(round).dump() == j.dump());

    auto bad = j;
    bad["v"] = 2;
    CHECK_THROWS_AS(run_record_from_json(bad), ParseError);
}

TEST_CASE("batches are ordered, seeded, and schedule-independent", "[simulation]") {
    const auto env = EnvironmentGraph::load(kDataDir + "/synthetic_env.json");
    const auto scenes = CannedSceneStore::load(kDataDir + "/synthetic_scenes.json");
    const auto personas = load_personas(kDataDir + "/personas.json");
    REQUIRE(personas.size() == 10);

    RunConfig base;
    base.environment_path = kDataDir + "/synthetic_env.json";
    base.seed = 42;
    const BackendFactory factory = [](std::uint64_t seed) {
        return std::make_shared<MockBackend>(seed);
    };

    const auto serial = run_batch(env, personas, 2, base, factory, scenes, 1);
    const auto threaded = run_batch(env, personas, 2, base, factory, scenes, 4);
    REQUIRE(serial.size() == 20);
    CHECK(batch_digest(serial) == batch_digest(threaded));

    for (std::size_t p = 0; p < personas.size(); ++p) {
        for (std::size_t r = 0; r < 2; ++r) {
            const auto& record = serial[p * 2 + r];
            CHECK(record.agent == personas[p].name);
            CHECK(record.seed == derive_run_seed(42, p, r));
            CHECK(record.outcome == "found");
            CHECK(record.memory.size() == record.steps.size()); // fresh stream per run
        }
    }

    CHECK_THROWS_AS(run_batch(env, {}, 1, base, factory, scenes), ValidationError);
    CHECK_THROWS_AS(run_batch(env, personas, 0, base, factory, scenes), ValidationError);
}

TEST_CASE("scene failures yield error records instead of crashes", "[simulation]") {
    const auto env = EnvironmentGraph::load(kDataDir + "/synthetic_env.json");
    const CannedSceneStore empty_store;

    RunConfig config;
    config.environment_path = kDataDir + "/synthetic_env.json";
    MockBackend backend;
    const auto record = run_wayfinding(env, config, backend, empty_store);
    CHECK(record.outcome == "error");
    CHECK(record.error.find("scene store has no entry") != std::string::npos);
    CHECK(record.path == std::vector<NodeId>{"A"});
    CHECK(record.steps.empty());

    const auto personas = load_personas(kDataDir + "/personas.json");
    const BackendFactory factory = [](std::uint64_t seed) {
        return std::make_shared<MockBackend>(seed);
    };
    const auto batch = run_batch(env, personas, 1, config, factory, empty_store, 2);
    REQUIRE(batch.size() == 10);
    for (const auto& r : batch) {
        CHECK(r.outcome == "error");
        CHECK(r.path == std::vector<NodeId>{"A"});
    }
}

TEST_CASE("run logs persist and reload byte-identically", "[simulation]") {
    const auto env = EnvironmentGraph::load(kDataDir + "/synthetic_env.json");
    const auto scenes = CannedSceneStore::load(kDataDir + "/synthetic_scenes.json");
    const auto personas = load_personas(kDataDir + "/personas.json");
    RunConfig base;
    base.environment_path = kDataDir + "/synthetic_env.json";
    const BackendFactory factory = [](std::uint64_t seed) {
        return std::make_shared<MockBackend>(seed);
    };
    const auto records =
        run_batch(env, {personas[0], personas[1]}, 2, base, factory, scenes);

    const auto path = temp_path("streetagents_runs_test.jsonl");
    persist_runs(records, path);
    const auto loaded = load_runs(path);
    REQUIRE(loaded.size() == records.size());
    CHECK(batch_digest(loaded) == batch_digest(records));
    std::remove(path.c_str());

    SECTION("empty log file loads as an empty list") {
        const auto empty = temp_path("streetagents_empty_test.jsonl");
        std::ofstream(empty).close();
        CHECK(load_runs(empty).empty());
        std::remove(empty.c_str());
    }
    SECTION("truncated lines are reported with their line number") {
        const auto broken = temp_path("streetagents_broken_test.jsonl");
        std::ofstream out(broken);
        out << "{\"v\": 1\n";
        out.close();
        CHECK_THROWS_WITH(load_runs(broken),
                          Catch::Matchers::ContainsSubstring("line 1"));
        std::remove(broken.c_str());
    }
    SECTION("missing log file") {
        CHECK_THROWS_AS(load_runs(temp_path("streetagents_nope.jsonl")), ParseError);
    }
}

TEST_CASE("edge frequencies aggregate undirected usage", "[simulation]") {
    RunRecord a;
    a.env_hash = 1;
    a.path = {"A", "B", "C"};
    RunRecord b;
    b.env_hash = 1;
    b.path = {"C", "B", "A"};
    RunRecord c;
    c.env_hash = 1;
    c.path = {"A", "B"};

    const auto agg = aggregate_edge_frequencies({a, b, c});
    CHECK(agg.edge_counts.at({"A", "B"}) == 3);
    CHECK(agg.edge_counts.at({"B", "C"}) == 2);
    CHECK(agg.edge_counts.size() == 2);
    CHECK(agg.path_counts.at("ABC") == 1);
    CHECK(agg.path_counts.at("CBA") == 1);
    CHECK(agg.path_counts.at("AB") == 1);

    int total_edges = 0;
    for (const auto& [edge, count] : agg.edge_counts) total_edges += count;
    CHECK(total_edges == 2 + 2 + 1); // sum of (|path| - 1)

    SECTION("identical paths pile onto one key") {
        const auto repeat = aggregate_edge_frequencies({a, a, a});
        CHECK(repeat.path_counts.at("ABC") == 3);
        CHECK(repeat.path_counts.size() == 1);
        CHECK(repeat.edge_counts.at({"A", "B"}) == 3);
    }
    SECTION("empty input aggregates to nothing") {
        const auto none = aggregate_edge_frequencies({});
        CHECK(none.edge_counts.empty());
        CHECK(none.path_counts.empty());
    }
    SECTION("environment mixtures are rejected") {
        RunRecord other = a;
        other.env_hash = 2;
        CHECK_THROWS_AS(aggregate_edge_frequencies({a, other}), ValidationError);
    }
    SECTION("DOT output scales penwidth with counts") {
        const auto dot = aggregation_to_dot(agg);
        CHECK(dot.find("graph paths {") == 0);
        CHECK(dot.find("\"A\" -- \"B\" [penwidth=3, label=3];") != std::string::npos);
    }
}

TEST_CASE("path keys join multi-character node ids with dashes", "[simulation]") {
    CHECK(path_key({"A", "B", "C"}) == "ABC");
    CHECK(path_key({"A1", "B"}) == "A1-B");
    CHECK(path_key({}) == "");
}

TEST_CASE("run seeds derive deterministically and distinctly", "[simulation]") {
    CHECK(derive_run_seed(1, 0, 0) == derive_run_seed(1, 0, 0));
    std::set<std::uint64_t> seeds;
    for (std::size_t p = 0; p < 10; ++p) {
        for (std::size_t r = 0; r < 10; ++r) {
            seeds.insert(derive_run_seed(42, p, r));
        }
    }
    CHECK(seeds.size() == 100);
    CHECK(derive_run_seed(1, 0, 0) != derive_run_seed(2, 0, 0));
    CHECK(derive_run_seed(1, 0, 1) != derive_run_seed(1, 1, 0));
}
