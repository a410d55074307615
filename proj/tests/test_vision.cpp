#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "streetagents/mock_backend.hpp"
#include "streetagents/replay_backend.hpp"
#include "streetagents/vision.hpp"

using namespace streetagents;

namespace {

const std::string kDataDir = STREETAGENTS_DATA_DIR;
const std::string kFixtureDir = STREETAGENTS_FIXTURE_DIR;

SceneFeatures basic_features() {
    SceneFeatures f;
    f.segmentation = {{"building", 0.5}, {"road", 0.2}, {"sky", 0.05}};
    f.categories = {{"street", 0.6}, {"plaza", 0.25}, {"courtyard", 0.1}};
    f.attributes = {"man-made", "sunny"};
    f.object_counts = {{"person", 12}, {"car", 2}};
    return f;
}

bool has_fact(const std::vector<std::string>& facts, const std::string& fact) {
    return std::find(facts.begin(), facts.end(), fact) != facts.end();
}

} // namespace

TEST_CASE("bucketize boundaries", "[vision]") {
    CHECK(bucketize(0.0) == CoverageLevel::Low);
    CHECK(bucketize(0.0999) == CoverageLevel::Low);
    CHECK(bucketize(0.10) == CoverageLevel::Average);
    CHECK(bucketize(0.3499) == CoverageLevel::Average);
    CHECK(bucketize(0.35) == CoverageLevel::High);
    CHECK(bucketize(0.50) == CoverageLevel::High);
    CHECK(bucketize(1.0) == CoverageLevel::High);
    CHECK_THROWS_AS(bucketize(-0.01), ValidationError);
    CHECK_THROWS_AS(bucketize(1.01), ValidationError);
}

TEST_CASE("bucketize is monotone", "[vision]") {
    CoverageLevel prev = CoverageLevel::Low;
    for (int i = 0; i <= 1000; ++i) {
        const CoverageLevel level = bucketize(i / 1000.0);
        CHECK(static_cast<int>(level) >= static_cast<int>(prev));
        prev = level;
    }
}

TEST_CASE("features_to_facts maps every field deterministically", "[vision]") {
    const auto facts = features_to_facts(basic_features());
    CHECK(has_fact(facts, "building coverage: high"));
    CHECK(has_fact(facts, "road coverage: average"));
    CHECK(has_fact(facts, "sky coverage: low"));
    CHECK(has_fact(facts, "scene category: street (confidence high)"));
    CHECK(has_fact(facts, "scene category: plaza (confidence medium)"));
    CHECK(has_fact(facts, "scene category: courtyard (confidence low)"));
    CHECK(has_fact(facts, "attributes: man-made, sunny"));
    CHECK(has_fact(facts, "people: 12"));
    CHECK(has_fact(facts, "cars: 2"));
    // Output size law: segmentation + categories + 1 attribute line + objects.
    CHECK(facts.size() == 3 + 3 + 1 + 2);
    // People outnumber cars, so the people fact sorts first.
    const auto people = std::find(facts.begin(), facts.end(), "people: 12");
    const auto cars = std::find(facts.begin(), facts.end(), "cars: 2");
    CHECK(people < cars);
}

TEST_CASE("features_to_facts on degenerate input", "[vision]") {
    SceneFeatures f;
    for (const auto cls : kSegmentationClasses) f.segmentation[std::string(cls)] = 0.0;
    const auto facts = features_to_facts(f);
    REQUIRE(facts.size() == kSegmentationClasses.size() + 1 + 1);
    for (std::size_t i = 0; i < kSegmentationClasses.size(); ++i) {
        CHECK(facts[i] == std::string(kSegmentationClasses[i]) + " coverage: low");
    }
    CHECK(facts[facts.size() - 2] == "attributes: none");
    CHECK(facts.back() == "no people or vehicles");
}

TEST_CASE("features_to_facts orders canonical classes before extras", "[vision]") {
    SceneFeatures f;
    f.segmentation = {{"water", 0.2}, {"building", 0.3}, {"earth", 0.1}};
    const auto facts = features_to_facts(f);
    REQUIRE(facts.size() >= 3);
    CHECK(facts[0] == "building coverage: average");
    CHECK(facts[1] == "earth coverage: average"); // extras alphabetically
    CHECK(facts[2] == "water coverage: average");
}

TEST_CASE("object facts pluralize and sort by count then label", "[vision]") {
    SceneFeatures f;
    f.object_counts = {{"person", 1}, {"bus", 2}, {"car", 2}, {"bench", 0}};
    const auto facts = features_to_facts(f);
    std::vector<std::string> objects(facts.end() - 3, facts.end());
    CHECK(objects ==
          std::vector<std::string>{"buses: 2", "cars: 2", "people: 1"});
}

TEST_CASE("scene feature validation", "[vision]") {
    SECTION("fraction out of range") {
        SceneFeatures f;
        f.segmentation["building"] = 1.2;
        CHECK_THROWS_AS(f.validate(), ValidationError);
    }
    SECTION("fractions sum above 1 + eps") {
        SceneFeatures f;
        f.segmentation = {{"building", 0.6}, {"road", 0.6}};
        CHECK_THROWS_AS(f.validate(), ValidationError);
    }
    SECTION("labeling slack tolerated") {
        SceneFeatures f;
        f.segmentation = {{"building", 0.51}, {"road", 0.50}};
        CHECK_NOTHROW(f.validate());
    }
    SECTION("too many categories") {
        SceneFeatures f;
        for (int i = 0; i < 6; ++i) f.categories.push_back({"c" + std::to_string(i), 0.1});
        CHECK_THROWS_AS(f.validate(), ValidationError);
    }
    SECTION("categories must be sorted descending") {
        SceneFeatures f;
        f.categories = {{"a", 0.2}, {"b", 0.5}};
        CHECK_THROWS_AS(f.validate(), ValidationError);
    }
    SECTION("duplicate attributes") {
        SceneFeatures f;
        f.attributes = {"sunny", "sunny"};
        CHECK_THROWS_AS(f.validate(), ValidationError);
    }
    SECTION("too many attributes") {
        SceneFeatures f;
        for (int i = 0; i < 11; ++i) f.attributes.push_back("a" + std::to_string(i));
        CHECK_THROWS_AS(f.validate(), ValidationError);
    }
    SECTION("negative object count") {
        SceneFeatures f;
        f.object_counts["car"] = -1;
        CHECK_THROWS_AS(f.validate(), ValidationError);
    }
}

TEST_CASE("contains_target is a case-insensitive substring on categories", "[vision]") {
    SceneFeatures f;
    f.categories = {{"restaurant", 0.4}, {"street", 0.3}};
    CHECK(contains_target(f, "restaurant"));
    CHECK(contains_target(f, "Restaurant"));

    SceneFeatures fancy;
    fancy.categories = {{"Fancy Restaurant Patio", 0.4}};
    CHECK(contains_target(fancy, "restaurant"));

    SceneFeatures trial;
    trial.categories = {{"bank vault", 0.3},
                        {"outdoor doorway", 0.24},
                        {"barn door", 0.18},
                        {"elevator door", 0.12},
                        {"shopfront", 0.08}};
    CHECK_FALSE(contains_target(trial, "tree-house"));

    SceneFeatures empty;
    CHECK_FALSE(contains_target(empty, "restaurant"));

    // Invariant under confidence rescaling that keeps the same top-5 set.
    SceneFeatures rescaled = f;
    for (auto& c : rescaled.categories) c.confidence /= 2.0;
    CHECK(contains_target(rescaled, "restaurant") == contains_target(f, "restaurant"));
}

TEST_CASE("scene features JSON round trip", "[vision]") {
    const auto f = basic_features();
    const auto j = scene_features_to_json(f);
    const auto back = scene_features_from_json(j);
    CHECK(back.segmentation == f.segmentation);
    CHECK(back.attributes == f.attributes);
    CHECK(back.object_counts == f.object_counts);
    REQUIRE(back.categories.size() == f.categories.size());
    for (std::size_t i = 0; i < f.categories.size(); ++i) {
        CHECK(back.categories[i].label == f.categories[i].label);
        CHECK(back.categories[i].confidence == f.categories[i].confidence);
    }
    CHECK_THROWS_AS(scene_features_from_json(nlohmann::json{{"segmentation", 3}}),
                    ParseError);
}

TEST_CASE("canned scene store serves bundled features", "[vision]") {
    const auto store = CannedSceneStore::load(kDataDir + "/synthetic_scenes.json");
    CHECK(store.size() == 48); // 16 nodes x 3 headings
    CHECK(store.has("A/front"));
    CHECK(store.has("P/right"));
    CHECK_FALSE(store.has("Z/front"));
    CHECK_THROWS_AS(store.fetch("Z/front"), ProviderError);

    const auto k = store.fetch("K/front");
    const auto facts = features_to_facts(k);
    CHECK(has_fact(facts, "people: 6"));
    CHECK(has_fact(facts, "bicycles: 5"));
    CHECK(has_fact(facts, "cars: 2"));

    CHECK_THROWS_AS(CannedSceneStore::load(kDataDir + "/missing.json"), ParseError);
    CHECK_THROWS_AS(CannedSceneStore::from_json(nlohmann::json::array()), ParseError);
}

TEST_CASE("summarize produces a structurally valid paragraph via the mock", "[vision]") {
    MockBackend backend;
    SECTION("objects present") {
        const auto summary =
            summarize(basic_features(), "A", Heading::Front, backend, nullptr);
        CHECK_FALSE(summary.text.empty());
        CHECK(summary.source_node == "A");
        CHECK(summary.heading == Heading::Front);
        CHECK(summary.text.find("building coverage high") != std::string::npos);
        CHECK(summary.text.find("12 people") != std::string::npos);
    }
    SECTION("no objects mentions the absence of people") {
        SceneFeatures f;
        f.segmentation = {{"building", 0.4}};
        const auto summary = summarize(f, "B", Heading::Left, backend, nullptr);
        CHECK(summary.text.find("no people") != std::string::npos);
    }
}

TEST_CASE("summarize replays a recorded paragraph verbatim", "[vision]") {
    const auto store = CannedSceneStore::load(kFixtureDir + "/trial_scenes.json");
    std::ifstream in(kFixtureDir + "/trial_replay.jsonl");
    REQUIRE(in);
    std::string line;
    std::getline(in, line);
    const std::string expected =
        nlohmann::json::parse(line).at("response").get<std::string>();

    ReplayBackend backend({{"", expected}});
    const auto summary =
        summarize(store.fetch("B/front"), "B", Heading::Front, backend, nullptr);
    CHECK(summary.text == expected);
    CHECK(backend.fully_consumed());
}

TEST_CASE("summarize re-prompts once then rejects empty replies", "[vision]") {
    ReplayBackend backend({{"", ""}, {"", ""}});
    CHECK_THROWS_AS(summarize(basic_features(), "A", Heading::Front, backend, nullptr),
                    ValidationError);
    CHECK(backend.fully_consumed());
}

TEST_CASE("summarize accepts a corrected second reply", "[vision]") {
    ReplayBackend backend(
        {{"", "Nice view."}, {"", "Buildings dominate and two cars pass by."}});
    ExchangeLog log;
    const auto summary = summarize(basic_features(), "A", Heading::Front, backend, &log);
    CHECK(summary.text == "Buildings dominate and two cars pass by.");
    CHECK(log.size() == 2);
    CHECK(log[0].kind == "summary");
}
