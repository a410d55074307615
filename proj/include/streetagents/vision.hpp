#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "streetagents/direction.hpp"
#include "streetagents/environment.hpp"
#include "streetagents/errors.hpp"
#include "streetagents/llm.hpp"
#include "streetagents/prompts.hpp"

namespace streetagents {

enum class CoverageLevel { Low, Average, High };

constexpr std::string_view to_string(CoverageLevel level) {
    switch (level) {
    case CoverageLevel::Low: return "low";
    case CoverageLevel::Average: return "average";
    default: return "high";
    }
}

// Fraction -> qualitative coverage. Boundaries: [0,0.10) low, [0.10,0.35)
// average, [0.35,1] high.
inline CoverageLevel bucketize(double fraction) {
    if (fraction < 0.0 || fraction > 1.0) {
        throw ValidationError("coverage fraction out of [0,1]");
    }
    if (fraction < 0.10) return CoverageLevel::Low;
    if (fraction < 0.35) return CoverageLevel::Average;
    return CoverageLevel::High;
}

struct Category {
    std::string label;
    double confidence = 0.0;
};

// Canonical segmentation classes; facts list these first, extras after.
inline constexpr std::array<std::string_view, 9> kSegmentationClasses = {
    "building", "road", "vegetation", "sky", "person",
    "vehicle",  "pole", "fence",      "wall"};

// Structured output of the visual inference stage for a single view.
struct SceneFeatures {
    std::map<std::string, double> segmentation;
    std::vector<Category> categories;    // sorted by confidence descending
    std::vector<std::string> attributes; // no duplicates
    std::map<std::string, int> object_counts;

    void validate() const {
        double sum = 0.0;
        for (const auto& [cls, frac] : segmentation) {
            if (frac < 0.0 || frac > 1.0) {
                throw ValidationError("segmentation fraction for '" + cls +
                                      "' out of [0,1]");
            }
            sum += frac;
        }
        if (sum > 1.01) {
            throw ValidationError("segmentation fractions sum to " + std::to_string(sum) +
                                  " (> 1.01)");
        }
        if (categories.size() > 5) throw ValidationError("more than 5 scene categories");
        for (std::size_t i = 0; i < categories.size(); ++i) {
            const auto& c = categories[i];
            if (c.confidence < 0.0 || c.confidence > 1.0) {
                throw ValidationError("category '" + c.label + "' confidence out of [0,1]");
            }
            if (i > 0 && categories[i - 1].confidence < c.confidence) {
                throw ValidationError("categories not sorted by confidence descending");
            }
        }
        if (attributes.size() > 10) throw ValidationError("more than 10 attributes");
        for (std::size_t i = 0; i < attributes.size(); ++i) {
            for (std::size_t j = i + 1; j < attributes.size(); ++j) {
                if (attributes[i] == attributes[j]) {
                    throw ValidationError("duplicate attribute '" + attributes[i] + "'");
                }
            }
        }
        for (const auto& [cls, count] : object_counts) {
            if (count < 0) {
                throw ValidationError("negative count for object '" + cls + "'");
            }
        }
    }
};

namespace detail {

inline std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline bool icontains(const std::string& haystack, const std::string& needle) {
    if (needle.empty()) return true;
    return to_lower(haystack).find(to_lower(needle)) != std::string::npos;
}

inline std::string plural_object(const std::string& cls) {
    if (cls == "person") return "people";
    if (!cls.empty() && cls.back() == 's') return cls + "es";
    return cls + "s";
}

inline std::string confidence_tier(double c) {
    if (c >= 0.5) return "high";
    if (c >= 0.2) return "medium";
    return "low";
}

} // namespace detail

// Deterministic fact list: segmentation coverages (canonical classes first,
// extras alphabetically), categories, one attributes line, then non-zero
// object counts (count descending, label ascending) or a "no people or
// vehicles" line when nothing was detected.
inline std::vector<std::string> features_to_facts(const SceneFeatures& f) {
    std::vector<std::string> facts;
    auto emit_class = [&](const std::string& cls, double frac) {
        facts.push_back(cls + " coverage: " + std::string(to_string(bucketize(frac))));
    };
    for (const auto cls : kSegmentationClasses) {
        const std::string key(cls);
        if (auto it = f.segmentation.find(key); it != f.segmentation.end()) {
            emit_class(key, it->second);
        }
    }
    for (const auto& [cls, frac] : f.segmentation) {
        if (std::find(kSegmentationClasses.begin(), kSegmentationClasses.end(), cls) ==
            kSegmentationClasses.end()) {
            emit_class(cls, frac);
        }
    }
    for (const auto& c : f.categories) {
        facts.push_back("scene category: " + c.label + " (confidence " +
                        detail::confidence_tier(c.confidence) + ")");
    }
    if (f.attributes.empty()) {
        facts.push_back("attributes: none");
    } else {
        facts.push_back("attributes: " + prompts::join(f.attributes, ", "));
    }
    std::vector<std::pair<std::string, int>> objects;
    for (const auto& [cls, count] : f.object_counts) {
        if (count > 0) objects.emplace_back(cls, count);
    }
    std::sort(objects.begin(), objects.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (objects.empty()) {
        facts.push_back("no people or vehicles");
    } else {
        for (const auto& [cls, count] : objects) {
            facts.push_back(detail::plural_object(cls) + ": " + std::to_string(count));
        }
    }
    return facts;
}

// True iff the target label matches any top-5 category, case-insensitive
// substring.
inline bool contains_target(const SceneFeatures& f, const std::string& target_label) {
    for (const auto& c : f.categories) {
        if (detail::icontains(c.label, target_label)) return true;
    }
    return false;
}

struct SceneSummary {
    std::string text;
    NodeId source_node;
    Heading heading = Heading::Front;
};

// Serving side of the feature store: canned JSON or a remote service.
class SceneProvider {
public:
    virtual ~SceneProvider() = default;
    virtual bool has(const std::string& ref) const = 0;
    // Throws ProviderError when the ref cannot be served.
    virtual SceneFeatures fetch(const std::string& ref) const = 0;
};

inline SceneFeatures scene_features_from_json(const nlohmann::json& j) {
    SceneFeatures f;
    try {
        for (const auto& [cls, frac] : j.at("segmentation").items()) {
            f.segmentation[cls] = frac.get<double>();
        }
        for (const auto& c : j.at("categories")) {
            f.categories.push_back(
                {c.at("label").get<std::string>(), c.at("confidence").get<double>()});
        }
        for (const auto& a : j.at("attributes")) {
            f.attributes.push_back(a.get<std::string>());
        }
        for (const auto& [cls, count] : j.at("objects").items()) {
            f.object_counts[cls] = count.get<int>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("scene features: ") + e.what());
    }
    f.validate();
    return f;
}

inline nlohmann::ordered_json scene_features_to_json(const SceneFeatures& f) {
    nlohmann::ordered_json j;
    j["segmentation"] = nlohmann::ordered_json::object();
    for (const auto& [cls, frac] : f.segmentation) j["segmentation"][cls] = frac;
    j["categories"] = nlohmann::ordered_json::array();
    for (const auto& c : f.categories) {
        j["categories"].push_back({{"label", c.label}, {"confidence", c.confidence}});
    }
    j["attributes"] = f.attributes;
    j["objects"] = nlohmann::ordered_json::object();
    for (const auto& [cls, count] : f.object_counts) j["objects"][cls] = count;
    return j;
}

// Read-only in-memory store keyed "nodeId/heading".
class CannedSceneStore : public SceneProvider {
public:
    CannedSceneStore() = default;

    static CannedSceneStore from_json(const nlohmann::json& doc) {
        if (!doc.is_object()) throw ParseError("scene store document is not a JSON object");
        CannedSceneStore store;
        for (const auto& [ref, value] : doc.items()) {
            try {
                store.features_[ref] = scene_features_from_json(value);
            } catch (const Error& e) {
                throw ParseError("scene store entry '" + ref + "': " + e.what());
            }
        }
        return store;
    }

    static CannedSceneStore load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ParseError("cannot open scene store '" + path + "'");
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("scene store '" + path + "': " + e.what());
        }
        return from_json(doc);
    }

    bool has(const std::string& ref) const override { return features_.count(ref) != 0; }

    SceneFeatures fetch(const std::string& ref) const override {
        auto it = features_.find(ref);
        if (it == features_.end()) {
            throw ProviderError("scene store has no entry for '" + ref + "'");
        }
        return it->second;
    }

    std::size_t size() const { return features_.size(); }

private:
    std::map<std::string, SceneFeatures> features_;
};

namespace detail {

// A summary must mention at least one segmentation class and say something
// about people/vehicles (possibly their absence).
inline bool summary_is_structural(const std::string& text, const SceneFeatures& f) {
    if (text.empty()) return false;
    bool mentions_class = false;
    for (const auto& [cls, frac] : f.segmentation) {
        (void)frac;
        if (icontains(text, cls)) {
            mentions_class = true;
            break;
        }
    }
    if (!mentions_class) return false;
    static const char* kLifeWords[] = {"people",     "person",  "individual", "pedestrian",
                                       "vehicle",    "car",     "bicycle",    "truck",
                                       "motorcycle", "bus",     "no people",  "nobody",
                                       "driving",    "biking",  "traffic",    "transport"};
    for (const char* w : kLifeWords) {
        if (icontains(text, w)) return true;
    }
    return false;
}

} // namespace detail

// Turns features into a one-paragraph natural-language summary via the
// backend, with one corrective re-prompt if the reply fails the structural
// check.
inline SceneSummary summarize(const SceneFeatures& f, const NodeId& source, Heading heading,
                              Backend& backend, ExchangeLog* log = nullptr) {
    const auto facts = features_to_facts(f);
    ChatExchange ex;
    ex.system = "You convert structured visual details of street scenes into short "
                "natural-language summaries.";
    ex.messages.push_back({"user", prompts::build_summary_prompt(facts)});
    std::string reply = ask(backend, ex, "summary", log);
    if (!detail::summary_is_structural(reply, f)) {
        ex.messages.push_back({"assistant", reply});
        ex.messages.push_back(
            {"user", "The summary must be non-empty, mention at least one of the listed "
                     "coverage classes, and state whether people or vehicles are present. "
                     "Rewrite it."});
        reply = ask(backend, ex, "summary", log);
        if (!detail::summary_is_structural(reply, f)) {
            throw ValidationError("scene summary failed structural validation after "
                                  "re-prompt");
        }
    }
    return SceneSummary{reply, source, heading};
}

} // namespace streetagents
