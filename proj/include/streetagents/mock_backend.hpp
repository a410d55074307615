#pragma once

// Deterministic stand-in for the chat model. Replies are a pure function of
// the exchange text (the seed is carried only for bookkeeping), so whole
// simulations become reproducible byte-for-byte. Task detection keys off the
// marker strings defined in prompts.hpp.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "streetagents/direction.hpp"
#include "streetagents/llm.hpp"
#include "streetagents/prompts.hpp"

namespace streetagents {

namespace mockdetail {

inline std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '\'';
}

// Whole-word, case-insensitive match; a trailing plural "s" on the haystack
// word is tolerated ("bicycles" matches "bicycle").
inline bool contains_word(const std::string& haystack_lower, const std::string& word_lower) {
    std::size_t pos = 0;
    while ((pos = haystack_lower.find(word_lower, pos)) != std::string::npos) {
        const bool start_ok = pos == 0 || !is_word_char(haystack_lower[pos - 1]);
        std::size_t end = pos + word_lower.size();
        bool end_ok = end >= haystack_lower.size() || !is_word_char(haystack_lower[end]);
        if (!end_ok && haystack_lower[end] == 's') {
            const std::size_t after_s = end + 1;
            end_ok = after_s >= haystack_lower.size() || !is_word_char(haystack_lower[after_s]);
        }
        if (start_ok && end_ok) return true;
        ++pos;
    }
    return false;
}

// Phrase match for persona traits: case-insensitive substring.
inline bool contains_phrase(const std::string& haystack_lower, const std::string& phrase) {
    return haystack_lower.find(to_lower(phrase)) != std::string::npos;
}

inline const std::vector<std::string>& salient_tokens() {
    static const std::vector<std::string> kTokens = {
        "people", "bicycle", "car", "water", "fountain", "market", "shopfront"};
    return kTokens;
}

inline int count_salient(const std::string& text) {
    const std::string lower = to_lower(text);
    int count = 0;
    for (const auto& token : salient_tokens()) {
        if (contains_word(lower, token)) ++count;
    }
    return count;
}

// Keywords whose presence in a direction's preview suggests the target is
// near. Only "restaurant" has a curated prior; other targets fall back to
// the target word itself.
inline std::vector<std::string> target_priors(const std::string& target_lower) {
    if (target_lower == "restaurant") {
        return {"shopfront", "people", "promenade", "market", "cafeteria"};
    }
    return {target_lower};
}

inline std::string slice_between(const std::string& text, const std::string& from,
                                 const std::string& to) {
    const auto a = text.find(from);
    if (a == std::string::npos) return {};
    const auto begin = a + from.size();
    const auto b = text.find(to, begin);
    if (b == std::string::npos) return text.substr(begin);
    return text.substr(begin, b - begin);
}

inline std::string trim(std::string s) {
    const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
    while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.pop_back();
    return s;
}

struct ParsedOption {
    std::string direction;
    std::string summary;
    bool visited = false;
};

} // namespace mockdetail

class MockBackend : public Backend {
public:
    explicit MockBackend(std::uint64_t seed = 0) : seed_(seed) {}

    std::string describe() const override {
        return "mock(seed=" + std::to_string(seed_) + ")";
    }

    std::string complete(const ChatExchange& exchange) override {
        const std::string& user = exchange.messages.empty() ? std::string()
                                                            : last_user_text(exchange);
        if (user.find("Memory note:") != std::string::npos) return memory_note(user);
        if (user.find("rate the likely poignancy") != std::string::npos) {
            return importance(user);
        }
        if (user.find("REACT:") != std::string::npos) return decision(exchange, user);
        if (user.find("Rating for Scene") != std::string::npos) return rating(user);
        if (user.find("meaningful summary") != std::string::npos) return summary(user);
        if (user.find("Interview question:") != std::string::npos) {
            return interview(exchange);
        }
        return "Noted.";
    }

private:
    static const std::string& last_user_text(const ChatExchange& exchange) {
        for (auto it = exchange.messages.rbegin(); it != exchange.messages.rend(); ++it) {
            if (it->role == "user") return it->text;
        }
        return exchange.messages.back().text;
    }

    // --- scene summary ------------------------------------------------------

    static std::string summary(const std::string& user) {
        using namespace mockdetail;
        std::istringstream lines(slice_between(user, "Visual details:\n", "\nSummary:"));
        std::vector<std::string> coverages, categories, objects;
        std::string attributes;
        std::string line;
        while (std::getline(lines, line)) {
            if (line.rfind("- ", 0) != 0) continue;
            std::string fact = line.substr(2);
            if (fact.rfind("scene category: ", 0) == 0) {
                std::string label = fact.substr(16);
                if (auto p = label.find(" (confidence"); p != std::string::npos) {
                    label.resize(p);
                }
                categories.push_back(label);
            } else if (fact.rfind("attributes: ", 0) == 0) {
                attributes = fact.substr(12);
            } else if (fact == "no people or vehicles") {
                objects.clear();
                objects.push_back("no people or vehicles");
            } else if (auto p = fact.find(" coverage: "); p != std::string::npos) {
                coverages.push_back(fact.substr(0, p) + " coverage " +
                                    fact.substr(p + 11));
            } else if (auto c = fact.find(": "); c != std::string::npos) {
                objects.push_back(fact.substr(c + 2) + " " + fact.substr(0, c));
            }
        }
        std::string out = "This scene shows " + prompts::join(coverages, ", ") + ".";
        if (!categories.empty()) {
            out += " It resembles " + prompts::join(categories, ", ") + ".";
        }
        if (!attributes.empty() && attributes != "none") {
            out += " Attributes: " + attributes + ".";
        }
        if (!objects.empty()) {
            if (objects.front() == "no people or vehicles") {
                out += " There are no people or vehicles here.";
            } else {
                out += " There are " + prompts::join(objects, ", ") + " here.";
            }
        }
        return out;
    }

    // --- direction decision ---------------------------------------------------

    static std::string decision(const ChatExchange& exchange, const std::string& user) {
        using namespace mockdetail;
        // Name and target come from the instruction text itself.
        std::string name = trim(slice_between(user, "REACT: ", "'s reaction"));
        if (name.empty()) name = "The agent";
        std::string target =
            to_lower(trim(slice_between(user, "likely to have a ", " based on")));
        std::vector<std::string> traits;
        {
            std::string line = slice_between(exchange.system, "Innate traits: ", "\n");
            if (line != "N/A") {
                std::istringstream parts(line);
                std::string t;
                while (std::getline(parts, t, ',')) {
                    t = trim(t);
                    if (!t.empty() && t.back() == '.') t.pop_back();
                    if (!t.empty()) traits.push_back(t);
                }
            }
        }

        std::vector<ParsedOption> options = parse_options(user);
        if (options.empty()) return name + " wish to go to the forward direction because "
                                           "there is nothing else to consider.";

        const auto priors = target_priors(target);
        const auto direction_rank = [](const std::string& d) {
            if (d == "forward") return 0;
            if (d == "right") return 1;
            if (d == "left") return 2;
            if (d == "backward") return 3;
            return 4;
        };
        int best = -1;
        long best_score = 0;
        for (std::size_t i = 0; i < options.size(); ++i) {
            const std::string lower = to_lower(options[i].summary);
            long score = 0;
            for (const auto& t : traits) {
                if (contains_phrase(lower, t)) ++score;
            }
            for (const auto& p : priors) {
                if (contains_word(lower, p)) score += 2;
            }
            if (options[i].visited) --score;
            // Ties resolve in the fixed forward, right, left, backward order.
            if (best < 0 || score > best_score ||
                (score == best_score && direction_rank(options[i].direction) <
                                            direction_rank(options[best].direction))) {
                best = static_cast<int>(i);
                best_score = score;
            }
        }
        std::string out = name + " wish to go to the " + options[best].direction +
                          " direction because the scene there offers ";
        std::vector<std::string> hits;
        {
            const std::string lower = to_lower(options[best].summary);
            for (const auto& p : priors) {
                if (contains_word(lower, p)) hits.push_back(p);
            }
            for (const auto& t : traits) {
                if (contains_phrase(lower, t)) hits.push_back(to_lower(t));
            }
        }
        if (hits.empty()) {
            out += "the most promising way to find a " + target + ".";
        } else {
            out += prompts::join(hits, ", ") + ", which suggests a " + target +
                   " could be near.";
        }
        for (std::size_t i = 0; i < options.size(); ++i) {
            if (static_cast<int>(i) == best) continue;
            out += " " + name + " does not wish to go to the " + options[i].direction +
                   " direction because " +
                   (options[i].visited ? std::string("that way was already visited.")
                                       : std::string("it looks less likely to have a ") +
                                             target + ".");
        }
        return out;
    }

    static std::vector<mockdetail::ParsedOption> parse_options(const std::string& user) {
        using namespace mockdetail;
        std::vector<ParsedOption> options;
        std::istringstream lines(user);
        std::string line;
        while (std::getline(lines, line)) {
            // Preview lines: "In the <dir> direction <name> sees: <summary>"
            if (line.rfind("In the ", 0) == 0) {
                const auto dir_end = line.find(" direction", 7);
                if (dir_end == std::string::npos) continue;
                ParsedOption opt;
                opt.direction = line.substr(7, dir_end - 7);
                if (auto colon = line.find(": ", dir_end); colon != std::string::npos) {
                    opt.summary = line.substr(colon + 2);
                }
                const std::string kVisited = " (previously visited)";
                if (opt.summary.size() >= kVisited.size() &&
                    opt.summary.compare(opt.summary.size() - kVisited.size(),
                                        kVisited.size(), kVisited) == 0) {
                    opt.visited = true;
                    opt.summary.resize(opt.summary.size() - kVisited.size());
                }
                options.push_back(std::move(opt));
            } else if (auto pos = line.find(" came here to "); pos != std::string::npos) {
                // "<name> came here to <node> from the <dir> direction, ..."
                ParsedOption opt;
                opt.direction = trim(slice_between(line, " from the ", " direction"));
                opt.visited = true;
                if (!opt.direction.empty()) options.push_back(std::move(opt));
            }
        }
        return options;
    }

    // --- importance -------------------------------------------------------------

    static std::string importance(const std::string& user) {
        using namespace mockdetail;
        std::string memory = slice_between(user, "\n\nMemory: ", "\n\nRespond with");
        if (memory.empty()) memory = user;
        const int score = std::clamp(1 + count_salient(memory), 1, 10);
        return std::to_string(score);
    }

    // --- arrival memory note ------------------------------------------------------

    static std::string memory_note(const std::string& user) {
        const auto cut = user.find("\n\nCondense the above observation");
        if (cut == std::string::npos) return user;
        return user.substr(0, cut);
    }

    // --- scene rating ---------------------------------------------------------------

    static std::string rating(const std::string& user) {
        using namespace mockdetail;
        const std::string format_line =
            slice_between(user, "Respond in this exact format: ", " is <number>");
        // format_line = "<Name>'s <Attribute> Rating for Scene <X>"
        std::string name = format_line;
        if (auto p = name.find("'s "); p != std::string::npos) name.resize(p);
        std::string attribute =
            trim(slice_between(format_line, "'s ", " Rating for Scene "));
        std::string scene;
        if (auto pos = format_line.rfind("Rating for Scene "); pos != std::string::npos) {
            scene = trim(format_line.substr(pos + 17));
        }
        const std::string facts = slice_between(user, "Visual details:\n", "\n\n");
        const int base = to_lower(attribute) == "safety" ? 3 : 1;
        const int score = std::clamp(base + 2 * count_salient(facts), 1, 10);
        const std::string attr_lower = to_lower(attribute);
        std::string out = name + "'s " + attribute + " Rating for Scene " + scene +
                          " is " + std::to_string(score) + ". The reason for that is " +
                          name + " perceives the scene as " +
                          (score >= 6 ? "active and reassuring" : "quiet and uncertain") +
                          " given its visual details. To increase the " + attr_lower +
                          " rating to 10, " + name +
                          " suggests adding more lighting, greenery, and "
                          "community-engaging features. To decrease the " +
                          attr_lower + " rating to 1, " + name +
                          " suggests adding obstacles that hinder visibility and removing "
                          "signs of life.";
        return out;
    }

    // --- interview -------------------------------------------------------------------

    static std::string interview(const ChatExchange& exchange) {
        using namespace mockdetail;
        std::string name = trim(slice_between(exchange.system, "Name: ", "\n"));
        if (auto p = name.find(" (age:"); p != std::string::npos) name.resize(p);
        if (name.empty()) name = "The agent";
        // Recover the movement trail from the rendered memories.
        std::vector<std::string> moves;
        const std::string& memories = exchange.system;
        std::size_t pos = 0;
        while ((pos = memories.find(" moved ", pos)) != std::string::npos) {
            const auto to_pos = memories.find(" to ", pos + 7);
            if (to_pos == std::string::npos || to_pos - (pos + 7) > 16) {
                pos += 7;
                continue;
            }
            const std::string dir = memories.substr(pos + 7, to_pos - (pos + 7));
            std::string node;
            for (std::size_t i = to_pos + 4;
                 i < memories.size() && is_word_char(memories[i]); ++i) {
                node += memories[i];
            }
            if (!node.empty()) moves.push_back(dir + " to " + node);
            pos = to_pos + 4;
        }
        if (moves.empty()) {
            return name + "'s memories do not record any specific movements.";
        }
        return "Based on the memories, " + name + " moved " + prompts::join(moves, ", then ") +
               ".";
    }

    std::uint64_t seed_;
};

} // namespace streetagents
