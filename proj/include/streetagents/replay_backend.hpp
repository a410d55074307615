#pragma once

// Backend that replays a recorded transcript, enabling bit-exact reproduction
// of published runs. Entries are consumed strictly in order; prompt
// expectations are advisory (a mismatch warns but does not fail).

#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "streetagents/llm.hpp"

namespace streetagents {

struct ReplayEntry {
    std::string expect_prompt_contains; // empty = no expectation
    std::string response;
};

class ReplayBackend : public Backend {
public:
    explicit ReplayBackend(std::vector<ReplayEntry> entries, std::string origin = "inline")
        : entries_(std::move(entries)), origin_(std::move(origin)) {}

    ReplayBackend(std::initializer_list<ReplayEntry> entries)
        : entries_(entries), origin_("inline") {}

    // Transcript format: JSONL, one {"expect_prompt_contains"?: str, "response": str}
    // object per line. Blank lines are skipped.
    static std::vector<ReplayEntry> load_entries(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ParseError("cannot open replay transcript '" + path + "'");
        std::vector<ReplayEntry> entries;
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
                ReplayEntry e;
                e.response = j.at("response").get<std::string>();
                if (j.contains("expect_prompt_contains")) {
                    e.expect_prompt_contains =
                        j.at("expect_prompt_contains").get<std::string>();
                }
                entries.push_back(std::move(e));
            } catch (const nlohmann::json::exception& ex) {
                throw ParseError("replay transcript '" + path + "' line " +
                                 std::to_string(line_no) + ": " + ex.what());
            }
        }
        return entries;
    }

    static ReplayBackend load(const std::string& path) {
        return ReplayBackend(load_entries(path), path);
    }

    std::string describe() const override { return "replay(" + origin_ + ")"; }

    std::string complete(const ChatExchange& exchange) override {
        std::lock_guard<std::mutex> lock(mutex_);
        if (next_ >= entries_.size()) {
            throw BackendError("replay transcript exhausted after " +
                               std::to_string(entries_.size()) + " exchanges");
        }
        const ReplayEntry& entry = entries_[next_];
        if (!entry.expect_prompt_contains.empty()) {
            std::string prompt = exchange.system;
            for (const auto& m : exchange.messages) prompt += "\n" + m.text;
            if (prompt.find(entry.expect_prompt_contains) == std::string::npos) {
                warnings_.push_back("replay entry " + std::to_string(next_ + 1) +
                                    ": prompt does not contain '" +
                                    entry.expect_prompt_contains + "'");
            }
        }
        ++next_;
        return entry.response;
    }

    std::size_t consumed() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return next_;
    }
    std::size_t size() const { return entries_.size(); }
    bool fully_consumed() const { return consumed() == entries_.size(); }
    std::vector<std::string> warnings() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return warnings_;
    }

private:
    std::vector<ReplayEntry> entries_;
    std::string origin_;
    std::size_t next_ = 0;
    std::vector<std::string> warnings_;
    mutable std::mutex mutex_;
};

} // namespace streetagents
