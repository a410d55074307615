#pragma once

#include <string>
#include <vector>

namespace streetagents::prompts {

// The templates below are the simulation's wire protocol: every backend —
// remote, mock, or replay — sees exactly these strings. The mock backend keys
// off stable marker substrings ("REACT:", "Memory note:", "rate the likely
// poignancy", "meaningful summary", "Rating for Scene", "Interview question:"),
// so changing wording here is a protocol change.

inline std::string replace_all(std::string text, const std::string& from,
                               const std::string& to) {
    std::size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
    return text;
}

inline std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

// --- scene summarization -------------------------------------------------

inline std::string build_summary_prompt(const std::vector<std::string>& facts) {
    std::string p =
        "Convert the following visual details and values from a street scene into a "
        "meaningful summary. Write one paragraph of plain prose on a single line. "
        "Describe the overall composition of the scene, the kind of place it resembles, "
        "its attributes, and the people, vehicles, or other objects present with their "
        "counts.\n\nVisual details:\n";
    for (const auto& f : facts) p += "- " + f + "\n";
    p += "\nSummary:";
    return p;
}

// --- importance rating ----------------------------------------------------

inline constexpr const char* kImportanceAnchor =
    "On the scale of 1 to 10, where 1 is purely regular street details which one can "
    "see in regular city streets (e.g., mundane urban setting characterized by a sparse "
    "population and minimal vehicular activity. Streets are devoid of vibrant elements, "
    "with limited greenery and visible sky. Lack of noteworthy establishments like "
    "shops, cafeterias and landmarks) and 10 is extremely poignant (e.g., captivating "
    "urban scene which features a bustling environment with a diverse crowd and active "
    "vehicular presence. The scene composition includes a harmonious blend of greenery, "
    "buildings, and a dynamic sky. Streets are animated with life, showcasing variety "
    "of establishments. The overall composition which creates a memorable experience.), "
    "rate the likely poignancy of the following piece of memory.";

inline std::string build_importance_prompt(const std::string& memory_text) {
    return std::string(kImportanceAnchor) + "\n\nMemory: " + memory_text +
           "\n\nRespond with a single integer between 1 and 10.\nRating:";
}

// --- direction decision ---------------------------------------------------

inline constexpr const char* kReactTemplate =
    "{name} should react to the observation, and if so, what should be the next step "
    "for {name} to move from the given directions? Respond by only one direction "
    "{name} should focus on moving to. The potential responses should have one of the "
    "four directions: forward, backward, left, and right. However, {name} should see "
    "which directions are available for him and most likely to have a {target} based "
    "on the observation and respond accordingly. Also the {name} should justify why it "
    "wishes to go in that particular direction and also why not the other direction "
    "based on his/her personality.\n"
    "REACT: {name}'s reaction in the format: {name} wish to go to direction because, "
    "{name} does not wish to go to direction because Be precise and write only the "
    "things that you know from the context. Do not mindlessly select any direction, "
    "reason before you choose.";

inline std::string build_decision_prompt(const std::string& name, const std::string& target,
                                         const std::string& observation) {
    std::string tail = replace_all(kReactTemplate, "{name}", name);
    tail = replace_all(tail, "{target}", target);
    return observation + "\n\n" + tail;
}

// --- arrival memory note --------------------------------------------------

inline std::string build_memory_note_prompt(const std::string& observation) {
    return observation +
           "\n\nCondense the above observation into a single third-person memory note "
           "on one line, keeping every concrete detail: locations, directions, scene "
           "elements, and object counts.\nMemory note:";
}

// --- interview --------------------------------------------------------------

inline std::string build_interview_prompt(const std::string& question) {
    return "Interview question: " + question + "\nAnswer:";
}

// --- scene rating -----------------------------------------------------------

inline constexpr const char* kSafetyDefinition =
    "Safety means the perceived personal security of a person walking through the "
    "scene.";
inline constexpr const char* kLivelinessDefinition =
    "Liveliness means the perceived amount of human activity and vibrancy in the "
    "scene.";

inline std::string build_rating_prompt(const std::string& name, const std::string& scene,
                                       const std::string& attribute_title,
                                       const std::string& attribute_definition,
                                       const std::vector<std::string>& facts) {
    std::string p = name + " is looking at the street scene at location " + scene +
                    ".\n\nVisual details:\n";
    for (const auto& f : facts) p += "- " + f + "\n";
    p += "\n" + attribute_definition + "\nRate the scene on a scale of 1 to 10 for " +
         attribute_title +
         ". Respond in this exact format: " + name + "'s " + attribute_title +
         " Rating for Scene " + scene +
         " is <number>. Then give the reason for that rating. Then state what details "
         "could be added or changed to increase the " +
         attribute_title +
         " rating to 10, and what could be changed to decrease the " + attribute_title +
         " rating to 1.\nRating for Scene " + scene + ":";
    return p;
}

// --- agent context (the system text) ---------------------------------------

struct ContextInputs {
    std::string name;
    // Empty when running without a persona.
    std::string age_text;  // e.g. "28"
    std::string traits;    // joined list, or empty
    std::string backstory; // or empty
    std::string time_text; // long-form timestamp
    std::string status;
    std::string memory_block; // rendered memories, may be empty
};

inline std::string build_agent_context(const ContextInputs& in) {
    const bool has_persona = !in.backstory.empty() || !in.traits.empty();
    std::string c;
    if (!in.age_text.empty()) {
        c += "Name: " + in.name + " (age: " + in.age_text + ")\n";
    } else {
        c += "Name: " + in.name + "\n";
    }
    c += "Innate traits: " + (in.traits.empty() ? std::string("N/A") : in.traits) + "\n";
    c += "Backstory and personality: " +
         (in.backstory.empty() ? std::string("N/A") : in.backstory) + "\n";
    if (!has_persona) {
        c += in.name + " is intelligent, hardworking, and reliable.\n";
    }
    c += "It is " + in.time_text + ".\n";
    c += in.name + "'s status: " + in.status + "\n";
    if (!in.memory_block.empty()) {
        c += "\nRelevant memories:\n" + in.memory_block + "\n";
    }
    return c;
}

inline std::string default_status(const std::string& target) {
    return "Want to explore the city and find a " + target + " around.";
}

} // namespace streetagents::prompts
