#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace streetagents {

// The four movement directions an agent can consider at a decision point.
enum class Direction { Forward, Right, Left, Backward };

// Canonical iteration order used everywhere options are enumerated.
inline constexpr std::array<Direction, 4> kDirectionOrder = {
    Direction::Forward, Direction::Right, Direction::Left, Direction::Backward};

constexpr Direction reverse(Direction d) {
    switch (d) {
        case Direction::Forward: return Direction::Backward;
        case Direction::Backward: return Direction::Forward;
        case Direction::Left: return Direction::Right;
        case Direction::Right: return Direction::Left;
    }
    return Direction::Forward; // unreachable
}

constexpr std::string_view to_string(Direction d) {
    switch (d) {
        case Direction::Forward: return "forward";
        case Direction::Right: return "right";
        case Direction::Left: return "left";
        case Direction::Backward: return "backward";
    }
    return "forward"; // unreachable
}

inline std::optional<Direction> direction_from(std::string_view s) {
    if (s == "forward") return Direction::Forward;
    if (s == "right") return Direction::Right;
    if (s == "left") return Direction::Left;
    if (s == "backward") return Direction::Backward;
    return std::nullopt;
}

// Heading offset applied to a node's base heading when building a
// street-view request: forward 0, right +90, backward +180, left -90.
constexpr int heading_offset_degrees(Direction d) {
    switch (d) {
        case Direction::Forward: return 0;
        case Direction::Right: return 90;
        case Direction::Backward: return 180;
        case Direction::Left: return -90;
    }
    return 0; // unreachable
}

// Camera heading of the imagery stored for a node. Every node carries a
// front, left and right view.
enum class Heading { Front, Left, Right };

inline constexpr std::array<Heading, 3> kHeadingOrder = {Heading::Front, Heading::Left,
                                                         Heading::Right};

constexpr std::string_view to_string(Heading h) {
    switch (h) {
        case Heading::Front: return "front";
        case Heading::Left: return "left";
        case Heading::Right: return "right";
    }
    return "front"; // unreachable
}

inline std::optional<Heading> heading_from(std::string_view s) {
    if (s == "front") return Heading::Front;
    if (s == "left") return Heading::Left;
    if (s == "right") return Heading::Right;
    return std::nullopt;
}

} // namespace streetagents
