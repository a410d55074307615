#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <deque>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "streetagents/direction.hpp"
#include "streetagents/errors.hpp"

namespace streetagents {

using NodeId = std::string;

struct GeoAnchor {
    double latitude = 0.0;
    double longitude = 0.0;
    double base_heading = 0.0; // degrees clockwise from north
};

// Keys into the scene-feature store, one per heading.
struct SceneRefs {
    std::string front;
    std::string left;
    std::string right;

    const std::string& for_heading(Heading h) const {
        switch (h) {
        case Heading::Front: return front;
        case Heading::Left: return left;
        default: return right;
        }
    }
};

struct Node {
    NodeId id;
    std::optional<GeoAnchor> geo;
    std::optional<SceneRefs> scenes;
};

// Immutable decision-point graph. Bidirectional by construction: loading
// rejects any edge whose reverse is missing or mislabeled.
class EnvironmentGraph {
public:
    static EnvironmentGraph from_json(const nlohmann::json& doc);
    static EnvironmentGraph load(const std::string& path);

    bool has_node(const NodeId& id) const { return index_.count(id) != 0; }

    const Node& node(const NodeId& id) const { return nodes_[index_of(id)]; }

    // All node ids in document order.
    const std::vector<NodeId>& node_ids() const { return ids_; }

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t directed_edge_count() const { return edge_count_; }

    const NodeId& start() const { return start_; }
    const NodeId& target_node() const { return target_node_; }
    const std::string& target_label() const { return target_label_; }

    std::optional<NodeId> neighbor(const NodeId& from, Direction d) const {
        const auto& out = out_[index_of(from)][static_cast<std::size_t>(d)];
        if (!out) return std::nullopt;
        return nodes_[*out].id;
    }

    // Outgoing edges in the fixed order forward, right, left, backward.
    std::vector<std::pair<Direction, NodeId>> available_directions(const NodeId& from) const {
        std::vector<std::pair<Direction, NodeId>> result;
        const auto& out = out_[index_of(from)];
        for (Direction d : kDirectionOrder) {
            if (const auto& to = out[static_cast<std::size_t>(d)]) {
                result.emplace_back(d, nodes_[*to].id);
            }
        }
        return result;
    }

    // Minimal move count a -> b, or nullopt if unreachable.
    std::optional<int> shortest_path_length(const NodeId& a, const NodeId& b) const {
        const std::size_t src = index_of(a);
        const std::size_t dst = index_of(b);
        if (src == dst) return 0;
        std::vector<int> dist(nodes_.size(), -1);
        dist[src] = 0;
        std::deque<std::size_t> queue{src};
        while (!queue.empty()) {
            const std::size_t u = queue.front();
            queue.pop_front();
            for (const auto& to : out_[u]) {
                if (!to || dist[*to] >= 0) continue;
                dist[*to] = dist[u] + 1;
                if (*to == dst) return dist[*to];
                queue.push_back(*to);
            }
        }
        return std::nullopt;
    }

    // Stable fingerprint of the graph structure; used to refuse mixing run
    // logs from different environments during aggregation.
    std::uint64_t content_hash() const { return hash_; }

private:
    std::size_t index_of(const NodeId& id) const {
        auto it = index_.find(id);
        if (it == index_.end()) throw ValidationError("unknown node '" + id + "'");
        return it->second;
    }

    std::vector<Node> nodes_;
    std::vector<NodeId> ids_;
    std::unordered_map<NodeId, std::size_t> index_;
    // out_[node][direction] -> node index
    std::vector<std::array<std::optional<std::size_t>, 4>> out_;
    std::size_t edge_count_ = 0;
    NodeId start_;
    NodeId target_node_;
    std::string target_label_;
    std::uint64_t hash_ = 0;
};

namespace detail {

// Shortest round-trip decimal form, e.g. 52.37 -> "52.37", 270.0 -> "270".
inline std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) throw Error("number formatting failed");
    return std::string(buf, ptr);
}

inline std::uint64_t fnv1a(const std::string& text, std::uint64_t h = 1469598103934665603ull) {
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace detail

inline EnvironmentGraph EnvironmentGraph::from_json(const nlohmann::json& doc) {
    EnvironmentGraph g;
    try {
        if (!doc.is_object()) throw ParseError("environment document is not a JSON object");
        const auto& nodes = doc.at("nodes");
        if (!nodes.is_array() || nodes.empty()) {
            throw ParseError("environment has no nodes");
        }
        for (const auto& n : nodes) {
            Node node;
            node.id = n.at("id").get<std::string>();
            if (node.id.empty()) throw ValidationError("node with empty id");
            if (g.index_.count(node.id)) {
                throw ValidationError("duplicate node id '" + node.id + "'");
            }
            if (n.contains("geo")) {
                const auto& geo = n.at("geo");
                GeoAnchor a;
                a.latitude = geo.at("lat").get<double>();
                a.longitude = geo.at("lng").get<double>();
                a.base_heading = geo.at("heading").get<double>();
                if (a.latitude < -90.0 || a.latitude > 90.0) {
                    throw ValidationError("node '" + node.id + "': latitude out of range");
                }
                if (a.longitude < -180.0 || a.longitude > 180.0) {
                    throw ValidationError("node '" + node.id + "': longitude out of range");
                }
                if (a.base_heading < 0.0 || a.base_heading >= 360.0) {
                    throw ValidationError("node '" + node.id + "': heading out of range");
                }
                node.geo = a;
            }
            if (n.contains("scene")) {
                const auto& s = n.at("scene");
                SceneRefs refs;
                refs.front = s.at("front").get<std::string>();
                refs.left = s.at("left").get<std::string>();
                refs.right = s.at("right").get<std::string>();
                node.scenes = refs;
            }
            g.index_[node.id] = g.nodes_.size();
            g.ids_.push_back(node.id);
            g.nodes_.push_back(std::move(node));
        }
        g.out_.resize(g.nodes_.size());

        const auto edge_name = [](const std::string& from, const std::string& to,
                                  std::string_view dir) {
            return "edge (" + from + " -> " + to + ", " + std::string(dir) + ")";
        };
        for (const auto& e : doc.at("edges")) {
            const auto from = e.at("from").get<std::string>();
            const auto to = e.at("to").get<std::string>();
            const auto dir_text = e.at("dir").get<std::string>();
            const auto dir = direction_from(dir_text);
            if (!dir) {
                throw ValidationError(edge_name(from, to, dir_text) +
                                      ": unknown direction label");
            }
            auto from_it = g.index_.find(from);
            auto to_it = g.index_.find(to);
            if (from_it == g.index_.end() || to_it == g.index_.end()) {
                throw ValidationError(edge_name(from, to, dir_text) +
                                      ": references an unknown node");
            }
            if (from == to) {
                throw ValidationError(edge_name(from, to, dir_text) + ": self-loop");
            }
            auto& slot = g.out_[from_it->second][static_cast<std::size_t>(*dir)];
            if (slot) {
                throw ValidationError(edge_name(from, to, dir_text) +
                                      ": duplicate direction at node '" + from + "'");
            }
            slot = to_it->second;
            ++g.edge_count_;
        }

        // Bidirectionality: every edge needs its labeled reverse.
        for (std::size_t i = 0; i < g.nodes_.size(); ++i) {
            for (Direction d : kDirectionOrder) {
                const auto& to = g.out_[i][static_cast<std::size_t>(d)];
                if (!to) continue;
                const auto& back =
                    g.out_[*to][static_cast<std::size_t>(reverse(d))];
                if (!back || *back != i) {
                    throw ValidationError(
                        edge_name(g.nodes_[i].id, g.nodes_[*to].id, to_string(d)) +
                        ": missing reverse edge (" + g.nodes_[*to].id + " -> " +
                        g.nodes_[i].id + ", " + std::string(to_string(reverse(d))) + ")");
                }
            }
        }

        g.start_ = doc.at("start").get<std::string>();
        g.target_node_ = doc.at("target_node").get<std::string>();
        g.target_label_ = doc.at("target_label").get<std::string>();
        if (!g.has_node(g.start_)) {
            throw ValidationError("start node '" + g.start_ + "' does not exist");
        }
        if (!g.has_node(g.target_node_)) {
            throw ValidationError("target node '" + g.target_node_ + "' does not exist");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("environment document: ") + e.what());
    }

    std::uint64_t h = detail::fnv1a("env-v1");
    for (const auto& id : g.ids_) h = detail::fnv1a(id + ";", h);
    for (std::size_t i = 0; i < g.nodes_.size(); ++i) {
        for (Direction d : kDirectionOrder) {
            if (const auto& to = g.out_[i][static_cast<std::size_t>(d)]) {
                h = detail::fnv1a(g.nodes_[i].id + ">" + g.nodes_[*to].id + ":" +
                                      std::string(to_string(d)) + ";",
                                  h);
            }
        }
    }
    h = detail::fnv1a(g.start_ + "|" + g.target_node_ + "|" + g.target_label_, h);
    g.hash_ = h;
    return g;
}

inline EnvironmentGraph EnvironmentGraph::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open environment file '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("environment file '" + path + "': " + e.what());
    }
    return from_json(doc);
}

// Static street-view request URL for one heading off the anchor.
inline std::string street_view_url(const GeoAnchor& anchor, Direction relative,
                                   int width, int height, const std::string& key) {
    if (width <= 0 || height <= 0) throw ValidationError("image size must be positive");
    double deg = anchor.base_heading + heading_offset_degrees(relative);
    while (deg < 0.0) deg += 360.0;
    while (deg >= 360.0) deg -= 360.0;
    return "https://maps.googleapis.com/maps/api/streetview?size=" +
           std::to_string(width) + "x" + std::to_string(height) +
           "&location=" + detail::format_double(anchor.latitude) + "," +
           detail::format_double(anchor.longitude) +
           "&heading=" + detail::format_double(deg) + "&key=" + key;
}

} // namespace streetagents
