#pragma once

// Layered scene graph: one building node, room nodes with footprints, place
// nodes on a free-space grid, and object nodes with class/centroid/box.
// Contains edges point child -> parent.

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sgslam/core/aabox.hpp"
#include "sgslam/core/types.hpp"

namespace sgslam {

enum class GraphLayer { kBuilding, kRoom, kPlace, kObject };
enum class Relation { kContains, kAdjacent, kSupports, kTraversable };

inline const char* to_string(GraphLayer l) {
  switch (l) {
    case GraphLayer::kBuilding: return "building";
    case GraphLayer::kRoom: return "room";
    case GraphLayer::kPlace: return "place";
    case GraphLayer::kObject: return "object";
  }
  return "?";
}

inline const char* to_string(Relation r) {
  switch (r) {
    case Relation::kContains: return "contains";
    case Relation::kAdjacent: return "adjacent";
    case Relation::kSupports: return "supports";
    case Relation::kTraversable: return "traversable";
  }
  return "?";
}

inline GraphLayer layer_from_string(const std::string& s) {
  if (s == "building") return GraphLayer::kBuilding;
  if (s == "room") return GraphLayer::kRoom;
  if (s == "place") return GraphLayer::kPlace;
  if (s == "object") return GraphLayer::kObject;
  throw Error(ErrorCode::kParseError, "unknown graph layer: " + s);
}

inline Relation relation_from_string(const std::string& s) {
  if (s == "contains") return Relation::kContains;
  if (s == "adjacent") return Relation::kAdjacent;
  if (s == "supports") return Relation::kSupports;
  if (s == "traversable") return Relation::kTraversable;
  throw Error(ErrorCode::kParseError, "unknown relation: " + s);
}

struct SceneGraphNode {
  int id = -1;
  GraphLayer layer = GraphLayer::kObject;
  std::string cls;  // semantic class; empty for building/place
  Vec3 centroid = Vec3::Zero();
  AABox box;
};

struct SceneGraphEdge {
  int src = -1;  // child for contains/supports
  int dst = -1;
  Relation relation = Relation::kContains;
};

struct SceneGraph {
  std::vector<SceneGraphNode> nodes;
  std::vector<SceneGraphEdge> edges;

  std::vector<const SceneGraphNode*> layer_nodes(GraphLayer l) const {
    std::vector<const SceneGraphNode*> out;
    for (const auto& n : nodes) {
      if (n.layer == l) out.push_back(&n);
    }
    return out;
  }

  const SceneGraphNode* node_by_id(int id) const {
    for (const auto& n : nodes) {
      if (n.id == id) return &n;
    }
    return nullptr;
  }

  /// Parent room id of an object node via its contains edge, or -1.
  int contains_parent(int node_id) const {
    for (const auto& e : edges) {
      if (e.relation == Relation::kContains && e.src == node_id) return e.dst;
    }
    return -1;
  }
};

inline nlohmann::ordered_json to_json(const SceneGraph& g) {
  nlohmann::ordered_json j;
  j["nodes"] = nlohmann::ordered_json::array();
  for (const auto& n : g.nodes) {
    nlohmann::ordered_json jn;
    jn["id"] = n.id;
    jn["layer"] = to_string(n.layer);
    jn["class"] = n.cls;
    jn["centroid"] = {n.centroid.x(), n.centroid.y(), n.centroid.z()};
    jn["box_min"] = {n.box.min.x(), n.box.min.y(), n.box.min.z()};
    jn["box_max"] = {n.box.max.x(), n.box.max.y(), n.box.max.z()};
    j["nodes"].push_back(jn);
  }
  j["edges"] = nlohmann::ordered_json::array();
  for (const auto& e : g.edges) {
    nlohmann::ordered_json je;
    je["src"] = e.src;
    je["dst"] = e.dst;
    je["relation"] = to_string(e.relation);
    j["edges"].push_back(je);
  }
  return j;
}

inline SceneGraph scene_graph_from_json(const nlohmann::json& j) {
  SceneGraph g;
  for (const auto& jn : j.at("nodes")) {
    SceneGraphNode n;
    n.id = jn.at("id").get<int>();
    n.layer = layer_from_string(jn.at("layer").get<std::string>());
    n.cls = jn.at("class").get<std::string>();
    auto c = jn.at("centroid");
    n.centroid = Vec3(c[0].get<double>(), c[1].get<double>(), c[2].get<double>());
    auto mn = jn.at("box_min");
    auto mx = jn.at("box_max");
    n.box = AABox(Vec3(mn[0], mn[1], mn[2]), Vec3(mx[0], mx[1], mx[2]));
    g.nodes.push_back(n);
  }
  for (const auto& je : j.at("edges")) {
    g.edges.push_back(SceneGraphEdge{
        je.at("src").get<int>(), je.at("dst").get<int>(),
        relation_from_string(je.at("relation").get<std::string>())});
  }
  return g;
}

}  // namespace sgslam
