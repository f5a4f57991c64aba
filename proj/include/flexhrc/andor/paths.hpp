#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "flexhrc/andor/graph.hpp"

namespace flexhrc::andor {

using PathIndex = std::size_t;

/// One admissible way of solving the root: a choice of exactly one arc for
/// every non-leaf member node. Nodes are kept in expansion order (root first).
struct CooperationPath {
  std::string id;
  std::vector<NodeIndex> nodes;
  std::vector<ArcIndex> arcs;
  double cost = 0.0;
  std::optional<std::string> color_tag;

  bool contains_node(NodeIndex n) const;
  bool contains_arc(ArcIndex a) const;
  /// The member arc whose parent is `n`, if any.
  std::optional<ArcIndex> arc_from(const AndOrGraph& graph, NodeIndex n) const;
  /// The lowest-index member arc having `n` among its children, if any.
  std::optional<ArcIndex> arc_into(const AndOrGraph& graph, NodeIndex n) const;
  /// A path is abandoned once any of its arcs has been inactivated.
  bool abandoned(const AndOrGraph& graph) const;
};

using PathSet = std::vector<CooperationPath>;

/// Offline depth-first enumeration of every root-anchored cooperation path.
/// OR-branches fork copies of the path under expansion, in document order;
/// ids are assigned P0, P1, ... in the final list order.
PathSet generate_all_paths(const AndOrGraph& graph);

/// Sum of member node and arc weights.
double path_weight(const AndOrGraph& graph, const CooperationPath& path);

/// Cost decrement applied to `path` when `solved` becomes solved:
/// w_n + h_n^m - w_h, where h_n^m is the heaviest arc in the whole graph
/// having `solved` as a child and w_h the weight of the member arc above it.
/// Both are zero for the root.
double cost_decrement(const AndOrGraph& graph, const CooperationPath& path, NodeIndex solved);

/// Applies the decrement to every path containing `solved`. Returns how many
/// paths changed.
std::size_t update_all_paths(const AndOrGraph& graph, PathSet& paths, NodeIndex solved);

/// Minimum-cost non-abandoned path; ties resolve to the lowest index.
std::optional<PathIndex> find_optimal_path(const AndOrGraph& graph, const PathSet& paths);

/// Attaches color tags from a document map {"blue": [arc ids...], ...}:
/// a path is tagged when its arc set equals the listed set.
void apply_color_tags(const AndOrGraph& graph, PathSet& paths, const nlohmann::json& tags);

/// Structured path-set report (id, color, node and arc ids, cost).
nlohmann::json path_report(const AndOrGraph& graph, const PathSet& paths);

}  // namespace flexhrc::andor
