#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace flexhrc::andor {

using NodeIndex = std::size_t;
using ArcIndex = std::size_t;

enum class Agent { human, robot };

const char* to_string(Agent agent);
Agent agent_from_string(std::string_view text);

struct ActionSpec {
  std::string id;
  std::string name;
  Agent agent = Agent::human;
  bool ended = false;
  // Present iff the owning arc is ordered.
  std::optional<int> order_index;

  /// Actions are addressed either by id or by their human-readable name.
  bool answers_to(std::string_view token) const { return token == id || token == name; }
};

struct HyperArc {
  std::string id;
  NodeIndex parent = 0;
  std::vector<NodeIndex> children;
  double weight = 0.0;
  std::vector<ActionSpec> actions;
  bool ordered = false;
  // All children solved.
  bool active = false;
  // Disabled by an out-of-order action; never re-enabled within a run.
  bool inactivated = false;
  bool done = false;
  int repetition_count = 0;

  bool matchable() const { return active && !inactivated && !done; }

  /// First unended action in execution order, or nullptr when all ended.
  const ActionSpec* first_unended() const;
  ActionSpec* first_unended();
};

struct Node {
  std::string id;
  std::string name;
  double weight = 0.0;
  bool solved = false;
  bool feasible = false;
};

/// AND/OR cooperation graph. Nodes and arcs keep document order; indices are stable.
class AndOrGraph {
 public:
  static AndOrGraph from_json(const nlohmann::json& doc);
  static AndOrGraph load(const std::filesystem::path& path);

  nlohmann::json to_json() const;
  /// Graph representation state: feasibility, activity and completion flags.
  nlohmann::json state_json() const;

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<HyperArc>& arcs() const { return arcs_; }
  std::vector<Node>& nodes() { return nodes_; }
  std::vector<HyperArc>& arcs() { return arcs_; }

  const Node& node(NodeIndex i) const { return nodes_.at(i); }
  Node& node(NodeIndex i) { return nodes_.at(i); }
  const HyperArc& arc(ArcIndex i) const { return arcs_.at(i); }
  HyperArc& arc(ArcIndex i) { return arcs_.at(i); }

  NodeIndex root() const { return root_; }
  bool solved() const { return solved_; }
  void set_solved(bool value) { solved_ = value; }

  NodeIndex node_index(std::string_view id) const;
  ArcIndex arc_index(std::string_view id) const;
  std::optional<NodeIndex> find_node(std::string_view id) const;
  std::optional<ArcIndex> find_arc(std::string_view id) const;

  /// Arcs whose parent is `n` (its alternatives), document order.
  const std::vector<ArcIndex>& arcs_from(NodeIndex n) const { return arcs_from_.at(n); }
  /// Arcs having `n` among their children.
  const std::vector<ArcIndex>& arcs_into(NodeIndex n) const { return arcs_into_.at(n); }

  bool is_leaf(NodeIndex n) const { return arcs_from_.at(n).empty(); }

  /// Optional {"tag": [arc ids]} map naming well-known paths.
  const nlohmann::json& color_tags() const { return color_tags_; }

  /// True when some action of the given agent answers to `token`.
  bool knows_action(std::string_view token, Agent agent) const;

 private:
  void build_indices();
  void validate() const;

  std::vector<Node> nodes_;
  std::vector<HyperArc> arcs_;
  NodeIndex root_ = 0;
  bool solved_ = false;
  nlohmann::json color_tags_ = nlohmann::json::object();
  std::unordered_map<std::string, NodeIndex> node_by_id_;
  std::unordered_map<std::string, ArcIndex> arc_by_id_;
  std::vector<std::vector<ArcIndex>> arcs_from_;
  std::vector<std::vector<ArcIndex>> arcs_into_;
};

/// Recomputes f(n). Feasibility is sticky; arcs whose children are all solved
/// are marked active on every call. Returns the feasibility flag.
bool update_feasibility(AndOrGraph& graph, NodeIndex n);
bool update_feasibility(AndOrGraph& graph, std::string_view node_id);
void update_all_feasibility(AndOrGraph& graph);

/// Marks the parent of every done arc with solved children as solved,
/// repeating until fixpoint. Returns newly solved nodes in solve order.
std::vector<NodeIndex> propagate_solved(AndOrGraph& graph);

}  // namespace flexhrc::andor
