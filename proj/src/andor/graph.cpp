#include "flexhrc/andor/graph.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "flexhrc/error.hpp"

namespace flexhrc::andor {

using nlohmann::json;

const char* to_string(Agent agent) { return agent == Agent::human ? "human" : "robot"; }

Agent agent_from_string(std::string_view text) {
  if (text == "human") return Agent::human;
  if (text == "robot") return Agent::robot;
  throw Error(ErrorKind::parse, "unknown agent '" + std::string(text) + "'");
}

const ActionSpec* HyperArc::first_unended() const {
  for (const auto& a : actions)
    if (!a.ended) return &a;
  return nullptr;
}

ActionSpec* HyperArc::first_unended() {
  for (auto& a : actions)
    if (!a.ended) return &a;
  return nullptr;
}

namespace {

template <typename T>
T required(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorKind::parse, where + ": missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, where + ": field '" + key + "': " + e.what());
  }
}

}  // namespace

AndOrGraph AndOrGraph::from_json(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::parse, "graph document must be an object");
  AndOrGraph g;

  const auto nodes = doc.find("nodes");
  const auto arcs = doc.find("arcs");
  if (nodes == doc.end() || !nodes->is_array()) throw Error(ErrorKind::parse, "missing 'nodes' array");
  if (arcs != doc.end() && !arcs->is_array()) throw Error(ErrorKind::parse, "'arcs' must be an array");

  for (const auto& jn : *nodes) {
    Node n;
    n.id = required<std::string>(jn, "id", "node");
    n.name = jn.value("name", n.id);
    n.weight = jn.value("weight", 0.0);
    n.solved = jn.value("solved", false);
    if (n.weight < 0.0) throw Error(ErrorKind::invalid_argument, "node " + n.id + ": negative weight");
    if (!g.node_by_id_.emplace(n.id, g.nodes_.size()).second)
      throw Error(ErrorKind::parse, "duplicate node id " + n.id);
    g.nodes_.push_back(std::move(n));
  }

  const auto root_id = required<std::string>(doc, "root", "graph");
  const auto root_it = g.node_by_id_.find(root_id);
  if (root_it == g.node_by_id_.end())
    throw Error(ErrorKind::dangling_reference, "root '" + root_id + "' is not a node");
  g.root_ = root_it->second;

  if (arcs != doc.end()) {
    for (const auto& ja : *arcs) {
      HyperArc h;
      h.id = required<std::string>(ja, "id", "arc");
      const std::string where = "arc " + h.id;
      auto resolve = [&](const std::string& id) {
        auto it = g.node_by_id_.find(id);
        if (it == g.node_by_id_.end())
          throw Error(ErrorKind::dangling_reference, where + " references unknown node '" + id + "'");
        return it->second;
      };
      h.parent = resolve(required<std::string>(ja, "parent", where));
      for (const auto& c : required<std::vector<std::string>>(ja, "children", where))
        h.children.push_back(resolve(c));
      if (h.children.empty()) throw Error(ErrorKind::parse, where + " has no children");
      h.weight = ja.value("weight", 0.0);
      if (h.weight < 0.0) throw Error(ErrorKind::invalid_argument, where + ": negative weight");
      h.ordered = ja.value("ordered", false);
      const auto acts = ja.find("actions");
      if (acts == ja.end() || !acts->is_array() || acts->empty())
        throw Error(ErrorKind::parse, where + " needs a non-empty 'actions' array");
      int index = 0;
      std::set<std::string> seen;
      for (const auto& jact : *acts) {
        ActionSpec a;
        a.id = required<std::string>(jact, "id", where + " action");
        a.name = jact.value("name", a.id);
        a.agent = agent_from_string(required<std::string>(jact, "agent", where + " action " + a.id));
        if (h.ordered) a.order_index = index;
        if (!seen.insert(a.id).second)
          throw Error(ErrorKind::parse, where + ": action " + a.id + " listed twice");
        ++index;
        h.actions.push_back(std::move(a));
      }
      if (!g.arc_by_id_.emplace(h.id, g.arcs_.size()).second)
        throw Error(ErrorKind::parse, "duplicate arc id " + h.id);
      g.arcs_.push_back(std::move(h));
    }
  }

  if (auto tags = doc.find("color_tags"); tags != doc.end()) g.color_tags_ = *tags;

  g.build_indices();
  g.validate();
  update_all_feasibility(g);
  return g;
}

AndOrGraph AndOrGraph::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::parse, "cannot open graph document " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parse, path.string() + ": " + e.what());
  }
  return from_json(doc);
}

void AndOrGraph::build_indices() {
  arcs_from_.assign(nodes_.size(), {});
  arcs_into_.assign(nodes_.size(), {});
  for (ArcIndex a = 0; a < arcs_.size(); ++a) {
    arcs_from_[arcs_[a].parent].push_back(a);
    for (NodeIndex c : arcs_[a].children) {
      auto& into = arcs_into_[c];
      if (into.empty() || into.back() != a) into.push_back(a);
    }
  }
}

void AndOrGraph::validate() const {
  if (!arcs_into_[root_].empty())
    throw Error(ErrorKind::invalid_argument, "root " + nodes_[root_].id + " is the child of an arc");

  for (NodeIndex n = 0; n < nodes_.size(); ++n)
    if (nodes_[n].solved && !arcs_from_[n].empty())
      throw Error(ErrorKind::invalid_argument, "non-leaf node " + nodes_[n].id + " cannot start solved");

  // Cycle check over parent -> child edges, iterative three-colour DFS.
  enum class Mark { white, grey, black };
  std::vector<Mark> mark(nodes_.size(), Mark::white);
  for (NodeIndex start = 0; start < nodes_.size(); ++start) {
    if (mark[start] != Mark::white) continue;
    std::vector<std::pair<NodeIndex, std::size_t>> stack{{start, 0}};
    mark[start] = Mark::grey;
    while (!stack.empty()) {
      auto& [n, next] = stack.back();
      std::vector<NodeIndex> succ;
      for (ArcIndex a : arcs_from_[n])
        for (NodeIndex c : arcs_[a].children) succ.push_back(c);
      if (next < succ.size()) {
        NodeIndex c = succ[next++];
        if (mark[c] == Mark::grey)
          throw Error(ErrorKind::cyclic_graph, "cycle through node " + nodes_[c].id);
        if (mark[c] == Mark::white) {
          mark[c] = Mark::grey;
          stack.emplace_back(c, 0);
        }
      } else {
        mark[n] = Mark::black;
        stack.pop_back();
      }
    }
  }

  std::set<std::set<std::string>> action_sets;
  for (const auto& h : arcs_) {
    std::set<std::string> ids;
    for (const auto& a : h.actions) ids.insert(a.id);
    if (!action_sets.insert(ids).second)
      throw Error(ErrorKind::duplicate_action_set, "arc " + h.id + " repeats another arc's action set");
  }
}

NodeIndex AndOrGraph::node_index(std::string_view id) const {
  auto n = find_node(id);
  if (!n) throw Error(ErrorKind::unknown_id, "node '" + std::string(id) + "'");
  return *n;
}

ArcIndex AndOrGraph::arc_index(std::string_view id) const {
  auto a = find_arc(id);
  if (!a) throw Error(ErrorKind::unknown_id, "arc '" + std::string(id) + "'");
  return *a;
}

std::optional<NodeIndex> AndOrGraph::find_node(std::string_view id) const {
  auto it = node_by_id_.find(std::string(id));
  if (it == node_by_id_.end()) return std::nullopt;
  return it->second;
}

std::optional<ArcIndex> AndOrGraph::find_arc(std::string_view id) const {
  auto it = arc_by_id_.find(std::string(id));
  if (it == arc_by_id_.end()) return std::nullopt;
  return it->second;
}

bool AndOrGraph::knows_action(std::string_view token, Agent agent) const {
  for (const auto& h : arcs_)
    for (const auto& a : h.actions)
      if (a.agent == agent && a.answers_to(token)) return true;
  return false;
}

json AndOrGraph::to_json() const {
  json doc;
  if (!color_tags_.empty()) doc["color_tags"] = color_tags_;
  doc["root"] = nodes_[root_].id;
  doc["nodes"] = json::array();
  for (const auto& n : nodes_)
    doc["nodes"].push_back({{"id", n.id}, {"name", n.name}, {"weight", n.weight}, {"solved", n.solved}});
  doc["arcs"] = json::array();
  for (const auto& h : arcs_) {
    json ja{{"id", h.id}, {"parent", nodes_[h.parent].id}, {"weight", h.weight}, {"ordered", h.ordered}};
    ja["children"] = json::array();
    for (NodeIndex c : h.children) ja["children"].push_back(nodes_[c].id);
    ja["actions"] = json::array();
    for (const auto& a : h.actions)
      ja["actions"].push_back({{"id", a.id}, {"name", a.name}, {"agent", to_string(a.agent)}});
    doc["arcs"].push_back(std::move(ja));
  }
  return doc;
}

json AndOrGraph::state_json() const {
  json s;
  s["solved"] = solved_;
  s["root"] = nodes_[root_].id;
  s["nodes"] = json::array();
  for (const auto& n : nodes_)
    s["nodes"].push_back({{"id", n.id}, {"name", n.name}, {"solved", n.solved}, {"feasible", n.feasible}});
  s["arcs"] = json::array();
  for (const auto& h : arcs_) {
    json acts = json::array();
    for (const auto& a : h.actions)
      acts.push_back({{"id", a.id}, {"name", a.name}, {"agent", to_string(a.agent)}, {"ended", a.ended}});
    s["arcs"].push_back({{"id", h.id},
                         {"parent", nodes_[h.parent].id},
                         {"active", h.active},
                         {"inactivated", h.inactivated},
                         {"done", h.done},
                         {"repetitions", h.repetition_count},
                         {"actions", std::move(acts)}});
  }
  return s;
}

bool update_feasibility(AndOrGraph& graph, NodeIndex n) {
  auto& node = graph.node(n);
  const auto& from = graph.arcs_from(n);
  if (from.empty()) {
    node.feasible = true;
    return true;
  }
  for (ArcIndex a : from) {
    auto& h = graph.arc(a);
    if (h.active || h.inactivated) continue;
    const bool all_solved =
        std::all_of(h.children.begin(), h.children.end(), [&](NodeIndex c) { return graph.node(c).solved; });
    if (all_solved) {
      h.active = true;
      node.feasible = true;
    }
  }
  return node.feasible;
}

bool update_feasibility(AndOrGraph& graph, std::string_view node_id) {
  return update_feasibility(graph, graph.node_index(node_id));
}

void update_all_feasibility(AndOrGraph& graph) {
  for (NodeIndex n = 0; n < graph.nodes().size(); ++n) update_feasibility(graph, n);
}

std::vector<NodeIndex> propagate_solved(AndOrGraph& graph) {
  std::vector<NodeIndex> newly;
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto& h : graph.arcs()) {
      if (!h.done || graph.node(h.parent).solved) continue;
      const bool all_solved =
          std::all_of(h.children.begin(), h.children.end(), [&](NodeIndex c) { return graph.node(c).solved; });
      if (all_solved) {
        graph.node(h.parent).solved = true;
        newly.push_back(h.parent);
        changed = true;
      }
    }
  }
  return newly;
}

}  // namespace flexhrc::andor
