#include "flexhrc/andor/paths.hpp"

#include <algorithm>
#include <set>

#include "flexhrc/error.hpp"

namespace flexhrc::andor {

using nlohmann::json;

bool CooperationPath::contains_node(NodeIndex n) const {
  return std::find(nodes.begin(), nodes.end(), n) != nodes.end();
}

bool CooperationPath::contains_arc(ArcIndex a) const {
  return std::find(arcs.begin(), arcs.end(), a) != arcs.end();
}

std::optional<ArcIndex> CooperationPath::arc_from(const AndOrGraph& graph, NodeIndex n) const {
  for (ArcIndex a : arcs)
    if (graph.arc(a).parent == n) return a;
  return std::nullopt;
}

std::optional<ArcIndex> CooperationPath::arc_into(const AndOrGraph& graph, NodeIndex n) const {
  std::optional<ArcIndex> best;
  for (ArcIndex a : arcs) {
    const auto& ch = graph.arc(a).children;
    if (std::find(ch.begin(), ch.end(), n) != ch.end() && (!best || a < *best)) best = a;
  }
  return best;
}

bool CooperationPath::abandoned(const AndOrGraph& graph) const {
  return std::any_of(arcs.begin(), arcs.end(), [&](ArcIndex a) { return graph.arc(a).inactivated; });
}

namespace {

struct PartialPath {
  CooperationPath path;
  std::vector<bool> explored;  // parallel to path.nodes
};

void add_node(PartialPath& p, NodeIndex n) {
  if (p.path.contains_node(n)) return;
  p.path.nodes.push_back(n);
  p.explored.push_back(false);
}

void add_arc(const AndOrGraph& graph, PartialPath& p, ArcIndex a) {
  p.path.arcs.push_back(a);
  p.path.cost += graph.arc(a).weight;
  for (NodeIndex c : graph.arc(a).children) add_node(p, c);
}

}  // namespace

PathSet generate_all_paths(const AndOrGraph& graph) {
  std::vector<PartialPath> work;
  {
    PartialPath first;
    add_node(first, graph.root());
    work.push_back(std::move(first));
  }

  // Each round expands the first unexplored node of the first incomplete path.
  // A fork replaces that path in place with one copy per alternative arc, so
  // the list stays in document order of arc choices.
  for (;;) {
    std::size_t pi = work.size();
    std::size_t ni = 0;
    for (std::size_t i = 0; i < work.size() && pi == work.size(); ++i) {
      for (std::size_t k = 0; k < work[i].explored.size(); ++k) {
        if (!work[i].explored[k]) {
          pi = i;
          ni = k;
          break;
        }
      }
    }
    if (pi == work.size()) break;

    PartialPath& p = work[pi];
    const NodeIndex n = p.path.nodes[ni];
    p.path.cost += graph.node(n).weight;
    p.explored[ni] = true;

    const auto& alternatives = graph.arcs_from(n);
    if (alternatives.empty()) continue;
    if (alternatives.size() == 1) {
      add_arc(graph, p, alternatives.front());
      continue;
    }
    const PartialPath base = p;
    std::vector<PartialPath> forks;
    forks.reserve(alternatives.size());
    for (ArcIndex a : alternatives) {
      PartialPath copy = base;
      add_arc(graph, copy, a);
      forks.push_back(std::move(copy));
    }
    work.erase(work.begin() + static_cast<std::ptrdiff_t>(pi));
    work.insert(work.begin() + static_cast<std::ptrdiff_t>(pi), std::make_move_iterator(forks.begin()),
                std::make_move_iterator(forks.end()));
  }

  PathSet out;
  out.reserve(work.size());
  for (std::size_t i = 0; i < work.size(); ++i) {
    work[i].path.id = "P" + std::to_string(i);
    out.push_back(std::move(work[i].path));
  }
  return out;
}

double path_weight(const AndOrGraph& graph, const CooperationPath& path) {
  double w = 0.0;
  for (NodeIndex n : path.nodes) w += graph.node(n).weight;
  for (ArcIndex a : path.arcs) w += graph.arc(a).weight;
  return w;
}

double cost_decrement(const AndOrGraph& graph, const CooperationPath& path, NodeIndex solved) {
  const double wn = graph.node(solved).weight;
  if (solved == graph.root()) return wn;
  double hm = 0.0;
  for (ArcIndex a : graph.arcs_into(solved)) hm = std::max(hm, graph.arc(a).weight);
  const auto above = path.arc_into(graph, solved);
  const double wh = above ? graph.arc(*above).weight : hm;
  return wn + hm - wh;
}

std::size_t update_all_paths(const AndOrGraph& graph, PathSet& paths, NodeIndex solved) {
  std::size_t updated = 0;
  for (auto& p : paths) {
    if (!p.contains_node(solved)) continue;
    p.cost -= cost_decrement(graph, p, solved);
    ++updated;
  }
  return updated;
}

std::optional<PathIndex> find_optimal_path(const AndOrGraph& graph, const PathSet& paths) {
  std::optional<PathIndex> best;
  for (PathIndex i = 0; i < paths.size(); ++i) {
    if (paths[i].abandoned(graph)) continue;
    if (!best || paths[i].cost < paths[*best].cost) best = i;
  }
  return best;
}

void apply_color_tags(const AndOrGraph& graph, PathSet& paths, const json& tags) {
  if (!tags.is_object()) return;
  for (auto it = tags.begin(); it != tags.end(); ++it) {
    std::set<ArcIndex> wanted;
    for (const auto& id : it.value()) wanted.insert(graph.arc_index(id.get<std::string>()));
    for (auto& p : paths) {
      std::set<ArcIndex> have(p.arcs.begin(), p.arcs.end());
      if (have == wanted) p.color_tag = it.key();
    }
  }
}

json path_report(const AndOrGraph& graph, const PathSet& paths) {
  json out = json::array();
  for (const auto& p : paths) {
    json jp{{"id", p.id}, {"cost", p.cost}, {"abandoned", p.abandoned(graph)}};
    jp["color"] = p.color_tag ? json(*p.color_tag) : json(nullptr);
    jp["nodes"] = json::array();
    for (NodeIndex n : p.nodes) jp["nodes"].push_back(graph.node(n).id);
    jp["arcs"] = json::array();
    for (ArcIndex a : p.arcs) jp["arcs"].push_back(graph.arc(a).id);
    out.push_back(std::move(jp));
  }
  return out;
}

}  // namespace flexhrc::andor
