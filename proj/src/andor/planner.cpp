#include "flexhrc/andor/planner.hpp"

#include <algorithm>
#include <numeric>

#include "flexhrc/error.hpp"

namespace flexhrc::andor {

namespace {

bool accepts(const HyperArc& h, std::string_view token, Agent agent) {
  if (!h.matchable()) return false;
  if (h.ordered) {
    const ActionSpec* next = h.first_unended();
    return next && next->agent == agent && next->answers_to(token);
  }
  return std::any_of(h.actions.begin(), h.actions.end(), [&](const ActionSpec& a) {
    return !a.ended && a.agent == agent && a.answers_to(token);
  });
}

ActionSpec* accepting_action(HyperArc& h, std::string_view token, Agent agent) {
  if (h.ordered) return h.first_unended();
  for (auto& a : h.actions)
    if (!a.ended && a.agent == agent && a.answers_to(token)) return &a;
  return nullptr;
}

bool already_ended(const HyperArc& h, std::string_view token, Agent agent) {
  return std::any_of(h.actions.begin(), h.actions.end(),
                     [&](const ActionSpec& a) { return a.ended && a.agent == agent && a.answers_to(token); });
}

void count_repetition(HyperArc& h) {
  ++h.repetition_count;
  if (h.repetition_count > kMaxRepetitions)
    throw Error(ErrorKind::cooperation_failed,
                "arc " + h.id + " repeated more than " + std::to_string(kMaxRepetitions) + " times");
}

}  // namespace

Suggestion find_suggestion(const AndOrGraph& graph, const PathSet& paths) {
  Suggestion s;
  if (graph.solved()) {
    s.graph_solved = true;
    return s;
  }
  // Surviving paths by (cost, index); the first one offering a feasible
  // unsolved node wins. Normally that is the optimal path itself.
  std::vector<PathIndex> order;
  for (PathIndex i = 0; i < paths.size(); ++i)
    if (!paths[i].abandoned(graph)) order.push_back(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](PathIndex a, PathIndex b) { return paths[a].cost < paths[b].cost; });
  for (PathIndex pi : order) {
    for (NodeIndex n : paths[pi].nodes) {
      const auto& node = graph.node(n);
      if (!node.feasible || node.solved) continue;
      // The node must be reachable through this path's own arc; feasibility
      // gained through another plan's arc does not count here.
      const auto arc = paths[pi].arc_from(graph, n);
      if (arc && graph.arc(*arc).matchable()) {
        s.node = n;
        s.path = pi;
        s.arc = arc;
        return s;
      }
    }
  }
  throw Error(ErrorKind::deadlock, "no feasible unsolved node on any surviving path");
}

Suggestion next_suggested_node(AndOrGraph& graph, PathSet& paths, std::optional<NodeIndex> last_solved) {
  if (last_solved) {
    graph.node(*last_solved).solved = true;
    update_all_paths(graph, paths, *last_solved);
    if (*last_solved == graph.root()) {
      graph.set_solved(true);
      Suggestion s;
      s.graph_solved = true;
      return s;
    }
  }
  update_all_feasibility(graph);
  return find_suggestion(graph, paths);
}

std::vector<ArcIndex> matching_arcs(const AndOrGraph& graph, std::string_view token, Agent agent) {
  std::vector<ArcIndex> out;
  for (ArcIndex a = 0; a < graph.arcs().size(); ++a)
    if (accepts(graph.arc(a), token, agent)) out.push_back(a);
  return out;
}

StateChanges register_action_ended(AndOrGraph& graph, std::string_view token, Agent agent,
                                   std::optional<ArcIndex> only_arc) {
  if (!graph.knows_action(token, agent))
    throw Error(ErrorKind::unknown_id, std::string(to_string(agent)) + " action '" + std::string(token) + "'");

  StateChanges changes;
  for (ArcIndex a = 0; a < graph.arcs().size(); ++a) {
    HyperArc& h = graph.arc(a);
    if (!h.matchable()) continue;
    const bool allowed = !only_arc || *only_arc == a;
    if (allowed && accepts(h, token, agent)) {
      accepting_action(h, token, agent)->ended = true;
      changes.matched.push_back(a);
      if (!h.first_unended()) {
        h.done = true;
        changes.done.push_back(a);
      }
      continue;
    }
    if (already_ended(h, token, agent)) {
      count_repetition(h);
      changes.repeated.push_back(a);
      continue;
    }
    // Only an action of the agent the arc waits for can break its order; a
    // robot completion says nothing about the next human step and vice versa.
    if (const ActionSpec* next = h.ordered ? h.first_unended() : nullptr; next && next->agent == agent) {
      h.inactivated = true;
      changes.inactivated.push_back(a);
    }
  }
  changes.solved = propagate_solved(graph);
  return changes;
}

std::vector<ArcIndex> register_repetition(AndOrGraph& graph, std::string_view token, Agent agent) {
  std::vector<ArcIndex> repeated;
  for (ArcIndex a = 0; a < graph.arcs().size(); ++a) {
    HyperArc& h = graph.arc(a);
    if (!h.matchable() || !already_ended(h, token, agent)) continue;
    count_repetition(h);
    repeated.push_back(a);
  }
  return repeated;
}

}  // namespace flexhrc::andor
