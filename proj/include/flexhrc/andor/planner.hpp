#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "flexhrc/andor/graph.hpp"
#include "flexhrc/andor/paths.hpp"

namespace flexhrc::andor {

/// Outcome of an online planning step.
struct Suggestion {
  bool graph_solved = false;
  std::optional<NodeIndex> node;  // n*
  std::optional<PathIndex> path;  // the optimal path n* was taken from
  std::optional<ArcIndex> arc;    // the arc through which n* is to be solved
};

/// Online step after `last_solved` became solved (nullopt for the first call).
/// Solving the root marks the graph solved and yields no suggestion. Otherwise
/// feasibility is recomputed, path costs updated, and the first feasible
/// unsolved node of the cheapest surviving path is returned, taking only
/// nodes whose arc on that path can currently accept actions.
/// Throws ErrorKind::deadlock when no surviving path offers such a node.
Suggestion next_suggested_node(AndOrGraph& graph, PathSet& paths, std::optional<NodeIndex> last_solved);

/// Suggestion lookup without mutating costs or flags.
Suggestion find_suggestion(const AndOrGraph& graph, const PathSet& paths);

struct StateChanges {
  std::vector<ArcIndex> matched;
  std::vector<ArcIndex> done;
  std::vector<ArcIndex> inactivated;
  std::vector<ArcIndex> repeated;
  std::vector<NodeIndex> solved;
};

/// Arcs that would accept `token` as their next action right now: the first
/// unended action of ordered arcs, any unended member of unordered arcs.
std::vector<ArcIndex> matching_arcs(const AndOrGraph& graph, std::string_view token, Agent agent);

/// Registers the end of an action against every matchable arc. A match marks
/// the action ended; an ordered arc that does not match is inactivated when
/// its next action belongs to the same agent; an action already ended on an arc counts as a repetition there (more than 3
/// raises ErrorKind::cooperation_failed). Done arcs solve their parent.
/// When `only_arc` is given, matches on other arcs are treated as mismatches.
StateChanges register_action_ended(AndOrGraph& graph, std::string_view token, Agent agent,
                                   std::optional<ArcIndex> only_arc = std::nullopt);

/// Repetition accounting for a token that no arc accepts: every matchable arc
/// on which the action already ended counts one repetition; nothing is
/// inactivated. Throws ErrorKind::cooperation_failed past kMaxRepetitions.
std::vector<ArcIndex> register_repetition(AndOrGraph& graph, std::string_view token, Agent agent);

inline constexpr int kMaxRepetitions = 3;

}  // namespace flexhrc::andor
