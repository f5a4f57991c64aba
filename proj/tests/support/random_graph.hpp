#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include <json.hpp>

#include "flexhrc/andor/graph.hpp"
#include "flexhrc/andor/paths.hpp"

namespace flexhrc::testing {

/// Random acyclic AND/OR graph document: at most `max_nodes` nodes, at most
/// two arcs per node, integer weights in [0, 5], node 0 is the root and every
/// leaf starts solved.
nlohmann::json random_graph_document(std::uint64_t seed, int max_nodes = 12);

using ArcSet = std::set<andor::ArcIndex>;

/// Brute-force enumeration of every root-anchored path, expressed as arc
/// sets. Expands every arc choice combination recursively; shares no code
/// with the library's enumerator.
std::set<ArcSet> brute_force_paths(const andor::AndOrGraph& graph);

/// Residual cost of a path recomputed from scratch: the initial weight sum
/// minus the decrement of every node solved since load, in the order given.
double oracle_residual_cost(const andor::AndOrGraph& graph, const ArcSet& path_arcs,
                            const std::vector<andor::NodeIndex>& solved_since_load);

/// Node set implied by an arc set plus the root.
std::set<andor::NodeIndex> oracle_path_nodes(const andor::AndOrGraph& graph, const ArcSet& arcs);

}  // namespace flexhrc::testing
