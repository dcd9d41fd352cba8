#ifndef IBIA_GRAPH_UTILS_HPP
#define IBIA_GRAPH_UTILS_HPP

#include <map>
#include <set>
#include <vector>

#include "ibia/bn_model.hpp"

namespace ibia {

// Simple undirected graph over variable ids.
struct UGraph {
  std::map<VarId, std::set<VarId>> adj;

  void add_node(VarId v) { adj[v]; }
  void add_edge(VarId a, VarId b) {
    if (a == b) return;
    adj[a].insert(b);
    adj[b].insert(a);
  }
  bool has_edge(VarId a, VarId b) const {
    auto it = adj.find(a);
    return it != adj.end() && it->second.count(b) != 0;
  }
};

// Undirected skeleton plus parent-marriage edges (scopes of the tables,
// which may be narrower than the structural family after slicing).
UGraph moralize(const BayesNet& net);

// Greedy elimination order: fewest fill edges, ties by fewest neighbors,
// then lowest id.  Fill counts are recomputed only for vertices whose
// neighborhood changed.  If fill_edges is given, the added edges are
// recorded there.
std::vector<VarId> min_fill_order(UGraph g,
                                  std::vector<std::pair<VarId, VarId>>* fill_edges = nullptr);

// Cliques {v} + nbrs(v) recorded while eliminating along order, filtered to
// maximal ones.  Each clique is sorted.
std::vector<std::vector<VarId>> elimination_cliques(UGraph g,
                                                    const std::vector<VarId>& order);

// Effective binary size of a scope.
double scope_bits(const std::vector<VarId>& scope, const std::vector<int>& cards);

}  // namespace ibia

#endif
