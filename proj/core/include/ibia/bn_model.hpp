#ifndef IBIA_BN_MODEL_HPP
#define IBIA_BN_MODEL_HPP

#include <map>
#include <memory>
#include <vector>

#include "ibia/factor_table.hpp"

namespace ibia {

// Directed acyclic model over a subset of a global variable id space.
// Cardinalities live in a shared global table so factors from different
// fragments stay compatible.
struct BayesNet {
  std::shared_ptr<const std::vector<int>> cards;  // indexed by VarId
  std::vector<VarId> vars;                        // sorted
  std::map<VarId, std::vector<VarId>> parents;    // sorted parent lists
  std::map<VarId, FactorTable> cpds;  // scope subseteq {v} + parents[v]

  int card(VarId v) const { return (*cards)[std::size_t(v)]; }
  bool has_var(VarId v) const;
  std::map<VarId, std::vector<VarId>> children() const;

  // Longest-path depth: 0 for parentless, else 1 + max over parents.
  std::map<VarId, int> topo_levels() const;
  std::vector<VarId> parentless() const;

  // Throws internal_error on dangling parents, scope violations or cycles.
  void check() const;
};

// Renaming of a removed variable onto a surviving source variable:
// state(v) == perm[state(source)].
struct CollapsedVar {
  VarId source;
  std::vector<int> perm;
};

struct SimplifiedModel {
  std::vector<BayesNet> dags;                 // weakly connected pieces
  std::vector<std::vector<VarId>> evidence;   // per dag: observed vars in it
  std::map<VarId, int> fixed;        // vars whose state is known (incl. evidence)
  std::map<VarId, CollapsedVar> collapsed;    // removed equality/negation chains
  bool inconsistent = false;                  // some observation has prob 0
};

// Applies, in order: observation slicing with fixed-state propagation to a
// fixed point, conditional-independence edge removal, equality/negation
// chain collapse, a final slicing pass, then a split into weakly connected
// components.  Evidence maps variable id to observed state.
SimplifiedModel simplify(const BayesNet& net, const std::map<VarId, int>& evidence);

}  // namespace ibia

#endif
