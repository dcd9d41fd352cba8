#ifndef IBIA_INCR_BUILD_HPP
#define IBIA_INCR_BUILD_HPP

#include <functional>
#include <set>

#include "ibia/bn_model.hpp"
#include "ibia/clique_forest.hpp"

namespace ibia {

struct BuildOptions {
  double mcs_p = 20.0;              // hard clique-size cap (binary vars)
  std::set<VarId> evidence;         // observed vars get priority on deferral
  // Vars placed in an earlier forest of the sequence; treated as present
  // even when the approximation dropped them from the current forest.
  std::set<VarId> placed;
  // Invoked after every structural batch (for validity monitoring).
  std::function<void(const CliqueForest&)> observer;
};

struct ModifyResult {
  std::vector<VarId> added;
  std::vector<VarId> deferred;
};

// Add one batch of variables (all parents already in the forest) while
// keeping it a valid clique tree forest and every clique within mcs_p.
// Variables that cannot fit are deferred, never partially applied.
ModifyResult modify_ctf(CliqueForest& ctf, const BayesNet& dag,
                        const std::vector<VarId>& batch, const BuildOptions& opt);

struct BuildResult {
  std::vector<VarId> added;
  std::vector<VarId> interface;  // vars in the forest with children outside it
  std::vector<VarId> remaining;  // dag vars still outside the forest
};

// Grow the forest as far as the size cap allows: parentless variables start
// as disjoint cliques, then ready variables are added in ascending
// topological level, smallest level first.
BuildResult build_ctf(CliqueForest& ctf, const BayesNet& dag,
                      const BuildOptions& opt);

struct CompileComparison {
  double mcs_incremental;  // max clique bits of the given forest
  double mcs_full;         // max clique bits of a one-shot min-fill compile
  double delta;            // incremental minus full
};

// Compare the forest's max clique size against a from-scratch greedy
// compilation of the induced submodel over the same variables.
CompileComparison compare_full_compile(const BayesNet& dag,
                                       const CliqueForest& ctf);

}  // namespace ibia

#endif
