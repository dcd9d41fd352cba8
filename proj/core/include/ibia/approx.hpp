#ifndef IBIA_APPROX_HPP
#define IBIA_APPROX_HPP

#include <map>
#include <set>
#include <utility>
#include <vector>

#include "ibia/clique_forest.hpp"

namespace ibia {

// Mutual-information guidance for local marginalization.  MI is in nats;
// only the ordering matters, the base is fixed for determinism.
struct MiScores {
  // (variable, clique id) -> max MI between the variable and the other
  // interface members of that clique (0 when there are none).
  std::map<std::pair<VarId, int>, double> mlmi;
  // variable -> max MLMI over its containing cliques.
  std::map<VarId, double> max_mi;
};

MiScores mi_scores(const CliqueForest& ctf, const std::set<VarId>& iv,
                   const std::vector<int>& candidates);

struct ImEntry {
  std::vector<VarId> scope;   // frozen scope of the approximate clique
  std::vector<int> sources;   // clique ids in the forest that was approximated
  int successor = -1;         // clique id in the next forest (set later)
};

// One entry per clique of the approximate forest, keyed by its clique id.
struct InterfaceMap {
  std::map<int, ImEntry> entries;
};

struct ApproxResult {
  CliqueForest ctf;           // calibrated, clique sizes <= mcs_im (soft)
  InterfaceMap im;
  // Cliques kept above mcs_im because shrinking them would disconnect a
  // tree or strip an interface variable everywhere.
  std::vector<int> soft_exceed;
  // Sum of log normalization constants of input trees with no interface
  // clique; they carry evidence mass that must survive into PR.
  double dropped_log_weight = 0.0;
  // True when no variable was locally marginalized, i.e. the output is an
  // exact reduction of the input joint.
  bool exact_only = true;
};

// Reduce a calibrated forest to (roughly) mcs_im-sized cliques over the
// interface variables: exact marginalization by clique collapse where it
// fits, local marginalization guided by MI elsewhere.  Within-clique
// beliefs and per-tree normalization constants are preserved.  With
// `evidence` set, connectivity is preserved too; an over-limit clique made
// of interface variables only is then a hard failure.  `force` is a last
// resort for that deadlock: it applies the unrestricted marginalization
// rules even with evidence, trading tree connectivity for progress (split
// pieces keep normalized beliefs, so the weight sum is unchanged).
ApproxResult approximate_ctf(const CliqueForest& ctf_in,
                             const std::set<VarId>& iv, double mcs_im,
                             bool evidence, bool force = false);

// Fill in each entry's successor: the lowest-id clique of `next` containing
// the frozen scope.  Throws internal_error if none exists.
void update_interface_map(const CliqueForest& next, InterfaceMap& im);

}  // namespace ibia

#endif
