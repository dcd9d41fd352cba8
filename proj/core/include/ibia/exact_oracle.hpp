#ifndef IBIA_EXACT_ORACLE_HPP
#define IBIA_EXACT_ORACLE_HPP

#include <map>

#include "ibia/bn_model.hpp"
#include "ibia/clique_forest.hpp"

namespace ibia {

// Brute-force reference answers for small models.  Refuses joints above
// 24 effective binary variables.
struct JointOracle {
  FactorTable joint;  // unnormalized when evidence is baked in

  double log_pr() const { return joint.total_log_mass(); }
  FactorTable marginal(VarId v) const;  // normalized
  FactorTable marginal_scope(const std::vector<VarId>& scope) const;  // normalized
};

// Product of all tables of the fragment (evidence, if any, is expected to
// already be baked into the tables as zeroed rows).
JointOracle enumerate_joint(const BayesNet& dag);

// Product of all original tables with observations applied as zero-outs.
JointOracle enumerate_joint(const BayesNet& net, const std::map<VarId, int>& evidence);

// One-shot compilation of the whole fragment: moralize, greedy min-fill
// triangulation, maximal elimination cliques, maximum-weight spanning
// forest, table assignment, calibration.
CliqueForest full_compile(const BayesNet& dag);

}  // namespace ibia

#endif
