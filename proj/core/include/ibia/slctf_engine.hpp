#ifndef IBIA_SLCTF_ENGINE_HPP
#define IBIA_SLCTF_ENGINE_HPP

#include <chrono>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include "ibia/approx.hpp"
#include "ibia/bn_model.hpp"
#include "ibia/clique_forest.hpp"

namespace ibia {

enum class QueryTask { PR, MAR_P, MAR_E };

struct EngineOptions {
  double mcs_p = 20.0;   // clique-size cap while building
  double mcs_im = 15.0;  // soft cap after approximation
  // When a forest accepts no new variable, the previous approximation is
  // redone with mcs_im lowered one bit at a time down to this floor.
  double mcs_im_floor = 1.0;
  bool all_links = false;           // update via every link, skip the cover
  double link_diff_threshold = 1e-4;  // marginal diff below which a link
                                      // variable is considered consistent
  // Zero means no deadline; checked between pipeline stages.
  std::chrono::steady_clock::time_point deadline{};
  // Invoked with each calibrated forest as it is appended.
  std::function<void(int k, const CliqueForest&)> observer;
};

// Sequence of linked clique tree forests for one connected dag.
struct Slctf {
  std::vector<CliqueForest> ctfs;  // calibrated, pre-approximation forests
  std::vector<InterfaceMap> ims;   // ims[k] links ctfs[k] to ctfs[k+1]
  int i_e = 0;  // 1-based index of the last forest receiving new evidence;
                // 0 = the dag has no evidence
  // Log mass of trees that carried no interface clique into the next forest.
  double dropped_log_weight = 0.0;
  // Per approximation step: whether it avoided local marginalization.
  std::vector<bool> approx_exact_only;
  std::map<VarId, int> first_ctf;  // var -> 0-based index of first forest
  bool evidence = false;           // built with the evidence flag
};

// Repeated build / calibrate / approximate until every dag variable is
// placed.  Interface maps are kept when E; successors are resolved only for
// the posterior-marginal query.  Throws internal_error if an iteration
// places nothing, timeout_error past the deadline.
Slctf construct_slctf(const BayesNet& dag, const std::set<VarId>& evid_vars,
                      bool E, QueryTask query, const EngineOptions& opt);

// ln of the dag's evidence mass: dropped-tree weights plus the tree
// weights of the last forest.  -inf when the evidence is inconsistent.
double slctf_log_pr(const Slctf& s);

// Prior marginals, each read from the first forest containing the variable.
std::map<VarId, FactorTable> slctf_mar_p(const Slctf& s);

// Posterior marginals: forests before i_e are belief-updated backward
// through the interface maps first (mutates the stored forests), then each
// variable is read from its first containing forest.
std::map<VarId, FactorTable> slctf_mar_e(Slctf& s, const EngineOptions& opt);

// One backward-update link: source clique C in ctf_k tied to the successor
// of interface entry C' via the link variables C ∩ C'.
struct UpdateLink {
  int clique = -1;            // C, clique id in ctf_k
  int entry = -1;             // id of C' in the interface map
  std::vector<VarId> links;   // C ∩ scope(C'), sorted
  double diff = 0.0;          // max link-variable marginal difference
};

// Link choice per the update heuristics: variables whose marginals already
// agree are dropped, a greedy clique cover of the rest is taken, links are
// ordered by ascending difference, and every tree of ctf_k keeps at least
// one link.  all_links keeps every candidate instead of the cover.
std::vector<UpdateLink> select_update_links(const InterfaceMap& im,
                                            const CliqueForest& ctf_k,
                                            const CliqueForest& ctf_k1,
                                            const EngineOptions& opt);

// Combined answer over all dags of a simplified model.
struct CtfStats {
  int n_ctf = 0;
  int i_e = 0;
  double max_bits = 0.0;
};

struct QueryResult {
  double log_pr = 0.0;  // natural log; -inf when evidence has mass zero
  bool pr_zero = false;
  std::map<VarId, FactorTable> marginals;  // per original variable
  std::vector<CtfStats> per_dag;
  double elapsed_s = 0.0;
};

// Full pipeline: simplify, split, per-dag sequence construction, query
// dispatch, then mapping fixed and collapsed variables back to the
// original id space.
QueryResult infer(const BayesNet& net, const std::map<VarId, int>& evidence,
                  QueryTask task, const EngineOptions& opt);

}  // namespace ibia

#endif
