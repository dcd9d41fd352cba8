#ifndef IBIA_CLIQUE_FOREST_HPP
#define IBIA_CLIQUE_FOREST_HPP

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ibia/factor_table.hpp"

namespace ibia {

struct Clique {
  std::vector<VarId> scope;          // sorted
  std::vector<FactorTable> factors;  // assigned potentials
  std::optional<FactorTable> belief; // set by calibrate, kept normalized
};

struct CtfEdge {
  std::vector<VarId> sep;            // sorted; equals scope intersection
  std::optional<FactorTable> mu;     // sepset belief, kept normalized
};

// Forest of clique trees over a shared discrete domain.  Cliques carry
// stable integer ids; all iteration orders are deterministic (ascending id).
class CliqueForest {
 public:
  CliqueForest() = default;
  explicit CliqueForest(std::shared_ptr<const std::vector<int>> cards)
      : cards_(std::move(cards)) {}

  const std::shared_ptr<const std::vector<int>>& cards() const { return cards_; }
  int card(VarId v) const { return (*cards_)[std::size_t(v)]; }

  int add_clique(std::vector<VarId> scope);
  void remove_clique(int id);  // edges to it are dropped
  void add_edge(int a, int b); // sep = scope intersection
  void remove_edge(int a, int b);

  // Move factors and edges of old_id onto keep_id, then drop old_id.
  // Edges are re-created with sep = old sep (which must fit keep_id).
  void absorb_clique(int old_id, int keep_id);

  bool has_clique(int id) const { return cliques_.count(id) != 0; }
  Clique& clique(int id) { return cliques_.at(id); }
  const Clique& clique(int id) const { return cliques_.at(id); }
  CtfEdge& edge(int a, int b);
  const CtfEdge& edge(int a, int b) const;
  bool has_edge(int a, int b) const;

  std::vector<int> clique_ids() const;
  const std::set<int>& neighbors(int id) const { return adj_.at(id); }
  std::size_t num_cliques() const { return cliques_.size(); }

  std::vector<int> cliques_containing(VarId v) const;
  std::vector<VarId> all_vars() const;
  bool scope_contains(int id, VarId v) const;

  double clique_bits(int id) const;
  double max_clique_bits() const;

  // Connected components, each sorted ascending, ordered by smallest id.
  std::vector<std::vector<int>> trees() const;
  int tree_rep(int id) const;  // smallest clique id in the component

  // Structural audit: forest-ness, per-tree maximality, sepsets equal to
  // scope intersections, running intersection, factor scope coverage.
  // Throws internal_error describing the first violation.
  void check_valid() const;

  // Two-pass message passing per tree; stores normalized beliefs and sepset
  // tables and records each tree's log normalization constant (including
  // factor scale carried in from earlier rounds).
  void calibrate();
  bool calibrated() const;
  const std::map<int, double>& tree_log_weights() const { return tree_log_weight_; }
  double tree_log_weight(int rep) const { return tree_log_weight_.at(rep); }

  // Largest sepset disagreement max_e || marg(beta_i) - mu_e ||_inf.
  double max_calibration_residual() const;

  // Minimal connecting subgraph: per tree, the smallest subtree spanning
  // all cliques containing targets, with leaves whose target content is
  // covered by their neighbor pruned recursively.
  std::vector<int> msg_subgraph(const std::vector<VarId>& targets) const;

  // Normalized single-variable marginal from the lowest-id containing clique.
  FactorTable var_marginal(VarId v) const;

  // Product of beliefs over sepset tables for a connected set of cliques.
  FactorTable joint_over(const std::vector<int>& clique_set) const;

  std::string dump() const;

 private:
  std::shared_ptr<const std::vector<int>> cards_;
  std::map<int, Clique> cliques_;
  std::map<std::pair<int, int>, CtfEdge> edges_;
  std::map<int, std::set<int>> adj_;
  int next_id_ = 0;
  std::map<int, double> tree_log_weight_;

  static std::pair<int, int> key(int a, int b) {
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
  }
};

}  // namespace ibia

#endif
