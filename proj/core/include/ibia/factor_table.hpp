#ifndef IBIA_FACTOR_TABLE_HPP
#define IBIA_FACTOR_TABLE_HPP

#include <cstdint>
#include <vector>

#include "ibia/errors.hpp"

namespace ibia {

using VarId = std::int32_t;

// Dense table over a set of discrete variables.  The scope is kept sorted by
// variable id and the layout is row-major over that order (last scope
// variable changes fastest).  Every table carries a log-space scale factor:
// the represented value of cell i is values[i] * exp(log_scale).  Operations
// return new tables; nothing mutates its inputs except normalize/fold_scale.
class FactorTable {
 public:
  FactorTable() = default;

  // scope must be strictly ascending; values.size() must match the product
  // of cards.  Throws capacity_error above 2^31 cells.
  FactorTable(std::vector<VarId> scope, std::vector<int> cards,
              std::vector<double> values, double log_scale = 0.0);

  // Table of all ones (identity for product).
  static FactorTable ones(std::vector<VarId> scope, std::vector<int> cards);

  // Build from a table whose scope is given in arbitrary order with
  // row-major values in that order (the layout used by the UAI format).
  static FactorTable from_unsorted(const std::vector<VarId>& scope,
                                   const std::vector<int>& cards,
                                   const std::vector<double>& values);

  const std::vector<VarId>& scope() const { return scope_; }
  const std::vector<int>& cards() const { return cards_; }
  const std::vector<double>& values() const { return values_; }
  double log_scale() const { return log_scale_; }
  std::size_t size() const { return values_.size(); }
  bool empty_scope() const { return scope_.empty(); }
  bool contains(VarId v) const;
  int card_of(VarId v) const;

  // Number of effective binary variables: sum of log2(card) over the scope.
  double size_bits() const;

  FactorTable product(const FactorTable& other) const;

  // Sum out everything not in keep (keep need not be sorted; non-scope ids
  // are ignored).
  FactorTable marginalize(const std::vector<VarId>& keep) const;
  FactorTable sum_out(VarId v) const;

  // Pointwise division; denom scope must be a subset of this scope.
  // 0/0 yields 0, x/0 with x != 0 throws numerical_error.
  FactorTable divide(const FactorTable& denom) const;

  // Slice at v == state and drop v from the scope.
  FactorTable reduce(VarId v, int state) const;

  // Zero all cells where v != state; scope unchanged.
  FactorTable observe(VarId v, int state) const;

  // Natural log of the total mass including the scale; -inf for all-zero.
  double total_log_mass() const;

  // Scale so the total mass is 1 and log_scale is 0.  All-zero tables are
  // left untouched (mass stays 0).
  void normalize();

  // Move magnitude into log_scale so max |value| == 1 (guards against
  // under/overflow in long chains of products).  No-op on all-zero tables.
  void fold_scale();

  // Cell value (without scale) at a full assignment indexed by variable id.
  double at_assignment(const std::vector<int>& state) const;
  std::size_t index_of_assignment(const std::vector<int>& state) const;

  // Max absolute difference of represented (scale-applied) values; scopes
  // must match.
  double max_abs_diff(const FactorTable& other) const;

 private:
  std::vector<VarId> scope_;
  std::vector<int> cards_;    // parallel to scope_
  std::vector<double> values_;
  double log_scale_ = 0.0;
};

}  // namespace ibia

#endif
