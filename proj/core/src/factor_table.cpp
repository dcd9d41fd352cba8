#include "ibia/factor_table.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>

namespace ibia {

namespace {

constexpr std::size_t kMaxCells = std::size_t(1) << 31;

std::size_t checked_size(const std::vector<int>& cards) {
  std::size_t n = 1;
  for (int c : cards) {
    assert(c >= 1);
    if (n > kMaxCells / std::size_t(c))
      throw capacity_error("dense table exceeds 2^31 cells");
    n *= std::size_t(c);
  }
  return n;
}

// Odometer stepping a secondary index aligned with a subset of the primary
// scope.  strides[i] is the secondary stride of primary scope position i
// (0 when the variable is absent from the secondary scope).
struct SubIndex {
  std::vector<std::size_t> strides;
  std::size_t idx = 0;
};

}  // namespace

FactorTable::FactorTable(std::vector<VarId> scope, std::vector<int> cards,
                         std::vector<double> values, double log_scale)
    : scope_(std::move(scope)), cards_(std::move(cards)),
      values_(std::move(values)), log_scale_(log_scale) {
  assert(scope_.size() == cards_.size());
  assert(std::is_sorted(scope_.begin(), scope_.end()) &&
         std::adjacent_find(scope_.begin(), scope_.end()) == scope_.end());
  std::size_t n = checked_size(cards_);
  if (values_.size() != n)
    throw internal_error("table value count does not match cardinalities");
}

FactorTable FactorTable::ones(std::vector<VarId> scope, std::vector<int> cards) {
  std::size_t n = checked_size(cards);
  return FactorTable(std::move(scope), std::move(cards),
                     std::vector<double>(n, 1.0));
}

FactorTable FactorTable::from_unsorted(const std::vector<VarId>& scope,
                                       const std::vector<int>& cards,
                                       const std::vector<double>& values) {
  const std::size_t k = scope.size();
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scope[a] < scope[b]; });

  std::vector<VarId> sscope(k);
  std::vector<int> scards(k);
  for (std::size_t i = 0; i < k; ++i) {
    sscope[i] = scope[order[i]];
    scards[i] = cards[order[i]];
  }
  std::size_t n = checked_size(scards);
  if (values.size() != n)
    throw internal_error("table value count does not match cardinalities");

  // Stride of each original position in the original layout.
  std::vector<std::size_t> ostride(k, 1);
  for (std::size_t i = k; i-- > 1;)
    ostride[i - 1] = ostride[i] * std::size_t(cards[i]);

  std::vector<double> out(n);
  std::vector<int> state(k, 0);  // state in sorted order
  std::size_t oidx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = values[oidx];
    for (std::size_t d = k; d-- > 0;) {
      if (++state[d] < scards[d]) {
        oidx += ostride[order[d]];
        break;
      }
      state[d] = 0;
      oidx -= ostride[order[d]] * std::size_t(scards[d] - 1);
    }
  }
  return FactorTable(std::move(sscope), std::move(scards), std::move(out));
}

bool FactorTable::contains(VarId v) const {
  return std::binary_search(scope_.begin(), scope_.end(), v);
}

int FactorTable::card_of(VarId v) const {
  auto it = std::lower_bound(scope_.begin(), scope_.end(), v);
  assert(it != scope_.end() && *it == v);
  return cards_[std::size_t(it - scope_.begin())];
}

double FactorTable::size_bits() const {
  double b = 0;
  for (int c : cards_) b += std::log2(double(c));
  return b;
}

FactorTable FactorTable::product(const FactorTable& other) const {
  std::vector<VarId> scope;
  std::set_union(scope_.begin(), scope_.end(), other.scope_.begin(),
                 other.scope_.end(), std::back_inserter(scope));
  const std::size_t k = scope.size();
  std::vector<int> cards(k);
  SubIndex a, b;
  a.strides.assign(k, 0);
  b.strides.assign(k, 0);

  // Strides of each operand in its own layout.
  auto own_strides = [](const FactorTable& f) {
    std::vector<std::size_t> s(f.scope_.size(), 1);
    for (std::size_t i = f.scope_.size(); i-- > 1;)
      s[i - 1] = s[i] * std::size_t(f.cards_[i]);
    return s;
  };
  auto sa = own_strides(*this), sb = own_strides(other);
  for (std::size_t i = 0; i < k; ++i) {
    auto ia = std::lower_bound(scope_.begin(), scope_.end(), scope[i]);
    auto ib = std::lower_bound(other.scope_.begin(), other.scope_.end(), scope[i]);
    int card = -1;
    if (ia != scope_.end() && *ia == scope[i]) {
      std::size_t p = std::size_t(ia - scope_.begin());
      a.strides[i] = sa[p];
      card = cards_[p];
    }
    if (ib != other.scope_.end() && *ib == scope[i]) {
      std::size_t p = std::size_t(ib - other.scope_.begin());
      b.strides[i] = sb[p];
      if (card >= 0 && other.cards_[p] != card)
        throw internal_error("cardinality mismatch in product");
      card = other.cards_[p];
    }
    cards[i] = card;
  }

  std::size_t n = checked_size(cards);
  std::vector<double> out(n);
  std::vector<int> state(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = values_[a.idx] * other.values_[b.idx];
    for (std::size_t d = k; d-- > 0;) {
      if (++state[d] < cards[d]) {
        a.idx += a.strides[d];
        b.idx += b.strides[d];
        break;
      }
      state[d] = 0;
      a.idx -= a.strides[d] * std::size_t(cards[d] - 1);
      b.idx -= b.strides[d] * std::size_t(cards[d] - 1);
    }
  }
  return FactorTable(std::move(scope), std::move(cards), std::move(out),
                     log_scale_ + other.log_scale_);
}

FactorTable FactorTable::marginalize(const std::vector<VarId>& keep) const {
  std::vector<VarId> kscope;
  std::vector<int> kcards;
  for (std::size_t i = 0; i < scope_.size(); ++i) {
    if (std::find(keep.begin(), keep.end(), scope_[i]) != keep.end()) {
      kscope.push_back(scope_[i]);
      kcards.push_back(cards_[i]);
    }
  }
  std::size_t n = checked_size(kcards);
  std::vector<double> out(n, 0.0);

  std::vector<std::size_t> kstride(scope_.size(), 0);
  {
    std::vector<std::size_t> s(kscope.size(), 1);
    for (std::size_t i = kscope.size(); i-- > 1;)
      s[i - 1] = s[i] * std::size_t(kcards[i]);
    std::size_t p = 0;
    for (std::size_t i = 0; i < scope_.size(); ++i)
      if (p < kscope.size() && scope_[i] == kscope[p]) kstride[i] = s[p++];
  }

  std::vector<int> state(scope_.size(), 0);
  std::size_t kidx = 0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    out[kidx] += values_[i];
    for (std::size_t d = scope_.size(); d-- > 0;) {
      if (++state[d] < cards_[d]) {
        kidx += kstride[d];
        break;
      }
      state[d] = 0;
      kidx -= kstride[d] * std::size_t(cards_[d] - 1);
    }
  }
  return FactorTable(std::move(kscope), std::move(kcards), std::move(out),
                     log_scale_);
}

FactorTable FactorTable::sum_out(VarId v) const {
  std::vector<VarId> keep;
  for (VarId x : scope_)
    if (x != v) keep.push_back(x);
  return marginalize(keep);
}

FactorTable FactorTable::divide(const FactorTable& denom) const {
  if (!std::includes(scope_.begin(), scope_.end(), denom.scope_.begin(),
                     denom.scope_.end()))
    throw internal_error("divide: denominator scope not a subset");

  std::vector<std::size_t> dstride(scope_.size(), 0);
  {
    std::vector<std::size_t> s(denom.scope_.size(), 1);
    for (std::size_t i = denom.scope_.size(); i-- > 1;)
      s[i - 1] = s[i] * std::size_t(denom.cards_[i]);
    std::size_t p = 0;
    for (std::size_t i = 0; i < scope_.size(); ++i)
      if (p < denom.scope_.size() && scope_[i] == denom.scope_[p])
        dstride[i] = s[p++];
    if (p != denom.scope_.size())
      throw internal_error("divide: scope alignment failed");
  }

  std::vector<double> out(values_.size());
  std::vector<int> state(scope_.size(), 0);
  std::size_t didx = 0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    double d = denom.values_[didx];
    if (d == 0.0) {
      if (values_[i] != 0.0)
        throw numerical_error("divide: nonzero mass over zero");
      out[i] = 0.0;
    } else {
      out[i] = values_[i] / d;
    }
    for (std::size_t k = scope_.size(); k-- > 0;) {
      if (++state[k] < cards_[k]) {
        didx += dstride[k];
        break;
      }
      state[k] = 0;
      didx -= dstride[k] * std::size_t(cards_[k] - 1);
    }
  }
  return FactorTable(scope_, cards_, std::move(out),
                     log_scale_ - denom.log_scale_);
}

FactorTable FactorTable::reduce(VarId v, int state) const {
  auto it = std::lower_bound(scope_.begin(), scope_.end(), v);
  if (it == scope_.end() || *it != v)
    throw internal_error("reduce: variable not in scope");
  std::size_t pos = std::size_t(it - scope_.begin());
  if (state < 0 || state >= cards_[pos])
    throw internal_error("reduce: state out of range");

  std::vector<VarId> scope;
  std::vector<int> cards;
  for (std::size_t i = 0; i < scope_.size(); ++i) {
    if (i == pos) continue;
    scope.push_back(scope_[i]);
    cards.push_back(cards_[i]);
  }
  std::size_t inner = 1;
  for (std::size_t i = pos + 1; i < scope_.size(); ++i)
    inner *= std::size_t(cards_[i]);
  std::size_t vcard = std::size_t(cards_[pos]);

  std::vector<double> out;
  out.reserve(values_.size() / vcard);
  for (std::size_t base = 0; base < values_.size(); base += inner * vcard)
    for (std::size_t i = 0; i < inner; ++i)
      out.push_back(values_[base + std::size_t(state) * inner + i]);
  return FactorTable(std::move(scope), std::move(cards), std::move(out),
                     log_scale_);
}

FactorTable FactorTable::observe(VarId v, int state) const {
  auto it = std::lower_bound(scope_.begin(), scope_.end(), v);
  if (it == scope_.end() || *it != v)
    throw internal_error("observe: variable not in scope");
  std::size_t pos = std::size_t(it - scope_.begin());
  std::size_t inner = 1;
  for (std::size_t i = pos + 1; i < scope_.size(); ++i)
    inner *= std::size_t(cards_[i]);
  std::size_t vcard = std::size_t(cards_[pos]);

  std::vector<double> out(values_);
  for (std::size_t base = 0; base < out.size(); base += inner * vcard)
    for (std::size_t s = 0; s < vcard; ++s) {
      if (int(s) == state) continue;
      for (std::size_t i = 0; i < inner; ++i) out[base + s * inner + i] = 0.0;
    }
  return FactorTable(scope_, cards_, std::move(out), log_scale_);
}

double FactorTable::total_log_mass() const {
  double s = 0;
  for (double v : values_) s += v;
  if (s <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(s) + log_scale_;
}

void FactorTable::normalize() {
  double s = 0;
  for (double v : values_) s += v;
  if (s <= 0.0) return;
  for (double& v : values_) v /= s;
  log_scale_ = 0.0;
}

void FactorTable::fold_scale() {
  double m = 0;
  for (double v : values_) m = std::max(m, std::abs(v));
  if (m <= 0.0) return;
  for (double& v : values_) v /= m;
  log_scale_ += std::log(m);
}

std::size_t FactorTable::index_of_assignment(const std::vector<int>& state) const {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < scope_.size(); ++i) {
    assert(std::size_t(scope_[i]) < state.size());
    idx = idx * std::size_t(cards_[i]) + std::size_t(state[scope_[i]]);
  }
  return idx;
}

double FactorTable::at_assignment(const std::vector<int>& state) const {
  return values_[index_of_assignment(state)];
}

double FactorTable::max_abs_diff(const FactorTable& other) const {
  if (scope_ != other.scope_)
    throw internal_error("max_abs_diff: scope mismatch");
  double sa = std::exp(log_scale_), sb = std::exp(other.log_scale_);
  double m = 0;
  for (std::size_t i = 0; i < values_.size(); ++i)
    m = std::max(m, std::abs(values_[i] * sa - other.values_[i] * sb));
  return m;
}

}  // namespace ibia
