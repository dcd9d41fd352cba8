#include <cmath>
#include <random>

#include "doctest.h"
#include "ibia/factor_table.hpp"

using namespace ibia;

namespace {

// All assignments of a global state vector covering vars 0..n-1.
template <class F>
void for_all_states(const std::vector<int>& cards, F&& f) {
  std::vector<int> state(cards.size(), 0);
  while (true) {
    f(state);
    std::size_t d = cards.size();
    while (d-- > 0) {
      if (++state[d] < cards[d]) break;
      state[d] = 0;
      if (d == 0) return;
    }
  }
}

FactorTable random_table(std::mt19937_64& rng, std::vector<VarId> scope,
                         const std::vector<int>& gcards, bool with_zeros = false) {
  std::vector<int> cards;
  std::size_t n = 1;
  for (VarId v : scope) {
    cards.push_back(gcards[std::size_t(v)]);
    n *= std::size_t(gcards[std::size_t(v)]);
  }
  std::uniform_real_distribution<double> val(0.0, 1.0);
  std::vector<double> vals(n);
  for (double& x : vals) {
    x = val(rng);
    if (with_zeros && x < 0.3) x = 0.0;
  }
  return FactorTable(std::move(scope), std::move(cards), std::move(vals));
}

}  // namespace

TEST_CASE("product matches assignment-wise oracle") {
  std::vector<int> gcards = {2, 3, 2, 4};
  std::mt19937_64 rng(7);
  FactorTable a = random_table(rng, {0, 1, 3}, gcards);
  FactorTable b = random_table(rng, {1, 2}, gcards);
  FactorTable p = a.product(b);
  CHECK(p.scope() == std::vector<VarId>{0, 1, 2, 3});
  for_all_states(gcards, [&](const std::vector<int>& s) {
    CHECK(p.at_assignment(s) ==
          doctest::Approx(a.at_assignment(s) * b.at_assignment(s)).epsilon(1e-14));
  });
  // Commutative.
  FactorTable q = b.product(a);
  for_all_states(gcards, [&](const std::vector<int>& s) {
    CHECK(p.at_assignment(s) == doctest::Approx(q.at_assignment(s)).epsilon(1e-14));
  });
}

TEST_CASE("marginalize matches nested-loop oracle") {
  std::vector<int> gcards = {2, 3, 2, 4};
  std::mt19937_64 rng(11);
  FactorTable a = random_table(rng, {0, 1, 2, 3}, gcards);
  FactorTable m = a.marginalize({1, 3});
  for (int s1 = 0; s1 < 3; ++s1)
    for (int s3 = 0; s3 < 4; ++s3) {
      double want = 0;
      for (int s0 = 0; s0 < 2; ++s0)
        for (int s2 = 0; s2 < 2; ++s2)
          want += a.at_assignment({s0, s1, s2, s3});
      CHECK(m.at_assignment({0, s1, 0, s3}) == doctest::Approx(want).epsilon(1e-13));
    }
  // Scalar marginal == total mass.
  FactorTable z = a.marginalize({});
  CHECK(z.size() == 1);
  CHECK(std::log(z.values()[0]) == doctest::Approx(a.total_log_mass()).epsilon(1e-12));
}

TEST_CASE("divide honors the zero-over-zero rule") {
  FactorTable num({0, 1}, {2, 2}, {0.0, 0.2, 0.0, 0.8});
  FactorTable den({0}, {2}, {0.0, 1.0});
  // num has zero mass where den is zero in rows (0,*): 0/0 -> 0.
  FactorTable num2({0, 1}, {2, 2}, {0.0, 0.0, 0.3, 0.7});
  FactorTable q = num2.divide(den);
  CHECK(q.values()[0] == 0.0);
  CHECK(q.values()[2] == doctest::Approx(0.3));
  CHECK_THROWS_AS((void)num.divide(den), numerical_error);
}

TEST_CASE("reduce and observe slice correctly") {
  std::vector<int> gcards = {2, 3};
  std::mt19937_64 rng(3);
  FactorTable a = random_table(rng, {0, 1}, gcards);
  FactorTable r = a.reduce(1, 2);
  CHECK(r.scope() == std::vector<VarId>{0});
  CHECK(r.at_assignment({0, 0}) == a.at_assignment({0, 2}));
  CHECK(r.at_assignment({1, 0}) == a.at_assignment({1, 2}));
  FactorTable o = a.observe(1, 1);
  CHECK(o.scope() == a.scope());
  CHECK(o.at_assignment({1, 1}) == a.at_assignment({1, 1}));
  CHECK(o.at_assignment({1, 0}) == 0.0);
  CHECK(o.at_assignment({1, 2}) == 0.0);
}

TEST_CASE("from_unsorted permutes the layout") {
  // Scope given as (1,0): value index = s1*2 + s0.
  std::vector<double> vals = {0.0, 1.0, 2.0, 3.0};
  FactorTable f = FactorTable::from_unsorted({1, 0}, {2, 2}, vals);
  CHECK(f.scope() == std::vector<VarId>{0, 1});
  CHECK(f.at_assignment({0, 0}) == 0.0);
  CHECK(f.at_assignment({1, 0}) == 1.0);
  CHECK(f.at_assignment({0, 1}) == 2.0);
  CHECK(f.at_assignment({1, 1}) == 3.0);
}

TEST_CASE("scale folding keeps long products finite") {
  FactorTable tiny({0}, {2}, {1e-200, 1e-200});
  FactorTable acc = tiny;
  acc.fold_scale();
  for (int i = 0; i < 4; ++i) {
    acc = acc.product(tiny);
    acc.fold_scale();
  }
  CHECK(std::isfinite(acc.values()[0]));
  CHECK(acc.total_log_mass() ==
        doctest::Approx(5 * std::log(1e-200) + std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("normalize and size_bits") {
  FactorTable f({0, 1}, {2, 4}, std::vector<double>(8, 0.5));
  CHECK(f.size_bits() == doctest::Approx(3.0));
  f.normalize();
  CHECK(f.total_log_mass() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("capacity guard") {
  std::vector<VarId> scope;
  std::vector<int> cards;
  for (int i = 0; i < 32; ++i) {
    scope.push_back(i);
    cards.push_back(4);
  }
  CHECK_THROWS_AS((void)FactorTable::ones(scope, cards), capacity_error);
}
