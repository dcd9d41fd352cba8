#include <cmath>

#include "doctest.h"
#include "ibia/bn_model.hpp"
#include "ibia/exact_oracle.hpp"
#include "ibia/random_net.hpp"
#include "nets.hpp"

using namespace ibia;
using namespace ibia::testsup;

TEST_CASE("topological levels on the 17-variable example") {
  BayesNet net = example17(1);
  auto lv = net.topo_levels();
  CHECK(lv[0] == 0);   // a
  CHECK(lv[3] == 0);   // d
  CHECK(lv[5] == 1);   // f
  CHECK(lv[6] == 2);   // g
  CHECK(lv[7] == 3);   // h
  CHECK(lv[10] == 4);  // k
  CHECK(lv[11] == 5);  // l
  CHECK(lv[14] == 6);  // o
  CHECK(lv[15] == 7);  // p
  CHECK(lv[16] == 7);  // q  (longest chain runs through j, m, o)
}

TEST_CASE("evidence slicing removes outgoing edges") {
  // 0 -> 1 -> 2, observe 1.
  BayesNet net = net_from_edges(5, 3, {{0, 1}, {1, 2}});
  auto sm = simplify(net, {{1, 0}});
  // Cutting 1 -> 2 separates {0,1} from {2}.
  REQUIRE(sm.dags.size() == 2);
  CHECK(sm.fixed.at(1) == 0);
  for (const BayesNet& d : sm.dags) {
    if (d.has_var(2)) {
      CHECK(d.parents.at(2).empty());
      CHECK(d.cpds.at(2).scope() == std::vector<VarId>{2});
    } else {
      // Var 1 keeps its full table with the other row zeroed.
      CHECK(d.cpds.at(1).scope() == std::vector<VarId>{0, 1});
      CHECK(d.cpds.at(1).at_assignment({0, 1}) == 0.0);
    }
  }
}

TEST_CASE("certain observations cut incoming edges") {
  // P(2=1 | anything) == 1; observing 2=1 should isolate it.
  auto cards = std::make_shared<std::vector<int>>(std::vector<int>{2, 2, 2});
  BayesNet net;
  net.cards = cards;
  net.vars = {0, 1, 2};
  net.parents[0] = {};
  net.parents[1] = {};
  net.parents[2] = {0, 1};
  net.cpds.emplace(0, FactorTable({0}, {2}, {0.4, 0.6}));
  net.cpds.emplace(1, FactorTable({1}, {2}, {0.3, 0.7}));
  net.cpds.emplace(2, FactorTable({0, 1, 2}, {2, 2, 2},
                                  {0, 1, 0, 1, 0, 1, 0, 1}));
  auto sm = simplify(net, {{2, 1}});
  bool found = false;
  for (const auto& d : sm.dags)
    if (d.has_var(2)) {
      found = true;
      CHECK(d.parents.at(2).empty());
    }
  CHECK(found);
  CHECK_FALSE(sm.inconsistent);
}

TEST_CASE("deterministic observation forces parent states") {
  // P(2 = AND(0,1)); observing 2=1 forces 0=1 and 1=1.
  auto cards = std::make_shared<std::vector<int>>(std::vector<int>{2, 2, 2});
  BayesNet net;
  net.cards = cards;
  net.vars = {0, 1, 2};
  net.parents[0] = {};
  net.parents[1] = {};
  net.parents[2] = {0, 1};
  net.cpds.emplace(0, FactorTable({0}, {2}, {0.4, 0.6}));
  net.cpds.emplace(1, FactorTable({1}, {2}, {0.3, 0.7}));
  net.cpds.emplace(2, FactorTable({0, 1, 2}, {2, 2, 2},
                                  {1, 0, 1, 0, 1, 0, 0, 1}));
  auto sm = simplify(net, {{2, 1}});
  CHECK(sm.fixed.at(0) == 1);
  CHECK(sm.fixed.at(1) == 1);
}

TEST_CASE("edges to independent parents are dropped") {
  auto cards = std::make_shared<std::vector<int>>(std::vector<int>{2, 2});
  BayesNet net;
  net.cards = cards;
  net.vars = {0, 1};
  net.parents[0] = {};
  net.parents[1] = {0};
  net.cpds.emplace(0, FactorTable({0}, {2}, {0.5, 0.5}));
  // Same row for both parent states.
  net.cpds.emplace(1, FactorTable({0, 1}, {2, 2}, {0.2, 0.8, 0.2, 0.8}));
  auto sm = simplify(net, {});
  REQUIRE(sm.dags.size() == 2);  // split after the edge disappears
  for (const auto& d : sm.dags)
    if (d.has_var(1)) CHECK(d.parents.at(1).empty());
}

TEST_CASE("buffer and inverter chains collapse with parity") {
  // 0 -> 1 (buffer) -> 2 (inverter) -> 3 (random CPD).
  auto cards = std::make_shared<std::vector<int>>(std::vector<int>{2, 2, 2, 2});
  BayesNet net;
  net.cards = cards;
  net.vars = {0, 1, 2, 3};
  net.parents[0] = {};
  net.parents[1] = {0};
  net.parents[2] = {1};
  net.parents[3] = {2};
  net.cpds.emplace(0, FactorTable({0}, {2}, {0.25, 0.75}));
  net.cpds.emplace(1, FactorTable({0, 1}, {2, 2}, {1, 0, 0, 1}));
  net.cpds.emplace(2, FactorTable({1, 2}, {2, 2}, {0, 1, 1, 0}));
  net.cpds.emplace(3, FactorTable({2, 3}, {2, 2}, {0.9, 0.1, 0.3, 0.7}));
  auto sm = simplify(net, {});
  CHECK(sm.collapsed.count(1));
  CHECK(sm.collapsed.count(2));
  CHECK(sm.collapsed.at(1).source == 0);
  CHECK(sm.collapsed.at(1).perm == std::vector<int>{0, 1});
  CHECK(sm.collapsed.at(2).source == 0);
  CHECK(sm.collapsed.at(2).perm == std::vector<int>{1, 0});
  REQUIRE(sm.dags.size() == 1);
  const BayesNet& d = sm.dags[0];
  CHECK(d.vars == std::vector<VarId>{0, 3});
  // P(3 | 0) goes through the inverted source: state(2) = 1 - state(0).
  CHECK(d.cpds.at(3).at_assignment({0, 0, 0, 0}) == doctest::Approx(0.3));
  CHECK(d.cpds.at(3).at_assignment({1, 0, 0, 0}) == doctest::Approx(0.9));
}

TEST_CASE("inconsistent observation is flagged") {
  auto cards = std::make_shared<std::vector<int>>(std::vector<int>{2});
  BayesNet net;
  net.cards = cards;
  net.vars = {0};
  net.parents[0] = {};
  net.cpds.emplace(0, FactorTable({0}, {2}, {1.0, 0.0}));
  auto sm = simplify(net, {{0, 1}});
  CHECK(sm.inconsistent);
}

TEST_CASE("simplification preserves the sliced joint") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    RandomNetOptions opt;
    opt.nvars = 11;
    opt.max_parents = 3;
    opt.max_card = 3;
    opt.det_row_frac = 0.35;
    BayesNet net = random_net(seed, opt);
    auto evid = random_evidence(seed, net, 3);
    auto oracle = enumerate_joint(net, evid);
    auto sm = simplify(net, evid);
    if (sm.inconsistent) {
      CHECK(oracle.log_pr() == -std::numeric_limits<double>::infinity());
      continue;
    }
    double lp = 0;
    for (const auto& d : sm.dags) lp += enumerate_joint(d).log_pr();
    if (oracle.log_pr() == -std::numeric_limits<double>::infinity()) {
      // Zero-probability evidence that slicing alone cannot always spot.
      CHECK(lp == -std::numeric_limits<double>::infinity());
      continue;
    }
    CHECK(lp == doctest::Approx(oracle.log_pr()).epsilon(1e-9));
    // Marginals of surviving variables are unchanged.
    for (const auto& d : sm.dags) {
      auto sub = enumerate_joint(d);
      for (VarId v : d.vars) {
        FactorTable a = sub.marginal(v);
        FactorTable b = oracle.marginal(v);
        CHECK(a.max_abs_diff(b) < 1e-9);
      }
    }
    // Collapsed variables recover through the recorded renaming.
    for (const auto& [v, rec] : sm.collapsed) {
      FactorTable src = oracle.marginal(rec.source);
      FactorTable tgt = oracle.marginal(v);
      for (int s = 0; s < net.card(rec.source); ++s)
        CHECK(tgt.values()[std::size_t(rec.perm[std::size_t(s)])] ==
              doctest::Approx(src.values()[std::size_t(s)]).epsilon(1e-9));
    }
  }
}
