#include <cmath>

#include "doctest.h"
#include "ibia/exact_oracle.hpp"
#include "ibia/graph_utils.hpp"
#include "ibia/random_net.hpp"
#include "nets.hpp"

using namespace ibia;
using namespace ibia::testsup;

TEST_CASE("joint of a directed model sums to one") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    BayesNet net = random_net(seed, {12, 3, 3, 0.0});
    CHECK(enumerate_joint(net).log_pr() == doctest::Approx(0.0).epsilon(1e-10));
  }
}

TEST_CASE("capacity guard on enumeration") {
  BayesNet net = random_net(1, {30, 2, 2, 0.0});
  CHECK_THROWS_AS((void)enumerate_joint(net), capacity_error);
}

TEST_CASE("min-fill on the 7-variable example") {
  BayesNet net = fig_seven(3);
  UGraph g = moralize(net);
  std::vector<std::pair<VarId, VarId>> fill;
  auto order = min_fill_order(g, &fill);
  REQUIRE(fill.size() == 1);
  CHECK(fill[0] == std::make_pair(VarId(3), VarId(4)));
  auto cliques = elimination_cliques(moralize(net), order);
  std::vector<std::vector<VarId>> want = {
      {0, 1, 3}, {1, 2, 4}, {3, 5, 6}, {1, 3, 4}, {3, 4, 5}};
  REQUIRE(cliques.size() == want.size());
  for (const auto& w : want)
    CHECK(std::find(cliques.begin(), cliques.end(), w) != cliques.end());
}

TEST_CASE("full compile of the 7-variable example") {
  BayesNet net = fig_seven(3);
  CliqueForest f = full_compile(net);
  CHECK(f.num_cliques() == 5);
  CHECK(f.max_clique_bits() == doctest::Approx(3.0));
  // No evidence: normalization constant 1.
  double lw = 0;
  for (const auto& [rep, w] : f.tree_log_weights()) {
    (void)rep;
    lw += w;
  }
  CHECK(lw == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(f.max_calibration_residual() < 1e-12);
}

TEST_CASE("full compile marginals match enumeration") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    RandomNetOptions opt;
    opt.nvars = 12;
    opt.max_parents = 3;
    opt.max_card = 3;
    BayesNet net = random_net(seed, opt);
    auto oracle = enumerate_joint(net);
    CliqueForest f = full_compile(net);
    for (VarId v : net.vars)
      CHECK(f.var_marginal(v).max_abs_diff(oracle.marginal(v)) < 1e-12);
  }
}

TEST_CASE("full compile with observations tracks evidence mass") {
  for (std::uint64_t seed = 30; seed <= 40; ++seed) {
    RandomNetOptions opt;
    opt.nvars = 10;
    opt.max_parents = 3;
    BayesNet net = random_net(seed, opt);
    auto evid = random_evidence(seed, net, 2);
    auto oracle = enumerate_joint(net, evid);

    BayesNet sliced = net;
    for (auto& [v, f] : sliced.cpds)
      for (const auto& [ev, es] : evid)
        if (f.contains(ev)) f = f.observe(ev, es);
    CliqueForest cf = full_compile(sliced);
    double lw = 0;
    for (const auto& [rep, w] : cf.tree_log_weights()) {
      (void)rep;
      lw += w;
    }
    CHECK(lw == doctest::Approx(oracle.log_pr()).epsilon(1e-9));
    for (VarId v : net.vars) {
      if (evid.count(v)) continue;
      CHECK(cf.var_marginal(v).max_abs_diff(oracle.marginal(v)) < 1e-10);
    }
  }
}
