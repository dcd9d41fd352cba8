#ifndef IBIA_TESTS_NETS_HPP
#define IBIA_TESTS_NETS_HPP

#include <random>
#include <utility>
#include <vector>

#include "ibia/bn_model.hpp"

namespace ibia::testsup {

// Net with fixed structure and seeded random CPDs.  Edges are (parent, child).
inline BayesNet net_from_edges(std::uint64_t seed, int nvars,
                               const std::vector<std::pair<int, int>>& edges,
                               const std::vector<int>& cards_in = {}) {
  auto cards = std::make_shared<std::vector<int>>(
      cards_in.empty() ? std::vector<int>(std::size_t(nvars), 2) : cards_in);
  BayesNet net;
  net.cards = cards;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> val(0.01, 1.0);
  std::vector<std::vector<VarId>> ps(static_cast<std::size_t>(nvars));
  for (auto [p, c] : edges) ps[std::size_t(c)].push_back(VarId(p));
  for (int i = 0; i < nvars; ++i) {
    VarId v = VarId(i);
    net.vars.push_back(v);
    std::sort(ps[std::size_t(i)].begin(), ps[std::size_t(i)].end());
    net.parents[v] = ps[std::size_t(i)];

    std::vector<VarId> scope = ps[std::size_t(i)];
    scope.push_back(v);
    std::sort(scope.begin(), scope.end());
    std::vector<int> scards;
    std::size_t n = 1;
    for (VarId x : scope) {
      scards.push_back((*cards)[std::size_t(x)]);
      n *= std::size_t((*cards)[std::size_t(x)]);
    }
    std::vector<double> vals(n);
    for (double& x : vals) x = val(rng);
    FactorTable raw(scope, scards, std::move(vals));
    // Normalize rows over the child states.
    std::vector<VarId> pkeep = ps[std::size_t(i)];
    FactorTable rows = raw.marginalize(pkeep);
    net.cpds.emplace(v, raw.divide(rows));
  }
  return net;
}

// 7-variable net: d has parents a,b; e has b,c; f has e; g has d,f.
inline BayesNet fig_seven(std::uint64_t seed) {
  return net_from_edges(seed, 7,
                        {{0, 3}, {1, 3}, {1, 4}, {2, 4}, {4, 5}, {3, 6}, {5, 6}});
}

// 17-variable example (a..q -> 0..16), all binary.
inline std::vector<std::pair<int, int>> example17_edges() {
  return {{0, 4},  {0, 5},  {1, 4},  {1, 5},  {2, 9},  {3, 6},  {3, 7},  {3, 10},
          {3, 14}, {5, 6},  {5, 13}, {5, 15}, {6, 7},  {7, 8},  {7, 9},  {7, 10},
          {8, 11}, {9, 12}, {10, 16}, {11, 16}, {12, 14}, {12, 13}, {14, 15},
          {14, 16}};
}

inline BayesNet example17(std::uint64_t seed) {
  return net_from_edges(seed, 17, example17_edges());
}

}  // namespace ibia::testsup

#endif
