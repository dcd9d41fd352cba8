#include "ibia/random_net.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace ibia {

BayesNet random_net(std::uint64_t seed, const RandomNetOptions& opt) {
  std::mt19937_64 rng(seed);
  auto cards = std::make_shared<std::vector<int>>();
  std::uniform_int_distribution<int> card_d(2, std::max(2, opt.max_card));
  for (int i = 0; i < opt.nvars; ++i) cards->push_back(card_d(rng));

  BayesNet net;
  net.cards = cards;
  std::uniform_real_distribution<double> val_d(0.01, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < opt.nvars; ++i) {
    VarId v = VarId(i);
    net.vars.push_back(v);
    int maxp = std::min(opt.max_parents, i);
    std::uniform_int_distribution<int> np_d(0, maxp);
    int np = np_d(rng);
    std::vector<VarId> pool(static_cast<std::size_t>(i));
    std::iota(pool.begin(), pool.end(), VarId(0));
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<VarId> ps(pool.begin(), pool.begin() + np);
    std::sort(ps.begin(), ps.end());
    net.parents[v] = ps;

    std::vector<VarId> scope = ps;
    scope.push_back(v);  // parents are lower ids, so scope stays sorted
    std::vector<int> scards;
    std::size_t rows = 1;
    for (VarId p : ps) {
      scards.push_back((*cards)[std::size_t(p)]);
      rows *= std::size_t((*cards)[std::size_t(p)]);
    }
    int vc = (*cards)[std::size_t(v)];
    scards.push_back(vc);

    std::vector<double> vals(rows * std::size_t(vc));
    for (std::size_t r = 0; r < rows; ++r) {
      double* row = &vals[r * std::size_t(vc)];
      if (unit(rng) < opt.det_row_frac) {
        std::uniform_int_distribution<int> st(0, vc - 1);
        row[st(rng)] = 1.0;
      } else {
        double s = 0;
        for (int k = 0; k < vc; ++k) s += row[k] = val_d(rng);
        for (int k = 0; k < vc; ++k) row[k] /= s;
      }
    }
    net.cpds.emplace(v, FactorTable(scope, scards, std::move(vals)));
  }
  return net;
}

std::map<VarId, int> random_evidence(std::uint64_t seed, const BayesNet& net,
                                     int count) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  auto ch = net.children();
  std::vector<VarId> leaves, rest;
  for (VarId v : net.vars)
    (ch[v].empty() ? leaves : rest).push_back(v);
  std::shuffle(leaves.begin(), leaves.end(), rng);
  std::shuffle(rest.begin(), rest.end(), rng);
  leaves.insert(leaves.end(), rest.begin(), rest.end());

  std::map<VarId, int> out;
  for (int i = 0; i < count && i < int(leaves.size()); ++i) {
    VarId v = leaves[std::size_t(i)];
    std::uniform_int_distribution<int> st(0, net.card(v) - 1);
    out[v] = st(rng);
  }
  return out;
}

}  // namespace ibia
