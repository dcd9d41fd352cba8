#include "ibia/exact_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "ibia/graph_utils.hpp"

namespace ibia {

FactorTable JointOracle::marginal(VarId v) const {
  FactorTable m = joint.marginalize({v});
  m.normalize();
  return m;
}

FactorTable JointOracle::marginal_scope(const std::vector<VarId>& scope) const {
  FactorTable m = joint.marginalize(scope);
  m.normalize();
  return m;
}

namespace {

JointOracle product_of(const std::vector<const FactorTable*>& factors,
                       const BayesNet& net) {
  double bits = 0;
  for (VarId v : net.vars) bits += std::log2(double(net.card(v)));
  if (bits > 24.0 + 1e-9)
    throw capacity_error("joint enumeration limited to 24 binary variables");
  std::vector<int> cc;
  for (VarId v : net.vars) cc.push_back(net.card(v));
  FactorTable acc = FactorTable::ones(net.vars, cc);
  for (const FactorTable* f : factors) {
    acc = acc.product(*f);
    acc.fold_scale();
  }
  return JointOracle{std::move(acc)};
}

}  // namespace

JointOracle enumerate_joint(const BayesNet& dag) {
  std::vector<const FactorTable*> fs;
  for (const auto& [v, f] : dag.cpds) {
    (void)v;
    fs.push_back(&f);
  }
  return product_of(fs, dag);
}

JointOracle enumerate_joint(const BayesNet& net,
                            const std::map<VarId, int>& evidence) {
  std::vector<FactorTable> owned;
  owned.reserve(net.cpds.size());
  for (const auto& [v, f] : net.cpds) {
    (void)v;
    FactorTable g = f;
    for (const auto& [ev, es] : evidence)
      if (g.contains(ev)) g = g.observe(ev, es);
    owned.push_back(std::move(g));
  }
  std::vector<const FactorTable*> fs;
  for (const auto& f : owned) fs.push_back(&f);
  return product_of(fs, net);
}

CliqueForest full_compile(const BayesNet& dag) {
  UGraph g = moralize(dag);
  auto order = min_fill_order(g);
  auto cliques = elimination_cliques(g, order);

  CliqueForest forest(dag.cards);
  std::vector<int> ids;
  for (auto& c : cliques) ids.push_back(forest.add_clique(std::move(c)));

  // Maximum-weight spanning forest over pairwise scope intersections.
  struct Cand {
    std::size_t w;
    int a, b;
  };
  std::vector<Cand> cand;
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      const auto& a = forest.clique(ids[i]).scope;
      const auto& b = forest.clique(ids[j]).scope;
      std::vector<VarId> inter;
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                            std::back_inserter(inter));
      if (!inter.empty()) cand.push_back({inter.size(), ids[i], ids[j]});
    }
  std::sort(cand.begin(), cand.end(), [](const Cand& x, const Cand& y) {
    if (x.w != y.w) return x.w > y.w;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });
  std::map<int, int> up;
  std::function<int(int)> find = [&](int x) {
    while (up[x] != x) x = up[x] = up[up[x]];
    return x;
  };
  for (int id : ids) up[id] = id;
  for (const Cand& c : cand) {
    int ra = find(c.a), rb = find(c.b);
    if (ra == rb) continue;
    up[std::max(ra, rb)] = std::min(ra, rb);
    forest.add_edge(c.a, c.b);
  }

  for (const auto& [v, f] : dag.cpds) {
    (void)v;
    bool placed = false;
    for (int id : ids) {
      const auto& sc = forest.clique(id).scope;
      if (std::includes(sc.begin(), sc.end(), f.scope().begin(), f.scope().end())) {
        forest.clique(id).factors.push_back(f);
        placed = true;
        break;
      }
    }
    if (!placed) throw internal_error("full_compile: homeless table");
  }
  forest.check_valid();
  forest.calibrate();
  return forest;
}

}  // namespace ibia
