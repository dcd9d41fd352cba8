#include "ibia/graph_utils.hpp"

#include <algorithm>
#include <cmath>

namespace ibia {

UGraph moralize(const BayesNet& net) {
  UGraph g;
  for (VarId v : net.vars) g.add_node(v);
  for (const auto& [v, f] : net.cpds) {
    (void)v;
    const auto& sc = f.scope();
    for (std::size_t i = 0; i < sc.size(); ++i)
      for (std::size_t j = i + 1; j < sc.size(); ++j)
        g.add_edge(sc[i], sc[j]);
  }
  return g;
}

namespace {

long fill_count(const UGraph& g, VarId v) {
  const auto& nb = g.adj.at(v);
  long miss = 0;
  for (auto i = nb.begin(); i != nb.end(); ++i)
    for (auto j = std::next(i); j != nb.end(); ++j)
      if (!g.has_edge(*i, *j)) ++miss;
  return miss;
}

}  // namespace

std::vector<VarId> min_fill_order(UGraph g,
                                  std::vector<std::pair<VarId, VarId>>* fill_edges) {
  std::vector<VarId> order;
  std::map<VarId, long> fill;
  for (const auto& [v, nb] : g.adj) {
    (void)nb;
    fill[v] = fill_count(g, v);
  }
  while (!g.adj.empty()) {
    VarId best = -1;
    for (const auto& [v, nb] : g.adj) {
      if (best < 0) {
        best = v;
        continue;
      }
      long fv = fill[v], fb = fill[best];
      std::size_t dv = nb.size(), db = g.adj.at(best).size();
      if (fv < fb || (fv == fb && (dv < db || (dv == db && v < best))))
        best = v;
    }
    order.push_back(best);

    auto nb = g.adj.at(best);
    std::set<VarId> dirty(nb.begin(), nb.end());
    for (auto i = nb.begin(); i != nb.end(); ++i)
      for (auto j = std::next(i); j != nb.end(); ++j)
        if (!g.has_edge(*i, *j)) {
          g.add_edge(*i, *j);
          if (fill_edges) fill_edges->emplace_back(std::min(*i, *j), std::max(*i, *j));
          dirty.insert(g.adj.at(*i).begin(), g.adj.at(*i).end());
          dirty.insert(g.adj.at(*j).begin(), g.adj.at(*j).end());
        }
    for (VarId n : nb) {
      g.adj.at(n).erase(best);
      dirty.insert(g.adj.at(n).begin(), g.adj.at(n).end());
    }
    g.adj.erase(best);
    fill.erase(best);
    dirty.erase(best);
    for (VarId d : dirty)
      if (g.adj.count(d)) fill[d] = fill_count(g, d);
  }
  return order;
}

std::vector<std::vector<VarId>> elimination_cliques(UGraph g,
                                                    const std::vector<VarId>& order) {
  std::vector<std::vector<VarId>> cliques;
  for (VarId v : order) {
    auto& nb = g.adj.at(v);
    std::vector<VarId> c(nb.begin(), nb.end());
    c.push_back(v);
    std::sort(c.begin(), c.end());
    cliques.push_back(std::move(c));
    for (auto i = nb.begin(); i != nb.end(); ++i)
      for (auto j = std::next(i); j != nb.end(); ++j) g.add_edge(*i, *j);
    for (VarId n : nb) g.adj.at(n).erase(v);
    g.adj.erase(v);
  }
  std::vector<std::vector<VarId>> maximal;
  for (std::size_t i = 0; i < cliques.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < cliques.size() && !dominated; ++j)
      if (i != j &&
          std::includes(cliques[j].begin(), cliques[j].end(),
                        cliques[i].begin(), cliques[i].end()) &&
          cliques[i] != cliques[j])
        dominated = true;
    // Duplicate scopes: keep only the first occurrence.
    for (std::size_t j = 0; j < i && !dominated; ++j)
      if (cliques[i] == cliques[j]) dominated = true;
    if (!dominated) maximal.push_back(cliques[i]);
  }
  return maximal;
}

double scope_bits(const std::vector<VarId>& scope, const std::vector<int>& cards) {
  double b = 0;
  for (VarId v : scope) b += std::log2(double(cards[std::size_t(v)]));
  return b;
}

}  // namespace ibia
