#include "ibia/clique_forest.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

namespace ibia {

namespace {

std::vector<VarId> intersect(const std::vector<VarId>& a,
                             const std::vector<VarId>& b) {
  std::vector<VarId> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
  return out;
}

bool subset(const std::vector<VarId>& a, const std::vector<VarId>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

struct UnionFind {
  std::map<int, int> up;
  int find(int x) {
    if (!up.count(x)) up[x] = x;
    while (up[x] != x) x = up[x] = up[up[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    up[std::max(a, b)] = std::min(a, b);
    return true;
  }
};

}  // namespace

int CliqueForest::add_clique(std::vector<VarId> scope) {
  assert(std::is_sorted(scope.begin(), scope.end()));
  int id = next_id_++;
  cliques_[id] = Clique{std::move(scope), {}, std::nullopt};
  adj_[id];
  return id;
}

void CliqueForest::remove_clique(int id) {
  for (int n : std::vector<int>(adj_.at(id).begin(), adj_.at(id).end()))
    remove_edge(id, n);
  adj_.erase(id);
  cliques_.erase(id);
}

void CliqueForest::add_edge(int a, int b) {
  assert(a != b);
  auto sep = intersect(cliques_.at(a).scope, cliques_.at(b).scope);
  if (sep.empty()) throw internal_error("edge between disjoint cliques");
  edges_[key(a, b)] = CtfEdge{std::move(sep), std::nullopt};
  adj_[a].insert(b);
  adj_[b].insert(a);
}

void CliqueForest::remove_edge(int a, int b) {
  edges_.erase(key(a, b));
  adj_[a].erase(b);
  adj_[b].erase(a);
}

void CliqueForest::absorb_clique(int old_id, int keep_id) {
  Clique& oldc = cliques_.at(old_id);
  Clique& keep = cliques_.at(keep_id);
  if (!subset(oldc.scope, keep.scope))
    throw internal_error("absorb target does not contain the clique");
  for (auto& f : oldc.factors) keep.factors.push_back(std::move(f));
  for (int n : std::vector<int>(adj_.at(old_id).begin(), adj_.at(old_id).end())) {
    remove_edge(old_id, n);
    if (n != keep_id && !has_edge(n, keep_id)) add_edge(n, keep_id);
  }
  remove_clique(old_id);
}

CtfEdge& CliqueForest::edge(int a, int b) { return edges_.at(key(a, b)); }
const CtfEdge& CliqueForest::edge(int a, int b) const {
  return edges_.at(key(a, b));
}
bool CliqueForest::has_edge(int a, int b) const {
  return edges_.count(key(a, b)) != 0;
}

std::vector<int> CliqueForest::clique_ids() const {
  std::vector<int> out;
  out.reserve(cliques_.size());
  for (const auto& [id, c] : cliques_) {
    (void)c;
    out.push_back(id);
  }
  return out;
}

std::vector<int> CliqueForest::cliques_containing(VarId v) const {
  std::vector<int> out;
  for (const auto& [id, c] : cliques_)
    if (std::binary_search(c.scope.begin(), c.scope.end(), v)) out.push_back(id);
  return out;
}

std::vector<VarId> CliqueForest::all_vars() const {
  std::set<VarId> s;
  for (const auto& [id, c] : cliques_) {
    (void)id;
    s.insert(c.scope.begin(), c.scope.end());
  }
  return std::vector<VarId>(s.begin(), s.end());
}

bool CliqueForest::scope_contains(int id, VarId v) const {
  const auto& s = cliques_.at(id).scope;
  return std::binary_search(s.begin(), s.end(), v);
}

double CliqueForest::clique_bits(int id) const {
  double b = 0;
  for (VarId v : cliques_.at(id).scope) b += std::log2(double(card(v)));
  return b;
}

double CliqueForest::max_clique_bits() const {
  double m = 0;
  for (const auto& [id, c] : cliques_) {
    (void)c;
    m = std::max(m, clique_bits(id));
  }
  return m;
}

std::vector<std::vector<int>> CliqueForest::trees() const {
  UnionFind uf;
  for (const auto& [id, c] : cliques_) {
    (void)c;
    uf.find(id);
  }
  for (const auto& [k, e] : edges_) {
    (void)e;
    uf.unite(k.first, k.second);
  }
  std::map<int, std::vector<int>> comp;
  for (const auto& [id, c] : cliques_) {
    (void)c;
    comp[uf.find(id)].push_back(id);
  }
  std::vector<std::vector<int>> out;
  for (auto& [rep, ids] : comp) {
    (void)rep;
    out.push_back(std::move(ids));
  }
  return out;
}

int CliqueForest::tree_rep(int id) const {
  for (const auto& t : trees())
    if (std::binary_search(t.begin(), t.end(), id)) return t.front();
  throw internal_error("tree_rep: unknown clique");
}

void CliqueForest::check_valid() const {
  UnionFind uf;
  for (const auto& [k, e] : edges_) {
    const auto& a = cliques_.at(k.first);
    const auto& b = cliques_.at(k.second);
    if (e.sep.empty()) throw internal_error("empty sepset");
    if (e.sep != intersect(a.scope, b.scope))
      throw internal_error("sepset differs from scope intersection");
    if (!uf.unite(k.first, k.second))
      throw internal_error("cycle in clique graph");
  }
  for (const auto& t : trees())
    for (std::size_t i = 0; i < t.size(); ++i)
      for (std::size_t j = 0; j < t.size(); ++j) {
        if (i == j) continue;
        if (subset(cliques_.at(t[i]).scope, cliques_.at(t[j]).scope))
          throw internal_error("non-maximal clique " + std::to_string(t[i]) +
                               " inside " + std::to_string(t[j]));
      }
  // Running intersection: cliques holding a variable must form a connected
  // subgraph (sepsets equal intersections, so edges between two holders
  // automatically carry the variable).
  std::set<VarId> vars;
  for (const auto& [id, c] : cliques_) {
    (void)id;
    vars.insert(c.scope.begin(), c.scope.end());
  }
  for (VarId v : vars) {
    auto holders = cliques_containing(v);
    UnionFind vf;
    for (int id : holders) vf.find(id);
    for (const auto& [k, e] : edges_) {
      (void)e;
      if (scope_contains(k.first, v) && scope_contains(k.second, v))
        vf.unite(k.first, k.second);
    }
    int rep = vf.find(holders.front());
    for (int id : holders)
      if (vf.find(id) != rep)
        throw internal_error("running intersection broken for variable " +
                             std::to_string(v));
  }
  for (const auto& [id, c] : cliques_)
    for (const auto& f : c.factors)
      if (!subset(f.scope(), c.scope))
        throw internal_error("factor scope escapes clique " + std::to_string(id));
}

void CliqueForest::calibrate() {
  tree_log_weight_.clear();
  for (const auto& t : trees()) {
    int root = t.front();
    // BFS order with parents.
    std::vector<int> order;
    std::map<int, int> parent;
    std::deque<int> q{root};
    parent[root] = -1;
    while (!q.empty()) {
      int c = q.front();
      q.pop_front();
      order.push_back(c);
      for (int n : adj_.at(c))
        if (!parent.count(n)) {
          parent[n] = c;
          q.push_back(n);
        }
    }

    std::map<int, FactorTable> beta;
    for (int id : t) {
      const Clique& c = cliques_.at(id);
      std::vector<int> cc;
      for (VarId v : c.scope) cc.push_back(card(v));
      FactorTable b = FactorTable::ones(c.scope, cc);
      for (const auto& f : c.factors) {
        b = b.product(f);
        b.fold_scale();
      }
      beta.emplace(id, std::move(b));
    }

    // Collect toward the root.
    for (std::size_t i = order.size(); i-- > 1;) {
      int c = order[i], p = parent[c];
      CtfEdge& e = edges_.at(key(c, p));
      FactorTable delta = beta.at(c).marginalize(e.sep);
      beta.at(p) = beta.at(p).product(delta);
      beta.at(p).fold_scale();
      e.mu = std::move(delta);
    }
    // Distribute from the root.
    for (std::size_t i = 1; i < order.size(); ++i) {
      int c = order[i], p = parent[c];
      CtfEdge& e = edges_.at(key(c, p));
      FactorTable delta = beta.at(p).marginalize(e.sep);
      beta.at(c) = beta.at(c).product(delta.divide(*e.mu));
      beta.at(c).fold_scale();
      e.mu = std::move(delta);
    }

    tree_log_weight_[root] = beta.at(root).total_log_mass();
    for (int id : t) {
      beta.at(id).normalize();
      cliques_.at(id).belief = std::move(beta.at(id));
    }
    for (std::size_t i = 1; i < order.size(); ++i)
      edges_.at(key(order[i], parent[order[i]])).mu->normalize();
  }
}

bool CliqueForest::calibrated() const {
  for (const auto& [id, c] : cliques_) {
    (void)id;
    if (!c.belief) return false;
  }
  return true;
}

double CliqueForest::max_calibration_residual() const {
  double m = 0;
  for (const auto& [k, e] : edges_) {
    if (!e.mu) throw internal_error("missing sepset table");
    FactorTable a = cliques_.at(k.first).belief->marginalize(e.sep);
    FactorTable b = cliques_.at(k.second).belief->marginalize(e.sep);
    a.normalize();
    b.normalize();
    FactorTable mu = *e.mu;
    mu.normalize();
    m = std::max({m, a.max_abs_diff(mu), b.max_abs_diff(mu)});
  }
  return m;
}

std::vector<int> CliqueForest::msg_subgraph(const std::vector<VarId>& targets) const {
  std::set<VarId> tset(targets.begin(), targets.end());
  auto content = [&](int id) {
    std::set<VarId> s;
    for (VarId v : cliques_.at(id).scope)
      if (tset.count(v)) s.insert(v);
    return s;
  };

  std::vector<int> result;
  for (const auto& t : trees()) {
    std::set<int> marked;
    for (int id : t)
      if (!content(id).empty()) marked.insert(id);
    if (marked.empty()) continue;

    // Strip unmarked leaves to get the Steiner subtree.
    std::set<int> keep(t.begin(), t.end());
    std::map<int, std::set<int>> deg;
    for (int id : t)
      for (int n : adj_.at(id)) deg[id].insert(n);
    bool changed = true;
    while (changed) {
      changed = false;
      for (int id : std::vector<int>(keep.begin(), keep.end())) {
        if (deg[id].size() <= 1 && !marked.count(id)) {
          for (int n : deg[id]) deg[n].erase(id);
          deg.erase(id);
          keep.erase(id);
          changed = true;
        }
      }
    }
    // Prune leaves whose target content is covered by their neighbor.
    changed = true;
    while (changed) {
      changed = false;
      for (int id : std::vector<int>(keep.begin(), keep.end())) {
        if (keep.size() == 1) break;
        if (deg[id].size() != 1) continue;
        int n = *deg[id].begin();
        auto mine = content(id), theirs = content(n);
        if (std::includes(theirs.begin(), theirs.end(), mine.begin(), mine.end())) {
          deg[n].erase(id);
          deg.erase(id);
          keep.erase(id);
          changed = true;
        }
      }
    }
    result.insert(result.end(), keep.begin(), keep.end());
  }
  std::sort(result.begin(), result.end());
  return result;
}

FactorTable CliqueForest::var_marginal(VarId v) const {
  auto holders = cliques_containing(v);
  if (holders.empty()) throw internal_error("marginal of unknown variable");
  FactorTable m = cliques_.at(holders.front()).belief->marginalize({v});
  m.normalize();
  return m;
}

FactorTable CliqueForest::joint_over(const std::vector<int>& clique_set) const {
  std::set<int> in(clique_set.begin(), clique_set.end());
  int root = *in.begin();
  FactorTable acc = *cliques_.at(root).belief;
  std::set<int> seen{root};
  std::deque<int> q{root};
  while (!q.empty()) {
    int c = q.front();
    q.pop_front();
    for (int n : adj_.at(c)) {
      if (!in.count(n) || seen.count(n)) continue;
      seen.insert(n);
      q.push_back(n);
      const CtfEdge& e = edges_.at(key(c, n));
      acc = acc.product(cliques_.at(n).belief->divide(*e.mu));
      acc.fold_scale();
    }
  }
  if (seen.size() != in.size())
    throw internal_error("joint_over: clique set not connected");
  return acc;
}

std::string CliqueForest::dump() const {
  std::ostringstream os;
  for (const auto& [id, c] : cliques_) {
    os << "C" << id << " {";
    for (VarId v : c.scope) os << " " << v;
    os << " } nbrs:";
    for (int n : adj_.at(id)) os << " " << n;
    os << "\n";
  }
  return os.str();
}

}  // namespace ibia
