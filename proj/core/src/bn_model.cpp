#include "ibia/bn_model.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <deque>
#include <functional>
#include <set>

namespace ibia {

namespace {
constexpr double kExactTol = 1e-12;
}

bool BayesNet::has_var(VarId v) const {
  return std::binary_search(vars.begin(), vars.end(), v);
}

std::map<VarId, std::vector<VarId>> BayesNet::children() const {
  std::map<VarId, std::vector<VarId>> ch;
  for (VarId v : vars) ch[v];
  for (const auto& [v, ps] : parents)
    for (VarId p : ps) ch[p].push_back(v);
  return ch;
}

std::map<VarId, int> BayesNet::topo_levels() const {
  std::map<VarId, int> level;
  // vars is topologically unordered in general; iterate to fixpoint.
  std::deque<VarId> todo(vars.begin(), vars.end());
  while (!todo.empty()) {
    VarId v = todo.front();
    todo.pop_front();
    int lv = 0;
    bool ready = true;
    auto it = parents.find(v);
    if (it != parents.end()) {
      for (VarId p : it->second) {
        auto lp = level.find(p);
        if (lp == level.end()) {
          ready = false;
          break;
        }
        lv = std::max(lv, lp->second + 1);
      }
    }
    if (ready)
      level[v] = lv;
    else
      todo.push_back(v);
  }
  return level;
}

std::vector<VarId> BayesNet::parentless() const {
  std::vector<VarId> out;
  for (VarId v : vars) {
    auto it = parents.find(v);
    if (it == parents.end() || it->second.empty()) out.push_back(v);
  }
  return out;
}

void BayesNet::check() const {
  for (VarId v : vars) {
    auto it = parents.find(v);
    if (it != parents.end())
      for (VarId p : it->second)
        if (!has_var(p)) throw internal_error("dangling parent edge");
    auto fc = cpds.find(v);
    if (fc == cpds.end()) throw internal_error("variable without a table");
    for (VarId x : fc->second.scope()) {
      bool ok = x == v ||
                (it != parents.end() &&
                 std::binary_search(it->second.begin(), it->second.end(), x));
      if (!ok) throw internal_error("table scope outside family");
    }
  }
  // Cycle check via the level computation: it only terminates on DAGs, so
  // detect non-progress explicitly here.
  std::map<VarId, int> indeg;
  for (VarId v : vars) indeg[v] = 0;
  for (const auto& [v, ps] : parents) indeg[v] = int(ps.size());
  std::deque<VarId> q;
  for (auto& [v, d] : indeg)
    if (d == 0) q.push_back(v);
  std::size_t seen = 0;
  auto ch = children();
  while (!q.empty()) {
    VarId v = q.front();
    q.pop_front();
    ++seen;
    for (VarId c : ch[v])
      if (--indeg[c] == 0) q.push_back(c);
  }
  if (seen != vars.size()) throw internal_error("cycle in directed model");
}

namespace {

struct SimplifyState {
  std::shared_ptr<const std::vector<int>> cards;
  std::set<VarId> alive;
  std::map<VarId, std::vector<VarId>> parents;
  std::map<VarId, FactorTable> cpds;
  std::map<VarId, int> fixed;
  std::map<VarId, CollapsedVar> collapsed;
  bool inconsistent = false;

  int card(VarId v) const { return (*cards)[std::size_t(v)]; }

  std::map<VarId, std::vector<VarId>> children() const {
    std::map<VarId, std::vector<VarId>> ch;
    for (const auto& [v, ps] : parents)
      for (VarId p : ps) ch[p].push_back(v);
    return ch;
  }

  void erase_parent(VarId v, VarId p) {
    auto& ps = parents[v];
    ps.erase(std::remove(ps.begin(), ps.end(), p), ps.end());
  }
};

bool all_zero(const FactorTable& f) {
  for (double x : f.values())
    if (x != 0.0) return false;
  return true;
}

bool all_one(const FactorTable& f) {
  for (double x : f.values())
    if (std::abs(x - 1.0) > kExactTol) return false;
  return true;
}

// Observation slicing + fixed-state propagation, run to a fixed point.
// Safe to call repeatedly; seed is the set of fixed vars to (re)examine.
void propagate_fixed(SimplifyState& st, std::deque<VarId> seed) {
  std::set<VarId> sliced;  // vars already applied to their children
  while (!seed.empty()) {
    VarId v = seed.front();
    seed.pop_front();
    int s = st.fixed.at(v);

    if (!sliced.insert(v).second) continue;
    auto ch = st.children();
    auto it = ch.find(v);
    if (it != ch.end()) {
      for (VarId c : std::vector<VarId>(it->second.begin(), it->second.end())) {
        auto& cf = st.cpds.at(c);
        if (cf.contains(v)) cf = cf.reduce(v, s);
        if (all_zero(cf)) st.inconsistent = true;
        st.erase_parent(c, v);
        // A fixed child may force more parents once re-sliced.
        if (st.fixed.count(c)) {
          sliced.erase(c);
          seed.push_back(c);
        }
      }
    }

    auto& f0 = st.cpds.at(v);
    if (!f0.contains(v)) throw internal_error("observed table lost its variable");
    FactorTable sl = f0.reduce(v, s);
    if (all_zero(sl)) st.inconsistent = true;
    if (!sl.scope().empty() && all_one(sl)) {
      // Deterministically certain given any parent state: the parents do
      // not matter, cut the incoming edges.
      st.parents[v].clear();
      std::vector<double> pm(std::size_t(st.card(v)), 0.0);
      pm[std::size_t(s)] = 1.0;
      f0 = FactorTable({v}, {st.card(v)}, std::move(pm));
      continue;
    }
    // Parents forced to a single state become fixed themselves.
    for (VarId p : sl.scope()) {
      if (st.fixed.count(p)) continue;
      FactorTable m = sl.marginalize({p});
      int nz = 0, state = -1;
      for (std::size_t k = 0; k < m.values().size(); ++k)
        if (m.values()[k] > 0.0) {
          ++nz;
          state = int(k);
        }
      if (nz == 1) {
        st.fixed[p] = state;
        seed.push_back(p);
      }
    }
    f0 = f0.observe(v, s);
  }
}

// Drop edges where the child's table does not depend on the parent.
void drop_independent_edges(SimplifyState& st) {
  for (VarId v : st.alive) {
    if (st.fixed.count(v)) continue;
    auto ps = st.parents[v];
    for (VarId p : ps) {
      auto& f = st.cpds.at(v);
      if (!f.contains(p)) {
        st.erase_parent(v, p);
        continue;
      }
      FactorTable r0 = f.reduce(p, 0);
      bool invariant = true;
      for (int s = 1; s < st.card(p) && invariant; ++s)
        if (r0.max_abs_diff(f.reduce(p, s)) > kExactTol) invariant = false;
      if (invariant) {
        f = r0;
        st.erase_parent(v, p);
      }
    }
  }
}

// If f over {p,v} is a permutation matrix, return perm with
// P(v=perm[sp] | p=sp) == 1.
bool extract_perm(const FactorTable& f, VarId p, VarId v, int card,
                  std::vector<int>& perm) {
  perm.assign(std::size_t(card), -1);
  std::vector<bool> hit(std::size_t(card), false);
  std::vector<int> state(f.scope().back() + 1, 0);
  for (int sp = 0; sp < card; ++sp) {
    int one = -1;
    for (int sv = 0; sv < card; ++sv) {
      state[std::size_t(p)] = sp;
      state[std::size_t(v)] = sv;
      double x = f.at_assignment(state);
      if (std::abs(x - 1.0) <= kExactTol) {
        if (one >= 0) return false;
        one = sv;
      } else if (std::abs(x) > kExactTol) {
        return false;
      }
    }
    if (one < 0 || hit[std::size_t(one)]) return false;
    hit[std::size_t(one)] = true;
    perm[std::size_t(sp)] = one;
  }
  return true;
}

// Rewrite f replacing dependence on v with dependence on p, where
// state(v) = perm[state(p)].
FactorTable reindex_through(const FactorTable& f, VarId v, VarId p,
                            const std::vector<int>& perm,
                            const std::vector<int>& gcards) {
  std::vector<VarId> scope;
  for (VarId x : f.scope())
    if (x != v) scope.push_back(x);
  if (!std::binary_search(scope.begin(), scope.end(), p)) {
    scope.push_back(p);
    std::sort(scope.begin(), scope.end());
  }
  std::vector<int> cards;
  for (VarId x : scope) cards.push_back(gcards[std::size_t(x)]);

  std::size_t n = 1;
  for (int c : cards) n *= std::size_t(c);
  std::vector<double> out(n);
  VarId maxv = std::max(v, scope.empty() ? v : scope.back());
  std::vector<int> state(std::size_t(maxv) + 1, 0);
  std::vector<int> cur(scope.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < scope.size(); ++d)
      state[std::size_t(scope[d])] = cur[d];
    state[std::size_t(v)] = perm[std::size_t(state[std::size_t(p)])];
    out[i] = f.at_assignment(state);
    for (std::size_t d = scope.size(); d-- > 0;) {
      if (++cur[d] < cards[d]) break;
      cur[d] = 0;
    }
  }
  return FactorTable(std::move(scope), std::move(cards), std::move(out));
}

// Collapse deterministic one-parent renamings (buffers / inverters and
// their higher-arity analogues) onto their source variable.
void collapse_chains(SimplifyState& st) {
  for (auto it = st.alive.begin(); it != st.alive.end();) {
    VarId v = *it;
    if (st.fixed.count(v) || st.parents[v].size() != 1) {
      ++it;
      continue;
    }
    VarId p = st.parents[v][0];
    const FactorTable& f = st.cpds.at(v);
    if (st.card(v) != st.card(p) || f.scope().size() != 2 ||
        !f.contains(p) || !f.contains(v)) {
      ++it;
      continue;
    }
    std::vector<int> perm;
    if (!extract_perm(f, p, v, st.card(v), perm)) {
      ++it;
      continue;
    }

    auto ch = st.children();
    auto cit = ch.find(v);
    if (cit != ch.end()) {
      for (VarId c : cit->second) {
        auto& cf = st.cpds.at(c);
        if (cf.contains(v)) cf = reindex_through(cf, v, p, perm, *st.cards);
        st.erase_parent(c, v);
        auto& cps = st.parents[c];
        if (std::find(cps.begin(), cps.end(), p) == cps.end()) {
          cps.push_back(p);
          std::sort(cps.begin(), cps.end());
        }
      }
    }
    st.collapsed[v] = CollapsedVar{p, perm};
    st.parents.erase(v);
    st.cpds.erase(v);
    it = st.alive.erase(it);
  }

  // Resolve chains so every record points at a surviving variable.
  for (auto& [v, rec] : st.collapsed) {
    (void)v;
    while (st.collapsed.count(rec.source)) {
      const CollapsedVar& up = st.collapsed.at(rec.source);
      std::vector<int> comp(rec.perm.size());
      for (std::size_t s = 0; s < comp.size(); ++s)
        comp[s] = rec.perm[std::size_t(up.perm[s])];
      rec.perm = std::move(comp);
      rec.source = up.source;
    }
  }
}

}  // namespace

SimplifiedModel simplify(const BayesNet& net, const std::map<VarId, int>& evidence) {
  SimplifyState st;
  st.cards = net.cards;
  st.alive.insert(net.vars.begin(), net.vars.end());
  st.parents = net.parents;
  for (VarId v : net.vars) st.parents[v];
  st.cpds = net.cpds;

  std::deque<VarId> seed;
  for (const auto& [v, s] : evidence) {
    if (!st.alive.count(v)) throw config_error("evidence on unknown variable");
    if (s < 0 || s >= st.card(v)) throw config_error("evidence state out of range");
    st.fixed[v] = s;
    seed.push_back(v);
  }
  propagate_fixed(st, seed);
  drop_independent_edges(st);
  collapse_chains(st);
  {
    std::deque<VarId> again;
    for (const auto& [v, s] : st.fixed) {
      (void)s;
      if (st.alive.count(v)) again.push_back(v);
    }
    propagate_fixed(st, std::move(again));
  }

  // Weakly connected components over the surviving edges.
  std::map<VarId, VarId> rep;
  for (VarId v : st.alive) rep[v] = v;
  std::function<VarId(VarId)> find = [&](VarId x) {
    while (rep[x] != x) x = rep[x] = rep[rep[x]];
    return x;
  };
  for (const auto& [v, ps] : st.parents)
    if (st.alive.count(v))
      for (VarId p : ps) rep[find(v)] = find(p);

  std::map<VarId, std::vector<VarId>> comps;
  for (VarId v : st.alive) comps[find(v)].push_back(v);

  SimplifiedModel out;
  out.fixed = st.fixed;
  out.collapsed = st.collapsed;
  out.inconsistent = st.inconsistent;
  for (auto& [r, vs] : comps) {
    (void)r;
    BayesNet dag;
    dag.cards = net.cards;
    std::sort(vs.begin(), vs.end());
    dag.vars = vs;
    std::vector<VarId> ev;
    for (VarId v : vs) {
      dag.parents[v] = st.parents[v];
      dag.cpds.emplace(v, st.cpds.at(v));
      if (st.fixed.count(v)) ev.push_back(v);
    }
    out.dags.push_back(std::move(dag));
    out.evidence.push_back(std::move(ev));
  }
  return out;
}

}  // namespace ibia
