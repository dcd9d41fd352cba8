#include "ibia/approx.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <queue>

#include "ibia/errors.hpp"

namespace ibia {

namespace {

constexpr double kBitsTol = 1e-9;

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

bool contains(const std::vector<VarId>& s, VarId v) {
  return std::binary_search(s.begin(), s.end(), v);
}

// MI(a;b) in nats from a clique belief; 0 log 0 = 0.
double pair_mi(const FactorTable& belief, VarId a, VarId b) {
  FactorTable j = belief.marginalize({a, b});
  j.normalize();
  FactorTable pa = j.marginalize({a});
  FactorTable pb = j.marginalize({b});
  int ca = j.card_of(a), cb = j.card_of(b);
  double mi = 0.0;
  for (int sa = 0; sa < ca; ++sa)
    for (int sb = 0; sb < cb; ++sb) {
      std::size_t idx = a < b ? std::size_t(sa) * cb + sb
                              : std::size_t(sb) * ca + sa;
      double p = j.values()[idx];
      if (p <= 0.0) continue;
      double q = pa.values()[std::size_t(sa)] * pb.values()[std::size_t(sb)];
      if (q > 0.0) mi += p * std::log(p / q);
    }
  return mi < 0.0 ? 0.0 : mi;
}

double bits_of_scope(const CliqueForest& f, const std::vector<VarId>& scope) {
  double b = 0.0;
  for (VarId v : scope) b += std::log2(double(f.card(v)));
  return b;
}

// Recompute sepset belief from an endpoint's belief.
void refresh_mu(CliqueForest& f, int a, int b) {
  CtfEdge& e = f.edge(a, b);
  FactorTable m = f.clique(a).belief->marginalize(e.sep);
  m.normalize();
  e.mu = m;
}

// Absorb non-maximal cliques reachable from the work set.  Dropped cliques
// lose their interface-map source lists (only collapse merges them).
void cleanup_nonmaximal(CliqueForest& f, std::set<int> work,
                        std::map<int, std::vector<int>>& src) {
  while (!work.empty()) {
    int id = *work.begin();
    work.erase(work.begin());
    if (!f.has_clique(id)) continue;
    bool again = true;
    while (again && f.has_clique(id)) {
      again = false;
      for (int nb : std::vector<int>(f.neighbors(id).begin(),
                                     f.neighbors(id).end())) {
        const auto& a = f.clique(id).scope;
        const auto& b = f.clique(nb).scope;
        int gone, keep;
        if (a == b) {
          keep = std::min(id, nb);
          gone = std::max(id, nb);
        } else if (subset(a, b)) {
          gone = id;
          keep = nb;
        } else if (subset(b, a)) {
          gone = nb;
          keep = id;
        } else {
          continue;
        }
        f.absorb_clique(gone, keep);
        f.clique(keep).factors.clear();
        src.erase(gone);
        for (int x : f.neighbors(keep))
          if (!f.edge(keep, x).mu) refresh_mu(f, keep, x);
        work.insert(keep);
        if (gone == id) {
          again = false;
        } else {
          again = true;
        }
        break;
      }
    }
  }
}

// Sum v out of one clique's scope and belief (v must not be in any sepset
// of that clique unless the caller fixes the edges).
void shrink_clique(CliqueForest& f, int id, VarId v) {
  Clique& c = f.clique(id);
  c.scope.erase(std::find(c.scope.begin(), c.scope.end(), v));
  if (c.scope.empty()) throw internal_error("clique emptied by marginalization");
  c.belief = c.belief->sum_out(v);
}

// Collapse all cliques of st (a connected subtree, the holders of v) into
// the lowest-id member, sum out v, and merge source lists.
void collapse_subtree(CliqueForest& f, const std::vector<int>& st, VarId v,
                      std::map<int, std::vector<int>>& src) {
  int keep = *std::min_element(st.begin(), st.end());
  FactorTable joint = f.joint_over(st);
  FactorTable reduced = joint.sum_out(v);
  reduced.normalize();
  std::vector<VarId> fused = reduced.scope();
  std::set<int> members(st.begin(), st.end());

  f.clique(keep).scope = fused;
  f.clique(keep).belief = reduced;
  for (int m : st) {
    if (m == keep) continue;
    for (int nb : std::vector<int>(f.neighbors(m).begin(),
                                   f.neighbors(m).end())) {
      f.remove_edge(m, nb);
      if (!members.count(nb) && nb != keep && !f.has_edge(keep, nb))
        f.add_edge(keep, nb);
    }
    auto& sk = src[keep];
    sk.insert(sk.end(), src[m].begin(), src[m].end());
    src.erase(m);
    f.remove_clique(m);
  }
  for (int nb : f.neighbors(keep)) {
    CtfEdge& e = f.edge(keep, nb);
    e.sep = intersect(f.clique(keep).scope, f.clique(nb).scope);
    refresh_mu(f, keep, nb);
  }
  std::set<int> work(f.neighbors(keep).begin(), f.neighbors(keep).end());
  work.insert(keep);
  cleanup_nonmaximal(f, std::move(work), src);
}

// Remove v from the given cliques and every sepset that loses it; empty
// sepsets split the tree (callers only allow that without evidence).
void local_marginalize(CliqueForest& f, const std::set<int>& lm, VarId v,
                       std::map<int, std::vector<int>>& src) {
  std::set<std::pair<int, int>> edges;
  for (int c : lm)
    for (int nb : f.neighbors(c))
      if (contains(f.edge(c, nb).sep, v))
        edges.insert(c < nb ? std::make_pair(c, nb) : std::make_pair(nb, c));
  for (int c : lm) shrink_clique(f, c, v);
  for (auto [x, y] : edges) {
    CtfEdge& e = f.edge(x, y);
    std::vector<VarId> ns = intersect(f.clique(x).scope, f.clique(y).scope);
    if (ns.empty()) {
      f.remove_edge(x, y);
      continue;
    }
    if (ns != e.sep) {
      e.sep = ns;
      e.mu = e.mu->sum_out(v);
    }
  }
  cleanup_nonmaximal(f, std::set<int>(lm.begin(), lm.end()), src);
}

}  // namespace

MiScores mi_scores(const CliqueForest& ctf, const std::set<VarId>& iv,
                   const std::vector<int>& candidates) {
  MiScores out;
  std::set<VarId> vars;
  for (int id : candidates) {
    const auto& s = ctf.clique(id).scope;
    vars.insert(s.begin(), s.end());
  }
  for (VarId v : vars) {
    double best = 0.0;
    for (int id : ctf.cliques_containing(v)) {
      const Clique& c = ctf.clique(id);
      double m = 0.0;
      for (VarId x : c.scope)
        if (x != v && iv.count(x)) m = std::max(m, pair_mi(*c.belief, v, x));
      out.mlmi[{v, id}] = m;
      best = std::max(best, m);
    }
    out.max_mi[v] = best;
  }
  return out;
}

ApproxResult approximate_ctf(const CliqueForest& ctf_in,
                             const std::set<VarId>& iv, double mcs_im,
                             bool evidence, bool force) {
  if (!ctf_in.calibrated())
    throw internal_error("approximate_ctf needs a calibrated forest");
  ApproxResult res;
  std::vector<VarId> targets(iv.begin(), iv.end());
  std::vector<int> msg = ctf_in.msg_subgraph(targets);
  std::set<int> keep(msg.begin(), msg.end());

  // Weights of input trees that vanish entirely still carry evidence mass.
  std::map<int, int> orig_rep;
  std::set<int> kept_reps;
  for (int id : msg) {
    orig_rep[id] = ctf_in.tree_rep(id);
    kept_reps.insert(orig_rep[id]);
  }
  for (const auto& [rep, w] : ctf_in.tree_log_weights())
    if (!kept_reps.count(rep)) res.dropped_log_weight += w;

  CliqueForest a = ctf_in;
  for (int id : ctf_in.clique_ids())
    if (!keep.count(id)) a.remove_clique(id);
  for (int id : a.clique_ids()) a.clique(id).factors.clear();

  std::map<int, std::vector<int>> src;
  for (int id : msg) src[id] = {id};

  if (a.num_cliques() == 0) return res;

  // Step 1: exact marginalization.  Non-interface variables confined to a
  // single clique are summed out; otherwise their holders are collapsed
  // when the fused clique (after removal) stays within mcs_im.
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<std::pair<std::size_t, VarId>> order;
    for (VarId v : a.all_vars())
      if (!iv.count(v)) order.push_back({a.cliques_containing(v).size(), v});
    std::sort(order.begin(), order.end());
    for (auto [cnt, v] : order) {
      auto st = a.cliques_containing(v);
      if (st.size() != cnt) continue;  // stale after a structural change
      if (st.size() == 1) {
        if (a.clique(st[0]).scope.size() == 1) continue;  // lone variable
        shrink_clique(a, st[0], v);
        cleanup_nonmaximal(a, {st[0]}, src);
        changed = true;
        break;
      }
      std::vector<VarId> fused;
      for (int id : st) {
        const auto& s = a.clique(id).scope;
        std::vector<VarId> u;
        std::set_union(fused.begin(), fused.end(), s.begin(), s.end(),
                       std::back_inserter(u));
        fused = std::move(u);
      }
      fused.erase(std::find(fused.begin(), fused.end(), v));
      if (bits_of_scope(a, fused) > mcs_im + kBitsTol) continue;
      collapse_subtree(a, st, v, src);
      changed = true;
      break;
    }
  }

  // Step 2: local marginalization of over-limit cliques, guided by MI.
  auto over_limit = [&] {
    std::vector<int> l;
    for (int id : a.clique_ids())
      if (a.clique_bits(id) > mcs_im + kBitsTol) l.push_back(id);
    return l;
  };
  std::vector<int> lc = over_limit();
  if (!lc.empty()) {
    MiScores scores = mi_scores(a, iv, lc);
    std::set<VarId> lvars;
    for (int id : lc) {
      const auto& s = a.clique(id).scope;
      lvars.insert(s.begin(), s.end());
    }
    std::vector<VarId> order;
    auto push_sorted = [&](bool want_iv) {
      std::vector<VarId> part;
      for (VarId v : lvars)
        if (iv.count(v) == want_iv) part.push_back(v);
      std::sort(part.begin(), part.end(), [&](VarId x, VarId y) {
        double mx = scores.max_mi.at(x), my = scores.max_mi.at(y);
        if (mx != my) return mx < my;
        return x < y;
      });
      order.insert(order.end(), part.begin(), part.end());
    };
    push_sorted(false);  // non-interface first
    push_sorted(true);

    for (VarId v : order) {
      if (over_limit().empty()) break;
      auto st = a.cliques_containing(v);
      bool any_big = false;
      for (int c : st) any_big |= a.clique_bits(c) > mcs_im + kBitsTol;
      if (!any_big) continue;

      // Retention root: small clique where v matters most.
      int crv = -1;
      double best = -1.0;
      for (int c : st) {
        if (a.clique_bits(c) > mcs_im + kBitsTol) continue;
        auto it = scores.mlmi.find({v, c});
        double s = it == scores.mlmi.end() ? 0.0 : it->second;
        if (s > best) {
          best = s;
          crv = c;
        }
      }
      std::set<int> holders(st.begin(), st.end());
      std::set<int> str;
      if (crv != -1) {
        std::queue<int> q;
        q.push(crv);
        str.insert(crv);
        while (!q.empty()) {
          int c = q.front();
          q.pop();
          for (int nb : a.neighbors(c))
            if (holders.count(nb) && !str.count(nb) &&
                a.clique_bits(nb) <= mcs_im + kBitsTol) {
              str.insert(nb);
              q.push(nb);
            }
        }
      }
      std::set<int> lm;
      for (int c : st)
        if (!str.count(c)) lm.insert(c);
      if (lm.empty()) continue;

      if (evidence && !force) {
        std::size_t ms = SIZE_MAX;
        for (int c : lm)
          for (int nb : a.neighbors(c))
            if (contains(a.edge(c, nb).sep, v))
              ms = std::min(ms, a.edge(c, nb).sep.size());
        if (ms == 1) continue;                // would split the tree
        if (str.empty() && iv.count(v)) continue;  // keep v somewhere
      } else if (str.empty() && iv.count(v)) {
        // v survives only as an independent marginal.
        FactorTable marg = a.var_marginal(v);
        std::vector<int> keep_src = src.at(*std::min_element(st.begin(), st.end()));
        res.exact_only = false;
        local_marginalize(a, lm, v, src);
        int nc = a.add_clique({v});
        a.clique(nc).belief = std::move(marg);
        src[nc] = std::move(keep_src);
        continue;
      }
      res.exact_only = false;
      local_marginalize(a, lm, v, src);
    }
  }

  for (int id : over_limit()) {
    bool all_iv = true;
    for (VarId v : a.clique(id).scope) all_iv &= iv.count(v) != 0;
    if (evidence && !force && all_iv)
      throw unsat_approx_error("cannot reduce clique " + std::to_string(id) +
                               ": only interface variables above the size limit");
    res.soft_exceed.push_back(id);
  }

  // Step 3: interface map over the surviving cliques.
  for (int id : a.clique_ids()) {
    ImEntry e;
    e.scope = a.clique(id).scope;
    e.sources = src.at(id);
    std::sort(e.sources.begin(), e.sources.end());
    res.im.entries.emplace(id, std::move(e));
  }

  // Step 4: re-assign factors.  The root of each tree takes the clique
  // belief scaled by the inherited tree normalization constant; the rest
  // take conditionals, so the product reproduces the tree distribution.
  std::map<int, double> tree_extra;
  for (int rep : kept_reps) {
    int lowest = -1;
    for (int id : a.clique_ids()) {
      auto it = orig_rep.find(id);
      if (it != orig_rep.end() && it->second == rep) {
        lowest = id;
        break;
      }
    }
    if (lowest >= 0)
      tree_extra[a.tree_rep(lowest)] += ctf_in.tree_log_weight(rep);
    else
      res.dropped_log_weight += ctf_in.tree_log_weight(rep);
  }
  for (const auto& tree : a.trees()) {
    int root = tree[0];
    double extra = 0.0;
    if (auto it = tree_extra.find(root); it != tree_extra.end())
      extra = it->second;
    std::set<int> seen{root};
    std::queue<int> q;
    q.push(root);
    const FactorTable& rb = *a.clique(root).belief;
    a.clique(root).factors = {FactorTable(rb.scope(), rb.cards(), rb.values(),
                                          rb.log_scale() + extra)};
    while (!q.empty()) {
      int i = q.front();
      q.pop();
      for (int j : a.neighbors(i)) {
        if (seen.count(j)) continue;
        seen.insert(j);
        FactorTable psi = a.clique(j).belief->divide(*a.edge(i, j).mu);
        psi.fold_scale();
        a.clique(j).factors = {std::move(psi)};
        q.push(j);
      }
    }
  }
  a.calibrate();
  res.ctf = std::move(a);
  return res;
}

void update_interface_map(const CliqueForest& next, InterfaceMap& im) {
  for (auto& [id, entry] : im.entries) {
    entry.successor = -1;
    for (int c : next.clique_ids())
      if (subset(entry.scope, next.clique(c).scope)) {
        entry.successor = c;
        break;
      }
    if (entry.successor < 0)
      throw internal_error("no successor clique covers interface clique " +
                           std::to_string(id));
  }
}

}  // namespace ibia
