#include "ibia/incr_build.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "ibia/graph_utils.hpp"

namespace ibia {

namespace {

constexpr double kBitsTol = 1e-9;

bool subset(const std::vector<VarId>& a, const std::vector<VarId>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

std::vector<VarId> family_scope(const BayesNet& dag, VarId v) {
  std::vector<VarId> fam = dag.parents.at(v);
  fam.push_back(v);
  std::sort(fam.begin(), fam.end());
  return fam;
}

double bits_of(const CliqueForest& ctf, const std::vector<VarId>& scope) {
  return scope_bits(scope, *ctf.cards());
}

// Absorb any clique that became a subset of a neighbor, rippling outward.
void cleanup_nonmaximal(CliqueForest& ctf, std::set<int> work) {
  while (!work.empty()) {
    int id = *work.begin();
    work.erase(work.begin());
    if (!ctf.has_clique(id)) continue;
    bool changed = true;
    while (changed && ctf.has_clique(id)) {
      changed = false;
      for (int n : std::vector<int>(ctf.neighbors(id).begin(),
                                    ctf.neighbors(id).end())) {
        const auto& si = ctf.clique(id).scope;
        const auto& sn = ctf.clique(n).scope;
        if (si == sn) {
          int keep = std::min(id, n), drop = std::max(id, n);
          ctf.absorb_clique(drop, keep);
          work.insert(keep);
          changed = true;
          break;
        }
        if (subset(si, sn)) {
          ctf.absorb_clique(id, n);
          work.insert(n);
          changed = true;
          break;
        }
        if (subset(sn, si)) {
          ctf.absorb_clique(n, id);
          work.insert(id);
          changed = true;
          break;
        }
      }
    }
  }
}

// Hook the new clique cv below a host clique, replacing the host when it
// became redundant.  Returns the surviving host id (or cv).
int attach_or_replace(CliqueForest& ctf, int cv, int host) {
  if (subset(ctf.clique(host).scope, ctf.clique(cv).scope)) {
    ctf.absorb_clique(host, cv);
    return cv;
  }
  ctf.add_edge(cv, host);
  return host;
}

// One retriangulated insertion of a set of variables whose parent
// subgraphs are connected.  Leaves the forest untouched and returns false
// when the rebuilt segment would break the size cap.
bool try_add_group(CliqueForest& ctf, const BayesNet& dag,
                   const BuildOptions& opt, const std::vector<VarId>& gvars) {
  std::set<int> sg;
  for (VarId v : gvars)
    for (int id : ctf.msg_subgraph(dag.parents.at(v))) sg.insert(id);

  std::set<VarId> S;
  for (VarId v : gvars)
    for (VarId p : dag.parents.at(v)) S.insert(p);
  for (auto i = sg.begin(); i != sg.end(); ++i)
    for (auto j = std::next(i); j != sg.end(); ++j)
      if (ctf.has_edge(*i, *j)) {
        const auto& sep = ctf.edge(*i, *j).sep;
        S.insert(sep.begin(), sep.end());
      }

  std::vector<int> retained, removed;
  for (int id : sg) {
    bool all_in_s = true;
    for (VarId x : ctf.clique(id).scope)
      if (!S.count(x)) {
        all_in_s = false;
        break;
      }
    (all_in_s ? removed : retained).push_back(id);
  }

  // Elimination graph over S: each old clique's S-part is complete, and the
  // parents of every incoming variable are married.
  UGraph ge;
  for (VarId s : S) ge.add_node(s);
  auto complete = [&](const std::vector<VarId>& vs) {
    for (std::size_t i = 0; i < vs.size(); ++i)
      for (std::size_t j = i + 1; j < vs.size(); ++j) ge.add_edge(vs[i], vs[j]);
  };
  for (int id : sg) {
    std::vector<VarId> part;
    for (VarId x : ctf.clique(id).scope)
      if (S.count(x)) part.push_back(x);
    complete(part);
  }
  for (VarId v : gvars) complete(dag.parents.at(v));

  auto order = min_fill_order(ge);
  auto stc = elimination_cliques(ge, order);
  for (const auto& c : stc)
    if (scope_bits(c, *ctf.cards()) > opt.mcs_p + kBitsTol) return false;
  for (VarId v : gvars)
    if (bits_of(ctf, family_scope(dag, v)) > opt.mcs_p + kBitsTol) return false;

  // ---- commit ----
  std::vector<int> cands;
  for (auto& c : stc) cands.push_back(ctf.add_clique(std::move(c)));

  // Spanning forest among the rebuilt cliques (max sepset weight).
  {
    struct Cand {
      std::size_t w;
      int a, b;
    };
    std::vector<Cand> es;
    for (std::size_t i = 0; i < cands.size(); ++i)
      for (std::size_t j = i + 1; j < cands.size(); ++j) {
        const auto& a = ctf.clique(cands[i]).scope;
        const auto& b = ctf.clique(cands[j]).scope;
        std::vector<VarId> inter;
        std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                              std::back_inserter(inter));
        if (!inter.empty()) es.push_back({inter.size(), cands[i], cands[j]});
      }
    std::sort(es.begin(), es.end(), [](const Cand& x, const Cand& y) {
      if (x.w != y.w) return x.w > y.w;
      if (x.a != y.a) return x.a < y.a;
      return x.b < y.b;
    });
    std::map<int, int> up;
    std::function<int(int)> find = [&](int x) {
      while (up[x] != x) x = up[x] = up[up[x]];
      return x;
    };
    for (int id : cands) up[id] = id;
    for (const Cand& e : es) {
      int ra = find(e.a), rb = find(e.b);
      if (ra == rb) continue;
      up[std::max(ra, rb)] = std::min(ra, rb);
      ctf.add_edge(e.a, e.b);
    }
  }

  // Cut the old segment's internal edges touching retained cliques.
  for (int id : retained)
    for (int n : std::vector<int>(ctf.neighbors(id).begin(),
                                  ctf.neighbors(id).end()))
      if (sg.count(n)) ctf.remove_edge(id, n);

  auto replace_cand = [&](int old_id, int new_id) {
    for (int& c : cands)
      if (c == old_id) c = new_id;
  };

  // New variables: clique {v} + parents hangs off a clique holding the
  // parents (smallest, then lowest id).
  for (VarId v : gvars) {
    auto fam = family_scope(dag, v);
    const auto& pa = dag.parents.at(v);
    int host = -1;
    double host_bits = 0;
    for (int id : cands) {
      if (!subset(pa, ctf.clique(id).scope)) continue;
      double b = ctf.clique_bits(id);
      if (host < 0 || b < host_bits - kBitsTol ||
          (std::abs(b - host_bits) <= kBitsTol && id < host)) {
        host = id;
        host_bits = b;
      }
    }
    if (host < 0) throw internal_error("rebuild lost the parents of a variable");
    int cv = ctf.add_clique(fam);
    ctf.clique(cv).factors.push_back(dag.cpds.at(v));
    int kept = attach_or_replace(ctf, cv, host);
    if (kept == cv) replace_cand(host, cv);
    cands.push_back(cv);
  }

  // Reattach retained cliques through their S-part.
  for (int id : retained) {
    std::vector<VarId> cs;
    for (VarId x : ctf.clique(id).scope)
      if (S.count(x)) cs.push_back(x);
    int best = -1;
    for (int c : cands) {
      if (c == id) continue;
      if (subset(cs, ctf.clique(c).scope) && (best < 0 || c < best)) best = c;
    }
    if (best < 0) throw internal_error("rebuild lost a retained sepset");
    if (subset(ctf.clique(best).scope, ctf.clique(id).scope)) {
      ctf.absorb_clique(best, id);
      replace_cand(best, id);
    } else if (!ctf.has_edge(id, best)) {
      ctf.add_edge(id, best);
    }
  }

  // Boundary edges of dropped cliques move to a rebuilt clique holding the
  // old sepset (largest scope overlap with the outside clique, lowest id).
  std::vector<FactorTable> orphans;
  for (int id : removed) {
    for (int n : std::vector<int>(ctf.neighbors(id).begin(),
                                  ctf.neighbors(id).end())) {
      if (sg.count(n) || std::find(cands.begin(), cands.end(), n) != cands.end())
        continue;
      auto sep = ctf.edge(id, n).sep;
      int best = -1;
      std::size_t best_ov = 0;
      for (int c : cands) {
        if (!subset(sep, ctf.clique(c).scope)) continue;
        std::vector<VarId> ov;
        std::set_intersection(ctf.clique(c).scope.begin(), ctf.clique(c).scope.end(),
                              ctf.clique(n).scope.begin(), ctf.clique(n).scope.end(),
                              std::back_inserter(ov));
        if (best < 0 || ov.size() > best_ov ||
            (ov.size() == best_ov && c < best)) {
          best = c;
          best_ov = ov.size();
        }
      }
      if (best < 0) throw internal_error("rebuild lost a boundary sepset");
      ctf.remove_edge(id, n);
      if (!ctf.has_edge(n, best)) ctf.add_edge(n, best);
    }
    for (auto& f : ctf.clique(id).factors) orphans.push_back(std::move(f));
  }
  for (int id : removed) ctf.remove_clique(id);

  for (auto& f : orphans) {
    bool placed = false;
    for (int c : cands) {
      if (!ctf.has_clique(c)) continue;
      if (subset(f.scope(), ctf.clique(c).scope)) {
        ctf.clique(c).factors.push_back(std::move(f));
        placed = true;
        break;
      }
    }
    if (!placed) throw internal_error("rebuild lost a factor home");
  }

  std::set<int> work(cands.begin(), cands.end());
  work.insert(retained.begin(), retained.end());
  cleanup_nonmaximal(ctf, std::move(work));
  return true;
}

// A group with overlapping parent subgraphs is added as a unit: members are
// attached one at a time (observed variables first, then smaller families,
// then lower ids), each with its own freshly computed segment.  If any member
// would push a clique past mcs_p, the whole group is rolled back and deferred;
// its members stay together so the next forest can host them jointly.
void process_group(CliqueForest& ctf, const BayesNet& dag,
                   const BuildOptions& opt, std::vector<VarId> gvars,
                   ModifyResult& res) {
  std::vector<VarId> fits;
  for (VarId v : gvars) {
    if (bits_of(ctf, family_scope(dag, v)) > opt.mcs_p + kBitsTol)
      res.deferred.push_back(v);
    else
      fits.push_back(v);
  }
  if (fits.empty()) return;
  std::stable_sort(fits.begin(), fits.end(), [&](VarId a, VarId b) {
    bool ea = opt.evidence.count(a), eb = opt.evidence.count(b);
    if (ea != eb) return ea;
    double ba = bits_of(ctf, family_scope(dag, a));
    double bb = bits_of(ctf, family_scope(dag, b));
    if (std::abs(ba - bb) > kBitsTol) return ba < bb;
    return a < b;
  });
  CliqueForest saved = ctf;
  for (VarId v : fits) {
    const auto& pa = dag.parents.at(v);
    auto sg = ctf.msg_subgraph(pa);
    if (sg.empty()) throw internal_error("parents missing from forest");
    bool connected = false;
    for (std::size_t i = 0; i < sg.size() && !connected; ++i)
      for (std::size_t j = i + 1; j < sg.size() && !connected; ++j)
        if (ctf.has_edge(sg[i], sg[j])) connected = true;
    bool ok = true;
    if (!connected) {
      // Earlier commits may have turned this into a plain attachment.
      int cv = ctf.add_clique(family_scope(dag, v));
      ctf.clique(cv).factors.push_back(dag.cpds.at(v));
      for (int c : sg) attach_or_replace(ctf, cv, c);
      cleanup_nonmaximal(ctf, {cv});
    } else {
      ok = try_add_group(ctf, dag, opt, {v});
    }
    if (!ok) {
      ctf = std::move(saved);
      for (VarId u : fits) res.deferred.push_back(u);
      return;
    }
  }
  res.added.insert(res.added.end(), fits.begin(), fits.end());
}

}  // namespace

ModifyResult modify_ctf(CliqueForest& ctf, const BayesNet& dag,
                        const std::vector<VarId>& batch, const BuildOptions& opt) {
  ModifyResult res;
  std::set<VarId> pending(batch.begin(), batch.end());

  while (!pending.empty()) {
    // Classify against the current forest.
    struct Info {
      VarId v;
      std::vector<int> sg;
      int kind;  // 0 disjoint, 1 single clique, 2 scattered cliques, 3 segment
    };
    std::vector<Info> infos;
    for (VarId v : pending) {
      const auto& pa = dag.parents.at(v);
      Info in{v, {}, 0};
      if (!pa.empty()) {
        in.sg = ctf.msg_subgraph(pa);
        if (in.sg.empty()) throw internal_error("parents missing from forest");
        if (in.sg.size() == 1) {
          in.kind = 1;
        } else {
          bool connected = false;
          for (std::size_t i = 0; i < in.sg.size() && !connected; ++i)
            for (std::size_t j = i + 1; j < in.sg.size() && !connected; ++j)
              if (ctf.has_edge(in.sg[i], in.sg[j])) connected = true;
          in.kind = connected ? 3 : 2;
        }
      }
      infos.push_back(std::move(in));
    }

    // Simple cases go one variable at a time, lowest id first.
    auto simple = std::find_if(infos.begin(), infos.end(),
                               [](const Info& i) { return i.kind != 3; });
    if (simple != infos.end()) {
      const Info& in = *simple;
      VarId v = in.v;
      pending.erase(v);
      auto fam = family_scope(dag, v);
      if (bits_of(ctf, fam) > opt.mcs_p + kBitsTol) {
        res.deferred.push_back(v);
        continue;
      }
      int cv = ctf.add_clique(fam);
      ctf.clique(cv).factors.push_back(dag.cpds.at(v));
      for (int c : in.sg) attach_or_replace(ctf, cv, c);
      cleanup_nonmaximal(ctf, {cv});
      res.added.push_back(v);
      continue;
    }

    // Everything left needs retriangulation; group variables whose parent
    // subgraphs share cliques and handle the group with the smallest id.
    std::map<VarId, VarId> rep;
    for (const Info& in : infos) rep[in.v] = in.v;
    std::function<VarId(VarId)> find = [&](VarId x) {
      while (rep[x] != x) x = rep[x] = rep[rep[x]];
      return x;
    };
    std::map<int, VarId> owner;
    for (const Info& in : infos)
      for (int id : in.sg) {
        auto it = owner.find(id);
        if (it == owner.end())
          owner[id] = in.v;
        else
          rep[find(in.v)] = find(it->second);
      }
    VarId lead = find(infos.front().v);
    std::vector<VarId> group;
    for (const Info& in : infos)
      if (find(in.v) == lead) group.push_back(in.v);
    for (VarId v : group) pending.erase(v);
    process_group(ctf, dag, opt, std::move(group), res);
  }

  std::sort(res.added.begin(), res.added.end());
  std::sort(res.deferred.begin(), res.deferred.end());
  return res;
}

BuildResult build_ctf(CliqueForest& ctf, const BayesNet& dag,
                      const BuildOptions& opt) {
  auto levels = dag.topo_levels();
  std::set<VarId> forest_vars;
  for (VarId v : ctf.all_vars())
    if (dag.has_var(v)) forest_vars.insert(v);
  std::set<VarId> present = forest_vars;
  for (VarId v : opt.placed)
    if (dag.has_var(v)) present.insert(v);

  BuildResult out;
  std::set<VarId> deferred;

  if (ctf.num_cliques() == 0) {
    for (VarId v : dag.parentless()) {
      if (present.count(v)) continue;
      std::vector<VarId> fam{v};
      if (bits_of(ctf, fam) > opt.mcs_p + kBitsTol) {
        deferred.insert(v);
        continue;
      }
      int id = ctf.add_clique(fam);
      ctf.clique(id).factors.push_back(dag.cpds.at(v));
      present.insert(v);
      out.added.push_back(v);
    }
    if (opt.observer && !out.added.empty()) opt.observer(ctf);
  }

  while (true) {
    int best_level = -1;
    std::vector<VarId> batch;
    for (VarId v : dag.vars) {
      if (present.count(v) || deferred.count(v)) continue;
      bool ready = true;
      for (VarId p : dag.parents.at(v))
        if (!present.count(p)) {
          ready = false;
          break;
        }
      if (!ready) continue;
      int lv = levels.at(v);
      if (best_level < 0 || lv < best_level) {
        best_level = lv;
        batch.clear();
      }
      if (lv == best_level) batch.push_back(v);
    }
    if (batch.empty()) break;

    ModifyResult mr = modify_ctf(ctf, dag, batch, opt);
    for (VarId v : mr.added) {
      present.insert(v);
      out.added.push_back(v);
    }
    deferred.insert(mr.deferred.begin(), mr.deferred.end());
    if (opt.observer) opt.observer(ctf);
  }

  forest_vars.clear();
  for (VarId v : ctf.all_vars())
    if (dag.has_var(v)) forest_vars.insert(v);

  auto ch = dag.children();
  for (VarId v : dag.vars) {
    if (!present.count(v)) {
      out.remaining.push_back(v);
      continue;
    }
    if (!forest_vars.count(v)) continue;  // placed earlier, gone from forest
    for (VarId c : ch[v])
      if (!present.count(c)) {
        out.interface.push_back(v);
        break;
      }
  }
  return out;
}

CompileComparison compare_full_compile(const BayesNet& dag,
                                       const CliqueForest& ctf) {
  std::set<VarId> in;
  for (VarId v : ctf.all_vars()) in.insert(v);
  BayesNet sub;
  sub.cards = dag.cards;
  for (VarId v : dag.vars) {
    if (!in.count(v)) continue;
    sub.vars.push_back(v);
    sub.parents[v] = dag.parents.at(v);
    sub.cpds.emplace(v, dag.cpds.at(v));
  }
  UGraph g = moralize(sub);
  auto order = min_fill_order(g);
  auto cliques = elimination_cliques(g, order);
  double full = 0;
  for (const auto& c : cliques)
    full = std::max(full, scope_bits(c, *dag.cards));
  double inc = ctf.max_clique_bits();
  return CompileComparison{inc, full, inc - full};
}

}  // namespace ibia
