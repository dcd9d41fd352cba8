#include "ibia/slctf_engine.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <deque>
#include <limits>
#include <utility>

#include "ibia/errors.hpp"
#include "ibia/incr_build.hpp"

namespace ibia {

namespace {

constexpr double kZeroClamp = 1e-16;

void check_deadline(const EngineOptions& opt, const char* stage) {
  if (opt.deadline.time_since_epoch().count() == 0) return;
  if (std::chrono::steady_clock::now() > opt.deadline)
    throw timeout_error(std::string("deadline exceeded during ") + stage);
}

// num / den over identical scopes, with zero denominator cells that carry
// numerator mass clamped instead of trapping (erroneous-zero remedy).
FactorTable clamped_ratio(const FactorTable& num, const FactorTable& den) {
  assert(num.scope() == den.scope());
  std::vector<double> d = den.values();
  const std::vector<double>& n = num.values();
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d[i] == 0.0 && n[i] != 0.0) d[i] = kZeroClamp;
  FactorTable safe(den.scope(), den.cards(), std::move(d), den.log_scale());
  return num.divide(safe);
}

// Single-pass distribution: push root's belief outward through its tree,
// refreshing each sepset on the way.  No collect pass.
void distribute_from(CliqueForest& f, int root) {
  std::deque<int> queue{root};
  std::set<int> seen{root};
  while (!queue.empty()) {
    int i = queue.front();
    queue.pop_front();
    for (int j : f.neighbors(i)) {
      if (!seen.insert(j).second) continue;
      CtfEdge& e = f.edge(i, j);
      FactorTable mu_new = f.clique(i).belief->marginalize(e.sep);
      mu_new.normalize();
      assert(e.mu);
      FactorTable b = f.clique(j).belief->product(clamped_ratio(mu_new, *e.mu));
      b.normalize();
      f.clique(j).belief = std::move(b);
      e.mu = std::move(mu_new);
      queue.push_back(j);
    }
  }
}

void apply_link(CliqueForest& fk, const CliqueForest& fk1, const ImEntry& entry,
                const UpdateLink& ul) {
  if (entry.successor < 0)
    throw internal_error("belief update before successor resolution");
  FactorTable succ = fk1.clique(entry.successor).belief->marginalize(ul.links);
  succ.normalize();
  FactorTable own = fk.clique(ul.clique).belief->marginalize(ul.links);
  own.normalize();
  FactorTable b = fk.clique(ul.clique).belief->product(clamped_ratio(succ, own));
  b.normalize();
  fk.clique(ul.clique).belief = std::move(b);
  distribute_from(fk, ul.clique);
}

FactorTable point_mass(VarId v, int card, int state) {
  std::vector<double> vals(std::size_t(card), 0.0);
  vals[std::size_t(state)] = 1.0;
  return FactorTable({v}, {card}, std::move(vals));
}

}  // namespace

Slctf construct_slctf(const BayesNet& dag, const std::set<VarId>& evid_vars,
                      bool E, QueryTask query, const EngineOptions& opt) {
  // CPD-size awareness: a family that can never fit means the cap is
  // misconfigured, not that the pipeline failed.
  for (VarId v : dag.vars) {
    std::vector<VarId> fam = dag.parents.at(v);
    fam.push_back(v);
    double bits = 0.0;
    for (VarId u : fam) bits += std::log2(double(dag.card(u)));
    if (bits > opt.mcs_p + 1e-9)
      throw config_error("family of variable " + std::to_string(v) + " needs " +
                         std::to_string(bits) + " bits, cap is " +
                         std::to_string(opt.mcs_p));
  }

  Slctf s;
  s.evidence = E;
  CliqueForest ctf(dag.cards);
  std::set<VarId> placed;
  std::set<VarId> seg;
  for (VarId v : evid_vars)
    if (dag.has_var(v)) seg.insert(v);
  const bool has_ev = !seg.empty();

  double cur_im = opt.mcs_im;
  std::set<VarId> prev_iv;       // interface of the last approximated forest
  double prev_drop = 0.0;        // its dropped-weight contribution
  bool have_prev = false;
  bool forced = false;           // forced-marginalization stage engaged

  // Interface-only cliques can deadlock the evidence-mode rules; fall back
  // to forced (unrestricted) marginalization rather than giving up.
  auto approx = [&](const CliqueForest& f, const std::set<VarId>& iv) {
    try {
      return approximate_ctf(f, iv, cur_im, E, forced);
    } catch (const unsat_approx_error&) {
      forced = true;
      return approximate_ctf(f, iv, cur_im, E, true);
    }
  };

  int k = 1;
  while (true) {
    check_deadline(opt, "build");
    BuildOptions bo;
    bo.mcs_p = opt.mcs_p;
    bo.evidence = seg;
    bo.placed = placed;
    BuildResult br = build_ctf(ctf, dag, bo);
    if (br.added.empty()) {
      // Nothing fits next to the approximate forest.  mcs_im is a soft
      // constraint: redo the previous approximation with a smaller bound
      // until the deferred variables find room.
      bool lower = have_prev && cur_im - 1.0 >= opt.mcs_im_floor - 1e-9;
      if (lower || (have_prev && !forced)) {
        if (lower)
          cur_im -= 1.0;
        else
          forced = true;  // floor reached: last resort
        ApproxResult ar = approx(s.ctfs.back(), prev_iv);
        s.dropped_log_weight += ar.dropped_log_weight - prev_drop;
        prev_drop = ar.dropped_log_weight;
        s.approx_exact_only.back() = ar.exact_only;
        if (E) s.ims.back() = std::move(ar.im);
        ctf = std::move(ar.ctf);
        continue;
      }
      if (!have_prev)
        throw internal_error("no variable fits the first forest; " +
                             std::to_string(br.remaining.size()) + " left");
      throw unsat_approx_error(
          "stuck with " + std::to_string(br.remaining.size()) +
          " variables left: lowering the soft bound to " +
          std::to_string(cur_im) + " made no room under cap " +
          std::to_string(opt.mcs_p));
    }
    for (VarId v : br.added) {
      placed.insert(v);
      seg.erase(v);
      s.first_ctf.emplace(v, k - 1);
    }
    ctf.calibrate();
    s.ctfs.push_back(ctf);
    if (opt.observer) opt.observer(k, s.ctfs.back());
    if (E && has_ev && seg.empty() && s.i_e == 0) s.i_e = k;
    if (br.remaining.empty()) break;

    check_deadline(opt, "approximate");
    std::set<VarId> iv(br.interface.begin(), br.interface.end());
    ApproxResult ar = approx(ctf, iv);
    s.dropped_log_weight += ar.dropped_log_weight;
    s.approx_exact_only.push_back(ar.exact_only);
    prev_iv = std::move(iv);
    prev_drop = ar.dropped_log_weight;
    have_prev = true;
    if (E) s.ims.push_back(std::move(ar.im));
    ctf = std::move(ar.ctf);
    ++k;
  }

  if (E && query == QueryTask::MAR_E)
    for (std::size_t j = 0; j < s.ims.size(); ++j)
      update_interface_map(s.ctfs[j + 1], s.ims[j]);
  return s;
}

double slctf_log_pr(const Slctf& s) {
  double lp = s.dropped_log_weight;
  for (const auto& [rep, w] : s.ctfs.back().tree_log_weights()) {
    (void)rep;
    lp += w;
  }
  return lp;
}

std::map<VarId, FactorTable> slctf_mar_p(const Slctf& s) {
  std::map<VarId, FactorTable> out;
  for (const auto& [v, k] : s.first_ctf)
    out.emplace(v, s.ctfs[std::size_t(k)].var_marginal(v));
  return out;
}

std::vector<UpdateLink> select_update_links(const InterfaceMap& im,
                                            const CliqueForest& ctf_k,
                                            const CliqueForest& ctf_k1,
                                            const EngineOptions& opt) {
  // Candidate links: every (source clique, interface entry) pair with a
  // nonempty variable overlap.
  std::vector<UpdateLink> cand;
  std::set<VarId> link_vars;
  for (const auto& [id, e] : im.entries) {
    link_vars.insert(e.scope.begin(), e.scope.end());
    for (int c : e.sources) {
      if (!ctf_k.has_clique(c)) continue;
      const std::vector<VarId>& cs = ctf_k.clique(c).scope;
      UpdateLink ul;
      ul.clique = c;
      ul.entry = id;
      std::set_intersection(cs.begin(), cs.end(), e.scope.begin(),
                            e.scope.end(), std::back_inserter(ul.links));
      if (!ul.links.empty()) cand.push_back(std::move(ul));
    }
  }

  std::map<VarId, double> diff;
  for (VarId v : link_vars)
    diff[v] = ctf_k.var_marginal(v).max_abs_diff(ctf_k1.var_marginal(v));
  std::set<VarId> retained;
  for (const auto& [v, d] : diff)
    if (d >= opt.link_diff_threshold) retained.insert(v);
  for (UpdateLink& ul : cand) {
    ul.diff = 0.0;
    for (VarId v : ul.links) ul.diff = std::max(ul.diff, diff.at(v));
  }

  std::vector<UpdateLink> chosen;
  std::vector<bool> taken(cand.size(), false);
  if (opt.all_links) {
    chosen = cand;
    std::fill(taken.begin(), taken.end(), true);
  } else {
    // Greedy minimum cover of the retained link variables.
    std::set<VarId> uncovered = retained;
    while (!uncovered.empty()) {
      std::size_t best = cand.size(), best_cov = 0;
      for (std::size_t i = 0; i < cand.size(); ++i) {
        if (taken[i]) continue;
        std::size_t cov = 0;
        for (VarId v : cand[i].links) cov += uncovered.count(v);
        if (cov > best_cov) {
          best_cov = cov;
          best = i;
        }
      }
      if (best == cand.size()) break;
      taken[best] = true;
      chosen.push_back(cand[best]);
      for (VarId v : cand[best].links) uncovered.erase(v);
    }
  }

  // Every tree of ctf_k needs at least one link so its beliefs move.
  std::set<int> covered_trees;
  for (const UpdateLink& ul : chosen)
    covered_trees.insert(ctf_k.tree_rep(ul.clique));
  std::map<int, std::size_t> fallback;  // tree rep -> candidate index
  for (std::size_t i = 0; i < cand.size(); ++i) {
    if (taken[i]) continue;
    int rep = ctf_k.tree_rep(cand[i].clique);
    if (covered_trees.count(rep)) continue;
    auto it = fallback.find(rep);
    if (it == fallback.end() ||
        cand[i].links.size() > cand[it->second].links.size())
      fallback[rep] = i;
  }
  for (const auto& [rep, i] : fallback) {
    (void)rep;
    chosen.push_back(cand[i]);
  }

  std::stable_sort(chosen.begin(), chosen.end(),
                   [](const UpdateLink& a, const UpdateLink& b) {
                     if (a.diff != b.diff) return a.diff < b.diff;
                     if (a.entry != b.entry) return a.entry < b.entry;
                     return a.clique < b.clique;
                   });
  return chosen;
}

std::map<VarId, FactorTable> slctf_mar_e(Slctf& s, const EngineOptions& opt) {
  // Backward belief update for the forests that predate the last evidence.
  for (int k = s.i_e - 1; k >= 1; --k) {
    check_deadline(opt, "belief update");
    std::size_t j = std::size_t(k - 1);
    const InterfaceMap& im = s.ims.at(j);
    std::vector<UpdateLink> links =
        select_update_links(im, s.ctfs[j], s.ctfs[j + 1], opt);
    for (const UpdateLink& ul : links)
      apply_link(s.ctfs[j], s.ctfs[j + 1], im.entries.at(ul.entry), ul);
  }
  return slctf_mar_p(s);
}

QueryResult infer(const BayesNet& net, const std::map<VarId, int>& evidence,
                  QueryTask task, const EngineOptions& opt) {
  auto t0 = std::chrono::steady_clock::now();
  QueryResult out;
  // Prior marginals ignore observations entirely.
  SimplifiedModel sm =
      simplify(net, task == QueryTask::MAR_P ? std::map<VarId, int>{} : evidence);
  if (sm.inconsistent) {
    out.log_pr = -std::numeric_limits<double>::infinity();
    out.pr_zero = true;
    out.elapsed_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return out;
  }

  for (std::size_t i = 0; i < sm.dags.size(); ++i) {
    const BayesNet& dag = sm.dags[i];
    std::set<VarId> ev(sm.evidence[i].begin(), sm.evidence[i].end());
    bool E = task != QueryTask::MAR_P && !ev.empty();
    Slctf s = construct_slctf(dag, ev, E, task, opt);
    out.log_pr += slctf_log_pr(s);

    CtfStats st;
    st.n_ctf = int(s.ctfs.size());
    st.i_e = s.i_e;
    for (const CliqueForest& f : s.ctfs)
      st.max_bits = std::max(st.max_bits, f.max_clique_bits());
    out.per_dag.push_back(st);

    if (task != QueryTask::PR) {
      auto mar = task == QueryTask::MAR_P ? slctf_mar_p(s) : slctf_mar_e(s, opt);
      for (auto& [v, m] : mar) out.marginals.emplace(v, std::move(m));
    }
  }
  if (std::isinf(out.log_pr) && out.log_pr < 0.0) out.pr_zero = true;

  if (task != QueryTask::PR) {
    for (const auto& [v, st] : sm.fixed)
      if (!out.marginals.count(v))
        out.marginals.emplace(v, point_mass(v, net.card(v), st));
    // Collapsed variables follow their surviving source through the
    // recorded state permutation; chains resolve over repeated passes.
    bool progress = true;
    while (progress) {
      progress = false;
      for (const auto& [v, cv] : sm.collapsed) {
        if (out.marginals.count(v)) continue;
        auto it = out.marginals.find(cv.source);
        if (it == out.marginals.end()) continue;
        std::vector<double> vals(std::size_t(net.card(v)), 0.0);
        const std::vector<double>& src = it->second.values();
        for (std::size_t st2 = 0; st2 < src.size(); ++st2)
          vals[std::size_t(cv.perm[st2])] += src[st2];
        out.marginals.emplace(v,
                              FactorTable({v}, {net.card(v)}, std::move(vals)));
        progress = true;
      }
    }
    for (VarId v : net.vars)
      if (!out.marginals.count(v))
        throw internal_error("no marginal produced for variable " +
                             std::to_string(v));
  }

  out.elapsed_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return out;
}

}  // namespace ibia
