#include "ibia/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <limits>
#include <thread>

#include <json.hpp>

#include "ibia/errors.hpp"
#include "ibia/exact_oracle.hpp"
#include "ibia/uai_io.hpp"

namespace fs = std::filesystem;

namespace ibia {

namespace {

constexpr double kQClamp = 1e-16;

double rep_value(const FactorTable& t, std::size_t i) {
  return t.values()[i] * std::exp(t.log_scale());
}

}  // namespace

ErrorReport compare_marginals(const std::map<VarId, FactorTable>& exact,
                              const std::map<VarId, FactorTable>& approx,
                              const std::set<VarId>& evidence_vars) {
  ErrorReport r;
  double sq_sum = 0.0, kl_sum = 0.0;
  std::size_t n_states = 0;
  std::vector<Offender> all;

  for (const auto& [v, p] : exact) {
    auto it = approx.find(v);
    if (it == approx.end())
      throw config_error("no estimate for variable " + std::to_string(v));
    const FactorTable& q = it->second;
    if (q.size() != p.size())
      throw config_error("cardinality mismatch on variable " +
                         std::to_string(v));
    if (evidence_vars.count(v)) continue;
    for (std::size_t s = 0; s < p.size(); ++s) {
      double ps = rep_value(p, s), qs = rep_value(q, s);
      double err = std::fabs(ps - qs);
      r.max_error = std::max(r.max_error, err);
      sq_sum += err * err;
      double kl = ps > 0.0 ? ps * std::log(ps / std::max(qs, kQClamp)) : 0.0;
      kl_sum += kl;
      r.kl_max = std::max(r.kl_max, kl);
      ++n_states;
      all.push_back({v, int(s), err});
    }
  }
  for (const auto& [v, q] : approx)
    if (!exact.count(v))
      throw config_error("estimate for unknown variable " + std::to_string(v));

  if (n_states > 0) {
    r.rmse = std::sqrt(sq_sum / double(n_states));
    r.kl_mean = kl_sum / double(n_states);
  }
  r.score = std::pow(10.0, -r.kl_mean);

  std::stable_sort(all.begin(), all.end(),
                   [](const Offender& a, const Offender& b) { return a.err > b.err; });
  if (all.size() > 5) all.resize(5);
  r.worst = std::move(all);
  return r;
}

double compare_pr(double exact_log_pr, double approx_log_pr, bool* divergent) {
  bool ei = std::isinf(exact_log_pr), ai = std::isinf(approx_log_pr);
  if (divergent) *divergent = false;
  if (ei && ai) return 0.0;
  if (ei || ai) {
    if (divergent) *divergent = true;
    return std::numeric_limits<double>::infinity();
  }
  return std::fabs(exact_log_pr - approx_log_pr);
}

namespace {

InstanceResult run_instance(const fs::path& net_path, const SuiteConfig& cfg) {
  InstanceResult row;
  row.name = net_path.filename().string();
  auto t0 = std::chrono::steady_clock::now();
  try {
    BayesNet net = parse_uai(net_path.string());
    std::map<VarId, int> evid;
    fs::path evid_path = net_path.string() + ".evid";
    if (fs::exists(evid_path)) evid = parse_evidence(evid_path.string());

    EngineOptions opt;
    opt.mcs_p = cfg.mcs_p;
    opt.mcs_im = cfg.mcs_im;
    opt.mcs_im_floor = cfg.mcs_im_floor;
    opt.all_links = cfg.all_links;
    if (cfg.timeout_s > 0.0)
      opt.deadline = t0 + std::chrono::duration_cast<
                              std::chrono::steady_clock::duration>(
                              std::chrono::duration<double>(cfg.timeout_s));

    QueryResult qr = infer(net, evid, cfg.task, opt);
    row.elapsed_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (cfg.timeout_s > 0.0 && row.elapsed_s > cfg.timeout_s)
      throw timeout_error("finished past the deadline");
    row.log10_pr = qr.log_pr / std::log(10.0);
    row.have_pr = true;

    // Reference answers: result files if present, else brute force when
    // the joint fits.
    double ref_log_pr = std::numeric_limits<double>::quiet_NaN();
    std::map<VarId, FactorTable> ref_mar;
    fs::path pr_path = net_path.string() + ".PR";
    fs::path mar_path = net_path.string() + ".MAR";
    if (fs::exists(pr_path))
      ref_log_pr = parse_pr_result(pr_path.string()) * std::log(10.0);
    if (fs::exists(mar_path)) {
      auto rows = parse_mar_result(mar_path.string());
      for (std::size_t i = 0; i < rows.size() && i < net.vars.size(); ++i)
        ref_mar.emplace(net.vars[i],
                        FactorTable({net.vars[i]}, {int(rows[i].size())},
                                    std::vector<double>(rows[i])));
    }
    if (std::isnan(ref_log_pr) && ref_mar.empty()) {
      double bits = 0.0;
      for (VarId v : net.vars) bits += std::log2(double(net.card(v)));
      if (bits <= 24.0) {
        JointOracle orc = enumerate_joint(net, evid);
        ref_log_pr = orc.log_pr();
        if (cfg.task != QueryTask::PR)
          for (VarId v : net.vars) ref_mar.emplace(v, orc.marginal(v));
      }
    }

    if (!std::isnan(ref_log_pr)) {
      row.have_reference = true;
      row.report.delta_log_pr =
          compare_pr(ref_log_pr, qr.log_pr, &row.report.pr_divergent);
    }
    if (!ref_mar.empty() && cfg.task != QueryTask::PR) {
      row.have_reference = true;
      std::set<VarId> ev;
      for (const auto& [v, st] : evid) {
        (void)st;
        ev.insert(v);
      }
      double dlp = row.report.delta_log_pr;
      bool dv = row.report.pr_divergent;
      row.report = compare_marginals(ref_mar, qr.marginals, ev);
      row.report.delta_log_pr = dlp;
      row.report.pr_divergent = dv;
    }
    row.status = "ok";
    row.score = row.have_reference && cfg.task != QueryTask::PR
                    ? row.report.score
                    : 1.0;
  } catch (const timeout_error& e) {
    row.status = "timeout";
    row.detail = e.what();
    row.score = 0.0;
  } catch (const unsat_approx_error& e) {
    row.status = "unsat";
    row.detail = e.what();
    row.score = 0.0;
  } catch (const engine_error& e) {
    row.status = "error";
    row.detail = e.what();
    row.score = 0.0;
  }
  if (row.elapsed_s == 0.0)
    row.elapsed_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
  return row;
}

}  // namespace

SuiteReport run_suite(const std::string& corpus_dir, const SuiteConfig& cfg) {
  std::vector<fs::path> nets;
  if (fs::exists(corpus_dir))
    for (const auto& e : fs::recursive_directory_iterator(corpus_dir))
      if (e.is_regular_file() && e.path().extension() == ".uai")
        nets.push_back(e.path());
  std::sort(nets.begin(), nets.end());

  SuiteReport rep;
  rep.rows.resize(nets.size());
  std::atomic<std::size_t> next{0};
  int jobs = std::max(1, cfg.jobs);
  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= nets.size()) return;
      rep.rows[i] = run_instance(nets[i], cfg);
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::sort(rep.rows.begin(), rep.rows.end(),
            [](const InstanceResult& a, const InstanceResult& b) {
              return a.name < b.name;
            });
  for (const InstanceResult& r : rep.rows) rep.sum_score += r.score;

  std::vector<const InstanceResult*> done;
  for (const InstanceResult& r : rep.rows)
    if (r.status == "ok") done.push_back(&r);
  std::sort(done.begin(), done.end(),
            [](const InstanceResult* a, const InstanceResult* b) {
              return a->elapsed_s < b->elapsed_s;
            });
  double acc = 0.0;
  for (const InstanceResult* r : done) {
    acc += r->score;
    rep.score_curve.emplace_back(r->elapsed_s, acc);
  }
  return rep;
}

std::string suite_csv(const SuiteReport& rep) {
  std::string out =
      "name,status,elapsed_s,log10_pr,max_error,rmse,kl_mean,kl_max,score,"
      "delta_log_pr\n";
  char buf[512];
  for (const InstanceResult& r : rep.rows) {
    std::snprintf(buf, sizeof buf,
                  "%s,%s,%.6f,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                  r.name.c_str(), r.status.c_str(), r.elapsed_s,
                  r.have_pr ? r.log10_pr : 0.0, r.report.max_error,
                  r.report.rmse, r.report.kl_mean, r.report.kl_max, r.score,
                  r.report.delta_log_pr);
    out += buf;
  }
  return out;
}

std::string suite_json(const SuiteReport& rep) {
  nlohmann::ordered_json j;
  j["sum_score"] = rep.sum_score;
  j["rows"] = nlohmann::ordered_json::array();
  for (const InstanceResult& r : rep.rows) {
    nlohmann::ordered_json row;
    row["name"] = r.name;
    row["status"] = r.status;
    if (!r.detail.empty()) row["detail"] = r.detail;
    row["elapsed_s"] = r.elapsed_s;
    if (r.have_pr) row["log10_pr"] = r.log10_pr;
    row["score"] = r.score;
    if (r.have_reference) {
      row["max_error"] = r.report.max_error;
      row["rmse"] = r.report.rmse;
      row["kl_mean"] = r.report.kl_mean;
      row["kl_max"] = r.report.kl_max;
      row["delta_log_pr"] = r.report.delta_log_pr;
      row["pr_divergent"] = r.report.pr_divergent;
    }
    j["rows"].push_back(std::move(row));
  }
  j["score_curve"] = nlohmann::ordered_json::array();
  for (const auto& [t, s] : rep.score_curve)
    j["score_curve"].push_back({t, s});
  return j.dump(2) + "\n";
}

}  // namespace ibia
