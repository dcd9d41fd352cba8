#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ibia/errors.hpp"
#include "ibia/exact_oracle.hpp"
#include "ibia/incr_build.hpp"
#include "ibia/metrics.hpp"
#include "ibia/slctf_engine.hpp"
#include "ibia/uai_io.hpp"

namespace fs = std::filesystem;
using namespace ibia;

namespace {

struct RunConfig {
  std::string task = "MAR";  // PR | MAR | MAR_P
  std::string input;
  std::string evidence;
  std::string out_dir = ".";
  double mcs_p = 20.0;
  double mcs_im = -1.0;  // default: mcs_p - 5
  double mcs_im_floor = 1.0;
  std::uint64_t seed = 0;
  double timeout_s = 3600.0;
  int jobs = 1;
  bool all_links = false;
};

QueryTask parse_task(const std::string& t) {
  if (t == "PR") return QueryTask::PR;
  if (t == "MAR") return QueryTask::MAR_E;
  if (t == "MAR_P") return QueryTask::MAR_P;
  throw config_error("unknown task '" + t + "' (expected PR, MAR or MAR_P)");
}

void finalize(RunConfig& cfg) {
  if (cfg.mcs_im < 0.0) cfg.mcs_im = cfg.mcs_p - 5.0;
  if (!(cfg.mcs_im < cfg.mcs_p))
    throw config_error("mcs_im (" + std::to_string(cfg.mcs_im) +
                       ") must be smaller than mcs_p (" +
                       std::to_string(cfg.mcs_p) + ")");
}

EngineOptions engine_options(const RunConfig& cfg,
                             std::chrono::steady_clock::time_point t0) {
  EngineOptions opt;
  opt.mcs_p = cfg.mcs_p;
  opt.mcs_im = cfg.mcs_im;
  opt.mcs_im_floor = cfg.mcs_im_floor;
  opt.all_links = cfg.all_links;
  if (cfg.timeout_s > 0.0)
    opt.deadline =
        t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                 std::chrono::duration<double>(cfg.timeout_s));
  return opt;
}

std::vector<std::vector<double>> marginal_rows(const BayesNet& net,
                                               const QueryResult& r) {
  std::vector<std::vector<double>> rows;
  for (VarId v : net.vars) {
    const FactorTable& m = r.marginals.at(v);
    std::vector<double> row(m.values());
    double s = std::exp(m.log_scale());
    for (double& x : row) x *= s;
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_outputs(const RunConfig& cfg, const BayesNet& net, QueryTask task,
                   const QueryResult& r) {
  fs::create_directories(cfg.out_dir);
  fs::path base = fs::path(cfg.out_dir) / fs::path(cfg.input).filename();
  double log10_pr = r.log_pr / std::log(10.0);

  if (task == QueryTask::PR) {
    write_pr_result(base.string() + ".PR", log10_pr);
  } else {
    write_mar_result(base.string() + ".MAR", marginal_rows(net, r));
  }

  nlohmann::ordered_json j;
  j["task"] = cfg.task;
  j["input"] = fs::path(cfg.input).filename().string();
  j["mcs_p"] = cfg.mcs_p;
  j["mcs_im"] = cfg.mcs_im;
  j["seed"] = cfg.seed;
  j["log_pr"] = std::isinf(r.log_pr) ? nlohmann::ordered_json(nullptr)
                                     : nlohmann::ordered_json(r.log_pr);
  j["log10_pr"] = std::isinf(r.log_pr) ? nlohmann::ordered_json(nullptr)
                                       : nlohmann::ordered_json(log10_pr);
  j["pr_zero"] = r.pr_zero;
  j["n_ctf"] = nlohmann::ordered_json::array();
  j["i_e"] = nlohmann::ordered_json::array();
  double max_bits = 0.0;
  for (const CtfStats& st : r.per_dag) {
    j["n_ctf"].push_back(st.n_ctf);
    j["i_e"].push_back(st.i_e);
    max_bits = std::max(max_bits, st.max_bits);
  }
  j["max_clique_bits"] = max_bits;
  if (task != QueryTask::PR) {
    j["marginals"] = nlohmann::ordered_json::array();
    for (const auto& row : marginal_rows(net, r)) j["marginals"].push_back(row);
  }
  std::ofstream out(base.string() + ".json", std::ios::binary);
  out << j.dump(2) << "\n";
}

int cmd_infer(RunConfig cfg, bool exact) {
  finalize(cfg);
  auto t0 = std::chrono::steady_clock::now();
  QueryTask task = parse_task(cfg.task);
  BayesNet net = parse_uai(cfg.input);
  std::map<VarId, int> evid;
  if (!cfg.evidence.empty()) evid = parse_evidence(cfg.evidence);

  RunConfig run = cfg;
  if (exact) {
    // One forest covering everything: plain junction-tree inference.
    double bits = 0.0;
    for (VarId v : net.vars) bits += std::log2(double(net.card(v)));
    run.mcs_p = bits + 1.0;
    run.mcs_im = bits;
  }
  QueryResult r = infer(net, evid, task, engine_options(run, t0));
  write_outputs(cfg, net, task, r);
  std::printf("%s %s: log10(PR) = %.10g", exact ? "exact" : "infer",
              cfg.task.c_str(), r.log_pr / std::log(10.0));
  for (const CtfStats& st : r.per_dag)
    std::printf("  [N_CTF=%d I_E=%d]", st.n_ctf, st.i_e);
  std::printf("  (%.3f s)\n", r.elapsed_s);
  return 0;
}

int cmd_check(const std::string& path) {
  BayesNet net = parse_uai(path);
  net.check();
  CliqueForest f = full_compile(net);
  f.check_valid();
  std::printf("valid: %zu cliques, max clique size %.3f bits, residual %.3g\n",
              f.num_cliques(), f.max_clique_bits(),
              f.max_calibration_residual());
  return 0;
}

int cmd_compare_compile(const std::string& path, double mcs_p) {
  BayesNet net = parse_uai(path);
  EngineOptions opt;
  opt.mcs_p = mcs_p;
  opt.mcs_im = mcs_p - 1.0;
  auto sm = simplify(net, {});
  for (const BayesNet& dag : sm.dags) {
    Slctf s = construct_slctf(dag, {}, false, QueryTask::MAR_P, opt);
    CompileComparison c = compare_full_compile(dag, s.ctfs.front());
    std::printf("dag with %zu vars: incremental %.3f bits, full %.3f bits, "
                "delta %.3f\n",
                dag.vars.size(), c.mcs_incremental, c.mcs_full, c.delta);
  }
  return 0;
}

int cmd_bench(const RunConfig& cfg, const std::string& corpus) {
  SuiteConfig sc;
  sc.task = parse_task(cfg.task);
  sc.mcs_p = cfg.mcs_p;
  sc.mcs_im = cfg.mcs_im < 0.0 ? cfg.mcs_p - 5.0 : cfg.mcs_im;
  sc.mcs_im_floor = cfg.mcs_im_floor;
  sc.all_links = cfg.all_links;
  sc.timeout_s = cfg.timeout_s;
  sc.jobs = cfg.jobs;
  SuiteReport rep = run_suite(corpus, sc);
  fs::create_directories(cfg.out_dir);
  std::ofstream csv(fs::path(cfg.out_dir) / "suite.csv", std::ios::binary);
  csv << suite_csv(rep);
  std::ofstream js(fs::path(cfg.out_dir) / "suite.json", std::ios::binary);
  js << suite_json(rep);
  std::printf("%zu instances, SumScore %.6f\n", rep.rows.size(), rep.sum_score);
  return 0;
}

void add_common(CLI::App* app, RunConfig& cfg) {
  app->add_option("--task", cfg.task, "PR, MAR or MAR_P")->envname("IBIA_TASK");
  app->add_option("--mcs-p", cfg.mcs_p, "clique size cap (log2 states)")
      ->envname("IBIA_MCS_P");
  app->add_option("--mcs-im", cfg.mcs_im, "approximation cap, default mcs_p-5")
      ->envname("IBIA_MCS_IM");
  app->add_option("--mcs-im-floor", cfg.mcs_im_floor,
                  "lowest bound the soft cap may be relaxed to")
      ->envname("IBIA_MCS_IM_FLOOR");
  app->add_option("--seed", cfg.seed, "run seed recorded in results")
      ->envname("IBIA_SEED");
  app->add_option("--timeout", cfg.timeout_s, "wall-clock limit in seconds")
      ->envname("IBIA_TIMEOUT");
  app->add_option("--jobs", cfg.jobs, "worker threads for suites")
      ->envname("IBIA_JOBS");
  app->add_flag("--all-links", cfg.all_links,
                "belief update through every link")
      ->envname("IBIA_ALL_LINKS");
  app->add_option("--out-dir", cfg.out_dir, "result directory")
      ->envname("IBIA_OUT_DIR");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"approximate inference for discrete Bayesian networks"};
  app.require_subcommand(1);
  RunConfig cfg;

  CLI::App* inf = app.add_subcommand("infer", "run the incremental pipeline");
  add_common(inf, cfg);
  inf->add_option("--input", cfg.input, "UAI network file")
      ->required()
      ->envname("IBIA_INPUT");
  inf->add_option("--evidence", cfg.evidence, "UAI evidence file")
      ->envname("IBIA_EVIDENCE");

  CLI::App* ex = app.add_subcommand("exact", "single-forest exact inference");
  add_common(ex, cfg);
  ex->add_option("--input", cfg.input, "UAI network file")
      ->required()
      ->envname("IBIA_INPUT");
  ex->add_option("--evidence", cfg.evidence, "UAI evidence file")
      ->envname("IBIA_EVIDENCE");

  std::string check_path;
  CLI::App* chk = app.add_subcommand("check", "validate a one-shot compile");
  chk->add_option("--input", check_path, "UAI network file")->required();

  std::string cc_path;
  double cc_mcs = 20.0;
  CLI::App* cc = app.add_subcommand("compare-compile",
                                    "incremental vs full compilation sizes");
  cc->add_option("--input", cc_path, "UAI network file")->required();
  cc->add_option("--mcs-p", cc_mcs, "clique size cap");

  std::string corpus;
  CLI::App* bench = app.add_subcommand("bench", "evaluate a corpus directory");
  add_common(bench, cfg);
  bench->add_option("--corpus", corpus, "directory of .uai instances")
      ->required()
      ->envname("IBIA_CORPUS");

  CLI11_PARSE(app, argc, argv);
  try {
    if (inf->parsed()) return cmd_infer(cfg, false);
    if (ex->parsed()) return cmd_infer(cfg, true);
    if (chk->parsed()) return cmd_check(check_path);
    if (cc->parsed()) return cmd_compare_compile(cc_path, cc_mcs);
    if (bench->parsed()) return cmd_bench(cfg, corpus);
  } catch (const parse_error& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return 2;
  } catch (const config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 3;
  } catch (const unsat_approx_error& e) {
    std::fprintf(stderr, "unsatisfiable approximation: %s\n", e.what());
    return 4;
  } catch (const timeout_error& e) {
    std::fprintf(stderr, "timeout: %s\n", e.what());
    return 5;
  } catch (const engine_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
