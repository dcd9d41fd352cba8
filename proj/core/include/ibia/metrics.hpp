#ifndef IBIA_METRICS_HPP
#define IBIA_METRICS_HPP

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ibia/factor_table.hpp"
#include "ibia/slctf_engine.hpp"

namespace ibia {

struct Offender {
  VarId var = -1;
  int state = -1;
  double err = 0.0;
};

struct ErrorReport {
  double max_error = 0.0;  // over all non-evidence variables and states
  double rmse = 0.0;
  double kl_mean = 0.0;    // nats; zero estimated mass clamped at 1e-16
  double kl_max = 0.0;
  double score = 1.0;      // 10^(-kl_mean)
  double delta_log_pr = 0.0;
  bool pr_divergent = false;  // exactly one side reported zero probability
  std::vector<Offender> worst;  // largest absolute errors, descending
};

// exact and approx must cover the same variables with equal cardinalities;
// otherwise throws config_error.  Evidence variables are skipped.
ErrorReport compare_marginals(const std::map<VarId, FactorTable>& exact,
                              const std::map<VarId, FactorTable>& approx,
                              const std::set<VarId>& evidence_vars = {});

// |Δ log PR|; both -inf gives 0, a one-sided -inf gives +inf and sets the
// flag when provided.
double compare_pr(double exact_log_pr, double approx_log_pr,
                  bool* divergent = nullptr);

// Corpus harness: every *.uai under the directory, optional *.uai.evid
// evidence, optional *.uai.PR / *.uai.MAR reference results.  Instances
// without reference files fall back to brute-force enumeration when the
// model is small enough.
struct SuiteConfig {
  QueryTask task = QueryTask::MAR_E;
  double mcs_p = 20.0;
  double mcs_im = 15.0;
  double mcs_im_floor = 1.0;
  bool all_links = false;
  double timeout_s = 3600.0;  // per instance, wall clock; §: one hour
  int jobs = 1;
};

struct InstanceResult {
  std::string name;
  std::string status;       // ok | timeout | unsat | error
  std::string detail;       // failure message when not ok
  double elapsed_s = 0.0;
  double log10_pr = 0.0;
  bool have_pr = false;
  bool have_reference = false;
  ErrorReport report;       // meaningful only with a reference
  double score = 0.0;       // 0 unless completed; 1 when no reference exists
};

struct SuiteReport {
  std::vector<InstanceResult> rows;  // sorted by instance name
  double sum_score = 0.0;
  // Cumulative score over elapsed time, one point per completed instance.
  std::vector<std::pair<double, double>> score_curve;
};

SuiteReport run_suite(const std::string& corpus_dir, const SuiteConfig& cfg);

std::string suite_csv(const SuiteReport& rep);
std::string suite_json(const SuiteReport& rep);

}  // namespace ibia

#endif
