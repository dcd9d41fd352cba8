#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>

#include "doctest.h"
#include "ibia/exact_oracle.hpp"
#include "ibia/metrics.hpp"
#include "ibia/random_net.hpp"
#include "ibia/uai_io.hpp"
#include "support/nets.hpp"

using namespace ibia;
using namespace ibia::testsup;
namespace fs = std::filesystem;

namespace {

std::map<VarId, FactorTable> one_var(double p0) {
  std::map<VarId, FactorTable> m;
  m.emplace(0, FactorTable({0}, {2}, {p0, 1.0 - p0}));
  return m;
}

}  // namespace

TEST_CASE("identical marginals score one") {
  auto m = one_var(0.3);
  ErrorReport r = compare_marginals(m, m);
  CHECK(r.max_error == 0.0);
  CHECK(r.rmse == 0.0);
  CHECK(r.kl_mean == 0.0);
  CHECK(r.kl_max == 0.0);
  CHECK(r.score == 1.0);
}

TEST_CASE("analytic single-variable case") {
  ErrorReport r = compare_marginals(one_var(1.0), one_var(0.5));
  CHECK(r.max_error == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.rmse == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.kl_mean == doctest::Approx(std::log(2.0) / 2.0).epsilon(1e-12));
  CHECK(r.kl_max == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(r.score ==
        doctest::Approx(std::pow(10.0, -std::log(2.0) / 2.0)).epsilon(1e-12));
  REQUIRE(!r.worst.empty());
  CHECK(r.worst[0].var == 0);
  CHECK(r.worst[0].err == doctest::Approx(0.5));
}

TEST_CASE("zero estimate is clamped, not infinite") {
  ErrorReport r = compare_marginals(one_var(1.0), one_var(0.0));
  CHECK(std::isfinite(r.kl_mean));
  CHECK(r.kl_max == doctest::Approx(std::log(1.0 / 1e-16)));
}

TEST_CASE("evidence variables are skipped") {
  ErrorReport r = compare_marginals(one_var(1.0), one_var(0.5), {0});
  CHECK(r.max_error == 0.0);
  CHECK(r.score == 1.0);
}

TEST_CASE("shape mismatches are rejected") {
  auto a = one_var(0.5);
  std::map<VarId, FactorTable> b;
  b.emplace(0, FactorTable({0}, {3}, {0.2, 0.3, 0.5}));
  CHECK_THROWS_AS(compare_marginals(a, b), config_error);
  std::map<VarId, FactorTable> c;
  c.emplace(1, FactorTable({1}, {2}, {0.5, 0.5}));
  CHECK_THROWS_AS(compare_marginals(a, c), config_error);
}

TEST_CASE("log-probability deltas") {
  CHECK(compare_pr(-10.0, -10.0) == 0.0);
  CHECK(compare_pr(-10.0, -10.3) == doctest::Approx(0.3));
  double ninf = -std::numeric_limits<double>::infinity();
  CHECK(compare_pr(ninf, ninf) == 0.0);
  bool flag = false;
  CHECK(std::isinf(compare_pr(ninf, -1.0, &flag)));
  CHECK(flag);
}

TEST_CASE("report formulas match an independent recomputation") {
  RandomNetOptions ro;
  ro.nvars = 10;
  ro.max_parents = 3;
  for (std::uint64_t seed = 60; seed < 64; ++seed) {
    BayesNet net = random_net(seed, ro);
    auto evid = random_evidence(seed, net, 2);
    JointOracle orc = enumerate_joint(net, evid);
    if (std::isinf(orc.log_pr())) continue;
    EngineOptions opt;
    opt.mcs_p = 5.0;
    opt.mcs_im = 4.0;
    QueryResult qr = infer(net, evid, QueryTask::MAR_E, opt);

    std::map<VarId, FactorTable> exact;
    std::set<VarId> ev;
    for (VarId v : net.vars) exact.emplace(v, orc.marginal(v));
    for (const auto& [v, st] : evid) {
      (void)st;
      ev.insert(v);
    }
    ErrorReport r = compare_marginals(exact, qr.marginals, ev);

    // Straight-line recomputation of every formula.
    double mx = 0.0, sq = 0.0, kls = 0.0, klm = 0.0;
    int n = 0;
    for (VarId v : net.vars) {
      if (ev.count(v)) continue;
      const auto& p = exact.at(v).values();
      const auto& q = qr.marginals.at(v).values();
      for (std::size_t s = 0; s < p.size(); ++s) {
        mx = std::max(mx, std::fabs(p[s] - q[s]));
        sq += (p[s] - q[s]) * (p[s] - q[s]);
        double kl = p[s] > 0 ? p[s] * std::log(p[s] / std::max(q[s], 1e-16)) : 0.0;
        kls += kl;
        klm = std::max(klm, kl);
        ++n;
      }
    }
    CHECK(r.max_error == doctest::Approx(mx).epsilon(1e-12));
    CHECK(r.rmse == doctest::Approx(std::sqrt(sq / n)).epsilon(1e-12));
    CHECK(r.kl_mean == doctest::Approx(kls / n).epsilon(1e-12));
    CHECK(r.kl_max == doctest::Approx(klm).epsilon(1e-12));
  }
}

TEST_CASE("suite harness over a seeded corpus") {
  fs::path dir = fs::temp_directory_path() / "ibia_metrics_suite";
  fs::remove_all(dir);
  fs::create_directories(dir);
  RandomNetOptions ro;
  ro.nvars = 10;
  ro.max_parents = 3;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    BayesNet net = random_net(seed, ro);
    char name[32];
    std::snprintf(name, sizeof name, "n%llu.uai", (unsigned long long)seed);
    write_uai((dir / name).string(), net);
    write_evidence((dir / name).string() + ".evid",
                   random_evidence(seed, net, 1));
  }

  SuiteConfig cfg;
  cfg.mcs_p = 10.0;
  cfg.mcs_im = 5.0;
  SuiteReport rep = run_suite(dir.string(), cfg);
  REQUIRE(rep.rows.size() == 3);
  CHECK(rep.sum_score <= 3.0 + 1e-12);
  for (const InstanceResult& r : rep.rows) {
    CHECK(r.status == "ok");
    CHECK(r.have_reference);    // small nets fall back to enumeration
    CHECK(r.score > 0.5);
  }
  CHECK(rep.score_curve.size() == 3);
  CHECK(rep.score_curve.back().second == doctest::Approx(rep.sum_score));

  std::string csv = suite_csv(rep);
  CHECK(csv.find("name,status") == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  std::string js = suite_json(rep);
  CHECK(js.find("\"sum_score\"") != std::string::npos);

  // Parallel run produces the identical report.
  cfg.jobs = 3;
  SuiteReport rep2 = run_suite(dir.string(), cfg);
  REQUIRE(rep2.rows.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(rep2.rows[i].name == rep.rows[i].name);
    CHECK(rep2.rows[i].score == doctest::Approx(rep.rows[i].score));
  }

  // An impossible deadline turns into score-zero timeout rows.
  cfg.jobs = 1;
  cfg.timeout_s = 1e-9;
  SuiteReport rep3 = run_suite(dir.string(), cfg);
  for (const InstanceResult& r : rep3.rows) {
    CHECK(r.status == "timeout");
    CHECK(r.score == 0.0);
  }
  CHECK(rep3.sum_score == 0.0);

  fs::remove_all(dir);
}

TEST_CASE("empty corpus yields an empty report") {
  fs::path dir = fs::temp_directory_path() / "ibia_metrics_empty";
  fs::remove_all(dir);
  fs::create_directories(dir);
  SuiteReport rep = run_suite(dir.string(), SuiteConfig{});
  CHECK(rep.rows.empty());
  CHECK(rep.sum_score == 0.0);
  fs::remove_all(dir);
}
