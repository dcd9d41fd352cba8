#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "ibia/random_net.hpp"
#include "ibia/uai_io.hpp"
#include "nets.hpp"

using namespace ibia;
namespace fs = std::filesystem;

namespace {
struct TmpDir {
  fs::path p;
  TmpDir() {
    p = fs::temp_directory_path() / ("ibia_io_" + std::to_string(::getpid()));
    fs::create_directories(p);
  }
  ~TmpDir() { fs::remove_all(p); }
  std::string file(const char* n) const { return (p / n).string(); }
};
}  // namespace

TEST_CASE("network round trip") {
  TmpDir tmp;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    RandomNetOptions opt;
    opt.nvars = 9;
    opt.max_parents = 3;
    opt.max_card = 4;
    BayesNet net = random_net(seed, opt);
    write_uai(tmp.file("n.uai"), net);
    BayesNet back = parse_uai(tmp.file("n.uai"));
    REQUIRE(back.vars == net.vars);
    for (VarId v : net.vars) {
      CHECK(back.card(v) == net.card(v));
      CHECK(back.parents.at(v) == net.parents.at(v));
      REQUIRE(back.cpds.at(v).scope() == net.cpds.at(v).scope());
      CHECK(back.cpds.at(v).max_abs_diff(net.cpds.at(v)) < 1e-9);
    }
  }
}

TEST_CASE("markov preamble is rejected with a location") {
  try {
    (void)parse_uai_text("MARKOV\n2\n2 2\n", "m.uai");
    FAIL("expected parse_error");
  } catch (const parse_error& e) {
    CHECK(e.file == "m.uai");
    CHECK(e.line == 1);
  }
}

TEST_CASE("garbage tokens carry the right line") {
  try {
    (void)parse_uai_text("BAYES\n2\n2 x\n", "b.uai");
    FAIL("expected parse_error");
  } catch (const parse_error& e) {
    CHECK(e.line == 3);
  }
}

TEST_CASE("bad conditional rows are rejected") {
  // Row sums 0.5.
  CHECK_THROWS_AS(
      (void)parse_uai_text("BAYES\n1\n2\n1\n1 0\n2\n0.25 0.25\n", "r.uai"),
      parse_error);
}

TEST_CASE("whitespace and newlines are interchangeable") {
  BayesNet a = parse_uai_text("BAYES\n2\n2 2\n2\n1 0\n2 0 1\n2\n0.5 0.5\n4\n0.1 0.9 0.8 0.2\n", "a.uai");
  BayesNet b = parse_uai_text("BAYES 2 2 2 2 1 0 2 0 1 2 0.5 0.5 4 0.1 0.9 0.8 0.2", "b.uai");
  CHECK(a.cpds.at(1).max_abs_diff(b.cpds.at(1)) == 0.0);
}

TEST_CASE("evidence round trip and validation") {
  TmpDir tmp;
  std::map<VarId, int> ev = {{2, 1}, {5, 0}};
  write_evidence(tmp.file("e.evid"), ev);
  CHECK(parse_evidence(tmp.file("e.evid")) == ev);
  CHECK_THROWS_AS((void)parse_evidence_text("1 2", "t.evid"), parse_error);
  CHECK_THROWS_AS((void)parse_evidence_text("1 0 0 junk", "t.evid"), parse_error);
  CHECK_THROWS_AS((void)parse_evidence_text("2 0 0 0 1", "t.evid"), parse_error);
}

TEST_CASE("result files round trip at 10 significant digits") {
  TmpDir tmp;
  write_pr_result(tmp.file("o.PR"), -3.123456789012345);
  CHECK(parse_pr_result(tmp.file("o.PR")) == doctest::Approx(-3.123456789).epsilon(1e-9));

  std::vector<std::vector<double>> mar = {{0.1234567891, 0.8765432109},
                                          {0.25, 0.25, 0.5}};
  write_mar_result(tmp.file("o.MAR"), mar);
  auto back = parse_mar_result(tmp.file("o.MAR"));
  REQUIRE(back.size() == 2);
  REQUIRE(back[1].size() == 3);
  CHECK(back[0][0] == doctest::Approx(mar[0][0]).epsilon(1e-9));
  CHECK(back[1][2] == doctest::Approx(0.5));
}

TEST_CASE("uai layout keeps the child variable last") {
  // Table listed over (1,0): rows iterate parent 1, child 0 fastest.
  BayesNet net = parse_uai_text(
      "BAYES\n2\n2 2\n2\n1 1\n2 1 0\n2\n0.6 0.4\n4\n0.9 0.1 0.2 0.8\n", "c.uai");
  CHECK(net.parents.at(0) == std::vector<VarId>{1});
  // P(0=0 | 1=1) is the third listed value.
  CHECK(net.cpds.at(0).at_assignment({0, 1}) == doctest::Approx(0.2));
}
