#include <benchmark/benchmark.h>

#include <map>
#include <set>

#include "ibia/approx.hpp"
#include "ibia/clique_forest.hpp"
#include "ibia/factor_table.hpp"
#include "ibia/incr_build.hpp"
#include "ibia/random_net.hpp"
#include "ibia/slctf_engine.hpp"

namespace {

using namespace ibia;

FactorTable dense_table(std::uint64_t seed, int nvars) {
  std::vector<VarId> scope;
  std::vector<int> cards;
  std::vector<double> vals;
  std::size_t n = 1;
  for (int i = 0; i < nvars; ++i) {
    scope.push_back(i);
    cards.push_back(2);
    n *= 2;
  }
  std::uint64_t x = seed * 6364136223846793005ull + 1442695040888963407ull;
  for (std::size_t i = 0; i < n; ++i) {
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdull;
    vals.push_back(double((x >> 11) % 1000 + 1));
  }
  return FactorTable(scope, cards, std::move(vals));
}

void BM_factor_product(benchmark::State& state) {
  FactorTable a = dense_table(1, int(state.range(0)));
  FactorTable b = dense_table(2, int(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(a.product(b));
}
BENCHMARK(BM_factor_product)->Arg(8)->Arg(12)->Arg(16);

void BM_factor_marginalize(benchmark::State& state) {
  FactorTable a = dense_table(3, int(state.range(0)));
  std::vector<VarId> keep(a.scope().begin(),
                          a.scope().begin() + a.scope().size() / 2);
  for (auto _ : state) benchmark::DoNotOptimize(a.marginalize(keep));
}
BENCHMARK(BM_factor_marginalize)->Arg(8)->Arg(12)->Arg(16);

BayesNet bench_net(int nvars) {
  RandomNetOptions ro;
  ro.nvars = nvars;
  ro.max_parents = 3;
  return random_net(7, ro);
}

void BM_build_calibrate(benchmark::State& state) {
  BayesNet net = bench_net(int(state.range(0)));
  for (auto _ : state) {
    CliqueForest f(net.cards);
    BuildOptions bo;
    bo.mcs_p = 10.0;
    build_ctf(f, net, bo);
    f.calibrate();
    benchmark::DoNotOptimize(f.num_cliques());
  }
}
BENCHMARK(BM_build_calibrate)->Arg(60)->Arg(120)->Unit(benchmark::kMillisecond);

void BM_approximate(benchmark::State& state) {
  BayesNet net = bench_net(int(state.range(0)));
  CliqueForest f(net.cards);
  BuildOptions bo;
  bo.mcs_p = 10.0;
  BuildResult br = build_ctf(f, net, bo);
  f.calibrate();
  std::set<VarId> iv(br.interface.begin(), br.interface.end());
  for (auto _ : state)
    benchmark::DoNotOptimize(approximate_ctf(f, iv, 5.0, false));
}
BENCHMARK(BM_approximate)->Arg(60)->Arg(120)->Unit(benchmark::kMillisecond);

void BM_infer_prior(benchmark::State& state) {
  BayesNet net = bench_net(int(state.range(0)));
  EngineOptions opt;
  opt.mcs_p = 10.0;
  opt.mcs_im = 5.0;
  for (auto _ : state)
    benchmark::DoNotOptimize(infer(net, {}, QueryTask::MAR_P, opt));
}
BENCHMARK(BM_infer_prior)->Arg(60)->Arg(120)->Unit(benchmark::kMillisecond);

void BM_infer_posterior(benchmark::State& state) {
  BayesNet net = bench_net(int(state.range(0)));
  auto evid = random_evidence(11, net, 4);
  EngineOptions opt;
  opt.mcs_p = 10.0;
  opt.mcs_im = 5.0;
  for (auto _ : state)
    benchmark::DoNotOptimize(infer(net, evid, QueryTask::MAR_E, opt));
}
BENCHMARK(BM_infer_posterior)->Arg(60)->Arg(120)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
