// Serial reference against the OpenMP sweep on one Bellman step, plus the
// two inner kernels (surface evaluation, regression fit).

#include <benchmark/benchmark.h>

#include "tcdp/approx.hpp"
#include "tcdp/dp.hpp"
#include "tcdp/market.hpp"

namespace {

tcdp::PortfolioModel two_assets(int degree) {
  tcdp::MarketParams p;
  p.r = 0.03;
  p.mu = {0.07, 0.07};
  p.sigma = {0.2, 0.2};
  p.corr = Eigen::MatrixXd::Identity(2, 2);
  p.tau = {0.001, 0.001};
  tcdp::PortfolioModel m;
  m.chain = tcdp::ParameterChain::single(p);
  m.gamma = 3.0;
  m.consumption = true;
  m.dt = 1.0 / 52;
  m.horizon = 2.0 / 52;
  m.degree = degree;
  return m;
}

void bellman(benchmark::State& st, tcdp::Execution mode) {
  const auto m = two_assets(static_cast<int>(st.range(0)));
  const auto next = tcdp::terminal_surface(m);
  tcdp::RunOptions ro;
  ro.execution = mode;
  ro.workers = mode == tcdp::Execution::Parallel ? static_cast<int>(st.range(1)) : 1;
  for (auto _ : st) {
    auto out = tcdp::bellman_step(m, next, m.periods() - 1, ro);
    benchmark::DoNotOptimize(out.first.states.front().coefficients().data());
  }
  st.counters["nodes"] = static_cast<double>(m.nodes() * m.nodes());
}

void BM_BellmanSerial(benchmark::State& st) { bellman(st, tcdp::Execution::Serial); }
void BM_BellmanParallel(benchmark::State& st) { bellman(st, tcdp::Execution::Parallel); }

BENCHMARK(BM_BellmanSerial)->Args({10, 1})->Args({20, 1})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BellmanParallel)
    ->ArgsProduct({{10, 20}, {1, 2, 4}})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

void BM_SurfaceEval(benchmark::State& st) {
  const int d = static_cast<int>(st.range(0));
  const auto dom = tcdp::HyperRectangle::unit_cube(2);
  std::vector<double> c(tcdp::basis_count(d, 2), 1e-3);
  const tcdp::ChebyshevSurface s(dom, d, c);
  std::vector<double> x = {0.3, 0.4}, g(2);
  for (auto _ : st) {
    benchmark::DoNotOptimize(s.value_and_gradient(x, g));
    x[0] = x[0] < 0.9 ? x[0] + 1e-3 : 0.1;
  }
}
BENCHMARK(BM_SurfaceEval)->Arg(10)->Arg(30)->Arg(60);

void BM_Fit(benchmark::State& st) {
  const int d = static_cast<int>(st.range(0));
  const tcdp::TensorNodeGrid grid(d + 1, tcdp::HyperRectangle::unit_cube(2));
  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(0.1 * static_cast<double>(i));
  for (auto _ : st) benchmark::DoNotOptimize(tcdp::fit_complete(v, d, grid).coefficients().data());
}
BENCHMARK(BM_Fit)->Arg(10)->Arg(30)->Arg(60);

}  // namespace

BENCHMARK_MAIN();
