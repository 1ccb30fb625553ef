#include <benchmark/benchmark.h>

#include "blowup/balance.hpp"
#include "blowup/flow.hpp"
#include "blowup/systemfile.hpp"

using namespace blowup;

namespace {

SystemFile load(const char* name) {
  return load_system_file(std::string(BLOWUP_DATA_DIR) + "/systems/" + name + ".json");
}

void FieldEvalWwlK1(benchmark::State& state) {
  auto sf = load("wwl_k1");
  DesingField df = build(sf.def);
  FieldEval fe(df);
  double x[4] = {0.7, 0.1, 0.1, 0.1};
  double g[5];
  for (auto _ : state) {
    double G = fe(0.02, x, g);
    benchmark::DoNotOptimize(G);
    benchmark::DoNotOptimize(g);
  }
}
BENCHMARK(FieldEvalWwlK1);

void JacobianWwlK1(benchmark::State& state) {
  auto sf = load("wwl_k1");
  DesingField df = build(sf.def);
  Vector x(4);
  x << 0.7, 0.1, 0.1, 0.1;
  for (auto _ : state) {
    Matrix J = jacobian(df, 0.02, x);
    benchmark::DoNotOptimize(J);
  }
}
BENCHMARK(JacobianWwlK1);

void IntegratePainleve(benchmark::State& state) {
  auto sf = load("painleve1");
  DesingField df = build(sf.def);
  Vector y0(2);
  y0 << 3.0, 5.0;
  Vector x0 = embed(df.spec, 0.0, y0).x;
  for (auto _ : state) {
    Trajectory traj = integrate(df, 0.0, x0, 1e-3, 4000.0);
    benchmark::DoNotOptimize(traj.quad);
  }
}
BENCHMARK(IntegratePainleve)->Unit(benchmark::kMillisecond);

void RootSearchWwlK1(benchmark::State& state) {
  auto sf = load("wwl_k1");
  for (auto _ : state) {
    auto roots = find_roots(sf.def, 4.2, sf.seeds);
    benchmark::DoNotOptimize(roots);
  }
}
BENCHMARK(RootSearchWwlK1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
