#include <benchmark/benchmark.h>

#include <filesystem>

#include "vpp/dispatch.hpp"
#include "vpp/sim.hpp"

using namespace vpp;

namespace {

const std::filesystem::path kData = VPPLAB_DATA_DIR;

const Profile& winter() {
  static const Profile p = load_profile_csv(kData / "days" / "winter.csv", reference_scenario().dt_opt);
  return p;
}

void BM_SolveReferenceDispatch(benchmark::State& state) {
  const ScenarioConfig sc = validate_scenario(reference_scenario());
  const TimeGrid g = build_time_grid(sc, state.range(0));
  const SegmentSeries f = resample_profile(winter(), g);
  const DispatchProblem dp = build_dispatch_problem(sc, f.demand, f.res, {}, g, true);
  std::int64_t nodes = 0;
  for (auto _ : state) {
    const milp::Solution s = milp::solve_milp(dp.lp);
    nodes += s.stats.nodes;
    benchmark::DoNotOptimize(s.objective);
  }
  state.counters["nodes/solve"] = benchmark::Counter(static_cast<double>(nodes), benchmark::Counter::kAvgIterations);
}
BENCHMARK(BM_SolveReferenceDispatch)->Arg(0)->Arg(360)->Arg(1080)->Unit(benchmark::kMillisecond);

void BM_MpcStep(benchmark::State& state) {
  const ScenarioConfig sc = validate_scenario(reference_scenario());
  RunSpec spec;
  spec.policy = SyntheticForecast{0.1};
  spec.seed = 7;
  ErrorModel model = spec.error_model;
  model.norm = calibrate_norm(model, segment_leads(build_time_grid(sc, 0)));
  SimState s;
  s.clock = state.range(0);
  std::uint64_t step = 0;
  for (auto _ : state) {
    const MpcOutcome o = mpc_step(s, sc, winter(), spec, model, step++);
    benchmark::DoNotOptimize(o.command.p_chp);
  }
}
BENCHMARK(BM_MpcStep)->Arg(0)->Arg(720)->Unit(benchmark::kMillisecond);

void BM_SimulateHours(benchmark::State& state) {
  const ScenarioConfig sc = validate_scenario(reference_scenario());
  RunSpec spec;
  spec.duration = state.range(0);
  for (auto _ : state) {
    const RunResult r = simulate_day(sc, winter(), spec);
    benchmark::DoNotOptimize(r.ledger.total_eur);
  }
}
BENCHMARK(BM_SimulateHours)->Arg(60)->Arg(240)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
