#include <benchmark/benchmark.h>

#include "dsse/experiment.hpp"
#include "dsse/measurement.hpp"
#include "dsse/pawnn.hpp"
#include "dsse/placement.hpp"
#include "dsse/power_flow.hpp"
#include "dsse/wls.hpp"

using namespace dsse;

namespace {

std::string data(const char* name) {
  return std::string(DSSE_DATA_DIR) + "/" + name;
}

const Feeder& feeder37() {
  static Feeder f = load_feeder_file(data("ieee37.json"));
  return f;
}

void BM_GreedyPlacementPath(benchmark::State& state) {
  TopologyGraph g = TopologyGraph::path(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(greedy_place(g, 5).placed);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GreedyPlacementPath)
    ->RangeMultiplier(10)
    ->Range(1000, 100000)
    ->Complexity(benchmark::oN);

void BM_ExhaustivePlacement37(benchmark::State& state) {
  TopologyGraph g = TopologyGraph::from_feeder(feeder37());
  int k = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(exhaustive_place(g, k).placed);
}
BENCHMARK(BM_ExhaustivePlacement37)->DenseRange(1, 4);

void BM_PowerFlow37(benchmark::State& state) {
  const Feeder& f = feeder37();
  for (auto _ : state)
    benchmark::DoNotOptimize(solve_power_flow(f).voltages.v);
}
BENCHMARK(BM_PowerFlow37);

struct EstimatorFixtures {
  MeasurementSet meas;
  Eigen::VectorXd z;
  PawnnModel model;
  InputLayout layout;
  Eigen::VectorXd x;

  EstimatorFixtures() {
    const Feeder& f = feeder37();
    Scenario s = load_scenario_file(data("scenario_a.json"));
    std::vector<int> pmu =
        greedy_place(TopologyGraph::from_feeder(f), s.greedy_k).placed;
    std::sort(pmu.begin(), pmu.end());
    meas = scenario_measurements(f, s, pmu);
    PowerFlowResult pf = solve_power_flow(f);
    z = synthesize(meas, pf.voltages, 1, 0);
    layout = assign_inputs(f, meas, pmu);
    std::vector<int> widths{layout.d0, 48, 24, 12, 6};
    model = build_model(f, widths, 1);
    x = assemble_input(layout, f.num_buses(), z);
  }
};

void BM_PawnnInference37(benchmark::State& state) {
  static EstimatorFixtures fx;
  for (auto _ : state)
    benchmark::DoNotOptimize(fx.model.forward(fx.x));
}
BENCHMARK(BM_PawnnInference37);

void BM_GaussNewton37(benchmark::State& state) {
  static EstimatorFixtures fx;
  StateVector start = flat_start(feeder37());
  for (auto _ : state)
    benchmark::DoNotOptimize(solve_wls(fx.meas, fx.z, start).voltages.v);
}
BENCHMARK(BM_GaussNewton37);

void BM_TrainingEpoch37(benchmark::State& state) {
  const Feeder& f = feeder37();
  static EstimatorFixtures fx;
  auto profiles = gen_profiles(f, 256, 0.15, 0.05, 1);
  Dataset ds = gen_dataset(f, fx.meas, profiles, 2);
  Eigen::MatrixXd x(fx.layout.d0 * f.num_buses(), ds.measurements.cols());
  for (Eigen::Index i = 0; i < x.cols(); ++i)
    x.col(i) = assemble_input(fx.layout, f.num_buses(), ds.measurements.col(i));
  Eigen::MatrixXd y(6 * f.num_buses(), ds.states.cols());
  for (Eigen::Index i = 0; i < y.cols(); ++i)
    y.col(i) = state_to_target(f, state_from_column(ds.states.col(i)));

  PawnnModel m = build_model(f, {fx.layout.d0, 48, 24, 12, 6}, 1);
  AdamState st = AdamState::for_model(m);
  for (auto _ : state) {
    for (Eigen::Index b = 0; b + 64 <= x.cols(); b += 64) {
      PawnnGradient g = gradient(m, x.middleCols(b, 64), y.middleCols(b, 64));
      adam_step(st, m, g);
    }
  }
}
BENCHMARK(BM_TrainingEpoch37);

}  // namespace

BENCHMARK_MAIN();
