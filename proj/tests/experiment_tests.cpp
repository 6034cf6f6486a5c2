#include "doctest.h"

#include <cstdio>

#include "dsse/csv.hpp"
#include "dsse/experiment.hpp"
#include "dsse/placement.hpp"
#include "test_util.hpp"

using namespace dsse;

TEST_CASE("scenario parsing: defaults, strictness, round trip") {
  Scenario s = load_scenario(R"({"feeder":"data/path4.json","greedy_k":2})");
  CHECK(s.greedy_k == 2);
  CHECK(s.pmu_sigma2 == 1e-6);
  CHECK(s.n_samples == 10000);
  CHECK(s.hidden_widths == std::vector<int>{48, 24, 12});

  // unknown keys are rejected, not ignored
  CHECK_THROWS_AS(load_scenario(R"({"feeder":"x","greedy_k":1,"typo_key":3})"),
                  ConfigError);
  // exactly one placement source
  CHECK_THROWS_AS(load_scenario(R"({"feeder":"x"})"), ConfigError);
  CHECK_THROWS_AS(
      load_scenario(R"({"feeder":"x","greedy_k":1,"pmu_buses":[1]})"),
      ConfigError);

  Scenario rt = load_scenario(serialize_scenario(s));
  CHECK(serialize_scenario(rt) == serialize_scenario(s));
}

TEST_CASE("daily curve is positive with two peaks") {
  double lo = 1e9, hi = -1e9;
  for (int i = 0; i < 1000; ++i) {
    double v = daily_curve(i / 1000.0);
    CHECK(v > 0.0);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(hi > lo);
  // evening peak exceeds the overnight trough by a wide margin
  CHECK(daily_curve(0.80) > 1.5 * daily_curve(0.05));
  CHECK(daily_curve(0.33) > 1.2 * daily_curve(0.05));
}

TEST_CASE("profiles and datasets are deterministic and mean-centered") {
  Feeder f = load_feeder_file(test::data_path("path4.json"));
  auto p1 = gen_profiles(f, 500, 0.15, 0.05, 7);
  auto p2 = gen_profiles(f, 500, 0.15, 0.05, 7);
  REQUIRE(p1.size() == 500);
  for (size_t i = 0; i < p1.size(); ++i) {
    CHECK(p1[i].load_scale == p2[i].load_scale);
    CHECK(p1[i].res_injection == p2[i].res_injection);
    for (double s : p1[i].load_scale) CHECK(s > 0.0);
    for (double r : p1[i].res_injection) CHECK(r >= 0.0);
  }
  // lognormal jitter is mean-one: bus-0 scale averages near the curve mean
  double mean_scale = 0, mean_curve = 0;
  for (int i = 0; i < 500; ++i) mean_curve += daily_curve(i / 500.0);
  mean_curve /= 500;
  for (const auto& p : p1) mean_scale += p.load_scale[0];
  mean_scale /= 500;
  CHECK(mean_scale == doctest::Approx(mean_curve).epsilon(0.1));
}

TEST_CASE("dataset generation: zero noise reproduces h(v) exactly") {
  Feeder f = load_feeder_file(test::data_path("path4.json"));
  MeasurementSet set;
  for (const MeasSpec& m : pmu_voltage_specs(f, 2, 0.0))  // sigma2 = 0
    set.items.push_back(build_measurement(f, m));
  set.sort();
  auto profiles = gen_profiles(f, 10, 0.1, 0.0, 3);
  Dataset ds = gen_dataset(f, set, profiles, 99);
  REQUIRE(ds.states.cols() == 10);
  CHECK(ds.dropped == 0);
  for (int i = 0; i < 10; ++i) {
    StateVector v = state_from_column(ds.states.col(i));
    Eigen::VectorXd h = set.evaluate(v);
    CHECK((ds.measurements.col(i) - h).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("dataset generation is thread-count invariant") {
  Feeder f = load_feeder_file(test::data_path("path4.json"));
  MeasurementSet set;
  for (const MeasSpec& m : pmu_voltage_specs(f, 3, 1e-6))
    set.items.push_back(build_measurement(f, m));
  auto profiles = gen_profiles(f, 64, 0.15, 0.02, 5);
  Dataset a = gen_dataset(f, set, profiles, 11, 1);
  Dataset b = gen_dataset(f, set, profiles, 11, 4);
  CHECK(a.states == b.states);
  CHECK(a.measurements == b.measurements);
}

TEST_CASE("accuracy metric: definition, decomposition, cross-check") {
  StateVector a, b;
  a.v.resize(1);
  b.v.resize(1);
  a.v[0] = Complex(0.1, 0.0);
  b.v[0] = Complex(0.0, 0.0);
  CHECK(metric_nu({a}, {b}) == doctest::Approx(0.01));
  CHECK(metric_nu({a}, {a}) == 0.0);

  // second formula: accumulate per element
  Feeder f = load_feeder_file(test::data_path("path4.json"));
  std::vector<StateVector> est, truth;
  for (int i = 0; i < 5; ++i) {
    est.push_back(test::random_state(f, 100 + i));
    truth.push_back(test::random_state(f, 200 + i));
  }
  double acc = 0;
  for (int i = 0; i < 5; ++i)
    for (int k = 0; k < f.num_slots(); ++k)
      acc += std::norm(est[i].v[k] - truth[i].v[k]);
  CHECK(metric_nu(est, truth) == doctest::Approx(acc / 5));

  // weighted decomposition over disjoint sets
  std::vector<StateVector> e1(est.begin(), est.begin() + 2);
  std::vector<StateVector> t1(truth.begin(), truth.begin() + 2);
  std::vector<StateVector> e2(est.begin() + 2, est.end());
  std::vector<StateVector> t2(truth.begin() + 2, truth.end());
  double combined = (2 * metric_nu(e1, t1) + 3 * metric_nu(e2, t2)) / 5;
  CHECK(metric_nu(est, truth) == doctest::Approx(combined));
}

TEST_CASE("bundled measurement plan has the documented size") {
  Scenario s = load_scenario_file(test::data_path("scenario_a.json"));
  s.feeder_path = test::data_path("ieee37.json");
  Feeder f = load_feeder_file(s.feeder_path);
  auto pmu = greedy_place(TopologyGraph::from_feeder(f), s.greedy_k).placed;
  std::sort(pmu.begin(), pmu.end());
  MeasurementSet set = scenario_measurements(f, s, pmu);
  CHECK(set.items.size() == 103);  // 5*6 PMU + 7*3 currents + 26*2 pseudo
}

TEST_CASE("csv io round-trips doubles exactly") {
  std::string path = "/tmp/dsse_csv_test.csv";
  Eigen::MatrixXd m(2, 3);
  m << 1.0, 1.0 / 3.0, -2.5e-17, 4, 5e300, -0.0;
  write_csv(path, {"a", "b", "c"}, m);
  CsvTable t = read_csv(path);
  CHECK(t.header == std::vector<std::string>{"a", "b", "c"});
  CHECK(t.matrix() == m);
  CHECK(t.column("b") == 1);
  CHECK(t.column("zzz") == -1);
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_csv("/nonexistent/nope.csv"), DataError);
}
