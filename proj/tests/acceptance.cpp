// Acceptance gate: one criterion per numbered check, one PASS/FAIL line
// each. Tolerances are pinned here on purpose; do not loosen them to make a
// run green. Usage: acceptance_tests [N] runs criterion N, or all when
// omitted. Exit status = number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "dsse/experiment.hpp"
#include "dsse/feeder.hpp"
#include "dsse/measurement.hpp"
#include "dsse/pawnn.hpp"
#include "dsse/placement.hpp"
#include "dsse/power_flow.hpp"
#include "dsse/wls.hpp"

using namespace dsse;
using clock_type = std::chrono::steady_clock;

namespace {

std::string g_data_dir = DSSE_DATA_DIR;

std::string data(const std::string& name) { return g_data_dir + "/" + name; }

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

struct Check {
  bool ok = true;
  std::string detail;
  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

// ---- criterion 1: exhaustive placement, exact diameters ----
Check criterion1() {
  Check c;
  auto t0 = clock_type::now();
  Feeder f = load_feeder_file(data("ieee37.json"));
  TopologyGraph g = TopologyGraph::from_feeder(f);
  const int want[6] = {8, 6, 5, 5, 4, 3};
  for (int k = 1; k <= 6; ++k) {
    int dia = exhaustive_place(g, k).dia_trace.back();
    c.require(dia == want[k - 1], "K=" + std::to_string(k) + " dia " +
                                      std::to_string(dia) + " != " +
                                      std::to_string(want[k - 1]));
  }
  double dt = seconds_since(t0);
  c.require(dt <= 60.0, "runtime " + std::to_string(dt) + "s > 60s");
  c.detail = "dia(K=1..6) exact, " + std::to_string(dt) + "s";
  return c;
}

// ---- criterion 2: greedy placement within +-1 ----
Check criterion2() {
  Check c;
  auto t0 = clock_type::now();
  Feeder f = load_feeder_file(data("ieee37.json"));
  TopologyGraph g = TopologyGraph::from_feeder(f);
  const int want[6] = {8, 7, 5, 5, 4, 4};
  PlacementResult r = greedy_place(g, 6);
  std::string trace;
  for (int k = 1; k <= 6; ++k) {
    int dia = r.dia_trace[k - 1];
    trace += (k > 1 ? "," : "") + std::to_string(dia);
    c.require(std::abs(dia - want[k - 1]) <= 1,
              "K=" + std::to_string(k) + " dia " + std::to_string(dia) +
                  " not within 1 of " + std::to_string(want[k - 1]));
  }
  double dt = seconds_since(t0);
  c.require(dt <= 1.0, "runtime " + std::to_string(dt) + "s > 1s");
  if (c.ok) c.detail = "greedy dia " + trace + ", " + std::to_string(dt) + "s";
  return c;
}

// ---- criterion 3: separability of cut-anchored WLS ----
Check criterion3() {
  Check c;
  auto t0 = clock_type::now();
  Feeder f = load_feeder_file(data("ieee37.json"));
  TopologyGraph g = TopologyGraph::from_feeder(f);
  std::vector<int> cuts = greedy_place(g, 5).placed;
  std::sort(cuts.begin(), cuts.end());

  // noiseless PMUs at the cut vertices plus per-phase injections at every
  // other bus: square, consistent, hence a unique WLS minimum
  PowerFlowResult pf = solve_power_flow(f);
  if (!pf.converged) {
    c.require(false, "power flow did not converge");
    return c;
  }
  MeasurementSet set;
  for (int id : cuts)
    for (const MeasSpec& m : pmu_voltage_specs(f, id, 1e-8))
      set.items.push_back(build_measurement(f, m));
  for (const Bus& b : f.buses()) {
    if (std::find(cuts.begin(), cuts.end(), b.id) != cuts.end()) continue;
    for (int p = 0; p < 3; ++p) {
      if (!has_phase(b.phases, p)) continue;
      set.items.push_back(build_measurement(f, {MeasKind::PInj, b.id, 0, p, 1e-2}));
      set.items.push_back(build_measurement(f, {MeasKind::QInj, b.id, 0, p, 1e-2}));
    }
  }
  set.sort();
  Eigen::VectorXd z = set.evaluate(pf.voltages);

  SeparabilityReport rep = verify_separability(f, set, z, cuts);
  c.require(rep.max_discrepancy < 1e-8,
            "max discrepancy " + std::to_string(rep.max_discrepancy));

  // perturbing a measurement leaves every partition that does not use that
  // row bit-identical
  int row = static_cast<int>(set.items.size()) - 1;
  Eigen::VectorXd z2 = z;
  z2[row] += 0.1;
  SeparabilityReport rep2 = verify_separability(f, set, z2, cuts);
  int untouched = 0;
  for (size_t p = 0; p < rep.local_estimates.size(); ++p) {
    bool uses = std::find(rep.partition_meas[p].begin(),
                          rep.partition_meas[p].end(),
                          row) != rep.partition_meas[p].end();
    if (uses) continue;
    ++untouched;
    bool identical = (rep.local_estimates[p].v - rep2.local_estimates[p].v)
                         .cwiseAbs()
                         .maxCoeff() == 0.0;
    c.require(identical,
              "partition " + std::to_string(p) + " changed without cause");
  }
  c.require(untouched > 0, "perturbed row touched every partition");
  double dt = seconds_since(t0);
  c.require(dt <= 10.0, "runtime " + std::to_string(dt) + "s > 10s");
  if (c.ok)
    c.detail = "discrepancy " + std::to_string(rep.max_discrepancy) + ", " +
               std::to_string(untouched) + " partitions bit-stable, " +
               std::to_string(dt) + "s";
  return c;
}

// quick trained model on the bundled feeder; accuracy is irrelevant for the
// structural criteria, only that training has actually run
PawnnModel quick_trained(const Feeder& f, const Scenario& s, int layers,
                         int n_samples, int epochs) {
  std::vector<int> pmu = s.pmu_buses;
  if (pmu.empty())
    pmu = greedy_place(TopologyGraph::from_feeder(f), s.greedy_k).placed;
  std::sort(pmu.begin(), pmu.end());
  MeasurementSet meas = scenario_measurements(f, s, pmu);
  InputLayout layout = assign_inputs(f, meas, pmu);
  auto profiles = gen_profiles(f, n_samples, s.jitter_sigma, s.res_peak, s.seed);
  Dataset ds = gen_dataset(f, meas, profiles, s.seed + 11, 1);

  std::vector<int> widths{layout.d0};
  for (int i = 0; i < layers - 1; ++i)
    widths.push_back(i < static_cast<int>(s.hidden_widths.size())
                         ? s.hidden_widths[i]
                         : s.hidden_widths.back());
  widths.push_back(6);
  PawnnModel model = build_model(f, widths, s.seed);

  const int nb = f.num_buses();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(nb) * layout.d0,
                    ds.measurements.cols());
  for (Eigen::Index i = 0; i < x.cols(); ++i)
    x.col(i) = assemble_input(layout, nb, ds.measurements.col(i));
  Eigen::MatrixXd y(static_cast<Eigen::Index>(nb) * 6, ds.states.cols());
  for (Eigen::Index i = 0; i < y.cols(); ++i)
    y.col(i) = state_to_target(f, state_from_column(ds.states.col(i)));

  TrainOptions topt;
  topt.epochs = epochs;
  topt.batch_size = s.batch_size;
  topt.seed = s.seed;
  train(model, x, y, topt);
  return model;
}

// ---- criterion 4: receptive field of a trained K-layer model ----
Check criterion4() {
  Check c;
  auto t0 = clock_type::now();
  Scenario s = load_scenario_file(data("scenario_a.json"));
  s.feeder_path = data("ieee37.json");
  Feeder f = load_feeder_file(s.feeder_path);
  const int k_layers = 2;
  PawnnModel model = quick_trained(f, s, k_layers, 200, 3);

  const int nb = f.num_buses();
  const int d0 = model.widths.front();
  Eigen::MatrixXd x = Eigen::MatrixXd::Constant(model.input_dim(), 1, 0.3);
  Eigen::MatrixXd base = model.forward(x);

  int pairs = 0, violations = 0;
  for (int j = 0; j < nb; ++j) {
    Eigen::MatrixXd xp = x;
    for (int t = 0; t < d0; ++t) xp(j * d0 + t, 0) += 1.0;
    Eigen::MatrixXd out = model.forward(xp);
    for (int i = 0; i < nb; ++i) {
      if (f.hop_distance(f.buses()[i].id, f.buses()[j].id) <= k_layers)
        continue;
      ++pairs;
      for (int t = 0; t < 6; ++t)
        if (out(i * 6 + t, 0) != base(i * 6 + t, 0)) {
          ++violations;
          break;
        }
    }
  }
  c.require(violations == 0, std::to_string(violations) + " of " +
                                 std::to_string(pairs) +
                                 " far pairs not bit-identical");
  double dt = seconds_since(t0);
  c.require(dt <= 30.0, "runtime " + std::to_string(dt) + "s > 30s");
  if (c.ok)
    c.detail = std::to_string(pairs) + " far pairs bit-identical (K=2), " +
               std::to_string(dt) + "s";
  return c;
}

// ---- criterion 5: numerical correctness suite ----
Check criterion5() {
  Check c;

  // 5a: measurement Jacobians vs central differences, every kind
  {
    Feeder f = load_feeder_file(data("path4.json"));
    StateVector v = flat_start(f);
    CounterRng rng(6, 0);
    for (int k = 0; k < v.size(); ++k)
      v.v[k] *= std::polar(1.0 + rng.uniform(-0.05, 0.05),
                           rng.uniform(-0.03, 0.03));
    std::vector<MeasSpec> specs{
        {MeasKind::VReal, 2, 0, 0, 1},   {MeasKind::VImag, 2, 0, 1, 1},
        {MeasKind::IReal, 2, 3, 2, 1},   {MeasKind::IImag, 3, 2, 0, 1},
        {MeasKind::VMag2, 3, 0, 1, 1},   {MeasKind::IMag2, 1, 2, 2, 1},
        {MeasKind::PFlow, 2, 1, 0, 1},   {MeasKind::QFlow, 2, 3, 1, 1},
        {MeasKind::PInj, 2, 0, 2, 1},    {MeasKind::QInj, 3, 0, 0, 1},
        {MeasKind::PseudoP, 2, 0, kPhaseSum, 1},
        {MeasKind::PseudoQ, 3, 0, kPhaseSum, 1}};
    const double h = 1e-6;
    double worst = 0;
    for (const MeasSpec& ms : specs) {
      QuadraticMeasurement qm = build_measurement(f, ms);
      Eigen::RowVectorXd row = qm.jacobian_row(v);
      for (int k = 0; k < 2 * v.size(); ++k) {
        StateVector vp = v, vm = v;
        Complex d = (k < v.size()) ? Complex(h, 0) : Complex(0, h);
        vp.v[k % v.size()] += d;
        vm.v[k % v.size()] -= d;
        double fd = (qm.evaluate(vp) - qm.evaluate(vm)) / (2 * h);
        double rel = std::abs(row[k] - fd) / std::max(1.0, std::abs(fd));
        worst = std::max(worst, rel);
      }
    }
    c.require(worst < 1e-6, "jacobian rel err " + std::to_string(worst));
  }

  // 5b: network gradient vs finite differences on a 4-bus model
  {
    Feeder f = load_feeder_file(data("path4.json"));
    PawnnModel m = build_model(f, {3, 4, 6}, 11);
    m.input_mean.setZero();
    m.input_std.setOnes();
    CounterRng rng(12, 0);
    Eigen::MatrixXd x(m.input_dim(), 3), y(m.output_dim(), 3);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1, 1);
    for (int i = 0; i < y.size(); ++i) y.data()[i] = rng.uniform(-1, 1);
    auto loss = [&]() { return gradient(m, x, y).loss; };
    PawnnGradient g = gradient(m, x, y);
    const double h = 1e-6;
    double worst = 0;
    for (int l = 0; l < m.num_layers(); ++l) {
      for (size_t b = 0; b < m.layers[l].weight.size(); ++b)
        for (int i = 0; i < m.layers[l].weight[b].size(); ++i) {
          double* w = m.layers[l].weight[b].data() + i;
          double save = *w;
          *w = save + h;
          double lp = loss();
          *w = save - h;
          double lm = loss();
          *w = save;
          double fd = (lp - lm) / (2 * h);
          worst = std::max(worst, std::abs(g.layers[l].weight[b].data()[i] - fd) /
                                      std::max(1.0, std::abs(fd)));
        }
      for (int i = 0; i < m.layers[l].bias.size(); ++i) {
        double save = m.layers[l].bias[i];
        m.layers[l].bias[i] = save + h;
        double lp = loss();
        m.layers[l].bias[i] = save - h;
        double lm = loss();
        m.layers[l].bias[i] = save;
        double fd = (lp - lm) / (2 * h);
        worst = std::max(worst, std::abs(g.layers[l].bias[i] - fd) /
                                    std::max(1.0, std::abs(fd)));
      }
    }
    c.require(worst < 1e-5, "network grad rel err " + std::to_string(worst));
  }

  // 5c: optimizer vs an independent scalar recursion, bit-equal, 10 steps
  {
    Feeder f = load_feeder_file(data("path4.json"));
    PawnnModel m = build_model(f, {2, 3, 6}, 21);
    m.input_mean.setZero();
    m.input_std.setOnes();
    CounterRng rng(13, 0);
    Eigen::MatrixXd x(m.input_dim(), 2), y(m.output_dim(), 2);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1, 1);
    for (int i = 0; i < y.size(); ++i) y.data()[i] = rng.uniform(-1, 1);

    PawnnModel ref = m;
    AdamState st = AdamState::for_model(m);
    std::vector<double> mom1, mom2;
    auto flat_params = [](PawnnModel& mm) {
      std::vector<double*> ps;
      for (auto& l : mm.layers) {
        for (auto& w : l.weight)
          for (int i = 0; i < w.size(); ++i) ps.push_back(w.data() + i);
        for (int i = 0; i < l.bias.size(); ++i) ps.push_back(l.bias.data() + i);
      }
      return ps;
    };
    bool equal = true;
    for (int step = 1; step <= 10 && equal; ++step) {
      PawnnGradient g = gradient(m, x, y);
      PawnnGradient gr = gradient(ref, x, y);
      adam_step(st, m, g);

      std::vector<double> gflat;
      for (auto& l : gr.layers) {
        for (auto& w : l.weight)
          for (int i = 0; i < w.size(); ++i) gflat.push_back(w.data()[i]);
        for (int i = 0; i < l.bias.size(); ++i) gflat.push_back(l.bias[i]);
      }
      mom1.resize(gflat.size(), 0.0);
      mom2.resize(gflat.size(), 0.0);
      auto ps = flat_params(ref);
      for (size_t i = 0; i < gflat.size(); ++i) {
        mom1[i] = st.beta1 * mom1[i] + (1 - st.beta1) * gflat[i];
        mom2[i] = st.beta2 * mom2[i] + (1 - st.beta2) * (gflat[i] * gflat[i]);
        double mh = mom1[i] / (1 - std::pow(st.beta1, step));
        double vh = mom2[i] / (1 - std::pow(st.beta2, step));
        *ps[i] -= st.lr * mh / (std::sqrt(vh) + st.eps);
      }
      auto pa = flat_params(m);
      auto pb = flat_params(ref);
      for (size_t i = 0; i < pa.size(); ++i)
        if (*pa[i] != *pb[i]) equal = false;
    }
    c.require(equal, "optimizer drifted from the scalar recursion");
  }

  // 5d: two-bus power flow vs a Newton solve on the nodal equations
  {
    Mat3 z = Mat3::Zero();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        z(i, j) = i == j ? Complex(0.03, 0.07) : Complex(0.008, 0.016);
    LoadSpec load;
    load.conn = LoadSpec::Conn::Wye;
    load.s = {Complex(0.08, 0.03), Complex(0.05, 0.02), Complex(0.06, 0.025)};
    std::vector<Bus> buses(2);
    buses[0].id = 1;
    buses[1].id = 2;
    buses[1].load = load;
    std::vector<Line> lines{{1, 2, kAllPhases, z, Mat3::Zero()}};
    Feeder f(std::move(buses), std::move(lines), 1, 4800.0, 1e6);

    PowerFlowResult pf = solve_power_flow(f);
    c.require(pf.converged, "sweep did not converge");

    // Newton on r(v2) = Y (v1 - v2) - conj(S / v2) = 0
    Mat3 y = series_admittance(f.lines()[0]);
    Eigen::Vector3cd v1, v2;
    for (int p = 0; p < 3; ++p) {
      v1[p] = flat_start(f).v[f.slot(1, p)];
      v2[p] = flat_start(f).v[f.slot(2, p)];
    }
    auto resid = [&](const Eigen::Vector3cd& vv) {
      Eigen::Vector3cd r;
      for (int p = 0; p < 3; ++p) {
        Complex branch = 0;
        for (int q = 0; q < 3; ++q) branch += y(p, q) * (v1[q] - vv[q]);
        r[p] = branch - std::conj(load.s[p] / vv[p]);
      }
      return r;
    };
    for (int it = 0; it < 60; ++it) {
      Eigen::Vector3cd r = resid(v2);
      if (r.cwiseAbs().maxCoeff() < 1e-14) break;
      Eigen::MatrixXd j(6, 6);
      const double h = 1e-7;
      for (int k = 0; k < 6; ++k) {
        Eigen::Vector3cd vp = v2, vm = v2;
        Complex d = (k < 3) ? Complex(h, 0) : Complex(0, h);
        vp[k % 3] += d;
        vm[k % 3] -= d;
        Eigen::Vector3cd dr = (resid(vp) - resid(vm)) / (2 * h);
        for (int p = 0; p < 3; ++p) {
          j(p, k) = dr[p].real();
          j(p + 3, k) = dr[p].imag();
        }
      }
      Eigen::VectorXd rhs(6);
      for (int p = 0; p < 3; ++p) {
        rhs[p] = -r[p].real();
        rhs[p + 3] = -r[p].imag();
      }
      Eigen::VectorXd dx = j.fullPivLu().solve(rhs);
      for (int p = 0; p < 3; ++p) v2[p] += Complex(dx[p], dx[p + 3]);
    }
    double worst = 0;
    for (int p = 0; p < 3; ++p)
      worst = std::max(worst, std::abs(pf.voltages.v[f.slot(2, p)] - v2[p]));
    c.require(worst < 1e-8, "power flow vs Newton " + std::to_string(worst));
  }

  if (c.ok) c.detail = "jacobians, gradients, optimizer, power flow all within tolerance";
  return c;
}

// ---- criterion 6: desk-scale estimator comparison ----
Check criterion6() {
  Check c;
  auto t0 = clock_type::now();

  Scenario sa = load_scenario_file(data("scenario_a.json"));
  sa.feeder_path = data("ieee37.json");
  Feeder f = load_feeder_file(sa.feeder_path);
  ComparisonReport ra = run_comparison(f, sa, {4}, 1, "");
  double nu4 = 0, nu_gn = 0, t4 = 0, t_gn = 0;
  for (const EstimatorReport& er : ra.estimators) {
    if (er.name == "pawnn_4l") {
      nu4 = er.nu;
      t4 = er.median_ms;
    } else if (er.name == "gauss_newton") {
      nu_gn = er.nu;
      t_gn = er.median_ms;
    }
  }
  c.require(nu4 <= 1e-2, "nu(4L) " + std::to_string(nu4) + " > 1e-2");
  c.require(nu4 < nu_gn, "nu(4L) " + std::to_string(nu4) + " >= nu(GN) " +
                             std::to_string(nu_gn));
  c.require(t_gn >= 10.0 * t4, "median speedup " + std::to_string(t_gn / t4) +
                                   "x < 10x");

  Scenario sb = load_scenario_file(data("scenario_b.json"));
  sb.feeder_path = data("ieee37.json");
  ComparisonReport rb = run_comparison(f, sb, {2, 4, 6}, 1, "");
  double nu2 = 0, nu4b = 0, nu6 = 0;
  for (const EstimatorReport& er : rb.estimators) {
    if (er.name == "pawnn_2l") nu2 = er.nu;
    if (er.name == "pawnn_4l") nu4b = er.nu;
    if (er.name == "pawnn_6l") nu6 = er.nu;
  }
  c.require(nu2 > nu4b && nu4b > nu6,
            "layer ordering nu2 " + std::to_string(nu2) + " nu4 " +
                std::to_string(nu4b) + " nu6 " + std::to_string(nu6));

  double dt = seconds_since(t0);
  c.require(dt <= 1800.0, "runtime " + std::to_string(dt) + "s > 30min");
  if (c.ok) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "nu4=%.2e < nuGN=%.2e, speedup %.0fx, ablation "
                  "%.2e > %.2e > %.2e, %.0fs",
                  nu4, nu_gn, t_gn / t4, nu2, nu4b, nu6, dt);
    c.detail = buf;
  }
  return c;
}

// ---- criterion 7: corruption stays local for the masked estimator ----
Check criterion7() {
  Check c;
  auto t0 = clock_type::now();
  Scenario s = load_scenario_file(data("scenario_a.json"));
  s.feeder_path = data("ieee37.json");
  Feeder f = load_feeder_file(s.feeder_path);
  const int k_layers = 4;
  PawnnModel model = quick_trained(f, s, k_layers, 1500, 25);

  std::vector<int> pmu =
      greedy_place(TopologyGraph::from_feeder(f), s.greedy_k).placed;
  std::sort(pmu.begin(), pmu.end());
  MeasurementSet meas = scenario_measurements(f, s, pmu);
  const int corrupted = 734;
  RobustnessReport rep =
      robustness_experiment(f, s, model, meas, pmu, corrupted, 10.0, s.seed + 29);

  int gn_far_hits = 0;
  for (int b = 0; b < f.num_buses(); ++b) {
    if (rep.hops_from_corrupted[b] <= k_layers) continue;
    c.require(rep.pawnn_delta[b] == 0.0,
              "pawnn delta " + std::to_string(rep.pawnn_delta[b]) + " at bus " +
                  std::to_string(f.buses()[b].id) + " (" +
                  std::to_string(rep.hops_from_corrupted[b]) + " hops)");
    if (rep.gn_delta[b] > 1e-6) ++gn_far_hits;
  }
  c.require(gn_far_hits >= 1, "GN unchanged beyond K hops");
  double dt = seconds_since(t0);
  c.require(dt <= 300.0, "runtime " + std::to_string(dt) + "s > 5min");
  if (c.ok)
    c.detail = "masked deltas exactly 0 beyond " + std::to_string(k_layers) +
               " hops; GN moved at " + std::to_string(gn_far_hits) +
               " far buses, " + std::to_string(dt) + "s";
  return c;
}

// ---- criterion 8: greedy placement scales ~linearly in |N| ----
Check criterion8() {
  Check c;
  const int k = 5;
  std::vector<int> sizes{1000, 3162, 10000, 31623, 100000};
  std::vector<double> logn, logt;
  for (int n : sizes) {
    TopologyGraph g = TopologyGraph::path(n);
    double best = 1e18;
    // best-of-5 screens out scheduler stalls that would distort the fit
    for (int r = 0; r < 5; ++r) {
      auto t0 = clock_type::now();
      greedy_place(g, k);
      best = std::min(best, seconds_since(t0));
    }
    logn.push_back(std::log(static_cast<double>(n)));
    logt.push_back(std::log(best));
  }
  // least-squares slope of log t vs log n
  double mx = 0, my = 0;
  for (size_t i = 0; i < logn.size(); ++i) {
    mx += logn[i];
    my += logt[i];
  }
  mx /= logn.size();
  my /= logt.size();
  double num = 0, den = 0;
  for (size_t i = 0; i < logn.size(); ++i) {
    num += (logn[i] - mx) * (logt[i] - my);
    den += (logn[i] - mx) * (logn[i] - mx);
  }
  double slope = num / den;
  c.require(slope >= 0.9 && slope <= 1.2,
            "runtime exponent " + std::to_string(slope) + " outside [0.9, 1.2]");
  if (c.ok) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "runtime exponent %.3f on paths", slope);
    c.detail = buf;
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* env = std::getenv("PAWNN_DATA_DIR")) g_data_dir = env;
  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);

  std::vector<std::function<Check()>> criteria{
      criterion1, criterion2, criterion3, criterion4,
      criterion5, criterion6, criterion7, criterion8};

  int failures = 0;
  for (int i = 1; i <= static_cast<int>(criteria.size()); ++i) {
    if (only && i != only) continue;
    Check c;
    try {
      c = criteria[i - 1]();
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail = std::string("exception: ") + e.what();
    }
    std::printf("criterion %d: %s (%s)\n", i, c.ok ? "PASS" : "FAIL",
                c.detail.c_str());
    std::fflush(stdout);
    if (!c.ok) ++failures;
  }
  return failures;
}
