#include "dsse/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "dsse/csv.hpp"
#include "dsse/placement.hpp"
#include "dsse/power_flow.hpp"
#include "dsse/rng.hpp"
#include "dsse/wls.hpp"

namespace dsse {

using nlohmann::json;

Scenario load_scenario(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
  }
  Scenario s;
  static const char* known[] = {
      "name",          "feeder",        "pmu_buses",     "greedy_k",
      "current_lines", "pseudo_buses",  "pmu_sigma2",    "current_sigma2",
      "pseudo_sigma2", "hidden_widths", "n_samples",     "n_test",
      "epochs",        "batch_size",    "lr",            "patience",
      "seed",          "jitter_sigma",  "res_peak"};
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) {
          return it.key() == k;
        }) == std::end(known))
      throw ConfigError("unknown scenario key '" + it.key() + "'");
  }
  s.name = doc.value("name", std::string("scenario"));
  s.feeder_path = doc.at("feeder").get<std::string>();
  s.pmu_buses = doc.value("pmu_buses", std::vector<int>{});
  s.greedy_k = doc.value("greedy_k", 0);
  if (s.pmu_buses.empty() == (s.greedy_k == 0))
    throw ConfigError("scenario needs exactly one of pmu_buses / greedy_k");
  for (const auto& e : doc.value("current_lines", json::array()))
    s.current_lines.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  s.pseudo_buses = doc.value("pseudo_buses", std::vector<int>{});
  s.pmu_sigma2 = doc.value("pmu_sigma2", 1e-6);
  s.current_sigma2 = doc.value("current_sigma2", 1e-3);
  s.pseudo_sigma2 = doc.value("pseudo_sigma2", 1e-2);
  s.hidden_widths = doc.value("hidden_widths", std::vector<int>{48, 24, 12});
  s.n_samples = doc.value("n_samples", 10000);
  s.n_test = doc.value("n_test", 1000);
  s.epochs = doc.value("epochs", 200);
  s.batch_size = doc.value("batch_size", 64);
  s.lr = doc.value("lr", 1e-3);
  s.patience = doc.value("patience", 20);
  s.seed = doc.value("seed", std::uint64_t{1});
  s.jitter_sigma = doc.value("jitter_sigma", 0.15);
  s.res_peak = doc.value("res_peak", 0.05);
  return s;
}

Scenario load_scenario_file(const std::string& path) {
  return load_scenario(read_text_file(path));
}

std::string serialize_scenario(const Scenario& s) {
  json doc;
  doc["name"] = s.name;
  doc["feeder"] = s.feeder_path;
  if (!s.pmu_buses.empty()) doc["pmu_buses"] = s.pmu_buses;
  if (s.greedy_k) doc["greedy_k"] = s.greedy_k;
  json cl = json::array();
  for (auto [a, b] : s.current_lines) cl.push_back({a, b});
  doc["current_lines"] = cl;
  doc["pseudo_buses"] = s.pseudo_buses;
  doc["pmu_sigma2"] = s.pmu_sigma2;
  doc["current_sigma2"] = s.current_sigma2;
  doc["pseudo_sigma2"] = s.pseudo_sigma2;
  doc["hidden_widths"] = s.hidden_widths;
  doc["n_samples"] = s.n_samples;
  doc["n_test"] = s.n_test;
  doc["epochs"] = s.epochs;
  doc["batch_size"] = s.batch_size;
  doc["lr"] = s.lr;
  doc["patience"] = s.patience;
  doc["seed"] = s.seed;
  doc["jitter_sigma"] = s.jitter_sigma;
  doc["res_peak"] = s.res_peak;
  return doc.dump(2);
}

double daily_curve(double t) {
  auto bump = [](double t_, double center, double width) {
    double d = t_ - center;
    return std::exp(-d * d / (2.0 * width * width));
  };
  return 0.55 + 0.35 * bump(t, 0.33, 0.07) + 0.45 * bump(t, 0.80, 0.09);
}

std::vector<LoadProfile> gen_profiles(const Feeder& feeder, int n_samples,
                                      double jitter_sigma, double res_peak,
                                      std::uint64_t seed) {
  if (n_samples < 1) throw ConfigError("need at least one sample");
  const int nb = feeder.num_buses();
  std::vector<LoadProfile> out;
  out.reserve(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    CounterRng rng(seed, 2000 + static_cast<std::uint64_t>(i));
    double t = rng.next_double();  // time of day
    double daily = daily_curve(t);
    LoadProfile p;
    p.load_scale.assign(nb, 1.0);
    p.res_injection.assign(nb, 0.0);
    for (int b = 0; b < nb; ++b) {
      // mean-one lognormal jitter
      double jitter = jitter_sigma > 0
                          ? std::exp(jitter_sigma * rng.gaussian() -
                                     0.5 * jitter_sigma * jitter_sigma)
                          : 1.0;
      p.load_scale[b] = daily * jitter;
      if (feeder.buses()[b].has_res) {
        double sun = std::max(0.0, std::sin((t - 0.25) * 2.0 * M_PI));
        double rj = jitter_sigma > 0
                        ? std::exp(jitter_sigma * rng.gaussian() -
                                   0.5 * jitter_sigma * jitter_sigma)
                        : 1.0;
        p.res_injection[b] = res_peak * sun * rj;
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

MeasurementSet scenario_measurements(const Feeder& feeder, const Scenario& s,
                                     const std::vector<int>& pmu_buses) {
  MeasurementSet set;
  for (int b : pmu_buses)
    for (const MeasSpec& ms : pmu_voltage_specs(feeder, b, s.pmu_sigma2))
      set.items.push_back(build_measurement(feeder, ms));
  for (auto [from, to] : s.current_lines)
    for (const MeasSpec& ms :
         current_mag_specs(feeder, from, to, s.current_sigma2))
      set.items.push_back(build_measurement(feeder, ms));
  for (int b : s.pseudo_buses)
    for (const MeasSpec& ms : pseudo_injection_specs(b, s.pseudo_sigma2))
      set.items.push_back(build_measurement(feeder, ms));
  set.sort();
  return set;
}

Eigen::VectorXd state_to_column(const StateVector& v) {
  Eigen::VectorXd c(2 * v.size());
  c.head(v.size()) = v.v.real();
  c.tail(v.size()) = v.v.imag();
  return c;
}

StateVector state_from_column(const Eigen::VectorXd& col) {
  StateVector v;
  Eigen::Index n = col.size() / 2;
  v.v.resize(n);
  v.v.real() = col.head(n);
  v.v.imag() = col.tail(n);
  return v;
}

Dataset gen_dataset(const Feeder& feeder, const MeasurementSet& meas,
                    const std::vector<LoadProfile>& profiles,
                    std::uint64_t noise_seed, int threads) {
  const int n = static_cast<int>(profiles.size());
  Dataset ds;
  ds.states.resize(2 * feeder.num_slots(), n);
  ds.measurements.resize(meas.items.size(), n);
  std::vector<char> ok(n, 0);

  int n_threads = std::max(1, threads);
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= n) return;
      PowerFlowOptions opts;
      opts.load_scale = profiles[i].load_scale;
      opts.res_injection = profiles[i].res_injection;
      PowerFlowResult pf = solve_power_flow(feeder, opts);
      if (!pf.converged) continue;
      ok[i] = 1;
      ds.states.col(i) = state_to_column(pf.voltages);
      ds.measurements.col(i) = synthesize(meas, pf.voltages, noise_seed,
                                          static_cast<std::uint64_t>(i));
    }
  };
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  int kept = 0;
  for (int i = 0; i < n; ++i) {
    if (!ok[i]) continue;
    if (kept != i) {
      ds.states.col(kept) = ds.states.col(i);
      ds.measurements.col(kept) = ds.measurements.col(i);
    }
    ++kept;
  }
  ds.dropped = n - kept;
  if (ds.dropped * 100 > n)
    throw DataError("power flow failed on " + std::to_string(ds.dropped) +
                    " of " + std::to_string(n) + " samples (> 1%)");
  ds.states.conservativeResize(Eigen::NoChange, kept);
  ds.measurements.conservativeResize(Eigen::NoChange, kept);
  return ds;
}

double metric_nu(const std::vector<StateVector>& estimates,
                 const std::vector<StateVector>& truths) {
  if (estimates.size() != truths.size() || estimates.empty())
    throw ConfigError("metric_nu: sample count mismatch");
  double acc = 0;
  for (size_t i = 0; i < estimates.size(); ++i) {
    if (estimates[i].size() != truths[i].size())
      throw ConfigError("metric_nu: state size mismatch");
    acc += (estimates[i].v - truths[i].v).squaredNorm();
  }
  return acc / static_cast<double>(estimates.size());
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<int> hidden_for_layers(const std::vector<int>& base, int layers) {
  // layer count = number of masked weight matrices; hidden widths are the
  // first layers-1 of the base list, padded with its last entry
  std::vector<int> h;
  for (int i = 0; i < layers - 1; ++i)
    h.push_back(i < static_cast<int>(base.size())
                    ? base[i]
                    : (base.empty() ? 6 : base.back()));
  return h;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

ComparisonReport run_comparison(const Feeder& feeder, const Scenario& s,
                                const std::vector<int>& layer_counts,
                                int threads, const std::string& out_dir,
                                std::vector<PawnnModel>* trained) {
  std::vector<int> pmu = s.pmu_buses;
  if (pmu.empty())
    pmu = greedy_place(TopologyGraph::from_feeder(feeder), s.greedy_k).placed;
  std::sort(pmu.begin(), pmu.end());

  MeasurementSet meas = scenario_measurements(feeder, s, pmu);
  InputLayout layout = assign_inputs(feeder, meas, pmu);

  auto profiles = gen_profiles(feeder, s.n_samples + s.n_test, s.jitter_sigma,
                               s.res_peak, s.seed);
  std::vector<LoadProfile> train_prof(profiles.begin(),
                                      profiles.begin() + s.n_samples);
  std::vector<LoadProfile> test_prof(profiles.begin() + s.n_samples,
                                     profiles.end());
  Dataset train_ds = gen_dataset(feeder, meas, train_prof, s.seed + 11, threads);
  Dataset test_ds = gen_dataset(feeder, meas, test_prof, s.seed + 13, threads);

  const int nb = feeder.num_buses();
  auto to_inputs = [&](const Eigen::MatrixXd& z) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(nb) * layout.d0, z.cols());
    for (Eigen::Index i = 0; i < z.cols(); ++i)
      x.col(i) = assemble_input(layout, nb, z.col(i));
    return x;
  };
  Eigen::MatrixXd x_train = to_inputs(train_ds.measurements);
  Eigen::MatrixXd x_test = to_inputs(test_ds.measurements);

  auto to_targets = [&](const Eigen::MatrixXd& states) {
    Eigen::MatrixXd y(static_cast<Eigen::Index>(nb) * 6, states.cols());
    for (Eigen::Index i = 0; i < states.cols(); ++i)
      y.col(i) = state_to_target(feeder, state_from_column(states.col(i)));
    return y;
  };
  Eigen::MatrixXd y_train = to_targets(train_ds.states);

  std::vector<StateVector> truth;
  for (Eigen::Index i = 0; i < test_ds.states.cols(); ++i)
    truth.push_back(state_from_column(test_ds.states.col(i)));

  ComparisonReport rep;
  rep.seed = s.seed;
  rep.config_hash = fnv1a(serialize_scenario(s));
  rep.train_samples = static_cast<int>(train_ds.states.cols());
  rep.test_samples = static_cast<int>(test_ds.states.cols());
  rep.dropped = train_ds.dropped + test_ds.dropped;

  using clock = std::chrono::steady_clock;
  std::vector<std::vector<double>> all_times;       // per estimator
  std::vector<Eigen::VectorXcd> first_estimate;     // first test sample

  for (int layers : layer_counts) {
    std::vector<int> widths{layout.d0};
    for (int h : hidden_for_layers(s.hidden_widths, layers)) widths.push_back(h);
    widths.push_back(6);
    PawnnModel model = build_model(feeder, widths, s.seed);
    TrainOptions topt;
    topt.epochs = s.epochs;
    topt.batch_size = s.batch_size;
    topt.lr = s.lr;
    topt.patience = s.patience;
    topt.seed = s.seed;
    topt.threads = threads;
    train(model, x_train, y_train, topt);

    EstimatorReport er;
    er.name = "pawnn_" + std::to_string(layers) + "l";
    std::vector<double> times;
    std::vector<StateVector> est;
    for (Eigen::Index i = 0; i < x_test.cols(); ++i) {
      auto t0 = clock::now();
      Eigen::MatrixXd y = model.forward(x_test.col(i));
      auto t1 = clock::now();
      times.push_back(
          std::chrono::duration<double, std::milli>(t1 - t0).count());
      est.push_back(target_to_state(feeder, y.col(0)));
    }
    er.nu = metric_nu(est, truth);
    er.median_ms = median(times);
    er.per_slot_sqerr = Eigen::VectorXd::Zero(feeder.num_slots());
    for (size_t i = 0; i < est.size(); ++i)
      er.per_slot_sqerr += (est[i].v - truth[i].v).cwiseAbs2();
    er.per_slot_sqerr /= static_cast<double>(est.size());
    all_times.push_back(times);
    if (!est.empty()) first_estimate.push_back(est.front().v);
    rep.estimators.push_back(std::move(er));
    if (trained) trained->push_back(std::move(model));
  }

  {
    EstimatorReport er;
    er.name = "gauss_newton";
    const int nt = rep.test_samples;
    std::vector<StateVector> est(nt);
    std::vector<double> times(nt);
    std::atomic<int> next{0};
    auto worker = [&]() {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= nt) return;
        auto t0 = clock::now();
        WlsResult w = solve_wls(meas, test_ds.measurements.col(i),
                                flat_start(feeder));
        auto t1 = clock::now();
        est[i] = w.voltages;
        times[i] =
            std::chrono::duration<double, std::milli>(t1 - t0).count();
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < std::max(1, threads); ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    er.nu = metric_nu(est, truth);
    er.median_ms = median(times);
    er.per_slot_sqerr = Eigen::VectorXd::Zero(feeder.num_slots());
    for (size_t i = 0; i < est.size(); ++i)
      er.per_slot_sqerr += (est[i].v - truth[i].v).cwiseAbs2();
    er.per_slot_sqerr /= static_cast<double>(est.size());
    all_times.push_back(times);
    if (!est.empty()) first_estimate.push_back(est.front().v);
    rep.estimators.push_back(std::move(er));
  }

  if (!out_dir.empty()) {
    json doc;
    doc["config_hash"] = hash_hex(rep.config_hash);
    doc["seed"] = rep.seed;
    doc["train_samples"] = rep.train_samples;
    doc["test_samples"] = rep.test_samples;
    doc["dropped"] = rep.dropped;
    json ests = json::array();
    Eigen::MatrixXd nu_rows(rep.estimators.size(), 2);
    Eigen::MatrixXd err_rows(feeder.num_slots(), rep.estimators.size() + 2);
    for (int k = 0; k < feeder.num_slots(); ++k) {
      auto [bus, ph] = feeder.slot_label(k);
      err_rows(k, 0) = bus;
      err_rows(k, 1) = ph;
    }
    std::vector<std::string> err_hdr{"bus", "phase"};
    for (size_t e = 0; e < rep.estimators.size(); ++e) {
      const EstimatorReport& er = rep.estimators[e];
      ests.push_back({{"name", er.name},
                      {"nu", er.nu},
                      {"median_ms", er.median_ms}});
      nu_rows(e, 0) = er.nu;
      nu_rows(e, 1) = er.median_ms;
      err_rows.col(e + 2) = er.per_slot_sqerr;
      err_hdr.push_back(er.name);
    }
    doc["estimators"] = ests;
    write_text_file(out_dir + "/report.json", doc.dump(2));
    std::vector<std::string> nu_hdr{"nu", "median_ms"};
    write_csv(out_dir + "/nu.csv", nu_hdr, nu_rows);
    write_csv(out_dir + "/per_bus_error.csv", err_hdr, err_rows);

    // per-sample wall times, one column per estimator
    Eigen::MatrixXd time_rows(rep.test_samples, rep.estimators.size() + 1);
    std::vector<std::string> time_hdr{"sample"};
    for (size_t e = 0; e < rep.estimators.size(); ++e) {
      time_hdr.push_back(rep.estimators[e].name);
      for (int i = 0; i < rep.test_samples; ++i)
        time_rows(i, e + 1) = all_times[e][i];
    }
    for (int i = 0; i < rep.test_samples; ++i) time_rows(i, 0) = i;
    write_csv(out_dir + "/timing.csv", time_hdr, time_rows);

    // long-format magnitude/angle profile of the first test case,
    // truth plus every estimator, for plotting
    std::ostringstream prof;
    prof << "estimator,bus,phase,magnitude_pu,angle_deg\n";
    prof.precision(17);
    auto emit = [&](const std::string& name, const Eigen::VectorXcd& v) {
      for (int k = 0; k < feeder.num_slots(); ++k) {
        auto [bus, ph] = feeder.slot_label(k);
        prof << name << ',' << bus << ',' << ph << ',' << std::abs(v[k])
             << ',' << std::arg(v[k]) * 180.0 / M_PI << '\n';
      }
    };
    if (!truth.empty()) {
      emit("truth", truth.front().v);
      for (size_t e = 0; e < rep.estimators.size(); ++e)
        emit(rep.estimators[e].name, first_estimate[e]);
    }
    write_text_file(out_dir + "/profiles.csv", prof.str());
  }
  return rep;
}

RobustnessReport robustness_experiment(const Feeder& feeder, const Scenario& s,
                                       const PawnnModel& model,
                                       const MeasurementSet& meas,
                                       const std::vector<int>& pmu_buses,
                                       int corrupted_bus, double sigma,
                                       std::uint64_t seed) {
  if (std::find(pmu_buses.begin(), pmu_buses.end(), corrupted_bus) ==
      pmu_buses.end())
    throw ConfigError("corrupted bus must carry a PMU");

  InputLayout layout = assign_inputs(feeder, meas, pmu_buses);
  auto profiles = gen_profiles(feeder, 1, s.jitter_sigma, s.res_peak, seed);
  PowerFlowOptions pfo;
  pfo.load_scale = profiles[0].load_scale;
  pfo.res_injection = profiles[0].res_injection;
  PowerFlowResult pf = solve_power_flow(feeder, pfo);
  if (!pf.converged) throw NumericalError("robustness sample did not converge");

  Eigen::VectorXd z_clean = synthesize(meas, pf.voltages, seed + 17, 0);
  Eigen::VectorXd z_corr = z_clean;
  CounterRng rng(seed, 5000);
  for (size_t i = 0; i < meas.items.size(); ++i) {
    const MeasSpec& sp = meas.items[i].spec;
    if (sp.bus == corrupted_bus &&
        (sp.kind == MeasKind::VReal || sp.kind == MeasKind::VImag))
      z_corr[i] += sigma * rng.gaussian();
  }

  const int nb = feeder.num_buses();
  auto pawnn_est = [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd x = assemble_input(layout, nb, z);
    return target_to_state(feeder, model.forward(x).col(0));
  };
  StateVector p_clean = pawnn_est(z_clean);
  StateVector p_corr = pawnn_est(z_corr);
  WlsResult g_clean = solve_wls(meas, z_clean, flat_start(feeder));
  WlsResult g_corr = solve_wls(meas, z_corr, flat_start(feeder));

  RobustnessReport rep;
  rep.corrupted_bus = corrupted_bus;
  rep.k_layers = model.num_layers();
  rep.pawnn_delta.assign(nb, 0.0);
  rep.gn_delta.assign(nb, 0.0);
  rep.hops_from_corrupted.assign(nb, 0);
  for (int bi = 0; bi < nb; ++bi) {
    int id = feeder.buses()[bi].id;
    rep.hops_from_corrupted[bi] = feeder.hop_distance(id, corrupted_bus);
    for (int p = 0; p < 3; ++p) {
      int sl = feeder.slot(id, p);
      if (sl < 0) continue;
      rep.pawnn_delta[bi] = std::max(
          rep.pawnn_delta[bi], std::abs(p_corr.v[sl] - p_clean.v[sl]));
      rep.gn_delta[bi] = std::max(
          rep.gn_delta[bi],
          std::abs(g_corr.voltages.v[sl] - g_clean.voltages.v[sl]));
    }
  }
  return rep;
}

}  // namespace dsse
