#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dsse/csv.hpp"
#include "dsse/experiment.hpp"
#include "dsse/feeder.hpp"
#include "dsse/measurement.hpp"
#include "dsse/pawnn.hpp"
#include "dsse/placement.hpp"
#include "dsse/power_flow.hpp"
#include "dsse/wls.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dsse;

namespace {

constexpr const char* kVersion = "1.0.0";

std::string resolve_data(const std::string& path) {
  if (fs::exists(path)) return path;
  if (const char* dir = std::getenv("PAWNN_DATA_DIR")) {
    fs::path p = fs::path(dir) / path;
    if (fs::exists(p)) return p.string();
  }
  return path;  // let the loader report the failure
}

struct Common {
  std::string feeder_path;
  std::string scenario_path;
  int k = 0;
  std::string method = "greedy";
  std::string layers = "";
  int epochs = -1;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
  std::string out = "pawnn_out";
};

void add_common(CLI::App* cmd, Common& c, bool feeder, bool scenario) {
  if (feeder) cmd->add_option("--feeder", c.feeder_path, "feeder JSON file");
  if (scenario)
    cmd->add_option("--scenario", c.scenario_path, "scenario JSON file");
  cmd->add_option("--seed", c.seed, "override the run seed")
      ->each([&](const std::string&) { c.seed_set = true; });
  cmd->add_option("--threads", c.threads,
                  "worker threads (default: available cores)");
  cmd->add_option("--out", c.out, "output directory");
}

int thread_count(const Common& c) {
  if (c.threads > 0) return c.threads;
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

std::vector<int> parse_layers(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    try {
      out.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw ConfigError("bad layer count '" + tok + "'");
    }
  }
  for (int l : out)
    if (l < 1) throw ConfigError("layer counts must be >= 1");
  return out;
}

Scenario scenario_for(const Common& c) {
  if (c.scenario_path.empty()) throw ConfigError("--scenario is required");
  Scenario s = load_scenario_file(resolve_data(c.scenario_path));
  if (c.seed_set) s.seed = c.seed;
  if (c.epochs >= 0) s.epochs = c.epochs;
  return s;
}

std::vector<int> resolve_pmu(const Feeder& feeder, const Scenario& s) {
  std::vector<int> pmu = s.pmu_buses;
  if (pmu.empty())
    pmu = greedy_place(TopologyGraph::from_feeder(feeder), s.greedy_k).placed;
  std::sort(pmu.begin(), pmu.end());
  return pmu;
}

void write_manifest(const std::string& out, const std::string& command,
                    const json& config, std::uint64_t seed) {
  fs::create_directories(out);
  json m;
  m["command"] = command;
  m["version"] = kVersion;
  m["seed"] = seed;
  m["config"] = config;
  write_text_file(out + "/manifest.json", m.dump(2));
}

int cmd_validate(const Common& c) {
  Feeder f = load_feeder_file(resolve_data(c.feeder_path));
  json doc;
  doc["buses"] = f.num_buses();
  doc["lines"] = f.num_lines();
  doc["slots"] = f.num_slots();
  doc["hash"] = hash_hex(feeder_hash(f));
  write_manifest(c.out, "validate", {{"feeder", c.feeder_path}}, 0);
  std::cout << doc.dump(2) << "\n";
  return 0;
}

int cmd_place(const Common& c) {
  Feeder f = load_feeder_file(resolve_data(c.feeder_path));
  if (c.k < 1) throw ConfigError("--k is required and must be >= 1");
  TopologyGraph g = TopologyGraph::from_feeder(f);
  PlacementResult r;
  if (c.method == "greedy")
    r = greedy_place(g, c.k);
  else if (c.method == "exhaustive")
    r = exhaustive_place(g, c.k);
  else
    throw ConfigError("--method must be greedy or exhaustive");
  json doc;
  doc["method"] = c.method;
  doc["placement"] = r.placed;
  doc["dia"] = r.dia_trace.back();
  doc["trace"] = r.dia_trace;
  write_manifest(c.out, "place",
                 {{"feeder", c.feeder_path}, {"k", c.k}, {"method", c.method}},
                 0);
  write_text_file(c.out + "/placement.json", doc.dump(2));
  std::cout << doc.dump(2) << "\n";
  return 0;
}

int cmd_partition(const Common& c) {
  Feeder f = load_feeder_file(resolve_data(c.feeder_path));
  if (c.k < 1) throw ConfigError("--k is required and must be >= 1");
  TopologyGraph g = TopologyGraph::from_feeder(f);
  PlacementResult r = c.method == "exhaustive" ? exhaustive_place(g, c.k)
                                               : greedy_place(g, c.k);
  auto parts = vertex_cut_partitions(g, r.placed);
  json doc;
  doc["cuts"] = r.placed;
  json jp = json::array();
  int dia = 0;
  for (const Partition& p : parts) {
    json e = json::array();
    for (auto [a, b] : p.edges) e.push_back({a, b});
    jp.push_back({{"nodes", p.nodes}, {"edges", e}, {"dia", p.diameter}});
    dia = std::max(dia, p.diameter);
  }
  doc["partitions"] = jp;
  doc["dia"] = dia;
  write_manifest(c.out, "partition",
                 {{"feeder", c.feeder_path}, {"k", c.k}, {"method", c.method}},
                 0);
  write_text_file(c.out + "/partitions.json", doc.dump(2));
  std::cout << doc.dump(2) << "\n";
  return 0;
}

int cmd_synth(const Common& c) {
  Scenario s = scenario_for(c);
  Feeder f = load_feeder_file(resolve_data(s.feeder_path));
  std::vector<int> pmu = resolve_pmu(f, s);
  MeasurementSet meas = scenario_measurements(f, s, pmu);
  auto profiles =
      gen_profiles(f, s.n_samples, s.jitter_sigma, s.res_peak, s.seed);
  Dataset ds = gen_dataset(f, meas, profiles, s.seed + 11, thread_count(c));
  write_manifest(c.out, "synth", json::parse(serialize_scenario(s)), s.seed);

  std::vector<std::string> mh{"sample"};
  for (const auto& qm : meas.items) {
    std::string n = std::string(meas_kind_name(qm.spec.kind)) + "_" +
                    std::to_string(qm.spec.bus);
    if (qm.spec.other) n += "_" + std::to_string(qm.spec.other);
    n += "_p" + std::to_string(qm.spec.phase);
    mh.push_back(n);
  }
  Eigen::MatrixXd mrows(ds.measurements.cols(), meas.items.size() + 1);
  for (Eigen::Index i = 0; i < ds.measurements.cols(); ++i) {
    mrows(i, 0) = static_cast<double>(i);
    mrows.row(i).tail(meas.items.size()) = ds.measurements.col(i).transpose();
  }
  write_csv(c.out + "/measurements.csv", mh, mrows);

  std::vector<std::string> sh{"sample"};
  for (int k = 0; k < f.num_slots(); ++k) {
    auto [bus, ph] = f.slot_label(k);
    sh.push_back("re_" + std::to_string(bus) + "_p" + std::to_string(ph));
  }
  for (int k = 0; k < f.num_slots(); ++k) {
    auto [bus, ph] = f.slot_label(k);
    sh.push_back("im_" + std::to_string(bus) + "_p" + std::to_string(ph));
  }
  Eigen::MatrixXd srows(ds.states.cols(), 2 * f.num_slots() + 1);
  for (Eigen::Index i = 0; i < ds.states.cols(); ++i) {
    srows(i, 0) = static_cast<double>(i);
    srows.row(i).tail(2 * f.num_slots()) = ds.states.col(i).transpose();
  }
  write_csv(c.out + "/states.csv", sh, srows);
  std::cout << "wrote " << ds.states.cols() << " samples ("
            << ds.dropped << " dropped) to " << c.out << "\n";
  return 0;
}

PawnnModel train_one(const Feeder& f, const Scenario& s, int layers,
                     int threads, TrainHistory* hist_out) {
  std::vector<int> pmu = resolve_pmu(f, s);
  MeasurementSet meas = scenario_measurements(f, s, pmu);
  InputLayout layout = assign_inputs(f, meas, pmu);
  auto profiles =
      gen_profiles(f, s.n_samples, s.jitter_sigma, s.res_peak, s.seed);
  Dataset ds = gen_dataset(f, meas, profiles, s.seed + 11, threads);

  int dia = partitioned_diameter(TopologyGraph::from_feeder(f), pmu);
  if (layers < dia)
    std::cerr << "warning: " << layers << " layers < partition diameter "
              << dia << "; receptive fields will not cover partitions\n";

  std::vector<int> widths{layout.d0};
  int have = static_cast<int>(s.hidden_widths.size());
  for (int i = 0; i < layers - 1; ++i)
    widths.push_back(i < have ? s.hidden_widths[i]
                              : (have ? s.hidden_widths.back() : 6));
  widths.push_back(6);

  PawnnModel model = build_model(f, widths, s.seed);
  const int nb = f.num_buses();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(nb) * layout.d0,
                    ds.measurements.cols());
  for (Eigen::Index i = 0; i < ds.measurements.cols(); ++i)
    x.col(i) = assemble_input(layout, nb, ds.measurements.col(i));
  Eigen::MatrixXd y(static_cast<Eigen::Index>(nb) * 6, ds.states.cols());
  for (Eigen::Index i = 0; i < ds.states.cols(); ++i)
    y.col(i) = state_to_target(f, state_from_column(ds.states.col(i)));

  TrainOptions topt;
  topt.epochs = s.epochs;
  topt.batch_size = s.batch_size;
  topt.lr = s.lr;
  topt.patience = s.patience;
  topt.seed = s.seed;
  topt.threads = threads;
  TrainHistory h = train(model, x, y, topt);
  if (hist_out) *hist_out = h;
  return model;
}

int cmd_train(const Common& c) {
  Scenario s = scenario_for(c);
  Feeder f = load_feeder_file(resolve_data(s.feeder_path));
  std::vector<int> layer_list =
      c.layers.empty() ? std::vector<int>{4} : parse_layers(c.layers);
  write_manifest(c.out, "train", json::parse(serialize_scenario(s)), s.seed);
  for (int layers : layer_list) {
    TrainHistory h;
    PawnnModel model = train_one(f, s, layers, thread_count(c), &h);
    std::string mp = c.out + "/model_" + std::to_string(layers) + "l.json";
    save_model(model, mp);
    Eigen::MatrixXd rows(h.train_loss.size(), 3);
    for (size_t i = 0; i < h.train_loss.size(); ++i) {
      rows(i, 0) = static_cast<double>(i);
      rows(i, 1) = h.train_loss[i];
      rows(i, 2) = h.val_loss[i];
    }
    write_csv(c.out + "/history_" + std::to_string(layers) + "l.csv",
              {"epoch", "train_loss", "val_loss"}, rows);
    std::cout << "trained " << layers << "-layer model -> " << mp
              << " (best val loss " << h.best_val_loss << ")\n";
  }
  return 0;
}

int cmd_estimate(const Common& c) {
  Scenario s = scenario_for(c);
  Feeder f = load_feeder_file(resolve_data(s.feeder_path));
  std::vector<int> layer_list =
      c.layers.empty() ? std::vector<int>{4} : parse_layers(c.layers);
  int layers = layer_list.front();
  PawnnModel model =
      load_model(c.out + "/model_" + std::to_string(layers) + "l.json");
  if (model.feeder_hash != feeder_hash(f))
    throw DataError("model was trained on a different feeder");
  std::vector<int> pmu = resolve_pmu(f, s);
  MeasurementSet meas = scenario_measurements(f, s, pmu);
  InputLayout layout = assign_inputs(f, meas, pmu);

  CsvTable z = read_csv(c.out + "/measurements.csv");
  if (z.header.size() != meas.items.size() + 1)
    throw DataError("measurement csv column count mismatch");
  const int nb = f.num_buses();
  Eigen::MatrixXd out_rows(z.rows.size(), 2 * f.num_slots() + 1);
  for (size_t r = 0; r < z.rows.size(); ++r) {
    Eigen::VectorXd zi(meas.items.size());
    for (size_t ci = 1; ci < z.rows[r].size(); ++ci)
      zi[ci - 1] = z.rows[r][ci];
    Eigen::VectorXd x = assemble_input(layout, nb, zi);
    StateVector v = target_to_state(f, model.forward(x).col(0));
    out_rows(r, 0) = z.rows[r][0];
    out_rows.row(r).tail(2 * f.num_slots()) =
        state_to_column(v).transpose();
  }
  std::vector<std::string> sh{"sample"};
  for (int k = 0; k < f.num_slots(); ++k) {
    auto [bus, ph] = f.slot_label(k);
    sh.push_back("re_" + std::to_string(bus) + "_p" + std::to_string(ph));
  }
  for (int k = 0; k < f.num_slots(); ++k) {
    auto [bus, ph] = f.slot_label(k);
    sh.push_back("im_" + std::to_string(bus) + "_p" + std::to_string(ph));
  }
  write_manifest(c.out, "estimate", json::parse(serialize_scenario(s)), s.seed);
  write_csv(c.out + "/estimates.csv", sh, out_rows);
  std::cout << "wrote " << z.rows.size() << " estimates\n";
  return 0;
}

int cmd_compare(const Common& c) {
  Scenario s = scenario_for(c);
  Feeder f = load_feeder_file(resolve_data(s.feeder_path));
  std::vector<int> layer_list =
      c.layers.empty() ? std::vector<int>{4} : parse_layers(c.layers);
  fs::create_directories(c.out);
  write_manifest(c.out, "compare", json::parse(serialize_scenario(s)), s.seed);
  ComparisonReport rep =
      run_comparison(f, s, layer_list, thread_count(c), c.out);
  for (const EstimatorReport& er : rep.estimators)
    std::cout << er.name << ": nu=" << er.nu
              << " median_ms=" << er.median_ms << "\n";
  return 0;
}

int cmd_robust(const Common& c) {
  Scenario s = scenario_for(c);
  Feeder f = load_feeder_file(resolve_data(s.feeder_path));
  std::vector<int> layer_list =
      c.layers.empty() ? std::vector<int>{4} : parse_layers(c.layers);
  int layers = layer_list.front();
  std::vector<int> pmu = resolve_pmu(f, s);
  int corrupt = std::find(pmu.begin(), pmu.end(), 734) != pmu.end()
                    ? 734
                    : pmu.back();
  write_manifest(c.out, "robust", json::parse(serialize_scenario(s)), s.seed);
  PawnnModel model = train_one(f, s, layers, thread_count(c), nullptr);
  MeasurementSet meas = scenario_measurements(f, s, pmu);
  RobustnessReport rep = robustness_experiment(f, s, model, meas, pmu,
                                               corrupt, 10.0, s.seed + 29);
  Eigen::MatrixXd rows(f.num_buses(), 4);
  for (int b = 0; b < f.num_buses(); ++b) {
    rows(b, 0) = f.buses()[b].id;
    rows(b, 1) = rep.hops_from_corrupted[b];
    rows(b, 2) = rep.pawnn_delta[b];
    rows(b, 3) = rep.gn_delta[b];
  }
  write_csv(c.out + "/robustness.csv",
            {"bus", "hops", "pawnn_delta", "gn_delta"}, rows);
  std::cout << "corrupted bus " << corrupt << "; report in " << c.out
            << "/robustness.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distribution-system state estimation toolkit"};
  app.require_subcommand(1);

  Common c;
  auto* place = app.add_subcommand("place", "compute a sensor placement");
  add_common(place, c, true, false);
  place->add_option("--k", c.k, "number of sensors");
  place->add_option("--method", c.method, "greedy or exhaustive");

  auto* partition =
      app.add_subcommand("partition", "report the vertex-cut partitions");
  add_common(partition, c, true, false);
  partition->add_option("--k", c.k, "number of cut sensors");
  partition->add_option("--method", c.method, "greedy or exhaustive");

  auto* synth = app.add_subcommand("synth", "generate a labeled dataset");
  add_common(synth, c, false, true);

  auto* train_cmd = app.add_subcommand("train", "train estimator models");
  add_common(train_cmd, c, false, true);
  train_cmd->add_option("--layers", c.layers, "layer counts, e.g. 4 or 2,4,6");
  train_cmd->add_option("--epochs", c.epochs, "training epochs override");

  auto* estimate =
      app.add_subcommand("estimate", "run inference on a measurement CSV");
  add_common(estimate, c, false, true);
  estimate->add_option("--layers", c.layers, "layer count of the saved model");

  auto* compare =
      app.add_subcommand("compare", "train and compare estimators");
  add_common(compare, c, false, true);
  compare->add_option("--layers", c.layers, "layer counts, e.g. 2,4,6");
  compare->add_option("--epochs", c.epochs, "training epochs override");

  auto* robust = app.add_subcommand("robust", "sensor-corruption experiment");
  add_common(robust, c, false, true);
  robust->add_option("--layers", c.layers, "layer count");
  robust->add_option("--epochs", c.epochs, "training epochs override");

  auto* validate = app.add_subcommand("validate", "validate a feeder file");
  add_common(validate, c, true, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (place->parsed()) return cmd_place(c);
    if (partition->parsed()) return cmd_partition(c);
    if (synth->parsed()) return cmd_synth(c);
    if (train_cmd->parsed()) return cmd_train(c);
    if (estimate->parsed()) return cmd_estimate(c);
    if (compare->parsed()) return cmd_compare(c);
    if (robust->parsed()) return cmd_robust(c);
    if (validate->parsed()) return cmd_validate(c);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  }
  return 2;
}
