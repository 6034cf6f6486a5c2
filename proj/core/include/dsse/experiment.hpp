#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dsse/feeder.hpp"
#include "dsse/measurement.hpp"
#include "dsse/pawnn.hpp"

namespace dsse {

struct Scenario {
  std::string name;
  std::string feeder_path;                 // resolved against PAWNN_DATA_DIR
  std::vector<int> pmu_buses;              // explicit placement, or
  int greedy_k = 0;                        // derive by greedy when nonempty
  std::vector<std::pair<int, int>> current_lines;
  std::vector<int> pseudo_buses;
  double pmu_sigma2 = 1e-6;
  double current_sigma2 = 1e-3;
  double pseudo_sigma2 = 1e-2;
  std::vector<int> hidden_widths = {48, 24, 12};  // per-bus, excludes output 6
  int n_samples = 10000;
  int n_test = 1000;
  int epochs = 200;
  int batch_size = 64;
  double lr = 1e-3;
  int patience = 20;
  std::uint64_t seed = 1;
  // load-profile shape
  double jitter_sigma = 0.15;
  double res_peak = 0.05;  // peak RES active injection per RES bus, per unit
};

// Two-peak (morning/evening) daily demand factor for time-of-day t in [0, 1).
double daily_curve(double t);

Scenario load_scenario(const std::string& json_text);
Scenario load_scenario_file(const std::string& path);
std::string serialize_scenario(const Scenario& s);

struct LoadProfile {
  std::vector<double> load_scale;     // per bus, id order
  std::vector<double> res_injection;  // per bus, active power per unit
};

// Two-peak daily curve times per-bus lognormal jitter; RES injections from a
// clipped sinusoid with independent jitter. Deterministic in (feeder, seed).
std::vector<LoadProfile> gen_profiles(const Feeder& feeder, int n_samples,
                                      double jitter_sigma, double res_peak,
                                      std::uint64_t seed);

// Measurement plan shared by dataset generation, WLS, and PAWNN input.
MeasurementSet scenario_measurements(const Feeder& feeder, const Scenario& s,
                                     const std::vector<int>& pmu_buses);

struct Dataset {
  Eigen::MatrixXd states;        // 2 * n_slots x n (Re block then Im block)
  Eigen::MatrixXd measurements;  // m x n, noisy
  int dropped = 0;               // non-converged power-flow samples
};

Dataset gen_dataset(const Feeder& feeder, const MeasurementSet& meas,
                    const std::vector<LoadProfile>& profiles,
                    std::uint64_t noise_seed, int threads = 1);

StateVector state_from_column(const Eigen::VectorXd& col);
Eigen::VectorXd state_to_column(const StateVector& v);

// nu = (1/n) sum_i |v_hat_i - v_true_i|^2 (squared complex 2-norm per sample)
double metric_nu(const std::vector<StateVector>& estimates,
                 const std::vector<StateVector>& truths);

struct EstimatorReport {
  std::string name;
  double nu = 0.0;
  double median_ms = 0.0;  // per-sample solve/inference time
  Eigen::VectorXd per_slot_sqerr;  // mean squared error per state slot
};

struct ComparisonReport {
  std::vector<EstimatorReport> estimators;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  int train_samples = 0, test_samples = 0, dropped = 0;
};

// Trains a PAWNN per layer count in `layer_counts` (hidden widths truncated
// or extended per scenario), evaluates each plus flat-start Gauss-Newton on
// the same held-out test set.
ComparisonReport run_comparison(const Feeder& feeder, const Scenario& s,
                                const std::vector<int>& layer_counts,
                                int threads, const std::string& out_dir,
                                std::vector<PawnnModel>* trained = nullptr);

struct RobustnessReport {
  // per-bus max-abs voltage error delta (corrupted minus clean), id order
  std::vector<double> pawnn_delta;
  std::vector<double> gn_delta;
  std::vector<int> hops_from_corrupted;  // per bus
  int corrupted_bus = 0;
  int k_layers = 0;
};

RobustnessReport robustness_experiment(const Feeder& feeder, const Scenario& s,
                                       const PawnnModel& model,
                                       const MeasurementSet& meas,
                                       const std::vector<int>& pmu_buses,
                                       int corrupted_bus, double sigma,
                                       std::uint64_t seed);

std::string hash_hex(std::uint64_t h);

}  // namespace dsse
