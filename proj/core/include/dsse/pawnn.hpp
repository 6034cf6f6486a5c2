#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dsse/feeder.hpp"
#include "dsse/measurement.hpp"
#include "dsse/rng.hpp"

namespace dsse {

// Block pattern shared by every layer: block (i,j) allowed iff i == j or
// buses i and j share a line. Indices are bus indices in id order.
struct BlockPattern {
  int n_blocks = 0;
  std::vector<std::pair<int, int>> allowed;  // sorted (row, col) pairs

  static BlockPattern from_feeder(const Feeder& feeder);
  static BlockPattern from_edges(int n, const std::vector<std::pair<int, int>>& edges);
};

// One masked layer stored as dense per-block matrices, so the zero pattern
// is structural rather than enforced by re-masking.
struct MaskedLayer {
  int rows_per_block = 0;
  int cols_per_block = 0;
  std::vector<std::pair<int, int>> blocks;  // same order as weight
  std::vector<Eigen::MatrixXd> weight;      // one per allowed block
  Eigen::VectorXd bias;                     // n_blocks * rows_per_block

  // Y += W * X on the block structure; X columns are samples.
  void apply(const Eigen::MatrixXd& x, Eigen::MatrixXd& y) const;
  // X^T direction: out += W^T * dy (backward data pass)
  void apply_transposed(const Eigen::MatrixXd& dy, Eigen::MatrixXd& dx) const;
};

struct PawnnModel {
  std::vector<int> bus_ids;      // id order; block index = position here
  BlockPattern pattern;
  std::vector<int> widths;       // per-bus widths d_0..d_L (d_L = output)
  std::vector<MaskedLayer> layers;
  Eigen::VectorXd input_mean;    // per input slot, z-score normalization
  Eigen::VectorXd input_std;
  std::vector<std::uint8_t> output_present;  // per output slot (absent phase = 0)
  double leak = 0.01;            // hidden leaky-ReLU slope; output is identity
  std::uint64_t feeder_hash = 0;
  std::uint64_t train_seed = 0;

  int num_layers() const { return static_cast<int>(layers.size()); }
  int input_dim() const { return pattern.n_blocks * widths.front(); }
  int output_dim() const { return pattern.n_blocks * widths.back(); }
  std::size_t parameter_count() const;

  // Columns are samples. Input is raw (normalization applied internally).
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
};

// Masked-fan-in Glorot-style uniform init; deterministic from the seed.
PawnnModel build_model(const Feeder& feeder, const std::vector<int>& widths,
                       std::uint64_t seed);

// Maps each measurement to one input slot of one bus block.
// Bus quantities go to their bus; line quantities go to the non-PMU endpoint,
// or to the endpoint nearer the source when both or neither carry a PMU.
struct InputLayout {
  int d0 = 0;
  std::vector<int> slot_of_meas;  // input slot per measurement row
};
InputLayout assign_inputs(const Feeder& feeder, const MeasurementSet& meas,
                          const std::vector<int>& pmu_buses);
Eigen::VectorXd assemble_input(const InputLayout& layout, int n_blocks,
                               const Eigen::VectorXd& z);

// Target layout: widths.back() slots per bus. For the standard 6-wide output
// these are (Re a, Im a, Re b, Im b, Re c, Im c); absent phases are zero and
// flagged absent in output_present.
Eigen::VectorXd state_to_target(const Feeder& feeder, const StateVector& v);
StateVector target_to_state(const Feeder& feeder, const Eigen::VectorXd& y);

struct PawnnGradient {
  std::vector<MaskedLayer> layers;  // same shapes, gradient values
  double loss = 0.0;
};

// Mean squared error over present output slots, averaged over the batch.
// weight_per_output scales each output slot's squared error (empty = all 1).
PawnnGradient gradient(const PawnnModel& model, const Eigen::MatrixXd& x,
                       const Eigen::MatrixXd& target,
                       const Eigen::VectorXd& weight_per_output = {});

struct AdamState {
  std::vector<MaskedLayer> m;  // first moments, shaped like the parameters
  std::vector<MaskedLayer> v;  // second moments
  long step = 0;
  double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  static AdamState for_model(const PawnnModel& model);
};

void adam_step(AdamState& state, PawnnModel& model, const PawnnGradient& grad);

struct TrainOptions {
  int epochs = 200;
  int batch_size = 64;
  double lr = 1e-3;
  double validation_fraction = 0.1;
  int patience = 20;           // early stop on stalled validation loss
  std::uint64_t seed = 1;
  int threads = 1;
  double pmu_output_weight = 1.0;  // optional down-weighting of PMU buses
  std::vector<int> pmu_buses;
};

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  int best_epoch = -1;
  double best_val_loss = 0.0;
};

// x: input_dim x n samples (raw), y: output_dim x n targets. Computes the
// normalization stats from the training split, shuffles by seed, runs
// mini-batch ADAM, and restores the best-validation parameters.
TrainHistory train(PawnnModel& model, const Eigen::MatrixXd& x,
                   const Eigen::MatrixXd& y, const TrainOptions& opts);

// Buses within K hops of each bus (including itself), as bus ids.
std::vector<std::vector<int>> receptive_field(const Feeder& feeder, int k);

std::string serialize_model(const PawnnModel& model);
PawnnModel deserialize_model(const std::string& json_text);
void save_model(const PawnnModel& model, const std::string& path);
PawnnModel load_model(const std::string& path);

}  // namespace dsse
