#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "dsse/feeder.hpp"

namespace dsse {

// Measurement kinds. All reduce to the quadratic form
//   h(v) = v^H D v + Re(2 c^H v) ... written internally as
//   h(v) = conj(v)^T D v + c^T v + conj(c)^T conj(v)
// with Hermitian D, so values and Jacobians share one code path.
enum class MeasKind {
  VReal,    // Re v at (bus, phase)
  VImag,    // Im v at (bus, phase)
  IReal,    // Re of series current on a line, sending end
  IImag,    // Im of series current
  VMag2,    // |v|^2 at (bus, phase)
  IMag2,    // |i|^2 on a line
  PFlow,    // active power flow into a line at the sending bus
  QFlow,    // reactive power flow
  PInj,     // net active injection at a bus (sum of incident flows)
  QInj,     // net reactive injection
  PseudoP,  // forecast-based injection surrogate; same form as PInj
  PseudoQ,
};

const char* meas_kind_name(MeasKind k);
MeasKind meas_kind_from_name(const std::string& name);

// phase = 0/1/2, or kPhaseSum to sum over present phases (injections only)
constexpr int kPhaseSum = -1;

struct MeasSpec {
  MeasKind kind;
  int bus = 0;        // measured bus (sending end for flows/currents)
  int other = 0;      // remote end for line quantities, unused otherwise
  int phase = 0;
  double sigma2 = 1.0;  // noise variance; weight is 1/sigma2
};

// One measurement in canonical quadratic form over the compact state vector.
struct QuadraticMeasurement {
  MeasSpec spec;
  Eigen::SparseMatrix<Complex> D;  // Hermitian, n x n
  Eigen::SparseVector<Complex> c;  // n
  double c_const = 0.0;            // real additive constant (unused so far)

  double evaluate(const StateVector& v) const;
  // gradient over x = [Re v; Im v], dense row of length 2n
  Eigen::RowVectorXd jacobian_row(const StateVector& v) const;
  // touched state slots (union of D and c supports); sorted, unique
  std::vector<int> support() const;
};

// Builds the canonical form for a spec against a feeder.
// include_shunt: add the sending-end shunt term y_sh/2 * v_from to line
// currents (default off; series current only).
QuadraticMeasurement build_measurement(const Feeder& feeder,
                                       const MeasSpec& spec,
                                       bool include_shunt = false);

struct MeasurementSet {
  std::vector<QuadraticMeasurement> items;

  Eigen::VectorXd evaluate(const StateVector& v) const;
  Eigen::MatrixXd jacobian(const StateVector& v) const;  // m x 2n
  Eigen::VectorXd weights() const;                       // 1/sigma2 per row
  // canonical order: kind, then bus, then remote bus, then phase
  void sort();
};

// z = h(v_true) + noise, noise ~ N(0, sigma2) per row, counter-based rng.
Eigen::VectorXd synthesize(const MeasurementSet& set, const StateVector& v_true,
                           std::uint64_t seed, std::uint64_t sample_index = 0);

// Standard measurement bundles.

// Re/Im of the bus voltage on every present phase (6 specs for a
// three-phase bus).
std::vector<MeasSpec> pmu_voltage_specs(const Feeder& feeder, int bus,
                                        double sigma2);
// |i|^2 on each present phase of a line.
std::vector<MeasSpec> current_mag_specs(const Feeder& feeder, int from, int to,
                                        double sigma2);
// P and Q net injection, aggregated over phases, at a bus.
std::vector<MeasSpec> pseudo_injection_specs(int bus, double sigma2);

}  // namespace dsse
