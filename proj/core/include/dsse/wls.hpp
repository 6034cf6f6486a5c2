#pragma once

#include "dsse/feeder.hpp"
#include "dsse/measurement.hpp"

namespace dsse {

struct WlsOptions {
  int max_iterations = 50;
  double tolerance = 1e-10;     // step infinity norm on x = [Re v; Im v]
  double initial_damping = 1e-8;
  double damping_growth = 10.0;
  double damping_shrink = 0.1;
  double max_damping = 1e8;
};

struct WlsResult {
  StateVector voltages;
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;  // (z - h)^T W (z - h) at the solution
};

double wls_objective(const MeasurementSet& meas, const Eigen::VectorXd& z,
                     const StateVector& v);

// Damped Gauss-Newton from the supplied start (callers typically use
// flat_start). Levenberg damping: retry with larger lambda when a step does
// not reduce the objective.
WlsResult solve_wls(const MeasurementSet& meas, const Eigen::VectorXd& z,
                    const StateVector& start, const WlsOptions& opts = {});

struct SeparabilityReport {
  double max_discrepancy = 0.0;  // per-slot max |global - local|
  std::vector<double> per_partition_discrepancy;
  std::vector<StateVector> local_estimates;  // full-size, non-local slots 0
  std::vector<std::vector<int>> partition_meas;  // measurement rows used
};

// Solves the global WLS, then one WLS per vertex-cut partition of the cut
// set `pmu_buses` using only that partition's measurements with the PMU-bus
// voltages anchored, and reports the worst per-slot disagreement.
SeparabilityReport verify_separability(const Feeder& feeder,
                                       const MeasurementSet& meas,
                                       const Eigen::VectorXd& z,
                                       const std::vector<int>& pmu_buses,
                                       const WlsOptions& opts = {});

}  // namespace dsse
