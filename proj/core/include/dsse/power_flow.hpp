#pragma once

#include <array>

#include "dsse/feeder.hpp"

namespace dsse {

struct PowerFlowOptions {
  double tolerance = 1e-8;   // max abs voltage update, per unit
  int max_iterations = 200;
  // per-bus complex power scale applied to the nominal loads (1.0 = nominal)
  // and per-bus RES active-power injection in per unit, spread equally over
  // present phases. Keyed by bus index in id order; empty = defaults.
  std::vector<double> load_scale;
  std::vector<double> res_injection;
};

struct PowerFlowResult {
  StateVector voltages;
  int iterations = 0;
  bool converged = false;
  double final_mismatch = 0.0;
};

// Flat-start state: 1 pu at angles 0 / -120 / +120 degrees for phases a/b/c.
StateVector flat_start(const Feeder& feeder);

// Per-bus phase current injections implied by the attached load at the given
// voltages (wye: S/V per phase; delta: phase-pair currents mapped to line
// currents). Positive = current drawn from the network.
std::array<Complex, 3> load_currents(const Feeder& feeder, int bus_index,
                                     const StateVector& v, double load_scale,
                                     double res_injection);

// Backward/forward sweep for radial feeders.
PowerFlowResult solve_power_flow(const Feeder& feeder,
                                 const PowerFlowOptions& opts = {});

}  // namespace dsse
