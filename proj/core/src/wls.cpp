#include "dsse/wls.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dsse/placement.hpp"
#include "dsse/power_flow.hpp"

namespace dsse {

double wls_objective(const MeasurementSet& meas, const Eigen::VectorXd& z,
                     const StateVector& v) {
  Eigen::VectorXd r = z - meas.evaluate(v);
  return r.dot(meas.weights().asDiagonal() * r);
}

WlsResult solve_wls(const MeasurementSet& meas, const Eigen::VectorXd& z,
                    const StateVector& start, const WlsOptions& opts) {
  if (static_cast<int>(meas.items.size()) != z.size())
    throw ConfigError("measurement vector length mismatch");

  WlsResult res;
  res.voltages = start;
  const int n = start.size();
  Eigen::VectorXd w = meas.weights();
  double lambda = opts.initial_damping;
  double obj = wls_objective(meas, z, res.voltages);

  for (int it = 0; it < opts.max_iterations; ++it) {
    Eigen::VectorXd r = z - meas.evaluate(res.voltages);
    Eigen::MatrixXd j = meas.jacobian(res.voltages);
    Eigen::MatrixXd jtw = j.transpose() * w.asDiagonal();
    Eigen::MatrixXd h = jtw * j;
    Eigen::VectorXd g = jtw * r;

    bool accepted = false;
    Eigen::VectorXd step;
    while (lambda <= opts.max_damping) {
      Eigen::MatrixXd hd = h;
      hd.diagonal().array() += lambda;
      step = hd.ldlt().solve(g);
      StateVector trial = res.voltages;
      for (int k = 0; k < n; ++k)
        trial.v[k] += Complex(step[k], step[n + k]);
      double trial_obj = wls_objective(meas, z, trial);
      if (std::isfinite(trial_obj) && trial_obj <= obj) {
        res.voltages = trial;
        obj = trial_obj;
        lambda = std::max(lambda * opts.damping_shrink, 1e-12);
        accepted = true;
        break;
      }
      lambda *= opts.damping_growth;
    }
    res.iterations = it + 1;
    if (!accepted) break;  // stalled; report best point found
    if (step.lpNorm<Eigen::Infinity>() < opts.tolerance) {
      res.converged = true;
      break;
    }
  }
  res.objective = obj;
  return res;
}

namespace {

// Damped GN restricted to the given state slots and measurement rows; other
// slots of v stay untouched.
void solve_reduced(const MeasurementSet& meas, const Eigen::VectorXd& z,
                   const std::vector<int>& rows, const std::vector<int>& slots,
                   StateVector& v, const WlsOptions& opts) {
  const int n = v.size();
  const int nf = static_cast<int>(slots.size());
  Eigen::VectorXd w(rows.size()), zr(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    w[i] = 1.0 / meas.items[rows[i]].spec.sigma2;
    zr[i] = z[rows[i]];
  }
  auto local_obj = [&](const StateVector& state) {
    double o = 0;
    for (size_t i = 0; i < rows.size(); ++i) {
      double r = zr[i] - meas.items[rows[i]].evaluate(state);
      o += w[i] * r * r;
    }
    return o;
  };
  double lambda = opts.initial_damping;
  double obj = local_obj(v);
  for (int it = 0; it < opts.max_iterations; ++it) {
    Eigen::MatrixXd j(rows.size(), 2 * nf);
    Eigen::VectorXd r(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
      Eigen::RowVectorXd full = meas.items[rows[i]].jacobian_row(v);
      for (int c = 0; c < nf; ++c) {
        j(i, c) = full[slots[c]];
        j(i, nf + c) = full[n + slots[c]];
      }
      r[i] = zr[i] - meas.items[rows[i]].evaluate(v);
    }
    Eigen::MatrixXd jtw = j.transpose() * w.asDiagonal();
    Eigen::MatrixXd h = jtw * j;
    Eigen::VectorXd g = jtw * r;
    bool accepted = false;
    Eigen::VectorXd step;
    while (lambda <= opts.max_damping) {
      Eigen::MatrixXd hd = h;
      hd.diagonal().array() += lambda;
      step = hd.ldlt().solve(g);
      StateVector trial = v;
      for (int c = 0; c < nf; ++c)
        trial.v[slots[c]] += Complex(step[c], step[nf + c]);
      double trial_obj = local_obj(trial);
      if (std::isfinite(trial_obj) && trial_obj <= obj) {
        v = trial;
        obj = trial_obj;
        lambda = std::max(lambda * opts.damping_shrink, 1e-12);
        accepted = true;
        break;
      }
      lambda *= opts.damping_growth;
    }
    if (!accepted) break;
    if (step.lpNorm<Eigen::Infinity>() < opts.tolerance) break;
  }
}

}  // namespace

SeparabilityReport verify_separability(const Feeder& feeder,
                                       const MeasurementSet& meas,
                                       const Eigen::VectorXd& z,
                                       const std::vector<int>& pmu_buses,
                                       const WlsOptions& opts) {
  WlsResult global = solve_wls(meas, z, flat_start(feeder), opts);

  auto parts = vertex_cut_partitions(TopologyGraph::from_feeder(feeder),
                                     pmu_buses);
  std::set<int> pmu(pmu_buses.begin(), pmu_buses.end());

  SeparabilityReport rep;
  for (const Partition& part : parts) {
    std::set<int> nodes(part.nodes.begin(), part.nodes.end());
    std::set<std::pair<int, int>> edges(part.edges.begin(), part.edges.end());

    std::vector<int> rows;
    for (size_t i = 0; i < meas.items.size(); ++i) {
      const MeasSpec& s = meas.items[i].spec;
      bool is_line = s.kind == MeasKind::IReal || s.kind == MeasKind::IImag ||
                     s.kind == MeasKind::IMag2 || s.kind == MeasKind::PFlow ||
                     s.kind == MeasKind::QFlow;
      bool in_part =
          is_line ? edges.count({std::min(s.bus, s.other),
                                 std::max(s.bus, s.other)}) > 0
                  : nodes.count(s.bus) > 0;
      if (in_part) rows.push_back(static_cast<int>(i));
    }

    // anchor PMU-bus voltages from their own (noiseless) phasor channels
    StateVector local = flat_start(feeder);
    for (int b : part.nodes) {
      if (!pmu.count(b)) continue;
      for (int i : rows) {
        const MeasSpec& s = meas.items[i].spec;
        if (s.bus != b) continue;
        int slot = s.kind == MeasKind::VReal || s.kind == MeasKind::VImag
                       ? feeder.slot(s.bus, s.phase)
                       : -1;
        if (slot < 0) continue;
        if (s.kind == MeasKind::VReal)
          local.v[slot] = Complex(z[i], local.v[slot].imag());
        else
          local.v[slot] = Complex(local.v[slot].real(), z[i]);
      }
    }

    std::vector<int> free_slots;
    for (int b : part.nodes) {
      if (pmu.count(b)) continue;
      for (int p = 0; p < 3; ++p) {
        int s = feeder.slot(b, p);
        if (s >= 0) free_slots.push_back(s);
      }
    }
    std::sort(free_slots.begin(), free_slots.end());
    solve_reduced(meas, z, rows, free_slots, local, opts);

    double disc = 0;
    std::vector<int> all_slots = free_slots;
    for (int b : part.nodes)
      if (pmu.count(b))
        for (int p = 0; p < 3; ++p)
          if (feeder.slot(b, p) >= 0) all_slots.push_back(feeder.slot(b, p));
    for (int s : all_slots)
      disc = std::max(disc, std::abs(local.v[s] - global.voltages.v[s]));

    StateVector keep;
    keep.v = Eigen::VectorXcd::Zero(feeder.num_slots());
    for (int s : all_slots) keep.v[s] = local.v[s];
    rep.local_estimates.push_back(std::move(keep));
    rep.partition_meas.push_back(std::move(rows));
    rep.per_partition_discrepancy.push_back(disc);
    rep.max_discrepancy = std::max(rep.max_discrepancy, disc);
  }
  return rep;
}

}  // namespace dsse
