#include "dsse/power_flow.hpp"

#include <cmath>

namespace dsse {

namespace {
constexpr double kDeg120 = 2.0 * 3.14159265358979323846 / 3.0;
}

StateVector flat_start(const Feeder& feeder) {
  StateVector s;
  s.v.resize(feeder.num_slots());
  for (int k = 0; k < feeder.num_slots(); ++k) {
    int phase = feeder.slot_label(k).second;
    double ang = phase == 0 ? 0.0 : (phase == 1 ? -kDeg120 : kDeg120);
    s.v[k] = std::polar(1.0, ang);
  }
  return s;
}

std::array<Complex, 3> load_currents(const Feeder& feeder, int bus_index,
                                     const StateVector& v, double load_scale,
                                     double res_injection) {
  const Bus& bus = feeder.buses()[bus_index];
  std::array<Complex, 3> iph{Complex(0, 0), Complex(0, 0), Complex(0, 0)};
  std::array<Complex, 3> vph{};
  for (int p = 0; p < 3; ++p) {
    int s = feeder.slot(bus.id, p);
    vph[p] = s >= 0 ? v.v[s] : Complex(0, 0);
  }

  if (bus.load) {
    const LoadSpec& ld = *bus.load;
    if (ld.conn == LoadSpec::Conn::Wye) {
      for (int p = 0; p < 3; ++p) {
        Complex s = ld.s[p] * load_scale;
        if (s == Complex(0, 0) || vph[p] == Complex(0, 0)) continue;
        iph[p] += std::conj(s / vph[p]);
      }
    } else {
      // pair p is between phases p and (p+1)%3
      for (int p = 0; p < 3; ++p) {
        Complex s = ld.s[p] * load_scale;
        if (s == Complex(0, 0)) continue;
        Complex vpair = vph[p] - vph[(p + 1) % 3];
        if (vpair == Complex(0, 0)) continue;
        Complex ipair = std::conj(s / vpair);
        iph[p] += ipair;
        iph[(p + 1) % 3] -= ipair;
      }
    }
  }

  if (res_injection != 0.0) {
    int np = phase_count(bus.phases);
    Complex s_inj(res_injection / np, 0.0);  // active power injection
    for (int p = 0; p < 3; ++p) {
      if (!has_phase(bus.phases, p) || vph[p] == Complex(0, 0)) continue;
      iph[p] -= std::conj(s_inj / vph[p]);  // injection = negative draw
    }
  }
  return iph;
}

PowerFlowResult solve_power_flow(const Feeder& feeder,
                                 const PowerFlowOptions& opts) {
  const int nb = feeder.num_buses();
  if (!opts.load_scale.empty() &&
      static_cast<int>(opts.load_scale.size()) != nb)
    throw ConfigError("load_scale size mismatch");
  if (!opts.res_injection.empty() &&
      static_cast<int>(opts.res_injection.size()) != nb)
    throw ConfigError("res_injection size mismatch");

  PowerFlowResult res;
  res.voltages = flat_start(feeder);
  StateVector& v = res.voltages;
  const auto& order = feeder.bfs_order();
  const auto& parent = feeder.parent_line();

  // branch currents toward the source, per line, phases a/b/c
  std::vector<std::array<Complex, 3>> branch(feeder.num_lines());

  for (int it = 0; it < opts.max_iterations; ++it) {
    for (auto& b : branch) b = {Complex(0, 0), Complex(0, 0), Complex(0, 0)};

    // backward: accumulate currents leaf to root
    for (int oi = nb - 1; oi >= 0; --oi) {
      int bi = order[oi];
      const Bus& bus = feeder.buses()[bi];
      double ls = opts.load_scale.empty() ? 1.0 : opts.load_scale[bi];
      double ri = opts.res_injection.empty() ? 0.0 : opts.res_injection[bi];
      std::array<Complex, 3> acc = load_currents(feeder, bi, v, ls, ri);
      for (int li : feeder.lines_at(bus.id)) {
        if (li == parent[bi]) continue;
        for (int p = 0; p < 3; ++p) acc[p] += branch[li][p];
      }
      // shunt currents of incident line halves at this bus
      for (int li : feeder.lines_at(bus.id)) {
        const Line& ln = feeder.lines()[li];
        if (ln.yshunt.isZero()) continue;
        for (int p = 0; p < 3; ++p) {
          if (!has_phase(ln.phases, p)) continue;
          for (int q = 0; q < 3; ++q) {
            int sq = feeder.slot(bus.id, q);
            if (sq < 0 || ln.yshunt(p, q) == Complex(0, 0)) continue;
            acc[p] += 0.5 * ln.yshunt(p, q) * v.v[sq];
          }
        }
      }
      if (parent[bi] >= 0)
        for (int p = 0; p < 3; ++p) branch[parent[bi]][p] = acc[p];
    }

    // forward: update voltages root to leaves
    double delta = 0.0;
    for (int oi = 1; oi < nb; ++oi) {
      int bi = order[oi];
      const Bus& bus = feeder.buses()[bi];
      int li = parent[bi];
      const Line& ln = feeder.lines()[li];
      int pi = feeder.bus_index(ln.from) == bi ? feeder.bus_index(ln.to)
                                               : feeder.bus_index(ln.from);
      const Bus& pbus = feeder.buses()[pi];
      for (int p = 0; p < 3; ++p) {
        if (!has_phase(ln.phases, p)) continue;
        int sp = feeder.slot(pbus.id, p);
        Complex drop(0, 0);
        for (int q = 0; q < 3; ++q)
          if (has_phase(ln.phases, q)) drop += ln.z(p, q) * branch[li][q];
        Complex vn = v.v[sp] - drop;
        int sc = feeder.slot(bus.id, p);
        delta = std::max(delta, std::abs(vn - v.v[sc]));
        v.v[sc] = vn;
      }
    }

    res.iterations = it + 1;
    res.final_mismatch = delta;
    if (delta < opts.tolerance) {
      res.converged = true;
      break;
    }
    if (!std::isfinite(delta))
      throw NumericalError("power flow diverged at iteration " +
                           std::to_string(it + 1));
  }
  return res;
}

}  // namespace dsse
