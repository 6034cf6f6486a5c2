#include "dsse/measurement.hpp"

#include <algorithm>
#include <map>

#include "dsse/rng.hpp"

namespace dsse {

namespace {

constexpr Complex kImag(0.0, 1.0);

struct KindInfo {
  MeasKind kind;
  const char* name;
};

constexpr KindInfo kKinds[] = {
    {MeasKind::VReal, "v_real"},   {MeasKind::VImag, "v_imag"},
    {MeasKind::IReal, "i_real"},   {MeasKind::IImag, "i_imag"},
    {MeasKind::VMag2, "v_mag2"},   {MeasKind::IMag2, "i_mag2"},
    {MeasKind::PFlow, "p_flow"},   {MeasKind::QFlow, "q_flow"},
    {MeasKind::PInj, "p_inj"},     {MeasKind::QInj, "q_inj"},
    {MeasKind::PseudoP, "pseudo_p"}, {MeasKind::PseudoQ, "pseudo_q"},
};

// Sparse accumulation helpers.
using VecEntries = std::map<int, Complex>;
using MatEntries = std::map<std::pair<int, int>, Complex>;

// Linear functional a with a^T v = series current on line li at phase
// `phase`, measured at the `from_bus` end, flowing toward the other end.
VecEntries current_functional(const Feeder& f, int line_i, int from_bus,
                              int phase, bool include_shunt) {
  const Line& ln = f.lines()[line_i];
  if (!has_phase(ln.phases, phase))
    throw DataError("phase absent on line " + std::to_string(ln.from) + "-" +
                    std::to_string(ln.to));
  int to_bus = ln.from == from_bus ? ln.to : ln.from;
  Mat3 y = series_admittance(ln);
  VecEntries a;
  for (int q = 0; q < 3; ++q) {
    if (!has_phase(ln.phases, q)) continue;
    a[f.slot(from_bus, q)] += y(phase, q);
    a[f.slot(to_bus, q)] -= y(phase, q);
    if (include_shunt && ln.yshunt(phase, q) != Complex(0, 0))
      a[f.slot(from_bus, q)] += 0.5 * ln.yshunt(phase, q);
  }
  return a;
}

void add_linear(VecEntries& c, const VecEntries& a, Complex scale) {
  for (const auto& [slot, val] : a) c[slot] += scale * val;
}

// d(i,j) += scale * row_i * col_j
void add_outer(MatEntries& d, const VecEntries& row, const VecEntries& col,
               Complex scale) {
  for (const auto& [i, ri] : row)
    for (const auto& [j, cj] : col) d[{i, j}] += scale * ri * cj;
}

void flow_terms(const Feeder& f, const MeasSpec& spec, int line_i, int phase,
                bool include_shunt, bool reactive, MatEntries& d) {
  // power into the line at the measured bus:
  //   S = v_{s,phase} * conj(i),  i = a^T v
  // P = Re S -> D = (M + M^H)/2,  Q = Im S -> D = (M - M^H)/(2i)
  // with M = conj(a) e_s^T  (so that v^H M v = conj(a^T v) * v_s).
  VecEntries a = current_functional(f, line_i, spec.bus, phase, include_shunt);
  int s = f.slot(spec.bus, phase);
  VecEntries abar, es;
  for (const auto& [slot, val] : a) abar[slot] = std::conj(val);
  es[s] = 1.0;
  if (!reactive) {
    add_outer(d, abar, es, 0.5);
    // M^H = e_s a^T (conjugate-transpose of conj(a) e_s^T)
    add_outer(d, es, a, 0.5);
  } else {
    add_outer(d, abar, es, Complex(0, -0.5));  // 1/(2i) = -i/2
    add_outer(d, es, a, Complex(0, 0.5));
  }
}

}  // namespace

const char* meas_kind_name(MeasKind k) {
  for (const auto& ki : kKinds)
    if (ki.kind == k) return ki.name;
  throw ConfigError("unknown measurement kind");
}

MeasKind meas_kind_from_name(const std::string& name) {
  for (const auto& ki : kKinds)
    if (name == ki.name) return ki.kind;
  throw ConfigError("unknown measurement kind '" + name + "'");
}

QuadraticMeasurement build_measurement(const Feeder& feeder,
                                       const MeasSpec& spec,
                                       bool include_shunt) {
  const int n = feeder.num_slots();
  MatEntries d;
  VecEntries c;

  auto require_phase = [&](int bus, int phase) {
    if (phase == kPhaseSum) return;
    if (phase < 0 || phase > 2 || feeder.slot(bus, phase) < 0)
      throw DataError("phase " + std::to_string(phase) + " absent at bus " +
                      std::to_string(bus));
  };

  auto line_of = [&]() {
    int li = feeder.line_index(spec.bus, spec.other);
    if (li < 0)
      throw DataError("no line " + std::to_string(spec.bus) + "-" +
                      std::to_string(spec.other));
    return li;
  };

  switch (spec.kind) {
    case MeasKind::VReal: {
      require_phase(spec.bus, spec.phase);
      c[feeder.slot(spec.bus, spec.phase)] += 0.5;
      break;
    }
    case MeasKind::VImag: {
      require_phase(spec.bus, spec.phase);
      c[feeder.slot(spec.bus, spec.phase)] += -0.5 * kImag;
      break;
    }
    case MeasKind::IReal:
    case MeasKind::IImag: {
      VecEntries a =
          current_functional(feeder, line_of(), spec.bus, spec.phase,
                             include_shunt);
      add_linear(c, a, spec.kind == MeasKind::IReal ? Complex(0.5, 0)
                                                    : Complex(0, -0.5));
      break;
    }
    case MeasKind::VMag2: {
      require_phase(spec.bus, spec.phase);
      int s = feeder.slot(spec.bus, spec.phase);
      d[{s, s}] += 1.0;
      break;
    }
    case MeasKind::IMag2: {
      VecEntries a =
          current_functional(feeder, line_of(), spec.bus, spec.phase,
                             include_shunt);
      // |a^T v|^2 -> D = conj(a) a^T
      VecEntries abar;
      for (const auto& [slot, val] : a) abar[slot] = std::conj(val);
      add_outer(d, abar, a, 1.0);
      break;
    }
    case MeasKind::PFlow:
    case MeasKind::QFlow: {
      require_phase(spec.bus, spec.phase);
      flow_terms(feeder, spec, line_of(), spec.phase, include_shunt,
                 spec.kind == MeasKind::QFlow, d);
      break;
    }
    case MeasKind::PInj:
    case MeasKind::QInj:
    case MeasKind::PseudoP:
    case MeasKind::PseudoQ: {
      bool reactive =
          spec.kind == MeasKind::QInj || spec.kind == MeasKind::PseudoQ;
      std::vector<int> phases;
      if (spec.phase == kPhaseSum) {
        for (int p = 0; p < 3; ++p)
          if (feeder.slot(spec.bus, p) >= 0) phases.push_back(p);
      } else {
        require_phase(spec.bus, spec.phase);
        phases.push_back(spec.phase);
      }
      for (int li : feeder.lines_at(spec.bus)) {
        const Line& ln = feeder.lines()[li];
        for (int p : phases) {
          if (!has_phase(ln.phases, p)) continue;
          MeasSpec flow = spec;
          flow_terms(feeder, flow, li, p, include_shunt, reactive, d);
        }
      }
      break;
    }
  }

  QuadraticMeasurement qm;
  qm.spec = spec;
  qm.D.resize(n, n);
  qm.c.resize(n);
  std::vector<Eigen::Triplet<Complex>> trips;
  for (const auto& [ij, val] : d)
    if (val != Complex(0, 0)) trips.emplace_back(ij.first, ij.second, val);
  qm.D.setFromTriplets(trips.begin(), trips.end());
  for (const auto& [slot, val] : c)
    if (val != Complex(0, 0)) qm.c.coeffRef(slot) = val;
  return qm;
}

double QuadraticMeasurement::evaluate(const StateVector& v) const {
  Complex quad = 0.0;
  for (int k = 0; k < D.outerSize(); ++k)
    for (Eigen::SparseMatrix<Complex>::InnerIterator it(D, k); it; ++it)
      quad += std::conj(v.v[it.row()]) * it.value() * v.v[it.col()];
  Complex lin = 0.0;
  for (Eigen::SparseVector<Complex>::InnerIterator it(c); it; ++it)
    lin += it.value() * v.v[it.index()];
  return quad.real() + 2.0 * lin.real();
}

Eigen::RowVectorXd QuadraticMeasurement::jacobian_row(
    const StateVector& v) const {
  const int n = v.size();
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(2 * n);
  // dh/dRe(v_k) = 2 Re((D v)_k + c_k),  dh/dIm(v_k) = 2 Im((D v)_k) - 2 Im(c_k)
  Eigen::VectorXcd dv = D * v.v;
  for (int k = 0; k < n; ++k) {
    if (dv[k] != Complex(0, 0)) {
      row[k] += 2.0 * dv[k].real();
      row[n + k] += 2.0 * dv[k].imag();
    }
  }
  for (Eigen::SparseVector<Complex>::InnerIterator it(c); it; ++it) {
    row[it.index()] += 2.0 * it.value().real();
    row[n + it.index()] -= 2.0 * it.value().imag();
  }
  return row;
}

std::vector<int> QuadraticMeasurement::support() const {
  std::vector<int> s;
  for (int k = 0; k < D.outerSize(); ++k)
    for (Eigen::SparseMatrix<Complex>::InnerIterator it(D, k); it; ++it) {
      s.push_back(static_cast<int>(it.row()));
      s.push_back(static_cast<int>(it.col()));
    }
  for (Eigen::SparseVector<Complex>::InnerIterator it(c); it; ++it)
    s.push_back(static_cast<int>(it.index()));
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

Eigen::VectorXd MeasurementSet::evaluate(const StateVector& v) const {
  Eigen::VectorXd z(items.size());
  for (size_t i = 0; i < items.size(); ++i) z[i] = items[i].evaluate(v);
  return z;
}

Eigen::MatrixXd MeasurementSet::jacobian(const StateVector& v) const {
  Eigen::MatrixXd j(items.size(), 2 * v.size());
  for (size_t i = 0; i < items.size(); ++i) j.row(i) = items[i].jacobian_row(v);
  return j;
}

Eigen::VectorXd MeasurementSet::weights() const {
  Eigen::VectorXd w(items.size());
  for (size_t i = 0; i < items.size(); ++i) {
    if (items[i].spec.sigma2 <= 0)
      throw ConfigError("measurement noise variance must be positive");
    w[i] = 1.0 / items[i].spec.sigma2;
  }
  return w;
}

void MeasurementSet::sort() {
  std::stable_sort(items.begin(), items.end(),
                   [](const QuadraticMeasurement& a,
                      const QuadraticMeasurement& b) {
                     auto key = [](const MeasSpec& s) {
                       return std::make_tuple(static_cast<int>(s.kind), s.bus,
                                              s.other, s.phase);
                     };
                     return key(a.spec) < key(b.spec);
                   });
}

Eigen::VectorXd synthesize(const MeasurementSet& set, const StateVector& v_true,
                           std::uint64_t seed, std::uint64_t sample_index) {
  CounterRng rng(seed, sample_index);
  Eigen::VectorXd z = set.evaluate(v_true);
  for (int i = 0; i < z.size(); ++i)
    z[i] += std::sqrt(set.items[i].spec.sigma2) * rng.gaussian();
  return z;
}

std::vector<MeasSpec> pmu_voltage_specs(const Feeder& feeder, int bus,
                                        double sigma2) {
  std::vector<MeasSpec> out;
  for (int p = 0; p < 3; ++p) {
    if (feeder.slot(bus, p) < 0) continue;
    out.push_back({MeasKind::VReal, bus, 0, p, sigma2});
    out.push_back({MeasKind::VImag, bus, 0, p, sigma2});
  }
  return out;
}

std::vector<MeasSpec> current_mag_specs(const Feeder& feeder, int from, int to,
                                        double sigma2) {
  int li = feeder.line_index(from, to);
  if (li < 0)
    throw DataError("no line " + std::to_string(from) + "-" +
                    std::to_string(to));
  std::vector<MeasSpec> out;
  for (int p = 0; p < 3; ++p)
    if (has_phase(feeder.lines()[li].phases, p))
      out.push_back({MeasKind::IMag2, from, to, p, sigma2});
  return out;
}

std::vector<MeasSpec> pseudo_injection_specs(int bus, double sigma2) {
  return {{MeasKind::PseudoP, bus, 0, kPhaseSum, sigma2},
          {MeasKind::PseudoQ, bus, 0, kPhaseSum, sigma2}};
}

}  // namespace dsse
