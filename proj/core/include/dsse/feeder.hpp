#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dsse/errors.hpp"

namespace dsse {

using Complex = std::complex<double>;
using Mat3 = Eigen::Matrix3cd;

// Phase bit mask: bit 0 = a, bit 1 = b, bit 2 = c.
using PhaseMask = std::uint8_t;
constexpr PhaseMask kPhaseA = 1;
constexpr PhaseMask kPhaseB = 2;
constexpr PhaseMask kPhaseC = 4;
constexpr PhaseMask kAllPhases = 7;

inline bool has_phase(PhaseMask m, int phase) { return (m >> phase) & 1; }
inline int phase_count(PhaseMask m) {
  return ((m >> 0) & 1) + ((m >> 1) & 1) + ((m >> 2) & 1);
}
PhaseMask parse_phases(const std::string& s);
std::string phases_to_string(PhaseMask m);

struct LoadSpec {
  enum class Conn { Wye, Delta };
  Conn conn = Conn::Wye;
  // Per-unit complex power. Wye: per phase a,b,c. Delta: per pair ab,bc,ca.
  std::array<Complex, 3> s{};
};

struct Bus {
  int id = 0;
  PhaseMask phases = kAllPhases;
  std::optional<LoadSpec> load;
  bool has_res = false;
};

struct Line {
  int from = 0;
  int to = 0;
  PhaseMask phases = kAllPhases;
  Mat3 z;       // series impedance, per-unit, masked to present phases
  Mat3 yshunt;  // total shunt admittance, per-unit
};

// State vector: complex voltage per present (bus, phase) slot, per-unit.
// Compact layout: buses in id order, phases a,b,c within each bus; absent
// phases have no slot, so norms never see them.
struct StateVector {
  Eigen::VectorXcd v;
  int size() const { return static_cast<int>(v.size()); }
};

class Feeder {
 public:
  Feeder(std::vector<Bus> buses, std::vector<Line> lines, int source_bus,
         double base_voltage, double base_power);

  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Line>& lines() const { return lines_; }
  int source_bus() const { return source_bus_; }
  double base_voltage() const { return base_voltage_; }
  double base_power() const { return base_power_; }

  int num_buses() const { return static_cast<int>(buses_.size()); }
  int num_lines() const { return static_cast<int>(lines_.size()); }

  int bus_index(int id) const;  // throws DataError on unknown id
  const Bus& bus(int id) const { return buses_[bus_index(id)]; }

  // State slot of (bus id, phase 0..2); -1 when the phase is absent.
  int slot(int bus_id, int phase) const;
  int num_slots() const { return num_slots_; }
  // (bus id, phase) of a slot index.
  std::pair<int, int> slot_label(int s) const { return slot_labels_[s]; }

  int line_index(int from, int to) const;  // orderless; -1 if no such line
  const std::vector<int>& lines_at(int bus_id) const;

  // Number of edges on the unique tree path between buses a and b.
  int hop_distance(int a, int b) const;

  // Parent line of each bus on the path toward the source (-1 at source),
  // plus a source-out ordering of bus indices (useful for sweeps).
  const std::vector<int>& parent_line() const { return parent_line_; }
  const std::vector<int>& bfs_order() const { return bfs_order_; }

 private:
  std::vector<Bus> buses_;
  std::vector<Line> lines_;
  int source_bus_;
  double base_voltage_;
  double base_power_;

  int num_slots_ = 0;
  std::vector<std::pair<int, int>> slot_labels_;
  std::vector<std::array<int, 3>> slots_;       // by bus index
  std::vector<std::vector<int>> lines_at_bus_;  // line indices, by bus index
  std::vector<int> parent_line_;
  std::vector<int> bfs_order_;

  void validate_and_index();
};

// Y = Z^-1 on present phases, zeros elsewhere. Throws NumericalError when Z
// restricted to the present phases is singular.
Mat3 series_admittance(const Line& line);

// Feeder document I/O (JSON; SI units in the document, per-unit inside).
Feeder load_feeder(const std::string& json_text);
Feeder load_feeder_file(const std::string& path);
std::string serialize_feeder(const Feeder& feeder);

// FNV-1a over the serialized document; recorded in model files/manifests.
std::uint64_t feeder_hash(const Feeder& feeder);

}  // namespace dsse
