#include "dsse/feeder.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace dsse {

using nlohmann::json;

PhaseMask parse_phases(const std::string& s) {
  PhaseMask m = 0;
  for (char ch : s) {
    switch (ch) {
      case 'a': case 'A': m |= kPhaseA; break;
      case 'b': case 'B': m |= kPhaseB; break;
      case 'c': case 'C': m |= kPhaseC; break;
      default:
        throw DataError("invalid phase character '" + std::string(1, ch) + "'");
    }
  }
  if (m == 0) throw DataError("empty phase set");
  return m;
}

std::string phases_to_string(PhaseMask m) {
  std::string s;
  if (m & kPhaseA) s += 'a';
  if (m & kPhaseB) s += 'b';
  if (m & kPhaseC) s += 'c';
  return s;
}

Feeder::Feeder(std::vector<Bus> buses, std::vector<Line> lines, int source_bus,
               double base_voltage, double base_power)
    : buses_(std::move(buses)),
      lines_(std::move(lines)),
      source_bus_(source_bus),
      base_voltage_(base_voltage),
      base_power_(base_power) {
  validate_and_index();
}

void Feeder::validate_and_index() {
  std::sort(buses_.begin(), buses_.end(),
            [](const Bus& a, const Bus& b) { return a.id < b.id; });
  for (size_t i = 1; i < buses_.size(); ++i) {
    if (buses_[i].id == buses_[i - 1].id)
      throw DataError("duplicate bus id " + std::to_string(buses_[i].id));
  }
  if (buses_.empty()) throw DataError("feeder has no buses");
  if (base_voltage_ <= 0 || base_power_ <= 0)
    throw DataError("base voltage/power must be positive");
  bus_index(source_bus_);  // throws if unknown

  // slot map
  slots_.assign(buses_.size(), {-1, -1, -1});
  for (size_t i = 0; i < buses_.size(); ++i) {
    for (int ph = 0; ph < 3; ++ph) {
      if (has_phase(buses_[i].phases, ph)) {
        slots_[i][ph] = num_slots_++;
        slot_labels_.emplace_back(buses_[i].id, ph);
      }
    }
    if (buses_[i].load) {
      const auto& ld = *buses_[i].load;
      for (int ph = 0; ph < 3; ++ph) {
        bool present = ld.conn == LoadSpec::Conn::Wye
                           ? has_phase(buses_[i].phases, ph)
                           // delta pair ab/bc/ca needs both endpoint phases
                           : (has_phase(buses_[i].phases, ph) &&
                              has_phase(buses_[i].phases, (ph + 1) % 3));
        if (!present && ld.s[ph] != Complex(0, 0))
          throw DataError("bus " + std::to_string(buses_[i].id) +
                          ": load on absent phase");
      }
    }
  }

  if (lines_.size() + 1 != buses_.size())
    throw DataError("not a radial tree: |L| = " +
                    std::to_string(lines_.size()) + ", |N| = " +
                    std::to_string(buses_.size()) + " (need |L| = |N| - 1)");

  lines_at_bus_.assign(buses_.size(), {});
  for (size_t li = 0; li < lines_.size(); ++li) {
    const Line& ln = lines_[li];
    int fi = bus_index(ln.from), ti = bus_index(ln.to);
    if ((ln.phases & buses_[fi].phases) != ln.phases ||
        (ln.phases & buses_[ti].phases) != ln.phases)
      throw DataError("phase mismatch on line " + std::to_string(ln.from) +
                      "-" + std::to_string(ln.to) +
                      ": line phases not a subset of endpoint phases");
    lines_at_bus_[fi].push_back(static_cast<int>(li));
    lines_at_bus_[ti].push_back(static_cast<int>(li));
  }

  // connectivity + parent orientation from the source
  parent_line_.assign(buses_.size(), -1);
  std::vector<bool> seen(buses_.size(), false);
  std::deque<int> queue{bus_index(source_bus_)};
  seen[queue.front()] = true;
  bfs_order_.clear();
  while (!queue.empty()) {
    int bi = queue.front();
    queue.pop_front();
    bfs_order_.push_back(bi);
    for (int li : lines_at_bus_[bi]) {
      const Line& ln = lines_[li];
      int other = bus_index(ln.from) == bi ? bus_index(ln.to) : bus_index(ln.from);
      if (!seen[other]) {
        seen[other] = true;
        parent_line_[other] = li;
        queue.push_back(other);
      }
    }
  }
  if (bfs_order_.size() != buses_.size()) {
    // with |L| = |N| - 1, unreachable buses imply a cycle elsewhere
    size_t unreachable = buses_.size() - bfs_order_.size();
    throw DataError("disconnected graph (cyclic topology): " +
                    std::to_string(unreachable) + " bus(es) unreachable");
  }

  for (const Line& ln : lines_) series_admittance(ln);  // throws on singular Z
}

int Feeder::bus_index(int id) const {
  auto it = std::lower_bound(
      buses_.begin(), buses_.end(), id,
      [](const Bus& b, int key) { return b.id < key; });
  if (it == buses_.end() || it->id != id)
    throw DataError("unknown bus id " + std::to_string(id));
  return static_cast<int>(it - buses_.begin());
}

int Feeder::slot(int bus_id, int phase) const {
  return slots_[bus_index(bus_id)][phase];
}

int Feeder::line_index(int from, int to) const {
  for (size_t i = 0; i < lines_.size(); ++i) {
    if ((lines_[i].from == from && lines_[i].to == to) ||
        (lines_[i].from == to && lines_[i].to == from))
      return static_cast<int>(i);
  }
  return -1;
}

const std::vector<int>& Feeder::lines_at(int bus_id) const {
  return lines_at_bus_[bus_index(bus_id)];
}

int Feeder::hop_distance(int a, int b) const {
  int ai = bus_index(a), bi = bus_index(b);
  if (ai == bi) return 0;
  std::vector<int> dist(buses_.size(), -1);
  std::deque<int> queue{ai};
  dist[ai] = 0;
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    if (u == bi) return dist[u];
    for (int li : lines_at_bus_[u]) {
      int v = bus_index(lines_[li].from) == u ? bus_index(lines_[li].to)
                                              : bus_index(lines_[li].from);
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist[bi];  // unreachable for a validated feeder
}

Mat3 series_admittance(const Line& line) {
  std::vector<int> ph;
  for (int p = 0; p < 3; ++p)
    if (has_phase(line.phases, p)) ph.push_back(p);
  const int k = static_cast<int>(ph.size());
  Eigen::MatrixXcd zr(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) zr(i, j) = line.z(ph[i], ph[j]);
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(zr);
  if (!lu.isInvertible())
    throw NumericalError("singular Z on line " + std::to_string(line.from) +
                         "-" + std::to_string(line.to));
  Eigen::MatrixXcd yr = lu.inverse();
  Mat3 y = Mat3::Zero();
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) y(ph[i], ph[j]) = yr(i, j);
  return y;
}

namespace {

Mat3 parse_mat3(const json& arr, const char* what) {
  if (!arr.is_array() || arr.size() != 3)
    throw DataError(std::string(what) + ": expected 3x3 matrix");
  Mat3 m;
  for (int i = 0; i < 3; ++i) {
    if (!arr[i].is_array() || arr[i].size() != 3)
      throw DataError(std::string(what) + ": expected 3x3 matrix");
    for (int j = 0; j < 3; ++j) {
      const auto& e = arr[i][j];
      if (!e.is_array() || e.size() != 2)
        throw DataError(std::string(what) + ": entries must be [re, im]");
      m(i, j) = Complex(e[0].get<double>(), e[1].get<double>());
    }
  }
  return m;
}

json mat3_to_json(const Mat3& m) {
  json arr = json::array();
  for (int i = 0; i < 3; ++i) {
    json row = json::array();
    for (int j = 0; j < 3; ++j)
      row.push_back({m(i, j).real(), m(i, j).imag()});
    arr.push_back(row);
  }
  return arr;
}

}  // namespace

Feeder load_feeder(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("feeder document is not valid JSON: ") +
                    e.what());
  }
  for (const char* key : {"base_kv", "base_kva", "source", "buses", "lines"})
    if (!doc.contains(key))
      throw DataError(std::string("feeder document missing key '") + key + "'");

  const double base_kv = doc["base_kv"].get<double>();     // line-to-line
  const double base_kva = doc["base_kva"].get<double>();   // three-phase
  const double v_base = base_kv * 1000.0 / std::sqrt(3.0); // line-to-neutral V
  const double s_base = base_kva * 1000.0;                 // VA
  const double s_base_1ph = s_base / 3.0;
  const double z_base = 3.0 * v_base * v_base / s_base;

  std::vector<Bus> buses;
  for (const auto& jb : doc["buses"]) {
    Bus b;
    b.id = jb.at("id").get<int>();
    b.phases = parse_phases(jb.value("phases", std::string("abc")));
    b.has_res = jb.value("res", false);
    if (jb.contains("load") && !jb["load"].is_null()) {
      LoadSpec ld;
      const auto& jl = jb["load"];
      std::string conn = jl.value("conn", std::string("wye"));
      if (conn == "wye")
        ld.conn = LoadSpec::Conn::Wye;
      else if (conn == "delta")
        ld.conn = LoadSpec::Conn::Delta;
      else
        throw DataError("bus " + std::to_string(b.id) +
                        ": load conn must be wye or delta");
      const auto& p = jl.at("p_kw");
      const auto& q = jl.at("q_kvar");
      if (p.size() != 3 || q.size() != 3)
        throw DataError("bus " + std::to_string(b.id) +
                        ": load p_kw/q_kvar must have 3 entries");
      for (int i = 0; i < 3; ++i)
        ld.s[i] = Complex(p[i].get<double>() * 1000.0 / s_base_1ph,
                          q[i].get<double>() * 1000.0 / s_base_1ph);
      b.load = ld;
    }
    buses.push_back(b);
  }

  std::vector<Line> lines;
  for (const auto& jl : doc["lines"]) {
    Line ln;
    ln.from = jl.at("from").get<int>();
    ln.to = jl.at("to").get<int>();
    ln.phases = parse_phases(jl.value("phases", std::string("abc")));
    ln.z = parse_mat3(jl.at("z"), "line z") / z_base;
    if (jl.contains("yshunt"))
      ln.yshunt = parse_mat3(jl["yshunt"], "line yshunt") * z_base;
    else
      ln.yshunt = Mat3::Zero();
    // zero out absent phases
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (!has_phase(ln.phases, i) || !has_phase(ln.phases, j)) {
          ln.z(i, j) = 0;
          ln.yshunt(i, j) = 0;
        }
    // symmetry check on present phases
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j)
        if (std::abs(ln.z(i, j) - ln.z(j, i)) > 1e-12 * (1 + std::abs(ln.z(i, j))))
          throw DataError("line " + std::to_string(ln.from) + "-" +
                          std::to_string(ln.to) + ": Z not symmetric");
    lines.push_back(ln);
  }

  return Feeder(std::move(buses), std::move(lines), doc["source"].get<int>(),
                v_base, s_base);
}

Feeder load_feeder_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open feeder file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_feeder(ss.str());
}

std::string serialize_feeder(const Feeder& f) {
  const double v_base = f.base_voltage();
  const double s_base = f.base_power();
  const double s_base_1ph = s_base / 3.0;
  const double z_base = 3.0 * v_base * v_base / s_base;

  json doc;
  doc["base_kv"] = v_base * std::sqrt(3.0) / 1000.0;
  doc["base_kva"] = s_base / 1000.0;
  doc["source"] = f.source_bus();
  doc["buses"] = json::array();
  for (const Bus& b : f.buses()) {
    json jb;
    jb["id"] = b.id;
    jb["phases"] = phases_to_string(b.phases);
    jb["res"] = b.has_res;
    if (b.load) {
      json jl;
      jl["conn"] = b.load->conn == LoadSpec::Conn::Wye ? "wye" : "delta";
      json p = json::array(), q = json::array();
      for (int i = 0; i < 3; ++i) {
        p.push_back(b.load->s[i].real() * s_base_1ph / 1000.0);
        q.push_back(b.load->s[i].imag() * s_base_1ph / 1000.0);
      }
      jl["p_kw"] = p;
      jl["q_kvar"] = q;
      jb["load"] = jl;
    }
    doc["buses"].push_back(jb);
  }
  doc["lines"] = json::array();
  for (const Line& ln : f.lines()) {
    json jl;
    jl["from"] = ln.from;
    jl["to"] = ln.to;
    jl["phases"] = phases_to_string(ln.phases);
    jl["z"] = mat3_to_json(ln.z * z_base);
    jl["yshunt"] = mat3_to_json(ln.yshunt / z_base);
    doc["lines"].push_back(jl);
  }
  return doc.dump(2);
}

std::uint64_t feeder_hash(const Feeder& feeder) {
  std::string s = serialize_feeder(feeder);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace dsse
