#include "dsse/pawnn.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <numeric>
#include <thread>

#include "json.hpp"

namespace dsse {

using nlohmann::json;

BlockPattern BlockPattern::from_edges(
    int n, const std::vector<std::pair<int, int>>& edges) {
  BlockPattern p;
  p.n_blocks = n;
  for (int i = 0; i < n; ++i) p.allowed.emplace_back(i, i);
  for (auto [a, b] : edges) {
    if (a == b || a < 0 || b < 0 || a >= n || b >= n)
      throw ConfigError("invalid block edge");
    p.allowed.emplace_back(a, b);
    p.allowed.emplace_back(b, a);
  }
  std::sort(p.allowed.begin(), p.allowed.end());
  p.allowed.erase(std::unique(p.allowed.begin(), p.allowed.end()),
                  p.allowed.end());
  return p;
}

BlockPattern BlockPattern::from_feeder(const Feeder& feeder) {
  std::vector<std::pair<int, int>> edges;
  for (const Line& l : feeder.lines())
    edges.emplace_back(feeder.bus_index(l.from), feeder.bus_index(l.to));
  return from_edges(feeder.num_buses(), edges);
}

void MaskedLayer::apply(const Eigen::MatrixXd& x, Eigen::MatrixXd& y) const {
  for (size_t k = 0; k < blocks.size(); ++k) {
    auto [i, j] = blocks[k];
    y.middleRows(i * rows_per_block, rows_per_block).noalias() +=
        weight[k] * x.middleRows(j * cols_per_block, cols_per_block);
  }
}

void MaskedLayer::apply_transposed(const Eigen::MatrixXd& dy,
                                   Eigen::MatrixXd& dx) const {
  for (size_t k = 0; k < blocks.size(); ++k) {
    auto [i, j] = blocks[k];
    dx.middleRows(j * cols_per_block, cols_per_block).noalias() +=
        weight[k].transpose() * dy.middleRows(i * rows_per_block,
                                              rows_per_block);
  }
}

std::size_t PawnnModel::parameter_count() const {
  std::size_t c = 0;
  for (const MaskedLayer& l : layers)
    c += l.blocks.size() * l.rows_per_block * l.cols_per_block +
         l.bias.size();
  return c;
}

namespace {

Eigen::MatrixXd normalize_input(const PawnnModel& m, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd xn = x;
  if (m.input_mean.size() == x.rows()) {
    xn.colwise() -= m.input_mean;
    xn.array().colwise() /= m.input_std.array();
  }
  return xn;
}

void leaky_relu_inplace(Eigen::MatrixXd& m, double leak) {
  m = m.unaryExpr([leak](double v) { return v > 0 ? v : leak * v; });
}

}  // namespace

Eigen::MatrixXd PawnnModel::forward(const Eigen::MatrixXd& x) const {
  if (x.rows() != input_dim())
    throw ConfigError("input width " + std::to_string(x.rows()) +
                      ", model expects " + std::to_string(input_dim()));
  Eigen::MatrixXd a = normalize_input(*this, x);
  for (int t = 0; t < num_layers(); ++t) {
    const MaskedLayer& l = layers[t];
    Eigen::MatrixXd z =
        l.bias.replicate(1, a.cols());
    l.apply(a, z);
    if (t + 1 < num_layers()) leaky_relu_inplace(z, leak);
    a = std::move(z);
  }
  return a;
}

PawnnModel build_model(const Feeder& feeder, const std::vector<int>& widths,
                       std::uint64_t seed) {
  if (widths.size() < 2) throw ConfigError("need at least one layer");
  for (int w : widths)
    if (w <= 0) throw ConfigError("layer widths must be positive");

  PawnnModel m;
  for (const Bus& b : feeder.buses()) m.bus_ids.push_back(b.id);
  m.pattern = BlockPattern::from_feeder(feeder);
  m.widths = widths;
  m.feeder_hash = feeder_hash(feeder);
  m.train_seed = seed;

  const int n = m.pattern.n_blocks;
  // blocks allowed per row/column of the pattern (same by symmetry, but
  // computed separately for clarity)
  std::vector<int> row_cnt(n, 0), col_cnt(n, 0);
  for (auto [i, j] : m.pattern.allowed) {
    ++row_cnt[i];
    ++col_cnt[j];
  }

  for (size_t t = 0; t + 1 < widths.size(); ++t) {
    MaskedLayer l;
    l.rows_per_block = widths[t + 1];
    l.cols_per_block = widths[t];
    l.blocks = m.pattern.allowed;
    l.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n) *
                                   l.rows_per_block);
    CounterRng rng(seed, 1000 + t);
    for (auto [i, j] : l.blocks) {
      double fan_in = static_cast<double>(row_cnt[i]) * l.cols_per_block;
      double fan_out = static_cast<double>(col_cnt[j]) * l.rows_per_block;
      double bound = std::sqrt(6.0 / (fan_in + fan_out));
      Eigen::MatrixXd w(l.rows_per_block, l.cols_per_block);
      for (int r = 0; r < l.rows_per_block; ++r)
        for (int c = 0; c < l.cols_per_block; ++c)
          w(r, c) = rng.uniform(-bound, bound);
      l.weight.push_back(std::move(w));
    }
    m.layers.push_back(std::move(l));
  }

  m.input_mean = Eigen::VectorXd::Zero(m.input_dim());
  m.input_std = Eigen::VectorXd::Ones(m.input_dim());

  m.output_present.assign(m.output_dim(), 0);
  if (widths.back() == 6) {
    for (int bi = 0; bi < feeder.num_buses(); ++bi)
      for (int p = 0; p < 3; ++p)
        if (has_phase(feeder.buses()[bi].phases, p)) {
          m.output_present[bi * 6 + 2 * p] = 1;
          m.output_present[bi * 6 + 2 * p + 1] = 1;
        }
  } else {
    std::fill(m.output_present.begin(), m.output_present.end(), 1);
  }
  return m;
}

InputLayout assign_inputs(const Feeder& feeder, const MeasurementSet& meas,
                          const std::vector<int>& pmu_buses) {
  std::vector<int> used(feeder.num_buses(), 0);
  std::vector<std::pair<int, int>> placed;  // (bus index, slot within block)
  auto is_pmu = [&](int b) {
    return std::find(pmu_buses.begin(), pmu_buses.end(), b) != pmu_buses.end();
  };
  for (const QuadraticMeasurement& qm : meas.items) {
    const MeasSpec& s = qm.spec;
    bool is_line = s.kind == MeasKind::IReal || s.kind == MeasKind::IImag ||
                   s.kind == MeasKind::IMag2 || s.kind == MeasKind::PFlow ||
                   s.kind == MeasKind::QFlow;
    int bus = s.bus;
    if (is_line) {
      bool p1 = is_pmu(s.bus), p2 = is_pmu(s.other);
      if (p1 == p2)  // both or neither: take the endpoint nearer the source
        bus = feeder.hop_distance(s.bus, feeder.source_bus()) <=
                      feeder.hop_distance(s.other, feeder.source_bus())
                  ? s.bus
                  : s.other;
      else
        bus = p1 ? s.other : s.bus;
    }
    int bi = feeder.bus_index(bus);
    placed.emplace_back(bi, used[bi]++);
  }
  InputLayout layout;
  layout.d0 = std::max(1, *std::max_element(used.begin(), used.end()));
  for (auto [bi, k] : placed)
    layout.slot_of_meas.push_back(bi * layout.d0 + k);
  return layout;
}

Eigen::VectorXd assemble_input(const InputLayout& layout, int n_blocks,
                               const Eigen::VectorXd& z) {
  if (z.size() != static_cast<Eigen::Index>(layout.slot_of_meas.size()))
    throw ConfigError("measurement vector length mismatch");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(
      static_cast<Eigen::Index>(n_blocks) * layout.d0);
  for (size_t i = 0; i < layout.slot_of_meas.size(); ++i)
    x[layout.slot_of_meas[i]] = z[i];
  return x;
}

Eigen::VectorXd state_to_target(const Feeder& feeder, const StateVector& v) {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(feeder.num_buses() * 6);
  for (int bi = 0; bi < feeder.num_buses(); ++bi)
    for (int p = 0; p < 3; ++p) {
      int s = feeder.slot(feeder.buses()[bi].id, p);
      if (s < 0) continue;
      y[bi * 6 + 2 * p] = v.v[s].real();
      y[bi * 6 + 2 * p + 1] = v.v[s].imag();
    }
  return y;
}

StateVector target_to_state(const Feeder& feeder, const Eigen::VectorXd& y) {
  StateVector v;
  v.v.resize(feeder.num_slots());
  for (int bi = 0; bi < feeder.num_buses(); ++bi)
    for (int p = 0; p < 3; ++p) {
      int s = feeder.slot(feeder.buses()[bi].id, p);
      if (s < 0) continue;
      v.v[s] = Complex(y[bi * 6 + 2 * p], y[bi * 6 + 2 * p + 1]);
    }
  return v;
}

namespace {

MaskedLayer zeros_like(const MaskedLayer& l) {
  MaskedLayer z;
  z.rows_per_block = l.rows_per_block;
  z.cols_per_block = l.cols_per_block;
  z.blocks = l.blocks;
  for (const auto& w : l.weight)
    z.weight.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  z.bias = Eigen::VectorXd::Zero(l.bias.size());
  return z;
}

// Accumulates scale * d(sum of weighted squared errors)/d(params) into grad,
// and returns scale * (sum of weighted squared errors).
double backprop_accum(const PawnnModel& model, const Eigen::MatrixXd& x,
                      const Eigen::MatrixXd& target,
                      const Eigen::VectorXd& out_weight, double scale,
                      std::vector<MaskedLayer>& grad) {
  const int nl = model.num_layers();
  std::vector<Eigen::MatrixXd> act(nl + 1);
  act[0] = normalize_input(model, x);
  for (int t = 0; t < nl; ++t) {
    const MaskedLayer& l = model.layers[t];
    Eigen::MatrixXd z = l.bias.replicate(1, x.cols());
    l.apply(act[t], z);
    if (t + 1 < nl) leaky_relu_inplace(z, model.leak);
    act[t + 1] = std::move(z);
  }

  Eigen::MatrixXd diff = act[nl] - target;
  for (Eigen::Index r = 0; r < diff.rows(); ++r) {
    double w = model.output_present[r] ? out_weight[r] : 0.0;
    diff.row(r) *= w;
  }
  double loss = 0;
  for (Eigen::Index r = 0; r < diff.rows(); ++r) {
    double w = model.output_present[r] ? out_weight[r] : 0.0;
    if (w > 0) loss += diff.row(r).squaredNorm() / w;
  }
  // d(sum w (y-t)^2)/dy = 2 w (y-t); diff already carries one factor of w
  Eigen::MatrixXd dz = 2.0 * scale * diff;

  for (int t = nl - 1; t >= 0; --t) {
    const MaskedLayer& l = model.layers[t];
    MaskedLayer& g = grad[t];
    for (size_t k = 0; k < l.blocks.size(); ++k) {
      auto [i, j] = l.blocks[k];
      g.weight[k].noalias() +=
          dz.middleRows(i * l.rows_per_block, l.rows_per_block) *
          act[t].middleRows(j * l.cols_per_block, l.cols_per_block)
              .transpose();
    }
    g.bias += dz.rowwise().sum();
    if (t > 0) {
      Eigen::MatrixXd da =
          Eigen::MatrixXd::Zero(act[t].rows(), act[t].cols());
      l.apply_transposed(dz, da);
      // act[t] holds the post-activation values; slope from its sign
      dz = da.binaryExpr(act[t], [&](double g_, double a_) {
        return a_ > 0 ? g_ : g_ * model.leak;
      });
    }
  }
  return loss * scale;
}

}  // namespace

PawnnGradient gradient(const PawnnModel& model, const Eigen::MatrixXd& x,
                       const Eigen::MatrixXd& target,
                       const Eigen::VectorXd& weight_per_output) {
  if (x.cols() != target.cols() || x.cols() == 0)
    throw ConfigError("gradient batch mismatch");
  Eigen::VectorXd w = weight_per_output.size()
                          ? weight_per_output
                          : Eigen::VectorXd::Ones(model.output_dim());
  double present = 0;
  for (int r = 0; r < model.output_dim(); ++r)
    if (model.output_present[r]) present += 1;
  double scale = 1.0 / (present * static_cast<double>(x.cols()));

  PawnnGradient g;
  for (const MaskedLayer& l : model.layers) g.layers.push_back(zeros_like(l));
  g.loss = backprop_accum(model, x, target, w, scale, g.layers);
  return g;
}

AdamState AdamState::for_model(const PawnnModel& model) {
  AdamState s;
  for (const MaskedLayer& l : model.layers) {
    s.m.push_back(zeros_like(l));
    s.v.push_back(zeros_like(l));
  }
  return s;
}

void adam_step(AdamState& state, PawnnModel& model,
               const PawnnGradient& grad) {
  ++state.step;
  const double b1 = state.beta1, b2 = state.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  // plain per-element arithmetic, so an independent scalar re-implementation
  // of the textbook recursion reproduces the update bit for bit (Eigen's
  // scalar division would silently become a reciprocal multiply)
  auto update = [&](double* p, double* m, double* v, const double* g,
                    Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) {
      m[i] = b1 * m[i] + (1 - b1) * g[i];
      v[i] = b2 * v[i] + (1 - b2) * (g[i] * g[i]);
      p[i] -= state.lr * (m[i] / corr1) / (std::sqrt(v[i] / corr2) + state.eps);
    }
  };
  for (size_t t = 0; t < model.layers.size(); ++t) {
    MaskedLayer& l = model.layers[t];
    const MaskedLayer& g = grad.layers[t];
    MaskedLayer& m = state.m[t];
    MaskedLayer& v = state.v[t];
    for (size_t k = 0; k < l.weight.size(); ++k)
      update(l.weight[k].data(), m.weight[k].data(), v.weight[k].data(),
             g.weight[k].data(), l.weight[k].size());
    update(l.bias.data(), m.bias.data(), v.bias.data(), g.bias.data(),
           l.bias.size());
  }
}

TrainHistory train(PawnnModel& model, const Eigen::MatrixXd& x,
                   const Eigen::MatrixXd& y, const TrainOptions& opts) {
  const Eigen::Index n = x.cols();
  if (n < 10) throw ConfigError("need at least 10 samples to train");
  if (y.cols() != n) throw ConfigError("sample/target count mismatch");

  // seeded shuffle, then validation split from the tail
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  CounterRng shuffle_rng(opts.seed, 1);
  for (Eigen::Index i = n - 1; i > 0; --i)
    std::swap(order[i], order[shuffle_rng.next_below(
                            static_cast<std::uint64_t>(i) + 1)]);
  Eigen::Index n_val = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::lround(n * opts.validation_fraction)));
  Eigen::Index n_train = n - n_val;

  Eigen::MatrixXd xt(x.rows(), n_train), yt(y.rows(), n_train);
  Eigen::MatrixXd xv(x.rows(), n_val), yv(y.rows(), n_val);
  for (Eigen::Index i = 0; i < n_train; ++i) {
    xt.col(i) = x.col(order[i]);
    yt.col(i) = y.col(order[i]);
  }
  for (Eigen::Index i = 0; i < n_val; ++i) {
    xv.col(i) = x.col(order[n_train + i]);
    yv.col(i) = y.col(order[n_train + i]);
  }

  // z-score stats from the training split
  model.input_mean = xt.rowwise().mean();
  Eigen::VectorXd var =
      (xt.colwise() - model.input_mean).array().square().rowwise().mean();
  model.input_std = var.array().sqrt().max(1e-12);

  Eigen::VectorXd out_weight = Eigen::VectorXd::Ones(model.output_dim());
  if (opts.pmu_output_weight != 1.0 && model.widths.back() == 6) {
    for (int b : opts.pmu_buses) {
      auto it = std::lower_bound(model.bus_ids.begin(), model.bus_ids.end(), b);
      if (it != model.bus_ids.end() && *it == b) {
        int bi = static_cast<int>(it - model.bus_ids.begin());
        out_weight.segment(bi * 6, 6).setConstant(opts.pmu_output_weight);
      }
    }
  }

  double present = 0;
  for (int r = 0; r < model.output_dim(); ++r)
    if (model.output_present[r]) present += 1;
  auto eval_loss = [&](const Eigen::MatrixXd& xs, const Eigen::MatrixXd& ys) {
    Eigen::MatrixXd out = model.forward(xs);
    double loss = 0;
    for (Eigen::Index r = 0; r < out.rows(); ++r)
      if (model.output_present[r])
        loss += out_weight[r] * (out.row(r) - ys.row(r)).squaredNorm();
    return loss / (present * static_cast<double>(xs.cols()));
  };

  AdamState adam = AdamState::for_model(model);
  adam.lr = opts.lr;
  TrainHistory hist;
  std::vector<MaskedLayer> best_layers = model.layers;
  hist.best_val_loss = eval_loss(xv, yv);
  int since_best = 0;
  const int n_threads = std::max(1, opts.threads);

  std::vector<Eigen::Index> idx(n_train);
  std::iota(idx.begin(), idx.end(), 0);

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    CounterRng erng(opts.seed, 100 + static_cast<std::uint64_t>(epoch));
    for (Eigen::Index i = n_train - 1; i > 0; --i)
      std::swap(idx[i], idx[erng.next_below(static_cast<std::uint64_t>(i) + 1)]);

    double epoch_loss = 0;
    Eigen::Index n_batches = 0;
    for (Eigen::Index start = 0; start < n_train; start += opts.batch_size) {
      Eigen::Index bs =
          std::min<Eigen::Index>(opts.batch_size, n_train - start);
      Eigen::MatrixXd xb(x.rows(), bs), yb(y.rows(), bs);
      for (Eigen::Index i = 0; i < bs; ++i) {
        xb.col(i) = xt.col(idx[start + i]);
        yb.col(i) = yt.col(idx[start + i]);
      }
      PawnnGradient g;
      for (const MaskedLayer& l : model.layers)
        g.layers.push_back(zeros_like(l));
      double scale = 1.0 / (present * static_cast<double>(bs));
      if (n_threads == 1 || bs < 2 * n_threads) {
        g.loss = backprop_accum(model, xb, yb, out_weight, scale, g.layers);
      } else {
        // fixed chunking and in-order reduction keep this bit-reproducible
        std::vector<std::vector<MaskedLayer>> partial(n_threads);
        std::vector<double> ploss(n_threads, 0.0);
        std::vector<std::thread> pool;
        Eigen::Index chunk = (bs + n_threads - 1) / n_threads;
        for (int t = 0; t < n_threads; ++t) {
          pool.emplace_back([&, t]() {
            Eigen::Index lo = t * chunk;
            if (lo >= bs) return;
            Eigen::Index len = std::min(chunk, bs - lo);
            for (const MaskedLayer& l : model.layers)
              partial[t].push_back(zeros_like(l));
            ploss[t] = backprop_accum(model, xb.middleCols(lo, len),
                                      yb.middleCols(lo, len), out_weight,
                                      scale, partial[t]);
          });
        }
        for (auto& th : pool) th.join();
        for (int t = 0; t < n_threads; ++t) {
          if (partial[t].empty()) continue;
          g.loss += ploss[t];
          for (size_t li = 0; li < g.layers.size(); ++li) {
            for (size_t k = 0; k < g.layers[li].weight.size(); ++k)
              g.layers[li].weight[k] += partial[t][li].weight[k];
            g.layers[li].bias += partial[t][li].bias;
          }
        }
      }
      adam_step(adam, model, g);
      epoch_loss += g.loss;
      ++n_batches;
    }

    double val = eval_loss(xv, yv);
    hist.train_loss.push_back(epoch_loss / std::max<Eigen::Index>(1, n_batches));
    hist.val_loss.push_back(val);
    if (!std::isfinite(val) || !std::isfinite(hist.train_loss.back()))
      throw NumericalError("training diverged at epoch " +
                           std::to_string(epoch));
    if (val < hist.best_val_loss) {
      hist.best_val_loss = val;
      hist.best_epoch = epoch;
      best_layers = model.layers;
      since_best = 0;
    } else if (++since_best >= opts.patience) {
      break;
    }
  }
  model.layers = best_layers;
  return hist;
}

std::vector<std::vector<int>> receptive_field(const Feeder& feeder, int k) {
  if (k < 1) throw ConfigError("receptive field needs k >= 1");
  const int nb = feeder.num_buses();
  std::vector<std::vector<int>> adj(nb);
  for (const Line& l : feeder.lines()) {
    adj[feeder.bus_index(l.from)].push_back(feeder.bus_index(l.to));
    adj[feeder.bus_index(l.to)].push_back(feeder.bus_index(l.from));
  }
  std::vector<std::vector<int>> out(nb);
  for (int s = 0; s < nb; ++s) {
    std::vector<int> dist(nb, -1);
    std::deque<int> q{s};
    dist[s] = 0;
    while (!q.empty()) {
      int u = q.front();
      q.pop_front();
      if (dist[u] == k) continue;
      for (int w : adj[u])
        if (dist[w] < 0) {
          dist[w] = dist[u] + 1;
          q.push_back(w);
        }
    }
    for (int u = 0; u < nb; ++u)
      if (dist[u] >= 0) out[s].push_back(feeder.buses()[u].id);
  }
  return out;
}

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vec_from_json(const json& a) {
  Eigen::VectorXd v(a.size());
  for (size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
  return v;
}

}  // namespace

std::string serialize_model(const PawnnModel& m) {
  json doc;
  doc["schema_version"] = 1;
  doc["feeder_hash"] = m.feeder_hash;
  doc["train_seed"] = m.train_seed;
  doc["leak"] = m.leak;
  doc["bus_ids"] = m.bus_ids;
  doc["widths"] = m.widths;
  json edges = json::array();
  for (auto [i, j] : m.pattern.allowed)
    if (i < j) edges.push_back({i, j});
  doc["pattern_edges"] = edges;
  doc["input_mean"] = vec_to_json(m.input_mean);
  doc["input_std"] = vec_to_json(m.input_std);
  doc["output_present"] = m.output_present;
  json layers = json::array();
  for (const MaskedLayer& l : m.layers) {
    json jl;
    jl["rows"] = l.rows_per_block;
    jl["cols"] = l.cols_per_block;
    json ws = json::array();
    for (size_t k = 0; k < l.weight.size(); ++k) {
      // block-row-major flattening of each allowed block
      json w = json::array();
      for (int r = 0; r < l.rows_per_block; ++r)
        for (int c = 0; c < l.cols_per_block; ++c)
          w.push_back(l.weight[k](r, c));
      ws.push_back(w);
    }
    jl["weights"] = ws;
    jl["bias"] = vec_to_json(l.bias);
    layers.push_back(jl);
  }
  doc["layers"] = layers;
  return doc.dump();
}

PawnnModel deserialize_model(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("model file is not valid JSON: ") + e.what());
  }
  if (doc.value("schema_version", 0) != 1)
    throw DataError("unsupported model schema version");
  PawnnModel m;
  m.feeder_hash = doc["feeder_hash"].get<std::uint64_t>();
  m.train_seed = doc["train_seed"].get<std::uint64_t>();
  m.leak = doc["leak"].get<double>();
  m.bus_ids = doc["bus_ids"].get<std::vector<int>>();
  m.widths = doc["widths"].get<std::vector<int>>();
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : doc["pattern_edges"])
    edges.emplace_back(e[0].get<int>(), e[1].get<int>());
  m.pattern =
      BlockPattern::from_edges(static_cast<int>(m.bus_ids.size()), edges);
  m.input_mean = vec_from_json(doc["input_mean"]);
  m.input_std = vec_from_json(doc["input_std"]);
  m.output_present = doc["output_present"].get<std::vector<std::uint8_t>>();
  for (const auto& jl : doc["layers"]) {
    MaskedLayer l;
    l.rows_per_block = jl["rows"].get<int>();
    l.cols_per_block = jl["cols"].get<int>();
    l.blocks = m.pattern.allowed;
    const auto& ws = jl["weights"];
    if (ws.size() != l.blocks.size())
      throw DataError("model block count mismatch");
    for (size_t k = 0; k < ws.size(); ++k) {
      Eigen::MatrixXd w(l.rows_per_block, l.cols_per_block);
      size_t p = 0;
      for (int r = 0; r < l.rows_per_block; ++r)
        for (int c = 0; c < l.cols_per_block; ++c)
          w(r, c) = ws[k][p++].get<double>();
      l.weight.push_back(std::move(w));
    }
    l.bias = vec_from_json(jl["bias"]);
    m.layers.push_back(std::move(l));
  }
  return m;
}

void save_model(const PawnnModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file: " + path);
  out << serialize_model(model);
}

PawnnModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file: " + path);
  std::string s((std::istreambuf_iterator<char>(in)),
                std::istreambuf_iterator<char>());
  return deserialize_model(s);
}

}  // namespace dsse
