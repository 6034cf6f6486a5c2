#include "doctest.h"

#include <cmath>

#include "dsse/pawnn.hpp"
#include "test_util.hpp"

using namespace dsse;

namespace {

// Dense reference: expand each masked layer to a full matrix and run a
// plain dense forward pass.
Eigen::MatrixXd dense_of(const MaskedLayer& l, int n_blocks) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(
      static_cast<Eigen::Index>(n_blocks) * l.rows_per_block,
      static_cast<Eigen::Index>(n_blocks) * l.cols_per_block);
  for (size_t b = 0; b < l.blocks.size(); ++b) {
    auto [i, j] = l.blocks[b];
    w.block(static_cast<Eigen::Index>(i) * l.rows_per_block,
            static_cast<Eigen::Index>(j) * l.cols_per_block, l.rows_per_block,
            l.cols_per_block) = l.weight[b];
  }
  return w;
}

Eigen::MatrixXd dense_forward(const PawnnModel& m, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd a = (x.colwise() - m.input_mean).array().colwise() /
                      m.input_std.array();
  for (int l = 0; l < m.num_layers(); ++l) {
    Eigen::MatrixXd z =
        (dense_of(m.layers[l], m.pattern.n_blocks) * a).colwise() +
        m.layers[l].bias;
    if (l + 1 < m.num_layers())
      a = z.unaryExpr([&](double t) { return t > 0 ? t : m.leak * t; });
    else
      a = z;
  }
  return a;
}

double scalar_loss(const PawnnModel& m, const Eigen::MatrixXd& x,
                   const Eigen::MatrixXd& y) {
  Eigen::MatrixXd out = m.forward(x);
  double acc = 0;
  long cnt = 0;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    if (!m.output_present.empty() && !m.output_present[i]) continue;
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      double d = out(i, j) - y(i, j);
      acc += d * d;
      ++cnt;
    }
  }
  return acc / static_cast<double>(cnt);
}

}  // namespace

TEST_CASE("block pattern is self plus line neighbors") {
  Feeder f = load_feeder_file(test::data_path("ieee37.json"));
  BlockPattern p = BlockPattern::from_feeder(f);
  CHECK(p.n_blocks == 37);
  CHECK(p.allowed.size() == 37 + 2 * 36);  // diagonal + both line directions
  for (auto [i, j] : p.allowed) {
    if (i == j) continue;
    CHECK(f.line_index(f.buses()[i].id, f.buses()[j].id) >= 0);
  }
}

TEST_CASE("pattern generalizes the single-hop convolution structure") {
  // adjacency-plus-self from explicit edges: the graph-convolution support
  std::vector<std::pair<int, int>> edges{{0, 1}, {1, 2}, {2, 3}};
  BlockPattern p = BlockPattern::from_edges(4, edges);
  std::vector<std::pair<int, int>> want{{0, 0}, {0, 1}, {1, 0}, {1, 1},
                                        {1, 2}, {2, 1}, {2, 2}, {2, 3},
                                        {3, 2}, {3, 3}};
  CHECK(p.allowed == want);
}

TEST_CASE("masked forward equals the dense reference") {
  Feeder f = test::tiny_feeder();
  PawnnModel m = build_model(f, {5, 8, 6}, 99);
  // give the normalization nontrivial values
  CounterRng rng(4, 0);
  for (int i = 0; i < m.input_mean.size(); ++i) {
    m.input_mean[i] = rng.uniform(-0.5, 0.5);
    m.input_std[i] = rng.uniform(0.5, 2.0);
  }
  Eigen::MatrixXd x(m.input_dim(), 3);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1, 1);
  Eigen::MatrixXd got = m.forward(x);
  Eigen::MatrixXd want = dense_forward(m, x);
  CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("initialization is deterministic in the seed and respects bounds") {
  Feeder f = test::tiny_feeder();
  PawnnModel a = build_model(f, {4, 6, 6}, 7);
  PawnnModel b = build_model(f, {4, 6, 6}, 7);
  PawnnModel c = build_model(f, {4, 6, 6}, 8);
  CHECK(serialize_model(a) == serialize_model(b));
  CHECK(serialize_model(a) != serialize_model(c));
  for (const MaskedLayer& l : a.layers) {
    for (const auto& w : l.weight) CHECK(w.cwiseAbs().maxCoeff() < 1.5);
    CHECK(l.bias.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("gradient matches finite differences on a small model") {
  Feeder f = test::tiny_feeder();  // 3 buses, within the 5-bus budget
  PawnnModel m = build_model(f, {3, 4, 6}, 31);
  CounterRng rng(9, 0);
  Eigen::MatrixXd x(m.input_dim(), 4), y(m.output_dim(), 4);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1, 1);
  for (int i = 0; i < y.size(); ++i) y.data()[i] = rng.uniform(-1, 1);
  m.input_mean.setZero();
  m.input_std.setOnes();

  PawnnGradient g = gradient(m, x, y);
  CHECK(g.loss == doctest::Approx(scalar_loss(m, x, y)));

  const double h = 1e-6;
  for (int l = 0; l < m.num_layers(); ++l) {
    for (size_t b = 0; b < m.layers[l].blocks.size(); ++b)
      for (int r = 0; r < m.layers[l].rows_per_block; ++r)
        for (int ci = 0; ci < m.layers[l].cols_per_block; ++ci) {
          double save = m.layers[l].weight[b](r, ci);
          m.layers[l].weight[b](r, ci) = save + h;
          double lp = scalar_loss(m, x, y);
          m.layers[l].weight[b](r, ci) = save - h;
          double lm = scalar_loss(m, x, y);
          m.layers[l].weight[b](r, ci) = save;
          double fd = (lp - lm) / (2 * h);
          double scale = std::max(1.0, std::abs(fd));
          CHECK(std::abs(g.layers[l].weight[b](r, ci) - fd) / scale < 1e-5);
        }
    for (int r = 0; r < m.layers[l].bias.size(); ++r) {
      double save = m.layers[l].bias[r];
      m.layers[l].bias[r] = save + h;
      double lp = scalar_loss(m, x, y);
      m.layers[l].bias[r] = save - h;
      double lm = scalar_loss(m, x, y);
      m.layers[l].bias[r] = save;
      double fd = (lp - lm) / (2 * h);
      CHECK(std::abs(g.layers[l].bias[r] - fd) / std::max(1.0, std::abs(fd)) <
            1e-5);
    }
  }
}

TEST_CASE("optimizer matches a scalar reference bit for bit over 10 steps") {
  Feeder f = test::tiny_feeder();
  PawnnModel m = build_model(f, {2, 3, 6}, 5);
  m.input_mean.setZero();
  m.input_std.setOnes();
  CounterRng rng(17, 0);
  Eigen::MatrixXd x(m.input_dim(), 2), y(m.output_dim(), 2);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1, 1);
  for (int i = 0; i < y.size(); ++i) y.data()[i] = rng.uniform(-1, 1);

  // scalar reference: plain per-parameter first/second moment recursion
  struct Ref {
    double m = 0, v = 0;
  };
  AdamState st = AdamState::for_model(m);
  std::vector<std::vector<std::vector<Ref>>> refw(m.num_layers());
  std::vector<std::vector<Ref>> refb(m.num_layers());
  for (int l = 0; l < m.num_layers(); ++l) {
    refw[l].resize(m.layers[l].weight.size());
    for (size_t b = 0; b < m.layers[l].weight.size(); ++b)
      refw[l][b].resize(m.layers[l].weight[b].size());
    refb[l].resize(m.layers[l].bias.size());
  }
  PawnnModel ref = m;

  for (int step = 1; step <= 10; ++step) {
    PawnnGradient g = gradient(m, x, y);
    PawnnGradient gr = gradient(ref, x, y);
    adam_step(st, m, g);
    double b1t = 1.0 - std::pow(st.beta1, step);
    double b2t = 1.0 - std::pow(st.beta2, step);
    for (int l = 0; l < ref.num_layers(); ++l) {
      for (size_t b = 0; b < ref.layers[l].weight.size(); ++b)
        for (int i = 0; i < ref.layers[l].weight[b].size(); ++i) {
          Ref& r = refw[l][b][i];
          double gg = gr.layers[l].weight[b].data()[i];
          r.m = st.beta1 * r.m + (1 - st.beta1) * gg;
          r.v = st.beta2 * r.v + (1 - st.beta2) * (gg * gg);
          ref.layers[l].weight[b].data()[i] -=
              st.lr * (r.m / b1t) / (std::sqrt(r.v / b2t) + st.eps);
        }
      for (int i = 0; i < ref.layers[l].bias.size(); ++i) {
        Ref& r = refb[l][i];
        double gg = gr.layers[l].bias[i];
        r.m = st.beta1 * r.m + (1 - st.beta1) * gg;
        r.v = st.beta2 * r.v + (1 - st.beta2) * (gg * gg);
        ref.layers[l].bias[i] -=
            st.lr * (r.m / b1t) / (std::sqrt(r.v / b2t) + st.eps);
      }
    }
    for (int l = 0; l < m.num_layers(); ++l) {
      for (size_t b = 0; b < m.layers[l].weight.size(); ++b)
        CHECK(m.layers[l].weight[b] == ref.layers[l].weight[b]);
      CHECK(m.layers[l].bias == ref.layers[l].bias);
    }
  }
}

TEST_CASE("training preserves the structural mask and reduces the loss") {
  Feeder f = load_feeder_file(test::data_path("path4.json"));
  PawnnModel m = build_model(f, {4, 8, 6}, 3);
  CounterRng rng(23, 0);
  Eigen::MatrixXd x(m.input_dim(), 200), y(m.output_dim(), 200);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1, 1);
  // learnable target: a fixed sparse linear map of the input
  for (Eigen::Index c = 0; c < y.cols(); ++c)
    for (Eigen::Index r = 0; r < y.rows(); ++r)
      y(r, c) = 0.3 * x(std::min<Eigen::Index>(r, x.rows() - 1), c);

  TrainOptions opts;
  opts.epochs = 40;
  opts.batch_size = 16;
  opts.seed = 1;
  TrainHistory h = train(m, x, y, opts);
  CHECK(h.train_loss.back() < h.train_loss.front());
  CHECK(h.best_val_loss <= h.val_loss.front());

  // blocks outside the pattern stayed exactly zero: rebuild the pattern and
  // confirm every stored block is an allowed one
  BlockPattern p = BlockPattern::from_feeder(f);
  for (const MaskedLayer& l : m.layers)
    for (auto [i, j] : l.blocks)
      CHECK(std::find(p.allowed.begin(), p.allowed.end(), std::make_pair(i, j)) !=
            p.allowed.end());
}

TEST_CASE("training is deterministic given the seed") {
  Feeder f = load_feeder_file(test::data_path("path4.json"));
  CounterRng rng(29, 0);
  Eigen::MatrixXd x(4 * 4, 64), y(4 * 6, 64);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1, 1);
  for (int i = 0; i < y.size(); ++i) y.data()[i] = rng.uniform(-0.1, 0.1);
  TrainOptions opts;
  opts.epochs = 5;
  opts.batch_size = 8;
  opts.seed = 2;

  PawnnModel a = build_model(f, {4, 5, 6}, 1);
  PawnnModel b = build_model(f, {4, 5, 6}, 1);
  train(a, x, y, opts);
  train(b, x, y, opts);
  CHECK(serialize_model(a) == serialize_model(b));
}

TEST_CASE("receptive field on a 4-bus path") {
  Feeder f = load_feeder_file(test::data_path("path4.json"));
  auto rf = receptive_field(f, 2);
  // bus 4 (index 3) sees buses within 2 hops: 2, 3, 4
  CHECK(rf[3] == std::vector<int>{2, 3, 4});
  auto rf1 = receptive_field(f, 1);
  CHECK(rf1[0] == std::vector<int>{1, 2});
}

TEST_CASE("k-layer outputs ignore inputs beyond k hops") {
  Feeder f = load_feeder_file(test::data_path("ieee37.json"));
  const int k = 2;
  PawnnModel m = build_model(f, {3, 5, 6}, 77);
  CounterRng rng(31, 0);
  Eigen::MatrixXd x(m.input_dim(), 1);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1, 1);
  Eigen::MatrixXd base = m.forward(x);

  for (int j = 0; j < 37; j += 5) {
    Eigen::MatrixXd xp = x;
    for (int t = 0; t < 3; ++t) xp(j * 3 + t, 0) += 0.7;
    Eigen::MatrixXd out = m.forward(xp);
    for (int i = 0; i < 37; ++i) {
      int hops = f.hop_distance(f.buses()[i].id, f.buses()[j].id);
      bool identical = true;
      for (int t = 0; t < 6; ++t)
        if (out(i * 6 + t, 0) != base(i * 6 + t, 0)) identical = false;
      if (hops > k) CHECK(identical);
    }
  }
}

TEST_CASE("model serialization round-trips bit-exactly") {
  Feeder f = test::tiny_feeder();
  PawnnModel m = build_model(f, {4, 7, 6}, 13);
  m.feeder_hash = 0xabcdef;
  std::string s = serialize_model(m);
  PawnnModel r = deserialize_model(s);
  CHECK(serialize_model(r) == s);
  CHECK(r.feeder_hash == m.feeder_hash);
  CHECK(r.widths == m.widths);
  for (int l = 0; l < m.num_layers(); ++l) {
    for (size_t b = 0; b < m.layers[l].weight.size(); ++b)
      CHECK(r.layers[l].weight[b] == m.layers[l].weight[b]);
    CHECK(r.layers[l].bias == m.layers[l].bias);
  }
  CHECK_THROWS_AS(deserialize_model("{}"), DataError);
}

TEST_CASE("input assignment puts line quantities on the non-PMU endpoint") {
  Feeder f = load_feeder_file(test::data_path("path4.json"));
  MeasurementSet set;
  for (const MeasSpec& m : pmu_voltage_specs(f, 2, 1e-6))
    set.items.push_back(build_measurement(f, m));
  for (const MeasSpec& m : current_mag_specs(f, 2, 3, 1e-3))
    set.items.push_back(build_measurement(f, m));
  set.sort();
  InputLayout layout = assign_inputs(f, set, {2});
  REQUIRE(layout.slot_of_meas.size() == set.items.size());
  for (size_t i = 0; i < set.items.size(); ++i) {
    const MeasSpec& sp = set.items[i].spec;
    int bus_block = layout.slot_of_meas[i] / layout.d0;
    if (sp.kind == MeasKind::IMag2)
      CHECK(bus_block == f.bus_index(3));  // 3 carries no PMU
    else
      CHECK(bus_block == f.bus_index(2));
  }
  // assembled vector scatters rows to their slots
  Eigen::VectorXd z(set.items.size());
  for (int i = 0; i < z.size(); ++i) z[i] = i + 1;
  Eigen::VectorXd x = assemble_input(layout, f.num_buses(), z);
  REQUIRE(x.size() == layout.d0 * f.num_buses());
  for (size_t i = 0; i < set.items.size(); ++i)
    CHECK(x[layout.slot_of_meas[i]] == z[i]);
}

TEST_CASE("state/target mapping round-trips") {
  Feeder f = load_feeder_file(test::data_path("ieee37.json"));
  StateVector v = test::random_state(f, 55);
  Eigen::VectorXd y = state_to_target(f, v);
  REQUIRE(y.size() == 37 * 6);
  StateVector back = target_to_state(f, y);
  CHECK((back.v - v.v).cwiseAbs().maxCoeff() == 0.0);
}
