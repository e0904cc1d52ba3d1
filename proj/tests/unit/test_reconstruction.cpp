#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "xltrack/errors.hpp"
#include "xltrack/reconstruction.hpp"

using namespace xltrack;
using nn::Mode;
using nn::Tensor;
using nn::Variable;

namespace {

ReconConfig tiny_config() {
  ReconConfig cfg;
  cfg.m1 = 4;
  cfg.m2 = 4;
  cfg.n1 = 4;
  cfg.n2 = 4;
  cfg.upsample_h = 8;
  cfg.upsample_w = 8;
  cfg.n_dense_modules = 1;
  cfg.blocks_per_module = 1;
  cfg.growth_channels = 4;
  cfg.initial_channels = 3;
  return cfg;
}

std::vector<cxd> ramp_signal(int n, double scale) {
  std::vector<cxd> y(n);
  for (int i = 0; i < n; ++i) y[i] = cxd{scale * i, -scale * (i + 1)};
  return y;
}

// Records with smooth position-dependent signals so the tiny net has
// something learnable.
std::vector<SlotRecord> make_records(int count, const ReconConfig& cfg,
                                     std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SlotRecord> recs(count);
  for (int i = 0; i < count; ++i) {
    SlotRecord& r = recs[i];
    r.traj_id = i;
    r.step = 0;
    r.snr_db = 20.0;
    r.position = {rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0), 1.0};
    r.y.resize(cfg.input_length());
    r.y_r.resize(cfg.n1 * cfg.n2);
    for (auto& v : r.y) v = rng.complex_normal(1.0);
    const double a = r.position.x / 10.0, b = r.position.y / 10.0;
    for (int k = 0; k < static_cast<int>(r.y_r.size()); ++k) {
      r.y_r[k] = cxd{a + 0.1 * k * b, b - 0.05 * k * a};
    }
  }
  return recs;
}

std::vector<const SlotRecord*> pointers(const std::vector<SlotRecord>& recs,
                                        std::size_t lo, std::size_t hi) {
  std::vector<const SlotRecord*> out;
  for (std::size_t i = lo; i < hi; ++i) out.push_back(&recs[i]);
  return out;
}

double at3(const Tensor& t, int c, int h, int w) {
  return t.data[(static_cast<std::int64_t>(c) * t.dim(1) + h) * t.dim(2) + w];
}

}  // namespace

TEST_CASE("recon: config lengths and validation") {
  const ReconConfig cfg = tiny_config();
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.input_length() == 16);
  CHECK(cfg.output_length() == 32);

  ReconConfig bad = cfg;
  bad.n_dense_modules = 0;
  bad.growth_channels = -1;
  try {
    bad.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.issues().size() == 2);
  }

  // From 8x8 the spatial trace is 8 -> 4 -> 2 -> 1, so a fourth transition
  // would pool a 1x1 map; three modules are still legal.
  ReconConfig deep = cfg;
  deep.n_dense_modules = 3;
  CHECK_NOTHROW(deep.validate());
  deep.n_dense_modules = 4;
  CHECK_THROWS_AS(deep.validate(), ConfigError);
}

TEST_CASE("recon: bs preprocessing packs real and imaginary planes") {
  const auto y = ramp_signal(4, 1.0);
  const Tensor t = preprocess_bs(y, 2, 2, 2, 2, nn::UpsampleMode::Nearest);
  REQUIRE(t.shape == std::vector<int>{2, 2, 2});
  // Same-size nearest upsampling is the identity, so channel 0 holds the
  // real parts in row-major order and channel 1 the imaginary parts.
  CHECK(at3(t, 0, 0, 0) == 0.0);
  CHECK(at3(t, 0, 0, 1) == 1.0);
  CHECK(at3(t, 0, 1, 0) == 2.0);
  CHECK(at3(t, 0, 1, 1) == 3.0);
  CHECK(at3(t, 1, 0, 0) == -1.0);
  CHECK(at3(t, 1, 1, 1) == -4.0);

  const Tensor up = preprocess_bs(y, 2, 2, 4, 4, nn::UpsampleMode::Nearest);
  REQUIRE(up.shape == std::vector<int>{2, 4, 4});
  CHECK(at3(up, 0, 0, 0) == 0.0);
  CHECK(at3(up, 0, 0, 3) == 1.0);
  CHECK(at3(up, 0, 3, 3) == 3.0);

  CHECK_THROWS_AS(preprocess_bs(y, 3, 2, 4, 4), ShapeError);
}

TEST_CASE("recon: model shapes follow the dense-module arithmetic") {
  const ReconConfig cfg = tiny_config();
  Rng rng(11);
  ReconModel model(cfg, rng);
  // 8x8 input, one module (3 -> 7 channels), transition to floor(7/2)=3
  // channels at 4x4 -> 48 flattened features.
  CHECK(model.head_input_length() == 48);
  CHECK(model.modules.size() == 1);
  CHECK(model.modules[0].size() == 1);
  CHECK(model.transitions.size() == 1);
  CHECK(model.head.weight.value().dim(0) == cfg.output_length());

  auto params = model.parameters();
  CHECK(params.size() >= 8);  // tri + bn + block conv + transition + head
  for (auto* p : params) CHECK(p != nullptr);

  const Tensor in = preprocess_bs(ramp_signal(16, 0.1), 4, 4, 8, 8);
  Variable out = recon_net_forward(model, Variable(in), Mode::Eval);
  CHECK(out.value().shape == std::vector<int>{cfg.output_length()});

  Tensor batch({3, 2, 8, 8});
  for (int b = 0; b < 3; ++b) {
    const Tensor one = preprocess_bs(ramp_signal(16, 0.1 * (b + 1)), 4, 4, 8, 8);
    for (std::int64_t i = 0; i < one.size(); ++i) {
      batch.data[b * one.size() + i] = one.data[i];
    }
  }
  Variable bout = recon_net_forward(model, Variable(batch), Mode::Eval);
  CHECK(bout.value().shape == std::vector<int>{3, cfg.output_length()});
}

TEST_CASE("recon: batched inference equals per-record inference") {
  const ReconConfig cfg = tiny_config();
  Rng rng(5);
  ReconModel model(cfg, rng);
  const auto recs = make_records(5, cfg, 21);
  const auto ptrs = pointers(recs, 0, recs.size());

  const auto batched = recon_forward_batch(model, ptrs, 2);
  REQUIRE(batched.size() == 5);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const ComplexSignal single = recon_forward(recs[i].y, model);
    CHECK(single.role == SignalRole::ReconYr);
    REQUIRE(single.samples.size() == static_cast<std::size_t>(cfg.n1 * cfg.n2));
    REQUIRE(batched[i].size() == single.samples.size());
    // Batched and per-record paths accumulate in different orders, so they
    // agree to rounding, not bit for bit.
    CHECK(testutil::max_cdiff(batched[i], single.samples) < 1e-12);
  }

  // Each path is bitwise deterministic across calls.
  const ComplexSignal again = recon_forward(recs[0].y, model);
  const ComplexSignal first = recon_forward(recs[0].y, model);
  CHECK(testutil::max_cdiff(again.samples, first.samples) == 0.0);
  const auto batched2 = recon_forward_batch(model, ptrs, 2);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(testutil::max_cdiff(batched2[i], batched[i]) == 0.0);
  }
}

TEST_CASE("recon: training shrinks the loss and records a curve") {
  const ReconConfig cfg = tiny_config();
  Rng rng(17);
  ReconModel model(cfg, rng);
  const auto recs = make_records(24, cfg, 33);
  const auto train = pointers(recs, 0, 18);
  const auto val = pointers(recs, 18, 24);

  ReconHyper hyper;
  hyper.epochs = 6;
  hyper.batch_size = 6;
  hyper.learning_rate = 3e-3;
  hyper.seed = 2;
  const LossCurve curve = train_recon(model, train, val, hyper);
  REQUIRE(curve.train.size() == 7);  // pre-training entry + one per epoch
  REQUIRE(curve.val.size() == 7);
  for (double v : curve.train) CHECK(std::isfinite(v));
  for (double v : curve.val) CHECK(std::isfinite(v));
  CHECK(curve.train.back() < curve.train.front());

  // Target statistics were populated from the training set.
  CHECK(model.target_mean.size() == cfg.output_length());
  CHECK(model.target_std.size() == cfg.output_length());
  for (std::int64_t i = 0; i < model.target_std.size(); ++i) {
    CHECK(model.target_std.data[i] > 0.0);
  }

  CHECK_THROWS_AS(train_recon(model, {}, val, hyper), ConfigError);
  CHECK_THROWS_AS(train_recon(model, train, {}, hyper), ConfigError);
}

TEST_CASE("recon: checkpoint round-trip preserves inference") {
  const ReconConfig cfg = tiny_config();
  Rng rng(29);
  ReconModel model(cfg, rng);
  const auto recs = make_records(6, cfg, 41);
  const auto train = pointers(recs, 0, 4);
  const auto val = pointers(recs, 4, 6);
  ReconHyper hyper;
  hyper.epochs = 2;
  hyper.batch_size = 2;
  train_recon(model, train, val, hyper);

  testutil::TempDir tmp;
  const std::string path = tmp.str() + "/recon.ckpt";
  save_recon(model, path);
  ReconModel loaded = load_recon(path);
  CHECK(loaded.cfg.upsample_h == cfg.upsample_h);
  CHECK(loaded.cfg.n_dense_modules == cfg.n_dense_modules);

  const ComplexSignal a = recon_forward(recs[5].y, model);
  const ComplexSignal b = recon_forward(recs[5].y, loaded);
  CHECK(testutil::max_cdiff(a.samples, b.samples) == 0.0);

  CHECK_THROWS_AS(load_recon(tmp.str() + "/nope.ckpt"), IoError);
}
