#include <cmath>

#include "doctest.h"
#include "test_util.hpp"
#include "xltrack/errors.hpp"
#include "xltrack/layers.hpp"

using namespace xltrack::nn;
using xltrack::DomainError;
using xltrack::Rng;
using xltrack::ShapeError;

TEST_CASE("layers: dense computes W x + b for single and batched rows") {
  Variable W(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}), true);
  Variable b(Tensor({2}, {0.5, -0.5}), true);
  Variable x(Tensor({3}, {1, 2, 3}), true);

  Variable y = dense(x, W, b);
  REQUIRE(y.value().shape == std::vector<int>{2});
  CHECK(y.value()[0] == doctest::Approx(14.5).epsilon(1e-15));
  CHECK(y.value()[1] == doctest::Approx(31.5).epsilon(1e-15));

  Variable xb(Tensor({2, 3}, {1, 2, 3, 0, 0, 1}), false);
  Variable yb = dense(xb, W, b);
  REQUIRE(yb.value().shape == std::vector<int>{2, 2});
  CHECK(yb.value()[0] == doctest::Approx(14.5).epsilon(1e-15));
  CHECK(yb.value()[2] == doctest::Approx(3.5).epsilon(1e-15));   // row 1: [3+0.5, 6-0.5]
  CHECK(yb.value()[3] == doctest::Approx(5.5).epsilon(1e-15));

  CHECK_THROWS_AS(dense(Variable(Tensor({4}, {1, 2, 3, 4})), W, b), ShapeError);
}

TEST_CASE("layers: linear is dense without the bias") {
  Variable W(Tensor({2, 2}, {1, 2, 3, 4}), false);
  Variable x(Tensor({2}, {1, 1}), false);
  Variable y = linear(x, W);
  CHECK(y.value()[0] == 3.0);
  CHECK(y.value()[1] == 7.0);
}

TEST_CASE("layers: conv2d cross-correlation oracle") {
  Variable x(Tensor({1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9}), true);
  Variable W(Tensor({1, 1, 2, 2}, {1, 0, 0, 1}), true);
  Variable b(Tensor({1}, {1.0}), true);

  Variable y = conv2d(x, W, b, 1, 0);
  REQUIRE(y.value().shape == std::vector<int>{1, 2, 2});
  CHECK(y.value()[0] == 7.0);   // 1 + 5 + bias
  CHECK(y.value()[1] == 9.0);   // 2 + 6 + bias
  CHECK(y.value()[2] == 13.0);  // 4 + 8 + bias
  CHECK(y.value()[3] == 15.0);  // 5 + 9 + bias

  Variable yp = conv2d(x, W, b, 1, 1);
  REQUIRE(yp.value().shape == std::vector<int>{1, 4, 4});
  // Top-left window covers only x[0,0] against W[1,1].
  CHECK(yp.value()[0] == 2.0);

  Variable ys = conv2d(x, W, b, 2, 0);
  REQUIRE(ys.value().shape == std::vector<int>{1, 1, 1});
  CHECK(ys.value()[0] == 7.0);

  // Batched input gives per-sample results.
  Tensor xb({2, 1, 3, 3});
  for (int i = 0; i < 9; ++i) {
    xb[i] = static_cast<double>(i + 1);
    xb[9 + i] = 2.0 * (i + 1);
  }
  Variable yb = conv2d(Variable(xb), W, b, 1, 0);
  REQUIRE(yb.value().shape == std::vector<int>{2, 1, 2, 2});
  CHECK(yb.value()[0] == 7.0);
  CHECK(yb.value()[4] == 13.0);  // 2*(1+5) + 1
}

TEST_CASE("layers: pooling oracles") {
  Variable x(Tensor({1, 4, 4}, {1,  2,  3,  4,
                                5,  6,  7,  8,
                                9, 10, 11, 12,
                               13, 14, 15, 16}), true);
  Variable mx = pool2d(x, PoolKind::Max, 2, 2);
  REQUIRE(mx.value().shape == std::vector<int>{1, 2, 2});
  CHECK(mx.value()[0] == 6.0);
  CHECK(mx.value()[1] == 8.0);
  CHECK(mx.value()[2] == 14.0);
  CHECK(mx.value()[3] == 16.0);

  Variable av = pool2d(x, PoolKind::Avg, 2, 2);
  CHECK(av.value()[0] == doctest::Approx(3.5).epsilon(1e-15));
  CHECK(av.value()[3] == doctest::Approx(13.5).epsilon(1e-15));

  // Max pool routes the gradient to the argmax only.
  backward(testutil::weighted_sum(pool2d(x, PoolKind::Max, 2, 2), 3));
  CHECK(x.grad()[0] == 0.0);
  double nonzero = 0;
  for (int i = 0; i < 16; ++i) nonzero += (x.grad()[i] != 0.0) ? 1 : 0;
  CHECK(nonzero == 4);
}

TEST_CASE("layers: nearest upsample replicates blocks") {
  Variable x(Tensor({1, 2, 2}, {1, 2, 3, 4}), false);
  Variable y = upsample(x, 4, 4, UpsampleMode::Nearest);
  REQUIRE(y.value().shape == std::vector<int>{1, 4, 4});
  const double expect[16] = {1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4};
  for (int i = 0; i < 16; ++i) CHECK(y.value()[i] == expect[i]);
}

TEST_CASE("layers: bilinear upsample matches the half-pixel convention") {
  // A linear ramp along the columns: sampled positions (i + 0.5)/2 - 0.5.
  Variable x(Tensor({1, 2, 2}, {0, 1, 0, 1}), false);
  Variable y = upsample(x, 2, 4, UpsampleMode::Bilinear);
  REQUIRE(y.value().shape == std::vector<int>{1, 2, 4});
  const double expect[4] = {0.0, 0.25, 0.75, 1.0};
  for (int j = 0; j < 4; ++j) CHECK(y.value()[j] == doctest::Approx(expect[j]).epsilon(1e-12));

  // Constant input stays constant under interpolation.
  Variable c(Tensor::full({1, 2, 2}, 3.25), false);
  Variable yc = upsample(c, 5, 7, UpsampleMode::Bilinear);
  for (std::int64_t i = 0; i < yc.value().size(); ++i) {
    CHECK(yc.value()[i] == doctest::Approx(3.25).epsilon(1e-12));
  }

  // Same-size call is the identity.
  Variable same = upsample(x, 2, 2, UpsampleMode::Bilinear);
  for (int i = 0; i < 4; ++i) CHECK(same.value()[i] == x.value()[i]);
}

TEST_CASE("layers: dropout is identity in eval and rescales survivors in train") {
  Tensor base = Tensor::full({1000}, 1.0);
  Rng r1(5);
  Variable ev = dropout(Variable(base, true), 0.5, Mode::Eval, r1);
  for (int i = 0; i < 1000; ++i) CHECK(ev.value()[i] == 1.0);

  Rng r2(5);
  Variable off = dropout(Variable(base, true), 0.0, Mode::Train, r2);
  for (int i = 0; i < 1000; ++i) CHECK(off.value()[i] == 1.0);

  Rng r3(5);
  Variable x(base, true);
  Variable tr = dropout(x, 0.5, Mode::Train, r3);
  int kept = 0;
  for (int i = 0; i < 1000; ++i) {
    const double v = tr.value()[i];
    CHECK((v == 0.0 || v == 2.0));
    kept += (v != 0.0);
  }
  CHECK(kept > 400);
  CHECK(kept < 600);

  // Gradient uses the same mask and scale.
  backward(sum(tr));
  for (int i = 0; i < 1000; ++i) {
    CHECK(x.grad()[i] == (tr.value()[i] == 0.0 ? 0.0 : 2.0));
  }

  Rng r4(5);
  CHECK_THROWS_AS(dropout(Variable(base), 1.0, Mode::Train, r4), DomainError);
}

TEST_CASE("layers: batch norm normalizes in train and uses running stats in eval") {
  // (B=4, C=2, H=1, W=1); channel 0 holds {1,2,3,4}, channel 1 holds {10,20,30,40}.
  Tensor xt({4, 2, 1, 1}, {1, 10, 2, 20, 3, 30, 4, 40});
  Variable gamma(Tensor::full({2}, 1.0), false);
  Variable beta(Tensor::zeros({2}), false);
  BatchNormStats stats;

  Variable x(xt, false);
  Variable y = batch_norm(x, gamma, beta, stats, Mode::Train);

  // Per-channel output mean 0 and biased variance ~1 (up to epsilon).
  for (int c = 0; c < 2; ++c) {
    double s = 0.0, s2 = 0.0;
    for (int bidx = 0; bidx < 4; ++bidx) {
      const double v = y.value()[bidx * 2 + c];
      s += v;
      s2 += v * v;
    }
    CHECK(std::abs(s / 4.0) < 1e-9);
    CHECK(s2 / 4.0 == doctest::Approx(1.0).epsilon(1e-4));
  }

  // Running stats blend with momentum 0.1; variance uses the unbiased form.
  const double mu0 = 2.5, var0_unbiased = (2.25 + 0.25 + 0.25 + 2.25) / 3.0;
  CHECK(stats.running_mean[0] == doctest::Approx(0.9 * 0.0 + 0.1 * mu0).epsilon(1e-12));
  CHECK(stats.running_var[0] ==
        doctest::Approx(0.9 * 1.0 + 0.1 * var0_unbiased).epsilon(1e-12));

  // Eval mode applies exactly the stored running stats.
  Variable ye = batch_norm(x, gamma, beta, stats, Mode::Eval);
  const double expect0 = (1.0 - stats.running_mean[0]) /
                         std::sqrt(stats.running_var[0] + 1e-5);
  CHECK(ye.value()[0] == doctest::Approx(expect0).epsilon(1e-12));
}

TEST_CASE("layers: unbatched batch norm treats axis 0 as channels") {
  Tensor xt({2, 1, 2}, {1, 3, 10, 30});
  Variable gamma(Tensor::full({2}, 2.0), false);
  Variable beta(Tensor::from_vector({0.0, 1.0}), false);
  BatchNormStats stats;
  Variable y = batch_norm(Variable(xt), gamma, beta, stats, Mode::Train);
  REQUIRE(y.value().shape == std::vector<int>{2, 1, 2});
  // Channel 0: mean 2, biased var 1 -> normalized {-1, 1} * gamma.
  CHECK(y.value()[0] == doctest::Approx(-2.0).epsilon(1e-3));
  CHECK(y.value()[1] == doctest::Approx(2.0).epsilon(1e-3));
  // Channel 1 adds beta = 1.
  CHECK(y.value()[2] == doctest::Approx(-1.0).epsilon(1e-3));
}

TEST_CASE("layers: parameter-owning wrappers register named tensors") {
  Rng rng(3);
  DenseLayer d("head", 4, 2, rng);
  CHECK(d.weight.name() == "head.weight");
  CHECK(d.bias.name() == "head.bias");
  CHECK(d.weight.value().shape == std::vector<int>{2, 4});

  Conv2dLayer c("conv", 3, 8, 3, 1, 1, rng);
  CHECK(c.weight.name() == "conv.weight");
  CHECK(c.weight.value().shape == std::vector<int>{8, 3, 3, 3});
  CHECK(c.bias.value().shape == std::vector<int>{8});

  BatchNormLayer bn("bn", 8);
  CHECK(bn.gamma.name() == "bn.gamma");
  CHECK(bn.gamma.value()[0] == 1.0);
  CHECK(bn.beta.value()[0] == 0.0);
}
