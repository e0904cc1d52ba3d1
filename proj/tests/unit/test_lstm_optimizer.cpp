#include <cmath>

#include "doctest.h"
#include "test_util.hpp"
#include "xltrack/errors.hpp"
#include "xltrack/lstm.hpp"
#include "xltrack/optimizer.hpp"

using namespace xltrack::nn;
using xltrack::Rng;

namespace {

double sg(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Scalar (input 1, hidden 1) cell with hand-set weights.
LstmCell scalar_cell() {
  Rng rng(1);
  LstmCell cell("c", 1, 1, rng);
  cell.W_f.value()[0] = 0.1;  cell.U_f.value()[0] = 0.2;  cell.b_f.value()[0] = 0.3;
  cell.W_i.value()[0] = 0.4;  cell.U_i.value()[0] = 0.5;  cell.b_i.value()[0] = 0.6;
  cell.W_c.value()[0] = 0.7;  cell.U_c.value()[0] = 0.8;  cell.b_c.value()[0] = 0.9;
  cell.W_o.value()[0] = 1.0;  cell.U_o.value()[0] = 1.1;  cell.b_o.value()[0] = 1.2;
  return cell;
}

// The same recurrence written in plain scalar arithmetic.
void scalar_step(const LstmCell& cell, double x, double& h, double& c) {
  const double f = sg(cell.W_f.value()[0] * x + cell.U_f.value()[0] * h + cell.b_f.value()[0]);
  const double i = sg(cell.W_i.value()[0] * x + cell.U_i.value()[0] * h + cell.b_i.value()[0]);
  const double g = std::tanh(cell.W_c.value()[0] * x + cell.U_c.value()[0] * h + cell.b_c.value()[0]);
  const double o = sg(cell.W_o.value()[0] * x + cell.U_o.value()[0] * h + cell.b_o.value()[0]);
  c = f * c + i * g;
  h = o * std::tanh(c);
}

}  // namespace

TEST_CASE("lstm: cell wiring and forget-gate bias initialization") {
  Rng rng(9);
  LstmCell cell("enc", 3, 5, rng);
  CHECK(cell.input_size == 3);
  CHECK(cell.hidden_size == 5);
  CHECK(cell.W_f.value().shape == std::vector<int>{5, 3});
  CHECK(cell.U_o.value().shape == std::vector<int>{5, 5});
  CHECK(cell.b_c.value().shape == std::vector<int>{5});
  for (int i = 0; i < 5; ++i) CHECK(cell.b_f.value()[i] == 1.0);
  CHECK(cell.parameters().size() == 12);
  CHECK(cell.W_f.name() == "enc.W_f");
}

TEST_CASE("lstm: one step matches the scalar recurrence") {
  LstmCell cell = scalar_cell();
  LstmState prev{Variable(Tensor::from_vector({-0.3})),
                 Variable(Tensor::from_vector({0.25}))};
  Variable x(Tensor::from_vector({0.5}));

  auto [h, state] = lstm_step(x, prev, cell);
  double h_ref = -0.3, c_ref = 0.25;
  scalar_step(cell, 0.5, h_ref, c_ref);
  CHECK(h.value()[0] == doctest::Approx(h_ref).epsilon(1e-12));
  CHECK(state.cell.value()[0] == doctest::Approx(c_ref).epsilon(1e-12));
  CHECK(state.hidden.value()[0] == h.value()[0]);
}

TEST_CASE("lstm: zero state shapes") {
  LstmState s = lstm_zero_state(4);
  CHECK(s.hidden.value().shape == std::vector<int>{4});
  CHECK(s.cell.value()[3] == 0.0);
  LstmState sb = lstm_zero_state(4, 3);
  CHECK(sb.hidden.value().shape == std::vector<int>{3, 4});
}

TEST_CASE("lstm: unroll equals repeated steps; reverse keeps input order") {
  LstmCell cell = scalar_cell();
  const std::vector<double> xs{0.5, -1.0, 0.25, 2.0};
  std::vector<Variable> seq;
  for (double v : xs) seq.emplace_back(Tensor::from_vector({v}));

  UnrollResult fwd = lstm_unroll(seq, cell);
  REQUIRE(fwd.hidden.size() == 4);
  double h = 0.0, c = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    scalar_step(cell, xs[k], h, c);
    CHECK(fwd.hidden[k].value()[0] == doctest::Approx(h).epsilon(1e-12));
  }
  CHECK(fwd.final_state.hidden.value()[0] == doctest::Approx(h).epsilon(1e-12));
  CHECK(fwd.final_state.cell.value()[0] == doctest::Approx(c).epsilon(1e-12));

  UnrollResult bwd = lstm_unroll(seq, cell, true);
  h = 0.0;
  c = 0.0;
  std::vector<double> rev_h(4);
  for (int k = 3; k >= 0; --k) {
    scalar_step(cell, xs[k], h, c);
    rev_h[k] = h;  // outputs reported in input order
  }
  for (int k = 0; k < 4; ++k) {
    CHECK(bwd.hidden[k].value()[0] == doctest::Approx(rev_h[k]).epsilon(1e-12));
  }
  CHECK(bwd.final_state.hidden.value()[0] == doctest::Approx(rev_h[0]).epsilon(1e-12));
}

TEST_CASE("lstm: bidirectional outputs concatenate both directions") {
  Rng rng(4);
  LstmCell f("f", 2, 3, rng), b("b", 2, 3, rng);
  std::vector<Variable> seq;
  for (int k = 0; k < 3; ++k) {
    seq.emplace_back(Tensor({1, 2}, {0.1 * k, -0.2 * k}));
  }
  BiUnrollResult bi = bilstm_unroll(seq, f, b);
  REQUIRE(bi.outputs.size() == 3);
  CHECK(bi.outputs[0].value().shape == std::vector<int>{1, 6});

  UnrollResult ff = lstm_unroll(seq, f, false);
  UnrollResult bb = lstm_unroll(seq, b, true);
  for (int k = 0; k < 3; ++k) {
    for (int j = 0; j < 3; ++j) {
      CHECK(bi.outputs[k].value()[j] == ff.hidden[k].value()[j]);
      CHECK(bi.outputs[k].value()[3 + j] == bb.hidden[k].value()[j]);
    }
  }
  CHECK(bi.fwd_final.hidden.value()[0] == ff.final_state.hidden.value()[0]);
  CHECK(bi.bwd_final.hidden.value()[0] == bb.final_state.hidden.value()[0]);

  const auto forward_only = bilstm_forward(seq, f, b);
  CHECK(forward_only.size() == 3);
  std::vector<Variable> empty;
  CHECK_THROWS_AS(bilstm_unroll(empty, f, b), xltrack::ShapeError);
}

TEST_CASE("optimizer: first Adam step matches the closed form") {
  Parameter w("w", Tensor::from_vector({1.0}));
  Adam opt({&w}, AdamConfig{});

  w.grad()[0] = 2.0;
  opt.step();
  // Bias correction makes m_hat = g and v_hat = g^2 at t = 1, so the update is
  // lr * g / (|g| + eps).
  const double expect = 1.0 - 1e-3 * (2.0 / (2.0 + 1e-8));
  CHECK(w.value()[0] == doctest::Approx(expect).epsilon(1e-15));
  CHECK(opt.steps_taken() == 1);

  // A constant gradient keeps the normalized update at lr * sign(g).
  opt.zero_grad();
  w.grad()[0] = 2.0;
  opt.step();
  CHECK(w.value()[0] == doctest::Approx(expect - 1e-3 * (2.0 / (2.0 + 1e-8))).epsilon(1e-12));
}

TEST_CASE("optimizer: zero_grad clears every slot") {
  Parameter a("a", Tensor::from_vector({1.0, 2.0}));
  Parameter b("b", Tensor::from_vector({3.0}));
  Adam opt({&a, &b});
  a.grad()[0] = 5.0;
  b.grad()[0] = -1.0;
  opt.zero_grad();
  CHECK(a.grad()[0] == 0.0);
  CHECK(b.grad()[0] == 0.0);
}

TEST_CASE("optimizer: adam_update is the reusable single-tensor kernel") {
  Tensor v = Tensor::from_vector({1.0});
  Tensor g = Tensor::from_vector({2.0});
  AdamSlot slot;
  adam_update(v, g, slot, AdamConfig{}, 1);
  CHECK(v[0] == doctest::Approx(1.0 - 1e-3 * (2.0 / (2.0 + 1e-8))).epsilon(1e-15));
}

TEST_CASE("gradcheck: lstm step survives a finite-difference audit") {
  Rng rng(12);
  LstmCell cell("gc", 2, 3, rng);
  Parameter x("x", Tensor({2}, {0.4, -0.7}));
  Parameter h("h", Tensor({3}, {0.1, 0.2, -0.3}));
  Parameter c("c", Tensor({3}, {-0.5, 0.25, 0.0}));

  auto fn = [&]() {
    LstmState prev;
    prev.hidden = h.variable();
    prev.cell = c.variable();
    auto [out, state] = lstm_step(x.variable(), prev, cell);
    return add(testutil::weighted_sum(out, 21), testutil::weighted_sum(state.cell, 22));
  };
  std::vector<Parameter*> leaves{&x, &h, &c};
  for (auto* p : cell.parameters()) leaves.push_back(p);
  CHECK(testutil::param_grad_check(fn, leaves) < 1e-6);
}
