#include "xltrack/lstm.hpp"

#include <cmath>

#include "xltrack/errors.hpp"

namespace xltrack::nn {

namespace {
Tensor uniform_tensor(std::vector<int> shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.data) v = rng.uniform(-bound, bound);
  return t;
}
}  // namespace

LstmCell::LstmCell(const std::string& name, int input_size_, int hidden_size_,
                   Rng& rng) {
  input_size = input_size_;
  hidden_size = hidden_size_;
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  auto W = [&](const char* gate) {
    return Parameter(name + ".W_" + gate,
                     uniform_tensor({hidden_size, input_size}, bound, rng));
  };
  auto U = [&](const char* gate) {
    return Parameter(name + ".U_" + gate,
                     uniform_tensor({hidden_size, hidden_size}, bound, rng));
  };
  auto b = [&](const char* gate) {
    return Parameter(name + ".b_" + gate,
                     uniform_tensor({hidden_size}, bound, rng));
  };
  W_f = W("f"); U_f = U("f"); b_f = b("f");
  W_i = W("i"); U_i = U("i"); b_i = b("i");
  W_c = W("c"); U_c = U("c"); b_c = b("c");
  W_o = W("o"); U_o = U("o"); b_o = b("o");
  b_f.value().fill(1.0);
}

std::vector<Parameter*> LstmCell::parameters() {
  return {&W_f, &U_f, &b_f, &W_i, &U_i, &b_i, &W_c, &U_c, &b_c, &W_o, &U_o, &b_o};
}

LstmState lstm_zero_state(int hidden_size, int batch) {
  const std::vector<int> shape =
      (batch > 0) ? std::vector<int>{batch, hidden_size} : std::vector<int>{hidden_size};
  return {Variable(Tensor::zeros(shape)), Variable(Tensor::zeros(shape))};
}

std::pair<Variable, LstmState> lstm_step(const Variable& x, const LstmState& prev,
                                         LstmCell& cell) {
  const Tensor& xv = x.value();
  const int x_feat = (xv.ndim() == 2) ? xv.dim(1) : xv.dim(0);
  if (xv.ndim() > 2 || x_feat != cell.input_size) {
    throw ShapeError("lstm_step: input " + shape_str(xv.shape) +
                     " incompatible with cell input size " +
                     std::to_string(cell.input_size));
  }
  const Tensor& hv = prev.hidden.value();
  const int h_feat = (hv.ndim() == 2) ? hv.dim(1) : hv.dim(0);
  if (h_feat != cell.hidden_size || hv.ndim() != xv.ndim() ||
      !hv.same_shape(prev.cell.value())) {
    throw ShapeError("lstm_step: state " + shape_str(hv.shape) +
                     " incompatible with input " + shape_str(xv.shape) +
                     " and hidden size " + std::to_string(cell.hidden_size));
  }

  auto gate = [&](Parameter& W, Parameter& U, Parameter& b) {
    return add(dense(x, W.variable(), b.variable()),
               linear(prev.hidden, U.variable()));
  };
  const Variable f = sigmoid(gate(cell.W_f, cell.U_f, cell.b_f));
  const Variable i = sigmoid(gate(cell.W_i, cell.U_i, cell.b_i));
  const Variable c_tilde = tanh_op(gate(cell.W_c, cell.U_c, cell.b_c));
  const Variable o = sigmoid(gate(cell.W_o, cell.U_o, cell.b_o));
  const Variable c = add(mul(f, prev.cell), mul(i, c_tilde));
  const Variable h = mul(o, tanh_op(c));
  return {h, LstmState{h, c}};
}

UnrollResult lstm_unroll(const std::vector<Variable>& seq, LstmCell& cell,
                         bool reverse) {
  if (seq.empty()) throw ShapeError("lstm_unroll: empty sequence");
  const Tensor& first = seq.front().value();
  const int batch = (first.ndim() == 2) ? first.dim(0) : 0;

  UnrollResult out;
  out.hidden.resize(seq.size());
  LstmState state = lstm_zero_state(cell.hidden_size, batch);
  for (std::size_t k = 0; k < seq.size(); ++k) {
    const std::size_t idx = reverse ? seq.size() - 1 - k : k;
    auto [h, next] = lstm_step(seq[idx], state, cell);
    out.hidden[idx] = h;
    state = next;
  }
  out.final_state = state;
  return out;
}

std::vector<Variable> bilstm_forward(const std::vector<Variable>& seq,
                                     LstmCell& fwd, LstmCell& bwd) {
  return bilstm_unroll(seq, fwd, bwd).outputs;
}

BiUnrollResult bilstm_unroll(const std::vector<Variable>& seq, LstmCell& fwd,
                             LstmCell& bwd) {
  if (seq.empty()) throw ShapeError("bilstm_forward: empty sequence");
  UnrollResult f = lstm_unroll(seq, fwd, false);
  UnrollResult b = lstm_unroll(seq, bwd, true);

  const int concat_axis = (seq.front().value().ndim() == 2) ? 1 : 0;
  BiUnrollResult out;
  out.outputs.reserve(seq.size());
  for (std::size_t k = 0; k < seq.size(); ++k) {
    out.outputs.push_back(concat({f.hidden[k], b.hidden[k]}, concat_axis));
  }
  out.fwd_final = f.final_state;
  out.bwd_final = b.final_state;
  return out;
}

}  // namespace xltrack::nn
