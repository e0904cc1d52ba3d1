#pragma once

#include <string>
#include <utility>
#include <vector>

#include "xltrack/layers.hpp"

namespace xltrack::nn {

// One LSTM cell with separate per-gate input weights W, recurrent weights U
// and biases b, for the forget (f), input (i), cell (c) and output (o) gates.
struct LstmCell {
  int input_size = 0, hidden_size = 0;
  Parameter W_f, U_f, b_f;
  Parameter W_i, U_i, b_i;
  Parameter W_c, U_c, b_c;
  Parameter W_o, U_o, b_o;

  LstmCell() = default;
  // Small uniform init (bound 1/sqrt(hidden)); forget-gate bias starts at 1
  // so early training does not erase the cell state.
  LstmCell(const std::string& name, int input_size, int hidden_size, Rng& rng);

  std::vector<Parameter*> parameters();
};

struct LstmState {
  Variable hidden;  // x~(t)
  Variable cell;    // c(t)
};

// All-zero initial state; batch <= 0 yields plain vectors, otherwise (batch, hidden).
LstmState lstm_zero_state(int hidden_size, int batch = 0);

// One recurrence step:
//   f = sigma(W_f x + U_f h + b_f)        i = sigma(W_i x + U_i h + b_i)
//   c~ = tanh(W_c x + U_c h + b_c)        o = sigma(W_o x + U_o h + b_o)
//   c(t) = f . c(t-1) + i . c~            h(t) = o . tanh(c(t))
// with "." the elementwise product. Returns (h(t), new state).
std::pair<Variable, LstmState> lstm_step(const Variable& x, const LstmState& prev,
                                         LstmCell& cell);

struct UnrollResult {
  std::vector<Variable> hidden;  // aligned with the input order
  LstmState final_state;
};

// Runs the cell across the sequence (optionally visiting it in reverse; the
// outputs are still returned in input order).
UnrollResult lstm_unroll(const std::vector<Variable>& seq, LstmCell& cell,
                         bool reverse = false);

// Bidirectional pass: output[k] = concat(forward_hidden[k], backward_hidden[k]).
std::vector<Variable> bilstm_forward(const std::vector<Variable>& seq,
                                     LstmCell& fwd, LstmCell& bwd);

struct BiUnrollResult {
  std::vector<Variable> outputs;  // per-step concat, input order
  LstmState fwd_final, bwd_final;
};

BiUnrollResult bilstm_unroll(const std::vector<Variable>& seq, LstmCell& fwd,
                             LstmCell& bwd);

}  // namespace xltrack::nn
