/*
 * Copyright 2026 The bvc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "bvc/layers.hpp"

#include <vector>

#include "bvc/errors.hpp"
#include "bvc/ops.hpp"

namespace bvc {
namespace {

std::size_t hidden_size(const LstmVars& p) {
  const Shape& r = p.recurrent.shape();
  if (r.size() != 2 || r[1] != 4 * r[0]) {
    throw DimensionError("lstm: recurrent kernel must be [h x 4h], got " + shape_string(r));
  }
  const Shape& k = p.kernel.shape();
  if (k.size() != 2 || k[1] != r[1]) {
    throw DimensionError("lstm: input kernel must be [in x 4h], got " + shape_string(k));
  }
  if (p.bias.shape() != Shape{r[1]}) {
    throw DimensionError("lstm: bias must be [4h], got " + shape_string(p.bias.shape()));
  }
  return r[0];
}

std::size_t sequence_steps(Var seq, std::size_t batch) {
  const Shape& s = seq.shape();
  if (s.size() != 2) throw DimensionError("bilstm: sequence must be rank 2, got " + shape_string(s));
  if (batch == 0) throw DomainError("bilstm: batch size must be positive");
  if (s[0] == 0) throw DomainError("bilstm: sequence has no steps");
  if (s[0] % batch != 0) {
    throw DimensionError("bilstm: " + std::to_string(s[0]) + " rows do not divide into batch " +
                         std::to_string(batch));
  }
  return s[0] / batch;
}

Var project(Var seq, const LstmVars& p) { return add(matmul(seq, p.kernel), p.bias); }

}  // namespace

LstmState lstm_zero_state(Tape& tape, std::size_t batch, std::size_t hidden) {
  return {tape.constant(Tensor({batch, hidden})), tape.constant(Tensor({batch, hidden}))};
}

LstmState lstm_cell_step_projected(Var projected, const LstmState& state, Var recurrent) {
  const std::size_t h = recurrent.shape()[0];
  if (state.h.shape() != state.c.shape() || state.h.shape().size() != 2 ||
      state.h.shape()[1] != h) {
    throw DimensionError("lstm: state shape " + shape_string(state.h.shape()) +
                         " does not match hidden size " + std::to_string(h));
  }
  if (projected.shape() != Shape{state.h.shape()[0], 4 * h}) {
    throw DimensionError("lstm: projected input " + shape_string(projected.shape()) +
                         " does not match state " + shape_string(state.h.shape()));
  }
  Var z = add(projected, matmul(state.h, recurrent));
  Var i = sigmoid(slice(z, 1, 0, h));
  Var f = sigmoid(slice(z, 1, h, 2 * h));
  Var g = tanh(slice(z, 1, 2 * h, 3 * h));
  Var o = sigmoid(slice(z, 1, 3 * h, 4 * h));
  Var c_next = add(multiply(f, state.c), multiply(i, g));
  Var h_next = multiply(o, tanh(c_next));
  return {h_next, c_next};
}

LstmState lstm_cell_step(Var x, const LstmState& state, const LstmVars& params) {
  hidden_size(params);
  if (x.shape().size() != 2 || x.shape()[1] != params.kernel.shape()[0]) {
    throw DimensionError("lstm: input " + shape_string(x.shape()) + " does not match kernel " +
                         shape_string(params.kernel.shape()));
  }
  return lstm_cell_step_projected(project(x, params), state, params.recurrent);
}

Var bilstm_forward(Var seq, std::size_t batch, const LstmVars& forward, const LstmVars& backward) {
  const std::size_t steps = sequence_steps(seq, batch);
  const std::size_t hf = hidden_size(forward);
  const std::size_t hb = hidden_size(backward);
  Tape& tape = *seq.tape();

  Var proj_f = project(seq, forward);
  Var proj_b = project(seq, backward);

  std::vector<Var> out_f(steps);
  std::vector<Var> out_b(steps);
  LstmState state = lstm_zero_state(tape, batch, hf);
  for (std::size_t t = 0; t < steps; ++t) {
    state = lstm_cell_step_projected(slice(proj_f, 0, t * batch, (t + 1) * batch), state,
                                     forward.recurrent);
    out_f[t] = state.h;
  }
  state = lstm_zero_state(tape, batch, hb);
  for (std::size_t t = steps; t-- > 0;) {
    state = lstm_cell_step_projected(slice(proj_b, 0, t * batch, (t + 1) * batch), state,
                                     backward.recurrent);
    out_b[t] = state.h;
  }

  std::vector<Var> rows(steps);
  for (std::size_t t = 0; t < steps; ++t) rows[t] = concat({out_f[t], out_b[t]}, 1);
  return concat(rows, 0);
}

Var bilstm_last_step(Var seq, std::size_t batch, const LstmVars& forward,
                     const LstmVars& backward) {
  const std::size_t steps = sequence_steps(seq, batch);
  const std::size_t hf = hidden_size(forward);
  const std::size_t hb = hidden_size(backward);
  Tape& tape = *seq.tape();

  Var proj_f = project(seq, forward);
  LstmState state = lstm_zero_state(tape, batch, hf);
  for (std::size_t t = 0; t < steps; ++t) {
    state = lstm_cell_step_projected(slice(proj_f, 0, t * batch, (t + 1) * batch), state,
                                     forward.recurrent);
  }
  Var last_f = state.h;

  Var proj_b = project(seq, backward);
  state = lstm_zero_state(tape, batch, hb);
  for (std::size_t t = steps; t-- > 0;) {
    state = lstm_cell_step_projected(slice(proj_b, 0, t * batch, (t + 1) * batch), state,
                                     backward.recurrent);
  }
  Var last_b = state.h;
  return concat({last_f, last_b}, 1);
}

Var dense_forward(Var x, const DenseVars& params) {
  return add(matmul(x, params.kernel), params.bias);
}

}  // namespace bvc
