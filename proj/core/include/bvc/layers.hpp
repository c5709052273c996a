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

#pragma once

#include <cstddef>

#include "bvc/tape.hpp"

namespace bvc {

// Trainable tensors of one LSTM direction. Gate blocks along the 4h axis are
// ordered (input i, forget f, cell candidate g, output o); the order is part
// of the checkpoint format.
struct LstmVars {
  Var kernel;     // [in x 4h]
  Var recurrent;  // [h x 4h]
  Var bias;       // [4h]
};

struct LstmState {
  Var h;  // [n x h]
  Var c;  // [n x h]
};

struct DenseVars {
  Var kernel;  // [in x out]
  Var bias;    // [out]
};

// Zero hidden/cell state for a batch of n rows.
LstmState lstm_zero_state(Tape& tape, std::size_t batch, std::size_t hidden);

// One step for a batch of rows x [n x in]:
//   z  = (x W + b) + h U
//   i, f, o = sigmoid(z_i), sigmoid(z_f), sigmoid(z_o);  g = tanh(z_g)
//   c' = f * c + i * g;  h' = o * tanh(c')
LstmState lstm_cell_step(Var x, const LstmState& state, const LstmVars& params);

// Same step when x W + b has already been computed for this timestep.
LstmState lstm_cell_step_projected(Var projected, const LstmState& state, Var recurrent);

// Bidirectional LSTM over a time-major batch: `seq` is [d*n x f] with row
// t*n + b holding step t of sequence b. Returns [d*n x 2h] where each row is
// [forward h_t ; backward h_t]; the backward direction scans t = d-1 .. 0.
Var bilstm_forward(Var seq, std::size_t batch, const LstmVars& forward, const LstmVars& backward);

// Final state of each scan, [n x 2h]: the forward half of row d-1 and the
// backward half of row 0 of bilstm_forward. Both halves have seen every step.
Var bilstm_last_step(Var seq, std::size_t batch, const LstmVars& forward,
                     const LstmVars& backward);

// x W + b
Var dense_forward(Var x, const DenseVars& params);

}  // namespace bvc
