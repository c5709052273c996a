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

#include <cstdint>
#include <random>

namespace bvc {

// Deterministic random stream.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. All derived variates are produced by the transforms below rather
// than by <random> distributions (whose algorithms are implementation
// defined), so integer and sign draws are identical on every platform and
// floating draws depend only on the platform's libm.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  // Independent substream for (seed, index), e.g. one per simulated example.
  static Rng substream(std::uint64_t seed, std::uint64_t index);

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();

  // Uniform integer on [0, n); unbiased (rejection on the top bits).
  std::uint64_t uniform_int(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  // Sum of `trials` Bernoulli(p) draws.
  std::uint32_t binomial(std::uint32_t trials, double p);

  // +1 or -1, one engine word per sign.
  double rademacher() { return (engine_() >> 63) != 0 ? 1.0 : -1.0; }

  // Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();

  bool operator==(const Rng& other) const = default;

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// SplitMix64 finaliser; used to derive substream seeds.
std::uint64_t mix64(std::uint64_t x);

}  // namespace bvc
