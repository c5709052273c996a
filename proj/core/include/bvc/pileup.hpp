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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "bvc/random.hpp"
#include "bvc/tensor.hpp"

namespace bvc {

enum class BaseCode : std::uint8_t { pad = 0, A = 1, C = 2, G = 3, T = 4, other = 5 };

inline constexpr std::uint8_t kMaxBaseCode = 5;

// Colour channels per base in the encoded input.
inline constexpr std::size_t kChannels = 3;

// depth x 2*width grid of read bases: columns [0, w) hold the normal sample,
// columns [w, 2w) the tumor sample at the same w reference loci. Row i is the
// i-th read. The candidate locus is the centre column of each half.
class PairMatrix {
 public:
  PairMatrix() = default;
  PairMatrix(std::size_t depth, std::size_t width);

  std::size_t depth() const noexcept { return depth_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t columns() const noexcept { return 2 * width_; }
  std::size_t candidate_locus() const noexcept { return width_ / 2; }
  std::size_t normal_column(std::size_t locus) const noexcept { return locus; }
  std::size_t tumor_column(std::size_t locus) const noexcept { return width_ + locus; }

  BaseCode at(std::size_t row, std::size_t col) const { return codes_[row * columns() + col]; }
  void set(std::size_t row, std::size_t col, BaseCode code) { codes_[row * columns() + col] = code; }

  const std::vector<BaseCode>& codes() const noexcept { return codes_; }
  std::vector<BaseCode>& codes() noexcept { return codes_; }

  bool operator==(const PairMatrix&) const = default;

 private:
  std::size_t depth_ = 0;
  std::size_t width_ = 0;
  std::vector<BaseCode> codes_;
};

// label 1: a somatic variant is present at the candidate locus.
struct LabeledExample {
  PairMatrix matrix;
  int label = 0;

  bool operator==(const LabeledExample&) const = default;
};

struct Dataset {
  std::size_t depth = 0;
  std::size_t width = 0;
  std::vector<LabeledExample> examples;

  std::size_t size() const noexcept { return examples.size(); }
  // (negatives, positives)
  std::pair<std::size_t, std::size_t> class_counts() const;

  bool operator==(const Dataset&) const = default;
};

struct SimulatorConfig {
  std::size_t depth = 100;
  std::size_t width = 10;
  double error_rate = 0.01;         // per non-PAD cell
  double germline_het_rate = 0.1;   // per locus
  double vaf_lo = 0.1;
  double vaf_hi = 0.9;
  double positive_fraction = 0.3;   // before balancing
  double coverage = 95.0;           // mean reads per half, <= depth
  std::uint64_t seed = 42;

  void validate() const;
};

// Draw order (all from `rng`): label; per locus (reference, het flag,
// germline alt); for positives the VAF and somatic alt; then the normal half
// and the tumor half, each as a Binomial read count followed by, per read,
// a haplotype bit, a somatic bit (tumor positives only) and per locus the
// error flag and, when flagged, the replacement base.
LabeledExample simulate_example(const SimulatorConfig& cfg, Rng& rng);

// `count` examples; example i uses Rng::substream(cfg.seed, i).
Dataset simulate_dataset(const SimulatorConfig& cfg, std::size_t count);

// Generates examples in index order until the minority class holds total/2,
// then undersamples the majority. `total` must be even and positive. When
// `generated` is given it receives the (negatives, positives) drawn before
// undersampling.
Dataset simulate_balanced(const SimulatorConfig& cfg, std::size_t total,
                          std::pair<std::size_t, std::size_t>* generated = nullptr);

// 3-channel colour of one base: A (1,0,0) C (0,1,0) G (0,0,1) T (1,1,0)
// OTHER (1,0,1) PAD (0,0,0).
std::array<double, 3> base_channels(BaseCode code);
BaseCode decode_channels(double r, double g, double b);

// [d x 2w*3], each row the row-major flattening of its (2w, 3) colours.
Tensor encode(const PairMatrix& matrix);

// Inclusive 1-based row range.
struct RowRange {
  std::size_t first = 1;
  std::size_t last = 1;
};

// Parses "LO..HI".
RowRange parse_row_range(const std::string& text);
std::string format_row_range(const RowRange& range);

// Zeroes (blackens) every feature in the given rows.
Tensor apply_mask(const Tensor& x, const RowRange& rows);

// Majority class subsampled without replacement to the minority count, then
// the result shuffled.
Dataset undersample(const Dataset& ds, Rng& rng);

// Shuffles, then takes the first round(fraction * n) (half rounds up) for
// training and the rest for testing.
std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, Rng& rng);

// Binary dataset file: "BVCD", u32 version, u32 depth, u32 width, u32 count,
// then per example a u8 label and depth*2*width code bytes, row-major.
// Integers are little endian.
inline constexpr std::uint32_t kDatasetVersion = 1;

std::vector<std::uint8_t> serialize_dataset(const Dataset& ds);
Dataset deserialize_dataset(const std::vector<std::uint8_t>& bytes);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace bvc
