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

#include "bvc/pileup.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "bvc/errors.hpp"
#include "byte_io.hpp"

namespace bvc {
namespace {

constexpr char kDatasetMagic[4] = {'B', 'V', 'C', 'D'};
constexpr std::size_t kDatasetHeaderBytes = 20;

// Uniform nucleotide in {A, C, G, T}.
BaseCode random_base(Rng& rng) { return static_cast<BaseCode>(1 + rng.uniform_int(4)); }

// Uniform nucleotide different from `base`.
BaseCode other_base(BaseCode base, Rng& rng) {
  const auto b = static_cast<std::uint64_t>(base) - 1;
  return static_cast<BaseCode>(1 + (b + 1 + rng.uniform_int(3)) % 4);
}

void fill_half(PairMatrix& m, bool tumor, const SimulatorConfig& cfg,
               const std::vector<BaseCode>& ref, const std::vector<char>& het,
               const std::vector<BaseCode>& germline_alt, bool somatic, double vaf,
               BaseCode somatic_alt, Rng& rng) {
  const std::size_t w = m.width();
  const std::size_t candidate = m.candidate_locus();
  const std::uint32_t reads =
      rng.binomial(static_cast<std::uint32_t>(cfg.depth), cfg.coverage / static_cast<double>(cfg.depth));
  for (std::size_t r = 0; r < reads; ++r) {
    const bool alt_haplotype = rng.bernoulli(0.5);
    const bool carries_somatic = somatic && rng.bernoulli(vaf);
    for (std::size_t j = 0; j < w; ++j) {
      BaseCode base = ref[j];
      if (het[j] && alt_haplotype) base = germline_alt[j];
      if (j == candidate && carries_somatic) base = somatic_alt;
      if (rng.bernoulli(cfg.error_rate)) base = other_base(base, rng);
      m.set(r, tumor ? m.tumor_column(j) : m.normal_column(j), base);
    }
  }
}

template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[rng.uniform_int(i)]);
  }
}

}  // namespace

PairMatrix::PairMatrix(std::size_t depth, std::size_t width)
    : depth_(depth), width_(width), codes_(depth * 2 * width, BaseCode::pad) {}

std::pair<std::size_t, std::size_t> Dataset::class_counts() const {
  std::size_t pos = 0;
  for (const auto& e : examples) pos += e.label == 1 ? 1 : 0;
  return {examples.size() - pos, pos};
}

void SimulatorConfig::validate() const {
  auto probability = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (depth == 0 || width == 0) throw DomainError("simulator: depth and width must be positive");
  if (!(error_rate >= 0.0 && error_rate < 1.0)) throw DomainError("simulator: error rate must be in [0, 1)");
  if (!probability(germline_het_rate)) throw DomainError("simulator: germline het rate must be in [0, 1]");
  if (!probability(positive_fraction)) throw DomainError("simulator: positive fraction must be in [0, 1]");
  if (!(vaf_lo > 0.0 && vaf_lo <= vaf_hi && vaf_hi <= 1.0)) {
    throw DomainError("simulator: VAF range must satisfy 0 < lo <= hi <= 1");
  }
  if (!(coverage >= 0.0 && coverage <= static_cast<double>(depth))) {
    throw DomainError("simulator: coverage must be in [0, depth]");
  }
}

LabeledExample simulate_example(const SimulatorConfig& cfg, Rng& rng) {
  cfg.validate();
  LabeledExample ex{PairMatrix(cfg.depth, cfg.width), 0};
  ex.label = rng.bernoulli(cfg.positive_fraction) ? 1 : 0;

  std::vector<BaseCode> ref(cfg.width);
  std::vector<char> het(cfg.width);
  std::vector<BaseCode> germline_alt(cfg.width);
  for (std::size_t j = 0; j < cfg.width; ++j) {
    ref[j] = random_base(rng);
    het[j] = rng.bernoulli(cfg.germline_het_rate) ? 1 : 0;
    germline_alt[j] = other_base(ref[j], rng);
  }

  const std::size_t candidate = ex.matrix.candidate_locus();
  double vaf = 0.0;
  BaseCode somatic_alt = BaseCode::pad;
  if (ex.label == 1) {
    vaf = cfg.vaf_lo + (cfg.vaf_hi - cfg.vaf_lo) * rng.uniform();
    std::vector<BaseCode> choices;
    for (std::uint8_t b = 1; b <= 4; ++b) {
      const auto base = static_cast<BaseCode>(b);
      if (base != ref[candidate] && !(het[candidate] && base == germline_alt[candidate])) {
        choices.push_back(base);
      }
    }
    somatic_alt = choices[rng.uniform_int(choices.size())];
  }

  fill_half(ex.matrix, false, cfg, ref, het, germline_alt, false, 0.0, somatic_alt, rng);
  fill_half(ex.matrix, true, cfg, ref, het, germline_alt, ex.label == 1, vaf, somatic_alt, rng);
  return ex;
}

Dataset simulate_dataset(const SimulatorConfig& cfg, std::size_t count) {
  cfg.validate();
  Dataset ds{cfg.depth, cfg.width, {}};
  ds.examples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = Rng::substream(cfg.seed, i);
    ds.examples.push_back(simulate_example(cfg, rng));
  }
  return ds;
}

Dataset simulate_balanced(const SimulatorConfig& cfg, std::size_t total,
                          std::pair<std::size_t, std::size_t>* generated) {
  cfg.validate();
  if (total == 0 || total % 2 != 0) throw DomainError("simulate_balanced: total must be even and positive");
  if (cfg.positive_fraction <= 0.0 || cfg.positive_fraction >= 1.0) {
    throw BalanceError("simulate_balanced: positive fraction must be strictly between 0 and 1");
  }
  const std::size_t per_class = total / 2;
  Dataset ds{cfg.depth, cfg.width, {}};
  std::size_t counts[2] = {0, 0};
  for (std::uint64_t i = 0; std::min(counts[0], counts[1]) < per_class; ++i) {
    Rng rng = Rng::substream(cfg.seed, i);
    ds.examples.push_back(simulate_example(cfg, rng));
    ++counts[ds.examples.back().label];
  }
  if (generated) *generated = {counts[0], counts[1]};
  // Stream index 2^64 - 1 is reserved for balancing.
  Rng balance = Rng::substream(cfg.seed, ~std::uint64_t{0});
  return undersample(ds, balance);
}

std::array<double, 3> base_channels(BaseCode code) {
  switch (code) {
    case BaseCode::pad: return {0, 0, 0};
    case BaseCode::A: return {1, 0, 0};
    case BaseCode::C: return {0, 1, 0};
    case BaseCode::G: return {0, 0, 1};
    case BaseCode::T: return {1, 1, 0};
    case BaseCode::other: return {1, 0, 1};
  }
  throw DomainError("base_channels: invalid base code");
}

BaseCode decode_channels(double r, double g, double b) {
  for (std::uint8_t c = 0; c <= kMaxBaseCode; ++c) {
    const auto code = static_cast<BaseCode>(c);
    const auto ch = base_channels(code);
    if (ch[0] == r && ch[1] == g && ch[2] == b) return code;
  }
  throw DomainError("decode_channels: colour does not correspond to a base");
}

Tensor encode(const PairMatrix& matrix) {
  const std::size_t cols = matrix.columns();
  Tensor out({matrix.depth(), cols * kChannels});
  auto data = out.data();
  for (std::size_t i = 0; i < matrix.depth(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const auto ch = base_channels(matrix.at(i, j));
      double* dst = data.data() + (i * cols + j) * kChannels;
      dst[0] = ch[0];
      dst[1] = ch[1];
      dst[2] = ch[2];
    }
  }
  return out;
}

RowRange parse_row_range(const std::string& text) {
  const auto dots = text.find("..");
  if (dots == std::string::npos) throw UsageError("row range '" + text + "' is not of the form LO..HI");
  auto parse = [&](std::string_view part) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc() || ptr != part.data() + part.size() || part.empty()) {
      throw UsageError("row range '" + text + "' has a non-numeric bound");
    }
    return v;
  };
  const std::string_view view(text);
  return {parse(view.substr(0, dots)), parse(view.substr(dots + 2))};
}

std::string format_row_range(const RowRange& range) {
  return std::to_string(range.first) + ".." + std::to_string(range.last);
}

Tensor apply_mask(const Tensor& x, const RowRange& rows) {
  if (x.rank() != 2) throw DimensionError("apply_mask: input must be [d x f]");
  if (rows.first < 1 || rows.first > rows.last || rows.last > x.rows()) {
    throw DomainError("apply_mask: row range " + format_row_range(rows) + " is empty or outside 1.." +
                      std::to_string(x.rows()));
  }
  Tensor out = x;
  const std::size_t f = x.cols();
  std::fill(out.data().begin() + (rows.first - 1) * f, out.data().begin() + rows.last * f, 0.0);
  return out;
}

Dataset undersample(const Dataset& ds, Rng& rng) {
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < ds.examples.size(); ++i) by_class[ds.examples[i].label].push_back(i);
  if (by_class[0].empty() || by_class[1].empty()) {
    throw BalanceError("undersample: both classes must be present (counts " +
                       std::to_string(by_class[0].size()) + ", " + std::to_string(by_class[1].size()) + ")");
  }
  const int majority = by_class[0].size() >= by_class[1].size() ? 0 : 1;
  const std::size_t keep = by_class[1 - majority].size();
  // Partial Fisher-Yates: the first `keep` slots become a uniform subset.
  auto& pool = by_class[majority];
  for (std::size_t i = 0; i < keep; ++i) {
    std::swap(pool[i], pool[i + rng.uniform_int(pool.size() - i)]);
  }
  pool.resize(keep);
  pool.insert(pool.end(), by_class[1 - majority].begin(), by_class[1 - majority].end());
  std::sort(pool.begin(), pool.end());
  shuffle(pool, rng);

  Dataset out{ds.depth, ds.width, {}};
  out.examples.reserve(pool.size());
  for (std::size_t i : pool) out.examples.push_back(ds.examples[i]);
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, Rng& rng) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw DomainError("split: train fraction must be in (0, 1)");
  }
  if (ds.examples.empty()) throw DomainError("split: empty dataset");
  std::vector<std::size_t> order(ds.examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(order, rng);
  const auto n_train = static_cast<std::size_t>(
      std::floor(train_fraction * static_cast<double>(ds.examples.size()) + 0.5));

  std::pair<Dataset, Dataset> out{Dataset{ds.depth, ds.width, {}}, Dataset{ds.depth, ds.width, {}}};
  for (std::size_t k = 0; k < order.size(); ++k) {
    (k < n_train ? out.first : out.second).examples.push_back(ds.examples[order[k]]);
  }
  return out;
}

std::vector<std::uint8_t> serialize_dataset(const Dataset& ds) {
  const std::size_t cells = ds.depth * 2 * ds.width;
  std::vector<std::uint8_t> out;
  out.reserve(kDatasetHeaderBytes + ds.examples.size() * (1 + cells));
  out.insert(out.end(), std::begin(kDatasetMagic), std::end(kDatasetMagic));
  detail::put_u32(out, kDatasetVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(ds.depth));
  detail::put_u32(out, static_cast<std::uint32_t>(ds.width));
  detail::put_u32(out, static_cast<std::uint32_t>(ds.examples.size()));
  for (const auto& ex : ds.examples) {
    if (ex.matrix.depth() != ds.depth || ex.matrix.width() != ds.width) {
      throw DimensionError("save_dataset: example dimensions differ from the dataset header");
    }
    out.push_back(static_cast<std::uint8_t>(ex.label));
    for (BaseCode c : ex.matrix.codes()) out.push_back(static_cast<std::uint8_t>(c));
  }
  return out;
}

Dataset deserialize_dataset(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader in(bytes, "dataset");
  if (in.text(4) != std::string(kDatasetMagic, 4)) in.fail("bad magic, expected BVCD", 0);
  const std::uint32_t version = in.u32();
  if (version != kDatasetVersion) in.fail("unsupported version " + std::to_string(version), 4);
  Dataset ds;
  ds.depth = in.u32();
  ds.width = in.u32();
  const std::uint32_t count = in.u32();
  const std::size_t cells = ds.depth * 2 * ds.width;
  if (count > 0 && (ds.depth == 0 || ds.width == 0)) in.fail("zero depth or width", 8);

  ds.examples.reserve(count);
  for (std::uint32_t e = 0; e < count; ++e) {
    const std::uint64_t label_at = in.offset();
    const std::uint8_t label = in.u8();
    if (label > 1) in.fail("label " + std::to_string(label) + " is not 0 or 1", label_at);
    const std::uint64_t cells_at = in.offset();
    const std::uint8_t* raw = in.take(cells);
    LabeledExample ex{PairMatrix(ds.depth, ds.width), label};
    for (std::size_t k = 0; k < cells; ++k) {
      if (raw[k] > kMaxBaseCode) in.fail("invalid base code " + std::to_string(raw[k]), cells_at + k);
      ex.matrix.codes()[k] = static_cast<BaseCode>(raw[k]);
    }
    ds.examples.push_back(std::move(ex));
  }
  if (in.remaining() != 0) in.fail("trailing bytes after the last example", in.offset());
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  detail::write_file(path, serialize_dataset(ds));
}

Dataset load_dataset(const std::filesystem::path& path) {
  return deserialize_dataset(detail::read_file(path));
}

}  // namespace bvc
