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

#include "bvc/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include "bvc/errors.hpp"
#include "byte_io.hpp"

namespace bvc {
namespace {

constexpr char kMagic[4] = {'B', 'V', 'C', '1'};

nlohmann::json spec_to_json(const ModelSpec& spec) {
  nlohmann::json j;
  j["depth"] = spec.depth;
  j["width"] = spec.width;
  j["hidden1"] = spec.hidden1;
  j["hidden2"] = spec.hidden2;
  j["dense_units"] = spec.dense_units;
  j["head"] = head_name(spec.head);
  return j;
}

ModelSpec spec_from_json(const nlohmann::json& j) {
  ModelSpec spec;
  spec.depth = j.at("depth").get<std::size_t>();
  spec.width = j.at("width").get<std::size_t>();
  spec.hidden1 = j.at("hidden1").get<std::size_t>();
  spec.hidden2 = j.at("hidden2").get<std::size_t>();
  spec.dense_units = j.at("dense_units").get<std::size_t>();
  spec.head = parse_head(j.at("head").get<std::string>());
  return spec;
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Model& model) {
  nlohmann::json header;
  header["spec"] = spec_to_json(model.spec());
  nlohmann::json arrays = nlohmann::json::array();
  std::uint64_t offset = 0;
  const auto layout = Model::layout(model.spec());
  for (const auto& [name, shape] : layout) {
    arrays.push_back({{"name", name}, {"shape", shape}, {"offset", offset}});
    offset += shape_size(shape) * sizeof(double);
  }
  header["arrays"] = arrays;
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  out.reserve(out.size() + offset);
  for (const auto& [name, shape] : layout) {
    for (double v : model.params().at(name).data()) detail::put_f64(out, v);
  }
  return out;
}

Model deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader in(bytes, "checkpoint");
  if (in.text(4) != std::string(kMagic, 4)) in.fail("bad magic, expected BVC1", 0);
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion) {
    in.fail("unsupported checkpoint version " + std::to_string(version), 4);
  }
  const std::uint32_t header_len = in.u32();
  const std::uint64_t header_at = in.offset();
  const std::string text = in.text(header_len);
  const std::uint64_t data_at = in.offset();

  nlohmann::json header;
  ModelSpec spec;
  try {
    header = nlohmann::json::parse(text);
    spec = spec_from_json(header.at("spec"));
    spec.validate();
  } catch (const nlohmann::json::exception& e) {
    in.fail(std::string("malformed header: ") + e.what(), header_at);
  } catch (const Error& e) {
    in.fail(std::string("invalid model spec: ") + e.what(), header_at);
  }

  const auto layout = Model::layout(spec);
  const auto& arrays = header.at("arrays");
  if (!arrays.is_array() || arrays.size() != layout.size()) {
    in.fail("array directory does not match the model spec (checkpoint version " +
                std::to_string(version) + ")",
            header_at);
  }
  ParamTensors params;
  std::uint64_t expected_offset = 0;
  for (std::size_t k = 0; k < layout.size(); ++k) {
    const auto& [name, shape] = layout[k];
    const auto& entry = arrays[k];
    Shape stored;
    std::uint64_t offset = 0;
    try {
      if (entry.at("name").get<std::string>() != name) throw std::runtime_error("name");
      stored = entry.at("shape").get<Shape>();
      offset = entry.at("offset").get<std::uint64_t>();
    } catch (const std::exception&) {
      in.fail("array entry " + std::to_string(k) + " does not match expected '" + name + "'", header_at);
    }
    if (stored != shape || offset != expected_offset) {
      in.fail("array '" + name + "' has shape " + shape_string(stored) + " at offset " +
                  std::to_string(offset) + ", spec requires " + shape_string(shape) +
                  " at offset " + std::to_string(expected_offset),
              header_at);
    }
    if (in.offset() != data_at + offset) in.fail("array data out of order", in.offset());
    std::vector<double> values(shape_size(shape));
    for (double& v : values) v = in.f64();
    params.emplace(name, Tensor(shape, std::move(values)));
    expected_offset += shape_size(shape) * sizeof(double);
  }
  if (in.remaining() != 0) in.fail("trailing bytes after the last array", in.offset());
  return Model(spec, std::move(params));
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  detail::write_file(path, serialize_checkpoint(model));
}

Model load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(detail::read_file(path));
}

}  // namespace bvc
