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
#include <filesystem>
#include <vector>

#include "bvc/model.hpp"

namespace bvc {

// Checkpoint file layout (integers little endian):
//   "BVC1" | u32 version | u32 header length | UTF-8 JSON header | data
// The header holds the ModelSpec and a directory of arrays (name, shape,
// byte offset into the data section); the data section is the raw IEEE-754
// doubles of every array, little endian, in directory order.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize_checkpoint(const Model& model);
Model deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace bvc
