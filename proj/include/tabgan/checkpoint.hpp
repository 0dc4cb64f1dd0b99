/*
 * Copyright 2026 The tabgan-ts Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Binary GAN checkpoint: "TGCK", u32 format version, u64 header length, a
// JSON header, then every array as little-endian f64 in header order.
// Saving the same model always yields the same bytes.

#include <cstdint>
#include <string>

#include "tabgan/gan.hpp"

namespace tabgan::checkpoint {

inline constexpr std::uint32_t kFormatVersion = 1;

std::string to_bytes(const gan::GanModel& model);
/// Throws std::invalid_argument for a malformed or inconsistent checkpoint.
gan::GanModel from_bytes(const std::string& bytes);

/// Throws std::runtime_error when the file cannot be written or read.
void save(const gan::GanModel& model, const std::string& path);
gan::GanModel load(const std::string& path);

/// FNV-1a 64-bit digest, printed as 16 hex digits.
std::string digest(const std::string& bytes);

}  // namespace tabgan::checkpoint
