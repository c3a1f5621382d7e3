/*
 * Copyright 2026 The mbtfhe Authors.
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

#ifndef MBTFHE_SERIALIZE_HPP_
#define MBTFHE_SERIALIZE_HPP_

// Binary files are sequences of little-endian 64-bit words:
//
//   word 0  magic  0x314548464254424d ("MBTFHE1" read as bytes)
//   word 1  format version (1)
//   word 2  parameter hash (TfheParams::hash)
//   word 3  payload kind (1 = key set, 2 = LWE list)
//   ...     payload
//
// Key set payload: n short-key bits, k*N GLWE key bits, then every BSK row
// polynomial in (ggsw, row, poly, coeff) order, then every KSK entry as
// mask followed by body in table order.
// LWE list payload: count, then per ciphertext a dimension tag (0 short,
// 1 long), the mask length, the mask and the body.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mbtfhe/tfhe.hpp"

namespace mbtfhe {

constexpr std::uint64_t kFileMagic = 0x314548464254424dULL;
constexpr std::uint64_t kFileVersion = 1;

std::vector<std::uint64_t> encode_keyset(const KeySet& keys);
// BSK spectra are rebuilt for `mode`.
KeySet decode_keyset(const std::vector<std::uint64_t>& words, const TfheParams& params,
                     FftMode mode = FftMode::reference);

std::vector<std::uint64_t> encode_lwe_list(const std::vector<LweCiphertext>& cts,
                                           const TfheParams& params);
std::vector<LweCiphertext> decode_lwe_list(const std::vector<std::uint64_t>& words,
                                           const TfheParams& params);

void write_words(const std::filesystem::path& path, const std::vector<std::uint64_t>& words);
std::vector<std::uint64_t> read_words(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace mbtfhe

#endif  // MBTFHE_SERIALIZE_HPP_
