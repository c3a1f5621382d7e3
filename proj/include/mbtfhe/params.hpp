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

#ifndef MBTFHE_PARAMS_HPP_
#define MBTFHE_PARAMS_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "mbtfhe/torus.hpp"

namespace mbtfhe {

struct TfheParams {
  std::string name = "custom";
  std::size_t n = 0;            // short LWE dimension
  std::size_t poly_degree = 0;  // N
  std::size_t k = 1;            // GLWE dimension
  GadgetParams pbs_gadget{8, 2};
  GadgetParams ks_gadget{4, 5};
  double noise_std_short = 0.0;  // fraction of the torus
  double noise_std_long = 0.0;
  unsigned width = 3;  // message bits
  unsigned padding_bits = 1;

  std::size_t n_long() const { return k * poly_degree; }
  std::uint64_t message_space() const { return std::uint64_t{1} << width; }
  // Torus value of one message unit.
  Torus delta() const { return Torus{1} << (64 - (width + padding_bits)); }

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
  // Stable FNV-1a digest of every field; stamped into serialized files.
  std::uint64_t hash() const;
  std::string to_text() const;
};

// key=value lines; '#' starts a comment. Noise values accept "2^-40" or a
// plain decimal.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(const std::string& text, const std::string& origin);
KeyValues read_key_values(const std::filesystem::path& path);

TfheParams params_from_key_values(const KeyValues& kv, const std::string& origin);

// Directory holding params/ and machine/ presets: $MBTFHE_CONFIG_DIR if set,
// else the presets directory of the source tree.
std::filesystem::path config_dir();

// Resolves a preset name (params/<name>.params) or a path to a .params file.
TfheParams load_params(const std::string& name_or_path);

// Parses "2^-40", "-2^3" or a decimal literal.
double parse_power_value(const std::string& s);

}  // namespace mbtfhe

#endif  // MBTFHE_PARAMS_HPP_
