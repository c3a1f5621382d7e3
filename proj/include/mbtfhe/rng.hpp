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

#ifndef MBTFHE_RNG_HPP_
#define MBTFHE_RNG_HPP_

#include <array>
#include <cstdint>
#include <string>

#include "mbtfhe/torus.hpp"

namespace mbtfhe {

using Seed = std::array<std::uint64_t, 4>;

// Expands a 64-bit seed into 256 bits.
Seed seed_from_u64(std::uint64_t s);
// Accepts a decimal integer or a 64-hex-digit string.
Seed seed_from_string(const std::string& s);
std::string seed_to_hex(const Seed& s);

// Counter-based generator: output i is a keyed mix of (seed, stream, i), so
// streams can be forked without consuming draws from the parent. Not
// cryptographically secure.
class Prng {
 public:
  explicit Prng(const Seed& seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}

  std::uint64_t next_u64();
  Torus uniform_torus() { return next_u64(); }
  int uniform_bit() { return static_cast<int>(next_u64() >> 63); }
  // Uniform double in [0, 1) with 53 random bits.
  double uniform_double();
  double normal();
  // Rounded Gaussian with standard deviation `stddev` (fraction of the torus).
  Torus gaussian_torus(double stddev);

  // Independent child stream, keyed by `id`.
  Prng fork(std::uint64_t id) const;
  std::uint64_t counter() const { return counter_; }

 private:
  Seed seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mbtfhe

#endif  // MBTFHE_RNG_HPP_
