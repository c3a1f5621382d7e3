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

#include "mbtfhe/rng.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

namespace mbtfhe {

namespace {

std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Seed seed_from_u64(std::uint64_t s) {
  Seed out{};
  std::uint64_t x = s;
  for (auto& w : out) {
    x = mix(x);
    w = x;
  }
  return out;
}

Seed seed_from_string(const std::string& s) {
  if (s.size() == 64) {
    Seed out{};
    for (int i = 0; i < 4; ++i) {
      out[i] = std::stoull(s.substr(i * 16, 16), nullptr, 16);
    }
    return out;
  }
  std::size_t pos = 0;
  const auto v = std::stoull(s, &pos, 10);
  if (pos != s.size()) throw std::invalid_argument("bad seed '" + s + "'");
  return seed_from_u64(v);
}

std::string seed_to_hex(const Seed& s) {
  std::string out;
  char buf[17];
  for (auto w : s) {
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(w));
    out += buf;
  }
  return out;
}

std::uint64_t Prng::next_u64() {
  std::uint64_t z = mix(counter_++ ^ seed_[0]);
  z = mix(z ^ seed_[1] ^ stream_);
  z = mix(z ^ seed_[2]);
  return mix(z ^ seed_[3]);
}

double Prng::uniform_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Prng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform_double();
  } while (u1 <= 0.0);
  const double u2 = uniform_double();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

Torus Prng::gaussian_torus(double stddev) {
  if (stddev <= 0.0) return 0;
  const double v = normal() * stddev * 0x1.0p64;
  double r = std::nearbyint(std::fmod(v, 0x1.0p64));
  if (r >= 0x1.0p63) r -= 0x1.0p64;
  if (r < -0x1.0p63) r += 0x1.0p64;
  return static_cast<Torus>(static_cast<std::int64_t>(r));
}

Prng Prng::fork(std::uint64_t id) const {
  return Prng(seed_, mix(stream_ ^ mix(id + 0x632be59bd9b4e019ULL)));
}

}  // namespace mbtfhe
