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

#ifndef MBTFHE_TFHE_HPP_
#define MBTFHE_TFHE_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mbtfhe/fft.hpp"
#include "mbtfhe/params.hpp"
#include "mbtfhe/rng.hpp"
#include "mbtfhe/torus.hpp"

namespace mbtfhe {

enum class LweDim { short_key, long_key };

// n mask elements plus one body element.
struct LweCiphertext {
  std::vector<Torus> mask;
  Torus body = 0;
  LweDim dim = LweDim::long_key;

  std::size_t dimension() const { return mask.size(); }
  friend bool operator==(const LweCiphertext&, const LweCiphertext&) = default;
};

struct GlweCiphertext {
  std::vector<TorusPolynomial> mask;
  TorusPolynomial body;

  static GlweCiphertext zeros(std::size_t k, std::size_t degree);
  std::size_t k() const { return mask.size(); }
  std::size_t degree() const { return body.degree(); }
  // Polynomial j, with j == k() addressing the body.
  TorusPolynomial& poly(std::size_t j) { return j < mask.size() ? mask[j] : body; }
  const TorusPolynomial& poly(std::size_t j) const { return j < mask.size() ? mask[j] : body; }

  GlweCiphertext& operator+=(const GlweCiphertext& o);
  GlweCiphertext& operator-=(const GlweCiphertext& o);
  friend bool operator==(const GlweCiphertext&, const GlweCiphertext&) = default;
};

GlweCiphertext glwe_monomial_mul(const GlweCiphertext& c, std::size_t e);

// Transformed GGSW matrix: cell (row, col) is the spectrum of polynomial col
// of row `row`.
struct GgswSpectrum {
  FftMode mode = FftMode::reference;
  unsigned limb_bits = 0;
  std::size_t cols = 0;
  std::vector<TorusSpectrum> cells;

  const TorusSpectrum& cell(std::size_t row, std::size_t col) const {
    return cells[row * cols + col];
  }
};

// (k+1)*d GLWE rows; row j*d + (l-1) carries the message times the level-l
// gadget factor on polynomial j.
struct GgswCiphertext {
  std::vector<GlweCiphertext> rows;
  std::optional<GgswSpectrum> spectrum;
};

struct BootstrappingKey {
  std::vector<GgswCiphertext> ggsw;
  std::size_t size() const { return ggsw.size(); }
};

// Entry for long-key element i at level l (1-based) lives at
// (l-1) * n_long + i: level-major, then element-major.
struct KeySwitchingKey {
  std::size_t n_long = 0;
  std::size_t depth = 0;
  std::vector<LweCiphertext> table;

  const LweCiphertext& at(std::size_t element, unsigned level) const {
    return table[(level - 1) * n_long + element];
  }
};

struct SecretKeys {
  std::vector<std::int64_t> short_key;
  std::vector<IntPolynomial> glwe_key;

  // The GLWE key flattened into k*N binary coefficients.
  std::vector<std::int64_t> long_key() const;
};

struct KeySet {
  TfheParams params;
  SecretKeys secret;
  BootstrappingKey bsk;
  KeySwitchingKey ksk;
};

struct LookupTable {
  std::vector<std::uint64_t> entries;
  GlweCiphertext encoded;
};

// Per-call operation counters.
struct PbsTrace {
  std::size_t key_switches = 0;
  std::size_t cmux = 0;
  std::size_t external_products = 0;
};

// Deterministic for a fixed seed. BSK spectra are prepared for `mode`.
KeySet keygen(const TfheParams& params, const Seed& seed, FftMode mode = FftMode::reference);

// Recomputes the transformed BSK for another arithmetic mode.
void prepare_bsk(BootstrappingKey& bsk, const TfheParams& params, const FftPlan& plan,
                 FftMode mode);

Torus encode_message(std::uint64_t m, const TfheParams& params);
// round(phase / delta) mod 2p, then mod p.
std::uint64_t decode_message(Torus phase, const TfheParams& params);

LweCiphertext lwe_encrypt(Torus mu, std::span<const std::int64_t> key, double stddev, Prng& rng,
                          LweDim dim);
Torus lwe_phase(const LweCiphertext& ct, std::span<const std::int64_t> key);

// Encrypts m under the long key with the long-key noise level.
LweCiphertext encrypt(std::uint64_t m, const SecretKeys& keys, const TfheParams& params,
                      Prng& rng);
// Picks the key matching ct.dim.
std::uint64_t decrypt(const LweCiphertext& ct, const SecretKeys& keys, const TfheParams& params);
Torus phase(const LweCiphertext& ct, const SecretKeys& keys);

// Noiseless, zero-mask encryption.
LweCiphertext lwe_trivial(Torus mu, std::size_t dimension, LweDim dim);

LweCiphertext lwe_add(const LweCiphertext& a, const LweCiphertext& b);
LweCiphertext lwe_sub(const LweCiphertext& a, const LweCiphertext& b);
LweCiphertext lwe_mul_const(const LweCiphertext& a, std::int64_t c);

GlweCiphertext glwe_encrypt(const TorusPolynomial& mu, const std::vector<IntPolynomial>& key,
                            double stddev, Prng& rng, const FftPlan& plan);
TorusPolynomial glwe_phase(const GlweCiphertext& c, const std::vector<IntPolynomial>& key,
                           const FftPlan& plan);

GgswCiphertext ggsw_encrypt(std::int64_t mu, const std::vector<IntPolynomial>& key,
                            const GadgetParams& g, double stddev, Prng& rng, const FftPlan& plan);
GgswSpectrum ggsw_spectrum(const GgswCiphertext& g, const GadgetParams& gadget, const FftPlan& plan,
                           FftMode mode);

LweCiphertext key_switch(const LweCiphertext& ct, const KeySwitchingKey& ksk,
                         const TfheParams& params);

std::vector<std::size_t> mod_switch_lwe(const LweCiphertext& ct, std::size_t degree);

// g (x) c through the transform. Uses g.spectrum when it matches `mode`.
GlweCiphertext external_product(const GgswCiphertext& g, const GlweCiphertext& c,
                                const GadgetParams& gadget, const FftPlan& plan, FftMode mode);
// Same product with O(N^2) convolutions.
GlweCiphertext external_product_schoolbook(const GgswCiphertext& g, const GlweCiphertext& c,
                                           const GadgetParams& gadget);

// c0 + g (x) (c1 - c0).
GlweCiphertext cmux(const GgswCiphertext& g, const GlweCiphertext& c0, const GlweCiphertext& c1,
                    const GadgetParams& gadget, const FftPlan& plan, FftMode mode);

GlweCiphertext blind_rotate(const GlweCiphertext& lut, std::span<const std::size_t> msct,
                            const BootstrappingKey& bsk, const TfheParams& params,
                            const FftPlan& plan, FftMode mode, PbsTrace* trace = nullptr);

LweCiphertext sample_extract(const GlweCiphertext& c);

LookupTable encode_lut(std::span<const std::uint64_t> entries, const TfheParams& params);

// Key switch, modulus switch, blind rotation, sample extraction.
LweCiphertext pbs(const LweCiphertext& ct, const LookupTable& lut, const KeySet& keys,
                  const FftPlan& plan, FftMode mode = FftMode::reference,
                  PbsTrace* trace = nullptr);

}  // namespace mbtfhe

#endif  // MBTFHE_TFHE_HPP_
