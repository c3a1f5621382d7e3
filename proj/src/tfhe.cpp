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

#include "mbtfhe/tfhe.hpp"

#include <stdexcept>
#include <string>

namespace mbtfhe {

namespace {

void require_same_shape(const LweCiphertext& a, const LweCiphertext& b) {
  if (a.dim != b.dim || a.mask.size() != b.mask.size()) {
    throw std::invalid_argument("LWE dimension mismatch: " + std::to_string(a.mask.size()) +
                                " vs " + std::to_string(b.mask.size()));
  }
}

void require_same_shape(const GlweCiphertext& a, const GlweCiphertext& b) {
  if (a.k() != b.k() || a.degree() != b.degree()) {
    throw std::invalid_argument("GLWE shape mismatch");
  }
}

TorusPolynomial random_poly(Prng& rng, std::size_t n) {
  TorusPolynomial p(n);
  for (auto& c : p.coeffs()) c = rng.uniform_torus();
  return p;
}

IntPolynomial random_binary_poly(Prng& rng, std::size_t n) {
  IntPolynomial p(n);
  for (auto& c : p.coeffs()) c = rng.uniform_bit();
  return p;
}

// Spectrum limb width for products of gadget digits against GGSW rows.
unsigned ggsw_limb_bits(const GadgetParams& gadget, std::size_t rows, const FftPlan& plan,
                        FftMode mode) {
  return limb_bits_for(mode, plan.degree(), gadget.base_log, rows);
}

}  // namespace

GlweCiphertext GlweCiphertext::zeros(std::size_t k, std::size_t degree) {
  GlweCiphertext c;
  c.mask.assign(k, TorusPolynomial(degree));
  c.body = TorusPolynomial(degree);
  return c;
}

GlweCiphertext& GlweCiphertext::operator+=(const GlweCiphertext& o) {
  require_same_shape(*this, o);
  for (std::size_t j = 0; j < mask.size(); ++j) mask[j] += o.mask[j];
  body += o.body;
  return *this;
}

GlweCiphertext& GlweCiphertext::operator-=(const GlweCiphertext& o) {
  require_same_shape(*this, o);
  for (std::size_t j = 0; j < mask.size(); ++j) mask[j] -= o.mask[j];
  body -= o.body;
  return *this;
}

GlweCiphertext glwe_monomial_mul(const GlweCiphertext& c, std::size_t e) {
  GlweCiphertext out;
  out.mask.reserve(c.k());
  for (const auto& m : c.mask) out.mask.push_back(poly_monomial_mul(m, e));
  out.body = poly_monomial_mul(c.body, e);
  return out;
}

std::vector<std::int64_t> SecretKeys::long_key() const {
  std::vector<std::int64_t> out;
  for (const auto& p : glwe_key) out.insert(out.end(), p.coeffs().begin(), p.coeffs().end());
  return out;
}

Torus encode_message(std::uint64_t m, const TfheParams& params) {
  if (m >= params.message_space()) {
    throw std::invalid_argument("message " + std::to_string(m) + " does not fit in " +
                                std::to_string(params.width) + " bits");
  }
  return static_cast<Torus>(m) * params.delta();
}

std::uint64_t decode_message(Torus phase, const TfheParams& params) {
  const unsigned shift = 64 - (params.width + params.padding_bits);
  const Torus half = Torus{1} << (shift - 1);
  const std::uint64_t two_p = params.message_space() << params.padding_bits;
  const std::uint64_t v = ((phase + half) >> shift) % two_p;
  return v % params.message_space();
}

LweCiphertext lwe_encrypt(Torus mu, std::span<const std::int64_t> key, double stddev, Prng& rng,
                          LweDim dim) {
  LweCiphertext ct;
  ct.dim = dim;
  ct.mask.resize(key.size());
  Torus body = mu;
  for (std::size_t i = 0; i < key.size(); ++i) {
    ct.mask[i] = rng.uniform_torus();
    body += torus_scalar_mul(key[i], ct.mask[i]);
  }
  ct.body = body + rng.gaussian_torus(stddev);
  return ct;
}

Torus lwe_phase(const LweCiphertext& ct, std::span<const std::int64_t> key) {
  if (key.size() != ct.mask.size()) throw std::invalid_argument("key does not match LWE dimension");
  Torus p = ct.body;
  for (std::size_t i = 0; i < key.size(); ++i) p -= torus_scalar_mul(key[i], ct.mask[i]);
  return p;
}

LweCiphertext encrypt(std::uint64_t m, const SecretKeys& keys, const TfheParams& params,
                      Prng& rng) {
  const auto key = keys.long_key();
  return lwe_encrypt(encode_message(m, params), key, params.noise_std_long, rng,
                     LweDim::long_key);
}

Torus phase(const LweCiphertext& ct, const SecretKeys& keys) {
  if (ct.dim == LweDim::short_key) return lwe_phase(ct, keys.short_key);
  return lwe_phase(ct, keys.long_key());
}

std::uint64_t decrypt(const LweCiphertext& ct, const SecretKeys& keys, const TfheParams& params) {
  return decode_message(phase(ct, keys), params);
}

LweCiphertext lwe_trivial(Torus mu, std::size_t dimension, LweDim dim) {
  LweCiphertext ct;
  ct.mask.assign(dimension, 0);
  ct.body = mu;
  ct.dim = dim;
  return ct;
}

LweCiphertext lwe_add(const LweCiphertext& a, const LweCiphertext& b) {
  require_same_shape(a, b);
  LweCiphertext out = a;
  for (std::size_t i = 0; i < out.mask.size(); ++i) out.mask[i] += b.mask[i];
  out.body += b.body;
  return out;
}

LweCiphertext lwe_sub(const LweCiphertext& a, const LweCiphertext& b) {
  require_same_shape(a, b);
  LweCiphertext out = a;
  for (std::size_t i = 0; i < out.mask.size(); ++i) out.mask[i] -= b.mask[i];
  out.body -= b.body;
  return out;
}

LweCiphertext lwe_mul_const(const LweCiphertext& a, std::int64_t c) {
  LweCiphertext out = a;
  for (auto& m : out.mask) m = torus_scalar_mul(c, m);
  out.body = torus_scalar_mul(c, out.body);
  return out;
}

GlweCiphertext glwe_encrypt(const TorusPolynomial& mu, const std::vector<IntPolynomial>& key,
                            double stddev, Prng& rng, const FftPlan& plan) {
  const std::size_t n = mu.degree();
  GlweCiphertext c;
  c.body = mu;
  for (const auto& s : key) {
    c.mask.push_back(random_poly(rng, n));
    c.body += negacyclic_mul(s, c.mask.back(), plan, FftMode::reference);
  }
  for (auto& b : c.body.coeffs()) b += rng.gaussian_torus(stddev);
  return c;
}

TorusPolynomial glwe_phase(const GlweCiphertext& c, const std::vector<IntPolynomial>& key,
                           const FftPlan& plan) {
  if (key.size() != c.k()) throw std::invalid_argument("key does not match GLWE dimension");
  TorusPolynomial p = c.body;
  for (std::size_t j = 0; j < key.size(); ++j) {
    p -= negacyclic_mul(key[j], c.mask[j], plan, FftMode::reference);
  }
  return p;
}

GgswCiphertext ggsw_encrypt(std::int64_t mu, const std::vector<IntPolynomial>& key,
                            const GadgetParams& g, double stddev, Prng& rng, const FftPlan& plan) {
  const std::size_t n = plan.degree();
  const std::size_t k = key.size();
  GgswCiphertext out;
  out.rows.reserve((k + 1) * g.depth);
  const TorusPolynomial zero(n);
  for (std::size_t j = 0; j <= k; ++j) {
    for (unsigned l = 1; l <= g.depth; ++l) {
      GlweCiphertext row = glwe_encrypt(zero, key, stddev, rng, plan);
      row.poly(j)[0] += torus_scalar_mul(mu, g.factor(l));
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

GgswSpectrum ggsw_spectrum(const GgswCiphertext& g, const GadgetParams& gadget, const FftPlan& plan,
                           FftMode mode) {
  GgswSpectrum s;
  s.mode = mode;
  s.cols = g.rows.empty() ? 0 : g.rows[0].k() + 1;
  s.limb_bits = ggsw_limb_bits(gadget, g.rows.size(), plan, mode);
  s.cells.reserve(g.rows.size() * s.cols);
  for (const auto& row : g.rows) {
    for (std::size_t c = 0; c < s.cols; ++c) {
      s.cells.push_back(forward_fft(row.poly(c), plan, mode, s.limb_bits));
    }
  }
  return s;
}

void prepare_bsk(BootstrappingKey& bsk, const TfheParams& params, const FftPlan& plan,
                 FftMode mode) {
  for (auto& g : bsk.ggsw) g.spectrum = ggsw_spectrum(g, params.pbs_gadget, plan, mode);
}

KeySet keygen(const TfheParams& params, const Seed& seed, FftMode mode) {
  params.validate();
  const auto plan = build_plan(params.poly_degree);
  const Prng root(seed);
  KeySet ks;
  ks.params = params;

  Prng key_rng = root.fork(1);
  ks.secret.short_key.resize(params.n);
  for (auto& b : ks.secret.short_key) b = key_rng.uniform_bit();
  for (std::size_t j = 0; j < params.k; ++j) {
    ks.secret.glwe_key.push_back(random_binary_poly(key_rng, params.poly_degree));
  }

  const Prng bsk_root = root.fork(2);
  ks.bsk.ggsw.reserve(params.n);
  for (std::size_t i = 0; i < params.n; ++i) {
    Prng r = bsk_root.fork(i);
    ks.bsk.ggsw.push_back(ggsw_encrypt(ks.secret.short_key[i], ks.secret.glwe_key,
                                       params.pbs_gadget, params.noise_std_long, r, plan));
  }
  prepare_bsk(ks.bsk, params, plan, mode);

  const Prng ksk_root = root.fork(3);
  const auto long_key = ks.secret.long_key();
  ks.ksk.n_long = params.n_long();
  ks.ksk.depth = params.ks_gadget.depth;
  ks.ksk.table.reserve(ks.ksk.n_long * ks.ksk.depth);
  for (unsigned l = 1; l <= params.ks_gadget.depth; ++l) {
    for (std::size_t i = 0; i < ks.ksk.n_long; ++i) {
      Prng r = ksk_root.fork((static_cast<std::uint64_t>(l) << 32) | i);
      const Torus mu = torus_scalar_mul(long_key[i], params.ks_gadget.factor(l));
      ks.ksk.table.push_back(lwe_encrypt(mu, ks.secret.short_key, params.noise_std_short, r,
                                         LweDim::short_key));
    }
  }
  return ks;
}

LweCiphertext key_switch(const LweCiphertext& ct, const KeySwitchingKey& ksk,
                         const TfheParams& params) {
  if (ct.dim != LweDim::long_key || ct.mask.size() != ksk.n_long) {
    throw std::invalid_argument("key switch expects a long LWE of dimension " +
                                std::to_string(ksk.n_long));
  }
  const std::size_t n = params.n;
  LweCiphertext out = lwe_trivial(ct.body, n, LweDim::short_key);
  for (std::size_t i = 0; i < ksk.n_long; ++i) {
    const auto digits = gadget_decompose(ct.mask[i], params.ks_gadget);
    for (unsigned l = 1; l <= ksk.depth; ++l) {
      const std::int64_t d = digits[l - 1];
      if (d == 0) continue;
      const auto& e = ksk.at(i, l);
      for (std::size_t j = 0; j < n; ++j) out.mask[j] -= torus_scalar_mul(d, e.mask[j]);
      out.body -= torus_scalar_mul(d, e.body);
    }
  }
  return out;
}

std::vector<std::size_t> mod_switch_lwe(const LweCiphertext& ct, std::size_t degree) {
  std::vector<std::size_t> out;
  out.reserve(ct.mask.size() + 1);
  for (auto a : ct.mask) out.push_back(mod_switch(a, 2 * degree));
  out.push_back(mod_switch(ct.body, 2 * degree));
  return out;
}

GlweCiphertext external_product(const GgswCiphertext& g, const GlweCiphertext& c,
                                const GadgetParams& gadget, const FftPlan& plan, FftMode mode) {
  const std::size_t cols = c.k() + 1;
  const std::size_t rows = cols * gadget.depth;
  if (g.rows.size() != rows) throw std::invalid_argument("GGSW/GLWE shape mismatch");
  if (c.degree() != plan.degree()) throw std::invalid_argument("plan does not match degree");

  std::optional<GgswSpectrum> local;
  const GgswSpectrum* spec = nullptr;
  const unsigned limb = ggsw_limb_bits(gadget, rows, plan, mode);
  if (g.spectrum && g.spectrum->mode == mode && g.spectrum->limb_bits == limb) {
    spec = &*g.spectrum;
  } else {
    local = ggsw_spectrum(g, gadget, plan, mode);
    spec = &*local;
  }

  std::vector<TorusSpectrum> acc;
  acc.reserve(cols);
  for (std::size_t col = 0; col < cols; ++col) {
    acc.push_back(zero_accumulator(plan, mode, limb, gadget.base_log, rows));
  }
  for (std::size_t j = 0; j < cols; ++j) {
    const auto digits = poly_gadget_decompose(c.poly(j), gadget);
    for (unsigned l = 0; l < gadget.depth; ++l) {
      const std::size_t row = j * gadget.depth + l;
      const auto f = forward_fft(digits[l], plan, mode, gadget.base_log);
      for (std::size_t col = 0; col < cols; ++col) pointwise_mac(acc[col], f, spec->cell(row, col));
    }
  }
  GlweCiphertext out = GlweCiphertext::zeros(c.k(), c.degree());
  for (std::size_t col = 0; col < cols; ++col) out.poly(col) = inverse_fft(acc[col], plan);
  return out;
}

GlweCiphertext external_product_schoolbook(const GgswCiphertext& g, const GlweCiphertext& c,
                                           const GadgetParams& gadget) {
  const std::size_t cols = c.k() + 1;
  if (g.rows.size() != cols * gadget.depth) throw std::invalid_argument("GGSW/GLWE shape mismatch");
  GlweCiphertext out = GlweCiphertext::zeros(c.k(), c.degree());
  for (std::size_t j = 0; j < cols; ++j) {
    const auto digits = poly_gadget_decompose(c.poly(j), gadget);
    for (unsigned l = 0; l < gadget.depth; ++l) {
      const auto& row = g.rows[j * gadget.depth + l];
      for (std::size_t col = 0; col < cols; ++col) {
        out.poly(col) += schoolbook_negacyclic_mul(digits[l], row.poly(col));
      }
    }
  }
  return out;
}

GlweCiphertext cmux(const GgswCiphertext& g, const GlweCiphertext& c0, const GlweCiphertext& c1,
                    const GadgetParams& gadget, const FftPlan& plan, FftMode mode) {
  GlweCiphertext diff = c1;
  diff -= c0;
  GlweCiphertext out = external_product(g, diff, gadget, plan, mode);
  out += c0;
  return out;
}

GlweCiphertext blind_rotate(const GlweCiphertext& lut, std::span<const std::size_t> msct,
                            const BootstrappingKey& bsk, const TfheParams& params,
                            const FftPlan& plan, FftMode mode, PbsTrace* trace) {
  if (msct.size() != bsk.size() + 1) {
    throw std::invalid_argument("mod-switched LWE has " + std::to_string(msct.size()) +
                                " entries, expected " + std::to_string(bsk.size() + 1));
  }
  const std::size_t two_n = 2 * lut.degree();
  const std::size_t n = bsk.size();
  GlweCiphertext acc = glwe_monomial_mul(lut, (two_n - msct[n] % two_n) % two_n);
  for (std::size_t i = 0; i < n; ++i) {
    if (trace != nullptr) ++trace->cmux;
    // A zero rotation makes both CMux inputs equal, so the result is acc itself.
    if (msct[i] == 0) continue;
    const GlweCiphertext rotated = glwe_monomial_mul(acc, msct[i]);
    acc = cmux(bsk.ggsw[i], acc, rotated, params.pbs_gadget, plan, mode);
    if (trace != nullptr) ++trace->external_products;
  }
  return acc;
}

LweCiphertext sample_extract(const GlweCiphertext& c) {
  const std::size_t n = c.degree();
  LweCiphertext out;
  out.dim = LweDim::long_key;
  out.mask.resize(c.k() * n);
  for (std::size_t j = 0; j < c.k(); ++j) {
    const auto& a = c.mask[j];
    out.mask[j * n] = a[0];
    for (std::size_t i = 1; i < n; ++i) out.mask[j * n + i] = torus_neg(a[n - i]);
  }
  out.body = c.body[0];
  return out;
}

LookupTable encode_lut(std::span<const std::uint64_t> entries, const TfheParams& params) {
  const std::uint64_t p = params.message_space();
  if (entries.size() != p) {
    throw std::invalid_argument("lookup table has " + std::to_string(entries.size()) +
                                " entries, expected " + std::to_string(p));
  }
  const std::size_t n = params.poly_degree;
  const std::size_t box = n / p;
  const std::size_t half = box / 2;
  TorusPolynomial v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = encode_message(entries[i / box], params);
  LookupTable t;
  t.entries.assign(entries.begin(), entries.end());
  t.encoded = GlweCiphertext::zeros(params.k, n);
  // Shift left by half a box so rounding noise on either side lands in the box.
  for (std::size_t i = 0; i < n; ++i) {
    t.encoded.body[i] = i + half < n ? v[i + half] : torus_neg(v[i + half - n]);
  }
  return t;
}

LweCiphertext pbs(const LweCiphertext& ct, const LookupTable& lut, const KeySet& keys,
                  const FftPlan& plan, FftMode mode, PbsTrace* trace) {
  const LweCiphertext small = key_switch(ct, keys.ksk, keys.params);
  if (trace != nullptr) ++trace->key_switches;
  const auto msct = mod_switch_lwe(small, keys.params.poly_degree);
  const GlweCiphertext acc = blind_rotate(lut.encoded, msct, keys.bsk, keys.params, plan, mode, trace);
  return sample_extract(acc);
}

}  // namespace mbtfhe
