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

#include <cmath>
#include <numeric>

#include "doctest.h"
#include "mbtfhe/serialize.hpp"
#include "mbtfhe/tfhe.hpp"

using namespace mbtfhe;

namespace {

TfheParams small_params(std::size_t degree, unsigned width, double noise) {
  TfheParams p;
  p.name = "small";
  p.n = 16;
  p.poly_degree = degree;
  p.k = 1;
  p.pbs_gadget = {8, 2};
  p.ks_gadget = {4, 5};
  p.noise_std_short = noise;
  p.noise_std_long = noise;
  p.width = width;
  return p;
}

std::vector<std::uint64_t> table_of(const TfheParams& p, std::uint64_t (*f)(std::uint64_t)) {
  std::vector<std::uint64_t> t(p.message_space());
  for (std::uint64_t i = 0; i < t.size(); ++i) t[i] = f(i);
  return t;
}

std::uint64_t identity(std::uint64_t x) { return x; }

// Signed torus distance in units of 2^-64.
double signed_error(Torus a, Torus b) { return static_cast<double>(torus_signed(a - b)); }

TorusPolynomial random_poly(Prng& rng, std::size_t n) {
  TorusPolynomial p(n);
  for (auto& c : p.coeffs()) c = rng.uniform_torus();
  return p;
}

GgswCiphertext random_ggsw(Prng& rng, std::size_t k, std::size_t n, const GadgetParams& g) {
  GgswCiphertext out;
  for (std::size_t r = 0; r < (k + 1) * g.depth; ++r) {
    GlweCiphertext row = GlweCiphertext::zeros(k, n);
    for (std::size_t j = 0; j <= k; ++j) row.poly(j) = random_poly(rng, n);
    out.rows.push_back(row);
  }
  return out;
}

GlweCiphertext random_glwe(Prng& rng, std::size_t k, std::size_t n) {
  GlweCiphertext c = GlweCiphertext::zeros(k, n);
  for (std::size_t j = 0; j <= k; ++j) c.poly(j) = random_poly(rng, n);
  return c;
}

}  // namespace

TEST_CASE("rng is deterministic and forks independently") {
  Prng a(seed_from_u64(7)), b(seed_from_u64(7));
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Prng c(seed_from_u64(7));
  Prng f1 = c.fork(1), f2 = c.fork(2);
  CHECK(f1.next_u64() != f2.next_u64());
  CHECK(seed_from_string(seed_to_hex(seed_from_u64(9))) == seed_from_u64(9));
  // Box-Muller moments.
  Prng g(seed_from_u64(3));
  double s = 0, s2 = 0;
  const int count = 200000;
  for (int i = 0; i < count; ++i) {
    const double v = g.normal();
    s += v;
    s2 += v * v;
  }
  CHECK(std::fabs(s / count) < 0.01);
  CHECK(std::fabs(s2 / count - 1.0) < 0.02);
}

TEST_CASE("parameter presets") {
  const auto p = load_params("desk-w3");
  CHECK(p.n == 185);
  CHECK(p.poly_degree == 1024);
  CHECK(p.k == 1);
  CHECK(p.n_long() == 1024);
  CHECK(p.width == 3);
  CHECK(p.delta() == Torus{1} << 60);
  const auto cnn = load_params("cnn20");
  CHECK(cnn.n == 737);
  CHECK(cnn.poly_degree == 2048);
  CHECK(cnn.width == 6);
  CHECK_THROWS(load_params("no-such-set"));
  auto bad = p;
  bad.width = 11;
  CHECK_THROWS(bad.validate());
  CHECK(parse_power_value("2^-3") == 0.125);
  const auto kv = parse_key_values("n=10\nN=64\n# c\nwidth = 2\n", "inline");
  const auto q = params_from_key_values(kv, "inline");
  CHECK(q.n == 10);
  CHECK(q.width == 2);
  CHECK(q.hash() != p.hash());
}

TEST_CASE("keygen") {
  const auto p = load_params("desk-tiny");
  const auto k1 = keygen(p, seed_from_u64(1));
  const auto k2 = keygen(p, seed_from_u64(1));
  CHECK(encode_keyset(k1) == encode_keyset(k2));
  const auto k3 = keygen(p, seed_from_u64(2));
  CHECK(encode_keyset(k1) != encode_keyset(k3));
  CHECK(k1.bsk.size() == p.n);
  CHECK(k1.ksk.table.size() == p.n_long() * p.ks_gadget.depth);
  for (auto b : k1.secret.short_key) CHECK((b == 0 || b == 1));
  // Round trip through the binary format.
  const auto back = decode_keyset(encode_keyset(k1), p);
  CHECK(encode_keyset(back) == encode_keyset(k1));
  auto other = p;
  other.width = 2;
  CHECK_THROWS(decode_keyset(encode_keyset(k1), other));
}

TEST_CASE("full-size key shapes") {
  const auto p = load_params("cnn20");
  const auto keys = keygen(p, seed_from_u64(5));
  CHECK(keys.bsk.size() == 737);
  CHECK(keys.bsk.ggsw[0].rows.size() == (p.k + 1) * p.pbs_gadget.depth);
}

TEST_CASE("encryption round trips") {
  auto p = small_params(64, 3, 0.0);
  const auto keys = keygen(p, seed_from_u64(11));
  Prng rng(seed_from_u64(12));
  for (std::uint64_t m = 0; m < p.message_space(); ++m) {
    CHECK(decrypt(encrypt(m, keys.secret, p, rng), keys.secret, p) == m);
  }
  // Zero noise: body is a function of the mask only.
  const auto ct = encrypt(5, keys.secret, p, rng);
  CHECK(lwe_phase(ct, keys.secret.long_key()) == encode_message(5, p));
  const auto zero = lwe_trivial(0, p.n_long(), LweDim::long_key);
  CHECK(zero.body == 0);
  CHECK_THROWS(encode_message(8, p));

  const auto w3 = load_params("desk-w3");
  const auto k3 = keygen(w3, seed_from_u64(13));
  int ok = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::uint64_t m = t % 8;
    ok += decrypt(encrypt(m, k3.secret, w3, rng), k3.secret, w3) == m;
  }
  CHECK(ok == 1000);
}

TEST_CASE("decode rounds to the nearest message") {
  const auto p = small_params(64, 3, 0.0);
  const Torus d = p.delta();
  CHECK(decode_message(3 * d + d / 2 - 1, p) == 3);
  CHECK(decode_message(3 * d + d / 2, p) == 4);
  CHECK(decode_message(Torus{0} - d / 4, p) == 0);
}

TEST_CASE("linear operations") {
  auto p = load_params("desk-w4");
  const auto keys = keygen(p, seed_from_u64(21));
  Prng rng(seed_from_u64(22));
  const auto a = encrypt(7, keys.secret, p, rng);
  CHECK(decrypt(lwe_add(a, lwe_trivial(0, p.n_long(), LweDim::long_key)), keys.secret, p) == 7);
  CHECK(lwe_mul_const(a, 1) == a);
  CHECK(decrypt(lwe_mul_const(a, 2), keys.secret, p) == 14);
  CHECK(decrypt(lwe_sub(a, encrypt(3, keys.secret, p, rng)), keys.secret, p) == 4);
  int ok = 0;
  for (int t = 0; t < 100; ++t) {
    const auto s = lwe_add(encrypt(2, keys.secret, p, rng), encrypt(3, keys.secret, p, rng));
    ok += decrypt(s, keys.secret, p) == 5;
  }
  CHECK(ok == 100);
  // Weighted sums stay exact while noise is far below the half window.
  std::uint64_t expect = 0;
  LweCiphertext acc = lwe_trivial(0, p.n_long(), LweDim::long_key);
  const std::int64_t coef[] = {3, -2, 5, 1, -1};
  const std::uint64_t msgs[] = {1, 4, 2, 9, 6};
  for (int i = 0; i < 5; ++i) {
    acc = lwe_add(acc, lwe_mul_const(encrypt(msgs[i], keys.secret, p, rng), coef[i]));
    expect = (expect + static_cast<std::uint64_t>(coef[i]) * msgs[i]) % p.message_space();
  }
  CHECK(decrypt(acc, keys.secret, p) == expect);
  CHECK_THROWS(lwe_add(a, lwe_trivial(0, 3, LweDim::long_key)));
}

TEST_CASE("key switching") {
  auto p = load_params("desk-w3");
  auto zp = p;
  zp.noise_std_short = 0;
  zp.noise_std_long = 0;
  const auto zkeys = keygen(zp, seed_from_u64(31));
  const auto zero = key_switch(lwe_trivial(0, p.n_long(), LweDim::long_key), zkeys.ksk, zp);
  CHECK(zero.dim == LweDim::short_key);
  CHECK(zero.body == 0);
  CHECK(std::all_of(zero.mask.begin(), zero.mask.end(), [](Torus t) { return t == 0; }));

  const auto keys = keygen(p, seed_from_u64(32));
  Prng rng(seed_from_u64(33));
  int ok = 0;
  for (std::uint64_t m = 0; m < 8; ++m) {
    for (int t = 0; t < 100; ++t) {
      const auto s = key_switch(encrypt(m, keys.secret, p, rng), keys.ksk, p);
      ok += decrypt(s, keys.secret, p) == m;
    }
  }
  CHECK(ok == 800);
  CHECK_THROWS(key_switch(lwe_trivial(0, 5, LweDim::long_key), keys.ksk, p));
}

TEST_CASE("key switching noise stays under the analytic bound") {
  const auto p = load_params("desk-tiny");
  const auto keys = keygen(p, seed_from_u64(41));
  Prng rng(seed_from_u64(42));
  const auto long_key = keys.secret.long_key();
  const int trials = 10000;
  double sum = 0, sum2 = 0;
  for (int t = 0; t < trials; ++t) {
    LweCiphertext in = lwe_trivial(0, p.n_long(), LweDim::long_key);
    for (auto& m : in.mask) m = rng.uniform_torus();
    in.body = torus_neg(lwe_phase(in, long_key));  // zero-noise encryption of 0
    const auto out = key_switch(in, keys.ksk, p);
    const double e = signed_error(lwe_phase(out, keys.secret.short_key), 0) * 0x1.0p-64;
    sum += e;
    sum2 += e * e;
  }
  const double var = sum2 / trials - (sum / trials) * (sum / trials);
  const double half_base = std::ldexp(1.0, p.ks_gadget.base_log - 1);
  const double ksk_term = double(p.n_long()) * p.ks_gadget.depth * half_base * half_base *
                          p.noise_std_short * p.noise_std_short;
  const double rounding = std::ldexp(1.0, -static_cast<int>(p.ks_gadget.total_bits()));
  const double decomp_term = double(p.n_long()) * rounding * rounding / 12.0;
  CHECK(var > 0);
  CHECK(var <= ksk_term + decomp_term);
}

TEST_CASE("modulus switching of an LWE ciphertext") {
  LweCiphertext ct = lwe_trivial(Torus{1} << 63, 3, LweDim::short_key);
  ct.mask = {0, Torus{1} << 62, (Torus{1} << 63) + (Torus{1} << 52)};
  const auto ms = mod_switch_lwe(ct, 1024);
  CHECK(ms == std::vector<std::size_t>{0, 512, 1025, 1024});
}

TEST_CASE("external product") {
  for (std::size_t n : {8u, 64u}) {
    const auto plan = build_plan(n);
    const GadgetParams g{8, 2};
    Prng rng(seed_from_u64(50 + n));
    for (auto mode : {FftMode::reference, FftMode::fixed48}) {
      for (int t = 0; t < 100; ++t) {
        const auto gg = random_ggsw(rng, 1, n, g);
        const auto c = random_glwe(rng, 1, n);
        REQUIRE(external_product(gg, c, g, plan, mode) == external_product_schoolbook(gg, c, g));
      }
    }
  }

  auto p = small_params(64, 3, 0.0);
  const auto plan = build_plan(64);
  Prng rng(seed_from_u64(60));
  const auto keys = keygen(p, seed_from_u64(61));
  TorusPolynomial msg(64);
  for (std::size_t i = 0; i < 64; ++i) msg[i] = encode_message(i % 8, p);
  const auto c = glwe_encrypt(msg, keys.secret.glwe_key, 0.0, rng, plan);

  const auto g0 = ggsw_encrypt(0, keys.secret.glwe_key, p.pbs_gadget, 0.0, rng, plan);
  const auto z = external_product(g0, c, p.pbs_gadget, plan, FftMode::reference);
  CHECK(glwe_phase(z, keys.secret.glwe_key, plan) == TorusPolynomial(64));

  const auto g1 = ggsw_encrypt(1, keys.secret.glwe_key, p.pbs_gadget, 0.0, rng, plan);
  const auto o = glwe_phase(external_product(g1, c, p.pbs_gadget, plan, FftMode::reference),
                            keys.secret.glwe_key, plan);
  for (std::size_t i = 0; i < 64; ++i) CHECK(decode_message(o[i], p) == i % 8);
}

TEST_CASE("cmux") {
  auto p = small_params(64, 3, 0x1.0p-40);
  const auto plan = build_plan(64);
  Prng rng(seed_from_u64(70));
  const auto keys = keygen(p, seed_from_u64(71));
  TorusPolynomial m0(64), m1(64);
  for (std::size_t i = 0; i < 64; ++i) {
    m0[i] = encode_message(i % 8, p);
    m1[i] = encode_message((i * 3) % 8, p);
  }
  const auto c0 = glwe_encrypt(m0, keys.secret.glwe_key, p.noise_std_long, rng, plan);
  const auto c1 = glwe_encrypt(m1, keys.secret.glwe_key, p.noise_std_long, rng, plan);
  for (int bit : {0, 1}) {
    const auto g = ggsw_encrypt(bit, keys.secret.glwe_key, p.pbs_gadget, p.noise_std_long, rng, plan);
    const auto out = glwe_phase(cmux(g, c0, c1, p.pbs_gadget, plan, FftMode::reference),
                                keys.secret.glwe_key, plan);
    const auto& want = bit ? m1 : m0;
    for (std::size_t i = 0; i < 64; ++i) CHECK(decode_message(out[i], p) == decode_message(want[i], p));
    const auto same = glwe_phase(cmux(g, c0, c0, p.pbs_gadget, plan, FftMode::fixed48),
                                 keys.secret.glwe_key, plan);
    for (std::size_t i = 0; i < 64; ++i) CHECK(decode_message(same[i], p) == i % 8);
  }
}

TEST_CASE("lookup table encoding") {
  auto p = small_params(8, 2, 0.0);
  const auto t = encode_lut(table_of(p, identity), p);
  const Torus d = Torus{1} << 61;
  CHECK(t.encoded.body.coeffs()[0] == 0);
  const std::vector<Torus> want{0, d, d, 2 * d, 2 * d, 3 * d, 3 * d, 0};
  CHECK(std::vector<Torus>(t.encoded.body.coeffs().begin(), t.encoded.body.coeffs().end()) == want);
  CHECK(t.encoded.mask[0] == TorusPolynomial(8));

  // A constant table is the constant polynomial shifted by half a box, so the
  // wrapped tail carries the negated constant.
  const std::vector<std::uint64_t> c(4, 2);
  const auto tc = encode_lut(c, p);
  for (std::size_t i = 0; i < 7; ++i) CHECK(tc.encoded.body[i] == 2 * d);
  CHECK(tc.encoded.body[7] == torus_neg(2 * d));

  CHECK_THROWS(encode_lut(std::vector<std::uint64_t>(3, 0), p));
  CHECK_THROWS(encode_lut(std::vector<std::uint64_t>{0, 1, 2, 4}, p));
}

TEST_CASE("sample extraction") {
  const std::size_t n = 64;
  const auto plan = build_plan(n);
  Prng rng(seed_from_u64(80));
  GlweCiphertext triv = GlweCiphertext::zeros(1, n);
  triv.body[0] = 12345;
  const auto e = sample_extract(triv);
  CHECK(e.body == 12345);
  CHECK(e.dim == LweDim::long_key);
  CHECK(e.mask.size() == n);
  CHECK(std::all_of(e.mask.begin(), e.mask.end(), [](Torus t) { return t == 0; }));

  for (std::size_t k : {1u, 2u}) {
    SecretKeys keys;
    for (std::size_t j = 0; j < k; ++j) {
      IntPolynomial s(n);
      for (auto& b : s.coeffs()) b = rng.uniform_bit();
      keys.glwe_key.push_back(s);
    }
    for (int t = 0; t < 20; ++t) {
      const auto c = random_glwe(rng, k, n);
      const auto lwe = sample_extract(c);
      CHECK(lwe.mask.size() == k * n);
      CHECK(lwe_phase(lwe, keys.long_key()) == glwe_phase(c, keys.glwe_key, plan)[0]);
    }
  }
}

TEST_CASE("blind rotation") {
  const auto p = load_params("desk-w3");
  const auto keys = keygen(p, seed_from_u64(90));
  const auto plan = build_plan(p.poly_degree);
  const auto lut = encode_lut(table_of(p, identity), p);

  PbsTrace trace;
  const std::vector<std::size_t> zeros(p.n + 1, 0);
  CHECK(blind_rotate(lut.encoded, zeros, keys.bsk, p, plan, FftMode::reference, &trace) ==
        lut.encoded);
  CHECK(trace.cmux == p.n);

  Prng rng(seed_from_u64(91));
  const std::vector<std::uint64_t> five(8, 5);
  const auto clut = encode_lut(five, p);
  for (std::uint64_t m = 0; m < 8; ++m) {
    const auto small = key_switch(encrypt(m, keys.secret, p, rng), keys.ksk, p);
    const auto ms = mod_switch_lwe(small, p.poly_degree);
    const auto acc = blind_rotate(clut.encoded, ms, keys.bsk, p, plan, FftMode::reference);
    CHECK(decode_message(glwe_phase(acc, keys.secret.glwe_key, plan)[0], p) == 5);
  }

  int ok = 0;
  for (std::uint64_t m = 0; m < 8; ++m) {
    for (int t = 0; t < 50; ++t) {
      const auto small = key_switch(encrypt(m, keys.secret, p, rng), keys.ksk, p);
      const auto ms = mod_switch_lwe(small, p.poly_degree);
      PbsTrace tr;
      const auto acc = blind_rotate(lut.encoded, ms, keys.bsk, p, plan, FftMode::reference, &tr);
      REQUIRE(tr.cmux == p.n);
      ok += decode_message(glwe_phase(acc, keys.secret.glwe_key, plan)[0], p) == m;
    }
  }
  CHECK(ok == 400);
}

TEST_CASE("programmable bootstrapping") {
  const auto p = load_params("desk-w3");
  const auto keys = keygen(p, seed_from_u64(100));
  const auto plan = build_plan(p.poly_degree);
  Prng rng(seed_from_u64(101));
  const auto id = encode_lut(table_of(p, identity), p);
  const auto relu = encode_lut(table_of(p, [](std::uint64_t x) -> std::uint64_t {
                                 return x >= 4 ? x : 0;
                               }),
                               p);
  for (std::uint64_t m = 0; m < 8; ++m) {
    for (int t = 0; t < 3; ++t) {
      const auto c = encrypt(m, keys.secret, p, rng);
      PbsTrace trace;
      CHECK(decrypt(pbs(c, id, keys, plan, FftMode::reference, &trace), keys.secret, p) == m);
      CHECK(trace.cmux == p.n);
      CHECK(trace.key_switches == 1);
      CHECK(decrypt(pbs(c, relu, keys, plan), keys.secret, p) == (m >= 4 ? m : 0));
    }
  }
  // Fixed-point datapath gives the same result.
  auto fixed_keys = keys;
  prepare_bsk(fixed_keys.bsk, p, plan, FftMode::fixed48);
  for (std::uint64_t m = 0; m < 8; ++m) {
    const auto c = encrypt(m, keys.secret, p, rng);
    CHECK(decrypt(pbs(c, id, fixed_keys, plan, FftMode::fixed48), keys.secret, p) == m);
  }
  // Chained bootstraps keep refreshing the noise.
  auto c = encrypt(6, keys.secret, p, rng);
  for (int i = 0; i < 20; ++i) c = pbs(c, id, keys, plan);
  CHECK(decrypt(c, keys.secret, p) == 6);
}

TEST_CASE("bootstrapping across message widths") {
  for (const char* name : {"desk-w2", "desk-w4", "desk-w5", "desk-w6"}) {
    const auto p = load_params(name);
    const auto keys = keygen(p, seed_from_u64(110));
    const auto plan = build_plan(p.poly_degree);
    const auto id = encode_lut(table_of(p, identity), p);
    Prng rng(seed_from_u64(111));
    const std::uint64_t step = p.message_space() > 16 ? 5 : 1;
    for (std::uint64_t m = 0; m < p.message_space(); m += step) {
      CHECK(decrypt(pbs(encrypt(m, keys.secret, p, rng), id, keys, plan), keys.secret, p) == m);
    }
  }
}

TEST_CASE("lwe list serialization") {
  const auto p = load_params("desk-tiny");
  const auto keys = keygen(p, seed_from_u64(120));
  Prng rng(seed_from_u64(121));
  std::vector<LweCiphertext> cts{encrypt(1, keys.secret, p, rng), encrypt(2, keys.secret, p, rng)};
  const auto words = encode_lwe_list(cts, p);
  CHECK(words[0] == kFileMagic);
  CHECK(decode_lwe_list(words, p) == cts);
  auto bad = words;
  bad.pop_back();
  CHECK_THROWS(decode_lwe_list(bad, p));
}
