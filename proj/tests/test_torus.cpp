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

#include <random>

#include "doctest.h"
#include "mbtfhe/torus.hpp"

using namespace mbtfhe;

namespace {

using u128 = unsigned __int128;

// Independent rounding oracle: nearest multiple of 2^(64-bits), ties to even
// multiple, computed in 128 bits.
Torus oracle_round(Torus a, unsigned bits) {
  if (bits >= 64) return a;
  const u128 step = u128{1} << (64 - bits);
  u128 q = u128(a) / step;
  const u128 r = u128(a) % step;
  if (2 * r > step || (2 * r == step && (q & 1))) ++q;
  return static_cast<Torus>(q * step);
}

// round(a * 2N / 2^64) with ties up, mod 2N.
std::size_t oracle_mod_switch(Torus a, std::size_t two_n) {
  const u128 num = u128(a) * two_n + (u128{1} << 63);
  return static_cast<std::size_t>(num >> 64) % two_n;
}

std::uint64_t torus_distance(Torus a, Torus b) {
  const Torus d = a - b;
  return std::min(d, Torus{0} - d);
}

TorusPolynomial random_poly(std::mt19937_64& rng, std::size_t n) {
  TorusPolynomial p(n);
  for (auto& c : p.coeffs()) c = rng();
  return p;
}

}  // namespace

TEST_CASE("torus add and scalar mul wrap") {
  CHECK(torus_add(0, 77) == 77);
  CHECK(torus_add(Torus{1} << 63, Torus{1} << 63) == 0);
  CHECK(torus_add(3, ~Torus{0}) == Torus((u128(3) + ~Torus{0}) % (u128{1} << 64)));
  CHECK(torus_add(3, ~Torus{0}) == 2);
  CHECK(torus_scalar_mul(1, 12345) == 12345);
  CHECK(torus_scalar_mul(0, 12345) == 0);
  CHECK(torus_scalar_mul(-1, 12345) == (u128{1} << 64) - 12345);

  std::mt19937_64 rng(1);
  for (int i = 0; i < 100000; ++i) {
    const Torus a = rng(), b = rng(), c = rng();
    REQUIRE(torus_add(torus_add(a, b), c) == torus_add(a, torus_add(b, c)));
    REQUIRE(torus_add(a, b) == torus_add(b, a));
  }
}

TEST_CASE("monomial multiplication") {
  std::mt19937_64 rng(2);
  const std::size_t n = 16;
  const auto p = random_poly(rng, n);
  CHECK(poly_monomial_mul(p, 0) == p);
  CHECK(poly_monomial_mul(p, n) == -p);
  const auto r1 = poly_monomial_mul(p, 1);
  CHECK(r1[0] == torus_neg(p[n - 1]));
  for (std::size_t i = 1; i < n; ++i) CHECK(r1[i] == p[i - 1]);
  for (std::size_t e = 0; e < 2 * n; ++e) {
    CHECK(poly_monomial_mul(poly_monomial_mul(p, e), 2 * n - e) == p);
  }
  CHECK(poly_monomial_mul_minus_one(p, 3) == poly_monomial_mul(p, 3) - p);
}

TEST_CASE("gadget decomposition") {
  GadgetParams g{8, 2};
  CHECK(gadget_decompose(0, g) == std::vector<std::int64_t>{0, 0});
  const auto top = gadget_decompose(Torus{1} << 63, g);
  CHECK(top == std::vector<std::int64_t>{-128, 0});
  CHECK(gadget_recompose(top, g) == Torus{1} << 63);

  std::mt19937_64 rng(3);
  const GadgetParams configs[] = {{8, 2}, {4, 5}, {10, 3}, {1, 1}, {16, 4}, {2, 32}};
  for (const auto& gp : configs) {
    for (int i = 0; i < 10000; ++i) {
      const Torus a = rng();
      const auto d = gadget_decompose(a, gp);
      REQUIRE(d.size() == gp.depth);
      for (auto v : d) {
        REQUIRE(v >= -static_cast<std::int64_t>(gp.base() / 2));
        REQUIRE(v <= static_cast<std::int64_t>(gp.base() / 2));
      }
      REQUIRE(gadget_recompose(d, gp) == oracle_round(a, gp.total_bits()));
      if (gp.total_bits() < 64) {
        REQUIRE(torus_distance(a, gadget_recompose(d, gp)) <=
                (std::uint64_t{1} << (63 - gp.total_bits())));
      }
    }
  }
}

TEST_CASE("polynomial decomposition is coefficientwise") {
  std::mt19937_64 rng(4);
  GadgetParams g{8, 3};
  const auto p = random_poly(rng, 32);
  const auto parts = poly_gadget_decompose(p, g);
  REQUIRE(parts.size() == 3);
  for (std::size_t i = 0; i < p.degree(); ++i) {
    const auto d = gadget_decompose(p[i], g);
    for (unsigned j = 0; j < 3; ++j) CHECK(parts[j][i] == d[j]);
  }
}

TEST_CASE("gadget params validation") {
  CHECK_THROWS(GadgetParams{0, 2}.validate());
  CHECK_THROWS(GadgetParams{8, 0}.validate());
  CHECK_THROWS(GadgetParams{9, 8}.validate());
  CHECK_NOTHROW(GadgetParams{8, 8}.validate());
}

TEST_CASE("mod switch") {
  CHECK(mod_switch(0, 2048) == 0);
  CHECK(mod_switch(Torus{1} << 63, 2048) == 1024);
  // An offset of 2^52 is exactly half a step at 2N = 2048; ties go up.
  CHECK(mod_switch((Torus{1} << 63) + (Torus{1} << 52), 2048) == 1025);
  CHECK(mod_switch((Torus{1} << 63) + (Torus{1} << 52) - 1, 2048) == 1024);
  CHECK(mod_switch(~Torus{0}, 2048) == 0);

  std::mt19937_64 rng(5);
  for (std::size_t two_n : {128u, 2048u, 8192u, 131072u}) {
    for (int i = 0; i < 10000; ++i) {
      const Torus a = rng();
      const auto m = mod_switch(a, two_n);
      REQUIRE(m == oracle_mod_switch(a, two_n));
      const Torus back = static_cast<Torus>((u128(m) << 64) / two_n);
      REQUIRE(torus_distance(a, back) <= (std::uint64_t{1} << 63) / two_n);
    }
  }
}

TEST_CASE("schoolbook negacyclic product") {
  const std::size_t n = 8;
  TorusPolynomial b(n);
  for (std::size_t i = 0; i < n; ++i) b[i] = i + 1;
  IntPolynomial x(n);
  x[1] = 1;
  CHECK(schoolbook_negacyclic_mul(x, b) == poly_monomial_mul(b, 1));
  IntPolynomial one(n);
  one[0] = 1;
  CHECK(schoolbook_negacyclic_mul(one, b) == b);
  IntPolynomial m(n);
  m[n - 1] = -2;
  // -2 X^7 * X^1 term wraps to +2 at X^0.
  CHECK(schoolbook_negacyclic_mul(m, b)[0] == 2 * b[1]);
}
