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

#ifndef MBTFHE_TORUS_HPP_
#define MBTFHE_TORUS_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace mbtfhe {

// A discretized torus element: value / 2^64 in [0, 1). All arithmetic wraps.
using Torus = std::uint64_t;

constexpr Torus torus_add(Torus a, Torus b) noexcept { return a + b; }
constexpr Torus torus_sub(Torus a, Torus b) noexcept { return a - b; }
constexpr Torus torus_neg(Torus a) noexcept { return Torus{0} - a; }

// k * a mod 2^64 with two's-complement semantics for negative k.
constexpr Torus torus_scalar_mul(std::int64_t k, Torus a) noexcept {
  return static_cast<Torus>(k) * a;
}

// Signed distance from zero on the torus, in units of 2^-64.
constexpr std::int64_t torus_signed(Torus a) noexcept {
  return static_cast<std::int64_t>(a);
}

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline unsigned log2_exact(std::size_t n) {
  unsigned r = 0;
  while ((std::size_t{1} << r) < n) ++r;
  return r;
}

// Smallest degree with a working transform; tiny sizes exist for oracle tests.
constexpr std::size_t kMinDegree = std::size_t{1} << 2;
constexpr std::size_t kMaxDegree = std::size_t{1} << 16;

// Polynomial in T[X]/(X^N + 1).
class TorusPolynomial {
 public:
  TorusPolynomial() = default;
  explicit TorusPolynomial(std::size_t degree) : coeffs_(degree, 0) {}
  explicit TorusPolynomial(std::vector<Torus> coeffs) : coeffs_(std::move(coeffs)) {}

  std::size_t degree() const { return coeffs_.size(); }
  Torus& operator[](std::size_t i) { return coeffs_[i]; }
  Torus operator[](std::size_t i) const { return coeffs_[i]; }
  std::span<Torus> coeffs() { return coeffs_; }
  std::span<const Torus> coeffs() const { return coeffs_; }

  TorusPolynomial& operator+=(const TorusPolynomial& o);
  TorusPolynomial& operator-=(const TorusPolynomial& o);

  friend bool operator==(const TorusPolynomial&, const TorusPolynomial&) = default;

 private:
  std::vector<Torus> coeffs_;
};

TorusPolynomial operator+(TorusPolynomial a, const TorusPolynomial& b);
TorusPolynomial operator-(TorusPolynomial a, const TorusPolynomial& b);
TorusPolynomial operator-(TorusPolynomial a);

// Integer polynomial, typically gadget digits or a binary secret key.
class IntPolynomial {
 public:
  IntPolynomial() = default;
  explicit IntPolynomial(std::size_t degree) : coeffs_(degree, 0) {}
  explicit IntPolynomial(std::vector<std::int64_t> coeffs) : coeffs_(std::move(coeffs)) {}

  std::size_t degree() const { return coeffs_.size(); }
  std::int64_t& operator[](std::size_t i) { return coeffs_[i]; }
  std::int64_t operator[](std::size_t i) const { return coeffs_[i]; }
  std::span<std::int64_t> coeffs() { return coeffs_; }
  std::span<const std::int64_t> coeffs() const { return coeffs_; }

  // Largest |coefficient|.
  std::uint64_t max_abs() const;

  friend bool operator==(const IntPolynomial&, const IntPolynomial&) = default;

 private:
  std::vector<std::int64_t> coeffs_;
};

struct GadgetParams {
  unsigned base_log = 8;
  unsigned depth = 2;

  std::uint64_t base() const { return std::uint64_t{1} << base_log; }
  unsigned total_bits() const { return base_log * depth; }
  // Gadget factor 2^(64 - level*base_log), level is 1-based.
  Torus factor(unsigned level) const { return Torus{1} << (64 - level * base_log); }
  void validate() const;

  friend bool operator==(const GadgetParams&, const GadgetParams&) = default;
};

// X^e * p under X^N = -1. `e` is reduced mod 2N.
TorusPolynomial poly_monomial_mul(const TorusPolynomial& p, std::size_t e);

// X^e * p - p, the rotation difference used by CMux-based blind rotation.
TorusPolynomial poly_monomial_mul_minus_one(const TorusPolynomial& p, std::size_t e);

// Rounds `a` to its top depth*base_log bits (ties to even).
Torus gadget_round(Torus a, const GadgetParams& g);

// Balanced signed digits, most significant first. digits[j] pairs with
// factor(j + 1); each |digit| <= B/2.
std::vector<std::int64_t> gadget_decompose(Torus a, const GadgetParams& g);

// Sum of digits[j] * factor(j + 1), mod 2^64.
Torus gadget_recompose(std::span<const std::int64_t> digits, const GadgetParams& g);

// Coefficientwise decomposition: result[j] holds the level-(j+1) digits.
std::vector<IntPolynomial> poly_gadget_decompose(const TorusPolynomial& p, const GadgetParams& g);

// round(a * 2N / 2^64) mod 2N, ties rounded up.
std::size_t mod_switch(Torus a, std::size_t two_n);

// O(N^2) negacyclic product of an integer polynomial with a torus polynomial.
TorusPolynomial schoolbook_negacyclic_mul(const IntPolynomial& a, const TorusPolynomial& b);

}  // namespace mbtfhe

#endif  // MBTFHE_TORUS_HPP_
