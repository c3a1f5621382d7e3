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

#include "mbtfhe/torus.hpp"

#include <cstdlib>
#include <string>

namespace mbtfhe {

TorusPolynomial& TorusPolynomial::operator+=(const TorusPolynomial& o) {
  if (o.degree() != degree()) throw std::invalid_argument("degree mismatch in polynomial add");
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
  return *this;
}

TorusPolynomial& TorusPolynomial::operator-=(const TorusPolynomial& o) {
  if (o.degree() != degree()) throw std::invalid_argument("degree mismatch in polynomial sub");
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
  return *this;
}

TorusPolynomial operator+(TorusPolynomial a, const TorusPolynomial& b) { return a += b; }
TorusPolynomial operator-(TorusPolynomial a, const TorusPolynomial& b) { return a -= b; }
TorusPolynomial operator-(TorusPolynomial a) {
  for (auto& c : a.coeffs()) c = torus_neg(c);
  return a;
}

std::uint64_t IntPolynomial::max_abs() const {
  std::uint64_t m = 0;
  for (auto c : coeffs_) {
    std::uint64_t v = c < 0 ? std::uint64_t(0) - static_cast<std::uint64_t>(c)
                            : static_cast<std::uint64_t>(c);
    if (v > m) m = v;
  }
  return m;
}

void GadgetParams::validate() const {
  if (base_log < 1 || depth < 1 || base_log * depth > 64) {
    throw std::invalid_argument("invalid gadget parameters: base_log=" +
                                std::to_string(base_log) + " depth=" + std::to_string(depth));
  }
}

TorusPolynomial poly_monomial_mul(const TorusPolynomial& p, std::size_t e) {
  const std::size_t n = p.degree();
  e %= 2 * n;
  TorusPolynomial out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = i + e;
    bool negate = false;
    if (j >= 2 * n) j -= 2 * n;
    if (j >= n) {
      j -= n;
      negate = true;
    }
    out[j] = negate ? torus_neg(p[i]) : p[i];
  }
  return out;
}

TorusPolynomial poly_monomial_mul_minus_one(const TorusPolynomial& p, std::size_t e) {
  TorusPolynomial out = poly_monomial_mul(p, e);
  out -= p;
  return out;
}

Torus gadget_round(Torus a, const GadgetParams& g) {
  const unsigned bits = g.total_bits();
  if (bits >= 64) return a;
  const unsigned shift = 64 - bits;
  const Torus half = Torus{1} << (shift - 1);
  const Torus rem = a & ((Torus{1} << shift) - 1);
  Torus kept = a >> shift;
  if (rem > half || (rem == half && (kept & 1))) ++kept;
  return kept << shift;
}

std::vector<std::int64_t> gadget_decompose(Torus a, const GadgetParams& g) {
  const unsigned bits = g.total_bits();
  Torus kept = bits >= 64 ? a : gadget_round(a, g) >> (64 - bits);
  const std::int64_t base = static_cast<std::int64_t>(g.base());
  const std::int64_t half = base / 2;
  const Torus mask = g.base() - 1;
  std::vector<std::int64_t> digits(g.depth);
  // Low digit first so the carry ripples upward; the top carry falls off mod 2^64.
  for (unsigned j = g.depth; j-- > 0;) {
    std::int64_t d = static_cast<std::int64_t>(kept & mask);
    kept >>= g.base_log;
    if (d >= half) {
      d -= base;
      ++kept;
    }
    digits[j] = d;
  }
  return digits;
}

Torus gadget_recompose(std::span<const std::int64_t> digits, const GadgetParams& g) {
  Torus acc = 0;
  for (unsigned j = 0; j < digits.size(); ++j) {
    acc += torus_scalar_mul(digits[j], g.factor(j + 1));
  }
  return acc;
}

std::vector<IntPolynomial> poly_gadget_decompose(const TorusPolynomial& p, const GadgetParams& g) {
  std::vector<IntPolynomial> out(g.depth, IntPolynomial(p.degree()));
  const unsigned bits = g.total_bits();
  const std::int64_t base = static_cast<std::int64_t>(g.base());
  const std::int64_t half = base / 2;
  const Torus mask = g.base() - 1;
  for (std::size_t i = 0; i < p.degree(); ++i) {
    Torus kept = p[i];
    if (bits < 64) {
      const unsigned shift = 64 - bits;
      const Torus rem = kept & ((Torus{1} << shift) - 1);
      const Torus halfstep = Torus{1} << (shift - 1);
      kept >>= shift;
      if (rem > halfstep || (rem == halfstep && (kept & 1))) ++kept;
      kept &= (Torus{1} << bits) - 1;
    }
    for (unsigned j = g.depth; j-- > 0;) {
      std::int64_t d = static_cast<std::int64_t>(kept & mask);
      kept >>= g.base_log;
      if (d >= half) {
        d -= base;
        ++kept;
      }
      out[j][i] = d;
    }
  }
  return out;
}

std::size_t mod_switch(Torus a, std::size_t two_n) {
  const unsigned log2n = log2_exact(two_n);
  // Shift down to one extra fractional bit, then round half up.
  const Torus t = a >> (63 - log2n);
  return static_cast<std::size_t>((t + 1) >> 1) & (two_n - 1);
}

TorusPolynomial schoolbook_negacyclic_mul(const IntPolynomial& a, const TorusPolynomial& b) {
  const std::size_t n = b.degree();
  if (a.degree() != n) throw std::invalid_argument("degree mismatch in negacyclic product");
  TorusPolynomial out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] == 0) continue;
    const Torus ai = static_cast<Torus>(a[i]);
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t k = i + j;
      if (k < n) {
        out[k] += ai * b[j];
      } else {
        out[k - n] -= ai * b[j];
      }
    }
  }
  return out;
}

}  // namespace mbtfhe
