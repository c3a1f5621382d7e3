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

#include "mbtfhe/fft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mbtfhe {

struct FftPlan::Tables {
  std::vector<std::uint32_t> bitrev;
  // e^{-2 pi i k / n}, k < n/2.
  std::vector<std::complex<double>> root;
  // Per-level twiddles laid out contiguously: level with half-size h starts at
  // offset h - 1. Forward and conjugated copies.
  std::vector<std::complex<double>> level_fwd;
  std::vector<std::complex<double>> level_inv;
  // e^{i pi j / N}, j < n.
  std::vector<std::complex<double>> twist;
  std::vector<FixedComplex> root_fx;
  std::vector<FixedComplex> twist_fx;
};

namespace {

using int128 = __int128;

constexpr std::int64_t kFixedLimit = std::int64_t{1} << (kFixedBits - 1);

std::int64_t round_shift(int128 x, int sh) {
  if (sh <= 0) return static_cast<std::int64_t>(x << -sh);
  return static_cast<std::int64_t>((x + (int128{1} << (sh - 1))) >> sh);
}

FixedComplex to_fixed(long double re, long double im) {
  const long double s = std::ldexp(1.0L, kTwiddleFracBits);
  return {static_cast<std::int64_t>(std::llround(re * s)),
          static_cast<std::int64_t>(std::llround(im * s))};
}

// x * w where w carries kTwiddleFracBits fractional bits.
FixedComplex fx_twiddle_mul(FixedComplex x, FixedComplex w, bool conj_w) {
  const int128 wr = w.re;
  const int128 wi = conj_w ? -int128(w.im) : int128(w.im);
  const int128 re = int128(x.re) * wr - int128(x.im) * wi;
  const int128 im = int128(x.re) * wi + int128(x.im) * wr;
  return {round_shift(re, kTwiddleFracBits), round_shift(im, kTwiddleFracBits)};
}

void check_fixed(const FixedComplex& v, int stage) {
  if (v.re >= kFixedLimit || v.re < -kFixedLimit || v.im >= kFixedLimit ||
      v.im < -kFixedLimit) {
    throw FixedPointOverflow(stage, "fixed48 overflow at stage " + std::to_string(stage));
  }
}

// Plain complex product; std::complex's operator* carries NaN/inf recovery
// that dominates the butterfly cost.
inline std::complex<double> cmul(std::complex<double> a, std::complex<double> b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

void fft_ref(std::vector<std::complex<double>>& x, const FftPlan::Tables& t, bool inverse) {
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (i < t.bitrev[i]) std::swap(x[i], x[t.bitrev[i]]);
  }
  const auto& table = inverse ? t.level_inv : t.level_fwd;
  double* d = reinterpret_cast<double*>(x.data());
  for (std::size_t half = 1; half < n; half <<= 1) {
    const double* w = reinterpret_cast<const double*>(table.data() + (half - 1));
    for (std::size_t base = 0; base < n; base += 2 * half) {
      double* lo = d + 2 * base;
      double* hi = lo + 2 * half;
      for (std::size_t j = 0; j < half; ++j) {
        const double wr = w[2 * j], wi = w[2 * j + 1];
        const double hr = hi[2 * j], hm = hi[2 * j + 1];
        const double vr = hr * wr - hm * wi;
        const double vi = hr * wi + hm * wr;
        const double ur = lo[2 * j], ui = lo[2 * j + 1];
        lo[2 * j] = ur + vr;
        lo[2 * j + 1] = ui + vi;
        hi[2 * j] = ur - vr;
        hi[2 * j + 1] = ui - vi;
      }
    }
  }
}

// Every butterfly level halves its outputs, so the transform computes DFT/n.
void fft_fixed(std::vector<FixedComplex>& x, const FftPlan::Tables& t, bool inverse) {
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (i < t.bitrev[i]) std::swap(x[i], x[t.bitrev[i]]);
  }
  int stage = 0;
  for (std::size_t len = 2; len <= n; len <<= 1, ++stage) {
    const std::size_t half = len / 2;
    const std::size_t step = n / len;
    for (std::size_t base = 0; base < n; base += len) {
      for (std::size_t j = 0; j < half; ++j) {
        const FixedComplex u = x[base + j];
        const FixedComplex v = fx_twiddle_mul(x[base + j + half], t.root_fx[j * step], inverse);
        FixedComplex a{round_shift(int128(u.re) + v.re, 1), round_shift(int128(u.im) + v.im, 1)};
        FixedComplex b{round_shift(int128(u.re) - v.re, 1), round_shift(int128(u.im) - v.im, 1)};
        check_fixed(a, stage);
        check_fixed(b, stage);
        x[base + j] = a;
        x[base + j + half] = b;
      }
    }
  }
}

// Nearest integer of a double, reduced mod 2^64.
Torus round_to_torus(double v) {
  const double r = std::nearbyint(v);
  if (std::fabs(r) < 9.0e18) return static_cast<Torus>(static_cast<std::int64_t>(r));
  const double two64 = 18446744073709551616.0;
  double m = std::fmod(r, two64);
  if (m < 0) m += two64;
  if (m >= 9.2e18) m -= two64;
  return static_cast<Torus>(static_cast<std::int64_t>(m));
}

unsigned ceil_log2(std::size_t v) {
  unsigned r = 0;
  while ((std::size_t{1} << r) < v) ++r;
  return r;
}

// Balanced limb j of every coefficient.
std::vector<IntPolynomial> split_limbs(const TorusPolynomial& p, unsigned limb_bits) {
  const std::size_t count = (64 + limb_bits - 1) / limb_bits;
  std::vector<IntPolynomial> limbs(count, IntPolynomial(p.degree()));
  const Torus mask = (Torus{1} << limb_bits) - 1;
  const std::int64_t half = std::int64_t{1} << (limb_bits - 1);
  for (std::size_t i = 0; i < p.degree(); ++i) {
    Torus v = p[i];
    for (std::size_t j = 0; j < count; ++j) {
      std::int64_t d = static_cast<std::int64_t>(v & mask);
      v = limb_bits >= 64 ? 0 : v >> limb_bits;
      if (d >= half) {
        d -= std::int64_t{1} << limb_bits;
        ++v;
      }
      limbs[j][i] = d;
    }
  }
  return limbs;
}

}  // namespace

const char* to_string(FftMode mode) {
  return mode == FftMode::reference ? "reference" : "fixed48";
}

FftMode fft_mode_from_string(const std::string& s) {
  if (s == "reference" || s == "ref") return FftMode::reference;
  if (s == "fixed48" || s == "fixed") return FftMode::fixed48;
  throw std::invalid_argument("unknown fft mode '" + s + "'");
}

std::size_t FftPlan::enabled_product() const {
  std::size_t p = 1;
  for (const auto& s : stages_) {
    if (s.enabled) p *= s.size;
  }
  return p;
}

FftPlan build_plan(std::size_t degree) {
  if (!is_power_of_two(degree) || degree < kMinDegree || degree > kMaxDegree) {
    throw std::invalid_argument("unsupported polynomial degree " + std::to_string(degree));
  }
  FftPlan plan;
  plan.degree_ = degree;
  const std::size_t n = degree / 2;
  plan.levels_ = log2_exact(n);

  constexpr std::size_t kA = 256;
  constexpr std::size_t kB = 128;
  if (n <= kA) {
    plan.stages_ = {{FftUnit::fft_a, n, true}, {FftUnit::fft_b, kB, false}};
  } else {
    const std::size_t b = n / kA;
    if (b < kB) {
      // FFT-B runs short by skipping its leading radix-2 stage.
      plan.stages_ = {{FftUnit::radix2, 2, false}, {FftUnit::fft_a, kA, true},
                      {FftUnit::fft_b, b, true}};
      plan.transpose_points_ = {1};
    } else {
      plan.stages_ = {{FftUnit::fft_a, kA, true}, {FftUnit::fft_b, kB, true}};
      plan.transpose_points_ = {0};
    }
  }

  auto t = std::make_shared<FftPlan::Tables>();
  t->bitrev.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t r = 0;
    for (unsigned b = 0; b < plan.levels_; ++b) {
      if (i & (std::size_t{1} << b)) r |= 1u << (plan.levels_ - 1 - b);
    }
    t->bitrev[i] = r;
  }
  const long double pi = std::numbers::pi_v<long double>;
  t->root.resize(n / 2);
  t->root_fx.resize(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const long double a = -2.0L * pi * static_cast<long double>(k) / static_cast<long double>(n);
    t->root[k] = {static_cast<double>(std::cos(a)), static_cast<double>(std::sin(a))};
    t->root_fx[k] = to_fixed(std::cos(a), std::sin(a));
  }
  t->level_fwd.resize(n > 1 ? n - 1 : 0);
  t->level_inv.resize(t->level_fwd.size());
  for (std::size_t half = 1; half < n; half <<= 1) {
    const std::size_t step = n / (2 * half);
    for (std::size_t j = 0; j < half; ++j) {
      t->level_fwd[half - 1 + j] = t->root[j * step];
      t->level_inv[half - 1 + j] = std::conj(t->root[j * step]);
    }
  }
  t->twist.resize(n);
  t->twist_fx.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const long double a = pi * static_cast<long double>(j) / static_cast<long double>(degree);
    t->twist[j] = {static_cast<double>(std::cos(a)), static_cast<double>(std::sin(a))};
    t->twist_fx[j] = to_fixed(std::cos(a), std::sin(a));
  }
  plan.tables_ = std::move(t);
  return plan;
}

std::complex<double> FourierPolynomial::value(std::size_t i) const {
  if (mode == FftMode::reference) return ref[i];
  return {std::ldexp(static_cast<double>(fixed[i].re), scale_exponent),
          std::ldexp(static_cast<double>(fixed[i].im), scale_exponent)};
}

FourierPolynomial FourierPolynomial::zeros(std::size_t n_points, FftMode mode, int scale_exponent) {
  FourierPolynomial f;
  f.mode = mode;
  f.scale_exponent = scale_exponent;
  if (mode == FftMode::reference) {
    f.ref.assign(n_points, {0.0, 0.0});
  } else {
    f.fixed.assign(n_points, {});
  }
  return f;
}

unsigned bound_bits_of(const IntPolynomial& p) {
  const std::uint64_t m = p.max_abs();
  unsigned bits = 1;
  while (bits < 64 && (std::uint64_t{1} << bits) <= m) ++bits;
  return bits;
}

unsigned limb_bits_for(FftMode mode, std::size_t degree, unsigned int_bound_bits,
                       std::size_t terms) {
  const int log_n = static_cast<int>(log2_exact(degree));
  const int levels = log_n - 1;
  const int t = static_cast<int>(ceil_log2(std::max<std::size_t>(terms, 1)));
  const int g = static_cast<int>(ceil_log2(static_cast<std::size_t>(std::max(levels, 1))));
  const int b = static_cast<int>(int_bound_bits);
  int lmax = 0;
  if (mode == FftMode::reference) {
    lmax = 49 - log_n - b - t - g;
  } else {
    lmax = 40 - 2 * levels - b - t - g;
  }
  if (lmax < 1) {
    throw std::invalid_argument("no exact limb width for degree " + std::to_string(degree) +
                                " with " + std::to_string(int_bound_bits) + "-bit operand in " +
                                to_string(mode) + " mode");
  }
  lmax = std::min(lmax, 32);
  const int count = (64 + lmax - 1) / lmax;
  return static_cast<unsigned>((64 + count - 1) / count);
}

FourierPolynomial forward_fft(const IntPolynomial& p, const FftPlan& plan, FftMode mode,
                              unsigned bound_bits) {
  const std::size_t n = plan.n_points();
  if (p.degree() != plan.degree()) throw std::invalid_argument("plan does not match degree");
  if (p.max_abs() >= (std::uint64_t{1} << std::min(bound_bits, 63u))) {
    throw std::invalid_argument("coefficient exceeds declared bound of " +
                                std::to_string(bound_bits) + " bits");
  }
  const auto& t = plan.tables();
  FourierPolynomial f;
  f.mode = mode;
  if (mode == FftMode::reference) {
    f.ref.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      f.ref[j] = cmul({static_cast<double>(p[j]), static_cast<double>(p[j + n])}, t.twist[j]);
    }
    fft_ref(f.ref, t, false);
    return f;
  }
  if (bound_bits > 45) throw FixedPointOverflow(-1, "operand too wide for fixed48 input");
  const int shift_in = 45 - static_cast<int>(bound_bits);
  f.fixed.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    FixedComplex z{p[j] << shift_in, p[j + n] << shift_in};
    f.fixed[j] = fx_twiddle_mul(z, t.twist_fx[j], false);
  }
  fft_fixed(f.fixed, t, false);
  f.scale_exponent = static_cast<int>(plan.levels()) - shift_in;
  return f;
}

FourierPolynomial forward_fft(const IntPolynomial& p, const FftPlan& plan, FftMode mode) {
  return forward_fft(p, plan, mode, bound_bits_of(p));
}

TorusSpectrum forward_fft(const TorusPolynomial& p, const FftPlan& plan, FftMode mode,
                          unsigned limb_bits) {
  if (limb_bits < 1 || limb_bits > 32) throw std::invalid_argument("limb width out of range");
  TorusSpectrum s;
  s.limb_bits = limb_bits;
  for (const auto& limb : split_limbs(p, limb_bits)) {
    s.limbs.push_back(forward_fft(limb, plan, mode, limb_bits));
  }
  return s;
}

std::vector<double> inverse_fft_real(const FourierPolynomial& f, const FftPlan& plan) {
  const std::size_t n = plan.n_points();
  if (f.size() != n) throw std::invalid_argument("spectrum length does not match plan");
  const auto& t = plan.tables();
  std::vector<double> out(plan.degree());
  if (f.mode == FftMode::reference) {
    auto x = f.ref;
    fft_ref(x, t, true);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) {
      const auto c = cmul(x[j], std::conj(t.twist[j])) * inv_n;
      out[j] = c.real();
      out[j + n] = c.imag();
    }
    return out;
  }
  auto x = f.fixed;
  fft_fixed(x, t, true);
  for (std::size_t j = 0; j < n; ++j) {
    const auto c = fx_twiddle_mul(x[j], t.twist_fx[j], true);
    out[j] = std::ldexp(static_cast<double>(c.re), f.scale_exponent);
    out[j + n] = std::ldexp(static_cast<double>(c.im), f.scale_exponent);
  }
  return out;
}

TorusPolynomial inverse_fft(const FourierPolynomial& f, const FftPlan& plan) {
  const std::size_t n = plan.n_points();
  if (f.mode == FftMode::reference) {
    const auto real = inverse_fft_real(f, plan);
    TorusPolynomial out(plan.degree());
    for (std::size_t i = 0; i < real.size(); ++i) out[i] = round_to_torus(real[i]);
    return out;
  }
  if (f.size() != n) throw std::invalid_argument("spectrum length does not match plan");
  const auto& t = plan.tables();
  auto x = f.fixed;
  fft_fixed(x, t, true);
  TorusPolynomial out(plan.degree());
  // Integer rounding straight from the fixed-point word keeps this exact.
  const int s = f.scale_exponent;
  auto to_int = [s](std::int64_t v) -> Torus {
    if (s >= 0) return static_cast<Torus>(v) << s;
    return static_cast<Torus>(round_shift(int128(v), -s));
  };
  for (std::size_t j = 0; j < n; ++j) {
    const auto c = fx_twiddle_mul(x[j], t.twist_fx[j], true);
    out[j] = to_int(c.re);
    out[j + n] = to_int(c.im);
  }
  return out;
}

TorusPolynomial inverse_fft(const TorusSpectrum& f, const FftPlan& plan) {
  TorusPolynomial out(plan.degree());
  for (std::size_t j = 0; j < f.limbs.size(); ++j) {
    const auto part = inverse_fft(f.limbs[j], plan);
    const unsigned shift = static_cast<unsigned>(j) * f.limb_bits;
    if (shift >= 64) break;
    for (std::size_t i = 0; i < out.degree(); ++i) out[i] += part[i] << shift;
  }
  return out;
}

void pointwise_mac(FourierPolynomial& acc, const FourierPolynomial& a, const FourierPolynomial& b) {
  if (acc.mode != a.mode || a.mode != b.mode) throw std::invalid_argument("mixed fft modes");
  if (acc.size() != a.size() || a.size() != b.size()) {
    throw std::invalid_argument("spectrum length mismatch");
  }
  if (acc.mode == FftMode::reference) {
    double* c = reinterpret_cast<double*>(acc.ref.data());
    const double* x = reinterpret_cast<const double*>(a.ref.data());
    const double* y = reinterpret_cast<const double*>(b.ref.data());
    for (std::size_t i = 0; i < 2 * acc.ref.size(); i += 2) {
      c[i] += x[i] * y[i] - x[i + 1] * y[i + 1];
      c[i + 1] += x[i] * y[i + 1] + x[i + 1] * y[i];
    }
    return;
  }
  const int sh = acc.scale_exponent - (a.scale_exponent + b.scale_exponent);
  for (std::size_t i = 0; i < acc.fixed.size(); ++i) {
    const auto& x = a.fixed[i];
    const auto& y = b.fixed[i];
    const int128 re = int128(x.re) * y.re - int128(x.im) * y.im;
    const int128 im = int128(x.re) * y.im + int128(x.im) * y.re;
    FixedComplex r{acc.fixed[i].re + round_shift(re, sh), acc.fixed[i].im + round_shift(im, sh)};
    check_fixed(r, -1);
    acc.fixed[i] = r;
  }
}

void pointwise_mac(TorusSpectrum& acc, const FourierPolynomial& a, const TorusSpectrum& b) {
  if (acc.limbs.size() != b.limbs.size()) throw std::invalid_argument("limb count mismatch");
  for (std::size_t j = 0; j < acc.limbs.size(); ++j) pointwise_mac(acc.limbs[j], a, b.limbs[j]);
}

TorusSpectrum zero_accumulator(const FftPlan& plan, FftMode mode, unsigned limb_bits,
                               unsigned int_bound_bits, std::size_t terms) {
  TorusSpectrum acc;
  acc.limb_bits = limb_bits;
  int scale = 0;
  if (mode == FftMode::fixed48) {
    const int levels = static_cast<int>(plan.levels());
    const int sa = levels + static_cast<int>(int_bound_bits) - 45;
    const int sb = levels + static_cast<int>(limb_bits) - 45;
    scale = sa + sb + 46 + static_cast<int>(ceil_log2(std::max<std::size_t>(terms, 1)));
  }
  const std::size_t count = (64 + limb_bits - 1) / limb_bits;
  acc.limbs.assign(count, FourierPolynomial::zeros(plan.n_points(), mode, scale));
  return acc;
}

TorusPolynomial negacyclic_mul(const IntPolynomial& a, const TorusPolynomial& b,
                               const FftPlan& plan, FftMode mode) {
  const unsigned a_bits = bound_bits_of(a);
  const unsigned limb = limb_bits_for(mode, plan.degree(), a_bits, 1);
  const auto fa = forward_fft(a, plan, mode, a_bits);
  const auto fb = forward_fft(b, plan, mode, limb);
  auto acc = zero_accumulator(plan, mode, limb, a_bits, 1);
  pointwise_mac(acc, fa, fb);
  return inverse_fft(acc, plan);
}

}  // namespace mbtfhe
