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

#ifndef MBTFHE_FFT_HPP_
#define MBTFHE_FFT_HPP_

#include <complex>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "mbtfhe/torus.hpp"

namespace mbtfhe {

/// Arithmetic used inside the transform.
///
/// `reference` is IEEE double. `fixed48` keeps every real and imaginary part in
/// a 48-bit two's-complement word, halving after each radix-2 butterfly level
/// and tracking the accumulated power of two in `scale_exponent`.
enum class FftMode { reference, fixed48 };

const char* to_string(FftMode mode);
FftMode fft_mode_from_string(const std::string& s);

/// Thrown when a fixed48 value leaves the 48-bit range.
class FixedPointOverflow : public std::runtime_error {
 public:
  FixedPointOverflow(int stage, const std::string& what)
      : std::runtime_error(what), stage_(stage) {}
  /// Butterfly level (0-based), or -1 for twist/MAC/untwist.
  int stage() const { return stage_; }

 private:
  int stage_;
};

constexpr int kFixedBits = 48;
constexpr int kTwiddleFracBits = 46;

struct FixedComplex {
  std::int64_t re = 0;
  std::int64_t im = 0;
  friend bool operator==(const FixedComplex&, const FixedComplex&) = default;
};

/// Hardware unit a plan stage maps onto.
enum class FftUnit { fft_a, fft_b, radix2 };

struct FftStage {
  FftUnit unit;
  std::size_t size;
  bool enabled;
};

/// Stage decomposition plus immutable twiddle tables for one degree. Safe to
/// share across threads once built.
class FftPlan {
 public:
  std::size_t degree() const { return degree_; }
  std::size_t n_points() const { return degree_ / 2; }
  unsigned levels() const { return levels_; }
  const std::vector<FftStage>& stages() const { return stages_; }
  /// Indices into `stages()` after which a transpose sits.
  const std::vector<std::size_t>& transpose_points() const { return transpose_points_; }
  std::size_t enabled_product() const;

  struct Tables;
  const Tables& tables() const { return *tables_; }

 private:
  friend FftPlan build_plan(std::size_t degree);
  std::size_t degree_ = 0;
  unsigned levels_ = 0;
  std::vector<FftStage> stages_;
  std::vector<std::size_t> transpose_points_;
  std::shared_ptr<const Tables> tables_;
};

/// 256-point FFT-A followed by an FFT-B of up to 128 points; sub-256 sizes run
/// on FFT-A alone. Throws for degrees outside [2^2, 2^16] or non powers of two.
FftPlan build_plan(std::size_t degree);

/// N/2 complex points of a twisted, folded real polynomial.
struct FourierPolynomial {
  FftMode mode = FftMode::reference;
  int scale_exponent = 0;
  std::vector<std::complex<double>> ref;
  std::vector<FixedComplex> fixed;

  std::size_t size() const { return mode == FftMode::reference ? ref.size() : fixed.size(); }
  /// Point `i` as a double, with the fixed-point scale applied.
  std::complex<double> value(std::size_t i) const;

  static FourierPolynomial zeros(std::size_t n_points, FftMode mode, int scale_exponent = 0);
};

/// A 64-bit torus polynomial split into balanced `limb_bits`-wide integer
/// limbs, each transformed separately so products stay exact.
struct TorusSpectrum {
  unsigned limb_bits = 0;
  std::vector<FourierPolynomial> limbs;
};

/// Widest limb for which an integer operand with |coeff| < 2^int_bound_bits,
/// summed over `terms` products, still rounds back exactly. Throws when no
/// limb width satisfies the bound.
unsigned limb_bits_for(FftMode mode, std::size_t degree, unsigned int_bound_bits,
                       std::size_t terms = 1);

/// Forward transform of an integer polynomial with |coeff| < 2^bound_bits.
FourierPolynomial forward_fft(const IntPolynomial& p, const FftPlan& plan, FftMode mode,
                              unsigned bound_bits);
FourierPolynomial forward_fft(const IntPolynomial& p, const FftPlan& plan, FftMode mode);

TorusSpectrum forward_fft(const TorusPolynomial& p, const FftPlan& plan, FftMode mode,
                          unsigned limb_bits);

/// Inverse transform, rounding each real coefficient to the nearest integer
/// mod 2^64.
TorusPolynomial inverse_fft(const FourierPolynomial& f, const FftPlan& plan);
TorusPolynomial inverse_fft(const TorusSpectrum& f, const FftPlan& plan);

/// Real-valued inverse (before rounding), for error measurements.
std::vector<double> inverse_fft_real(const FourierPolynomial& f, const FftPlan& plan);

/// acc += a (.) b, elementwise.
void pointwise_mac(FourierPolynomial& acc, const FourierPolynomial& a, const FourierPolynomial& b);
void pointwise_mac(TorusSpectrum& acc, const FourierPolynomial& a, const TorusSpectrum& b);

/// Zero accumulator sized for `terms` products of an int operand bounded by
/// 2^int_bound_bits with a limb spectrum of width limb_bits.
TorusSpectrum zero_accumulator(const FftPlan& plan, FftMode mode, unsigned limb_bits,
                               unsigned int_bound_bits, std::size_t terms);

/// Exact a * b in T[X]/(X^N+1) through the transform. The limb width is picked
/// from a's coefficient bound.
TorusPolynomial negacyclic_mul(const IntPolynomial& a, const TorusPolynomial& b,
                               const FftPlan& plan, FftMode mode);

/// Bit length needed so |v| < 2^bits for every coefficient (at least 1).
unsigned bound_bits_of(const IntPolynomial& p);

}  // namespace mbtfhe

#endif  // MBTFHE_FFT_HPP_
