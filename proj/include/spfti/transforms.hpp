#pragma once

// Fast orthonormal transforms: unitary DFT along the spectral axis,
// sequency-ordered 2-D Walsh-Hadamard and full-depth tensor Haar along the
// spatial axis. Spatial images are row-major nx x ny (pixel p = x * ny + y).

#include <cstddef>
#include <span>
#include <vector>

#include "spfti/array.hpp"

namespace spfti {

bool is_power_of_two(std::size_t n);
unsigned log2_exact(std::size_t n);

/// Unitary radix-2 FFT of a fixed power-of-two length, scaled by 1/sqrt(n)
/// in both directions. Forward uses exp(-2 pi i jk / n).
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);

  std::size_t size() const { return n_; }

  void forward(std::span<cplx> x) const;
  void inverse(std::span<cplx> x) const;

  /// Transforms every column of a size() x cols array in one pass.
  void forward_columns(ComplexArray& a) const;
  void inverse_columns(ComplexArray& a) const;

 private:
  void run(cplx* data, std::size_t cols, bool inverse) const;

  std::size_t n_;
  std::vector<std::size_t> bitrev_;
  std::vector<cplx> twiddle_;
};

std::vector<cplx> dft_forward(std::span<const cplx> x);
std::vector<cplx> dft_inverse(std::span<const cplx> x);

/// Natural (Sylvester) Hadamard row that sits at sequency position k:
/// bit-reversal of the Gray code of k.
std::vector<std::size_t> sequency_permutation(std::size_t n);

/// 1-D orthonormal Walsh transform in sequency order (row k has k sign changes).
std::vector<double> wht_1d(std::span<const double> x);

/// Separable 2-D sequency-ordered Walsh-Hadamard transform. The orthonormal
/// Walsh matrix is symmetric, so the same call is its own inverse.
class WalshHadamard2D {
 public:
  WalshHadamard2D(std::size_t nx, std::size_t ny);

  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  std::size_t size() const { return nx_ * ny_; }

  template <class T>
  void apply(std::span<T> img) const;

 private:
  std::size_t nx_, ny_;
  std::vector<std::size_t> perm_x_, perm_y_;
};

RealArray wht_2d_forward(const RealArray& img);
RealArray wht_2d_inverse(const RealArray& coeffs);

/// 1-D level of a Haar/Walsh coefficient index (0-based): {0,1} -> 1,
/// [2^(s-1), 2^s) -> s.
unsigned dyadic_level(std::size_t index);

std::vector<double> haar_1d_forward(std::span<const double> x);
std::vector<double> haar_1d_inverse(std::span<const double> c);

/// Full-depth 1-D orthonormal Haar along each axis (tensor product). Output
/// index i along an axis follows dyadic_level(i): scaling, coarsest detail,
/// then progressively finer bands.
class Haar2D {
 public:
  Haar2D(std::size_t nx, std::size_t ny);

  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  std::size_t size() const { return nx_ * ny_; }

  template <class T>
  void forward(std::span<T> img) const;
  template <class T>
  void inverse(std::span<T> coeffs) const;

 private:
  std::size_t nx_, ny_;
};

RealArray haar_2d_forward(const RealArray& img);
RealArray haar_2d_inverse(const RealArray& coeffs);

}  // namespace spfti
