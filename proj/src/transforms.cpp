#include "spfti/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "spfti/error.hpp"

namespace spfti {

namespace {

void require_pow2(std::size_t n, const char* what) {
  require(is_power_of_two(n) && n >= 2, ErrorKind::invalid_argument,
          std::string(what) + ": length " + std::to_string(n) + " is not a power of two >= 2");
}

std::size_t reverse_bits(std::size_t v, unsigned bits) {
  std::size_t r = 0;
  for (unsigned b = 0; b < bits; ++b) {
    r = (r << 1) | (v & 1u);
    v >>= 1;
  }
  return r;
}

// Unnormalized natural-order butterflies on `n` blocks of `stride` elements.
template <class T>
void hadamard_blocks(T* data, std::size_t n, std::size_t stride) {
  for (std::size_t h = 1; h < n; h *= 2) {
    for (std::size_t i = 0; i < n; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        T* a = data + j * stride;
        T* b = data + (j + h) * stride;
        for (std::size_t c = 0; c < stride; ++c) {
          const T x = a[c];
          const T y = b[c];
          a[c] = x + y;
          b[c] = x - y;
        }
      }
    }
  }
}

// One full-depth orthonormal Haar analysis on `n` blocks of `stride` elements.
template <class T>
void haar_blocks_forward(T* data, std::size_t n, std::size_t stride, std::vector<T>& tmp) {
  const double s = std::numbers::sqrt2 / 2.0;
  tmp.resize(n * stride);
  for (std::size_t len = n; len >= 2; len /= 2) {
    const std::size_t half = len / 2;
    for (std::size_t i = 0; i < half; ++i) {
      const T* e = data + (2 * i) * stride;
      const T* o = data + (2 * i + 1) * stride;
      T* lo = tmp.data() + i * stride;
      T* hi = tmp.data() + (half + i) * stride;
      for (std::size_t c = 0; c < stride; ++c) {
        lo[c] = (e[c] + o[c]) * s;
        hi[c] = (e[c] - o[c]) * s;
      }
    }
    std::copy(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(len * stride), data);
  }
}

template <class T>
void haar_blocks_inverse(T* data, std::size_t n, std::size_t stride, std::vector<T>& tmp) {
  const double s = std::numbers::sqrt2 / 2.0;
  tmp.resize(n * stride);
  for (std::size_t len = 2; len <= n; len *= 2) {
    const std::size_t half = len / 2;
    for (std::size_t i = 0; i < half; ++i) {
      const T* lo = data + i * stride;
      const T* hi = data + (half + i) * stride;
      T* e = tmp.data() + (2 * i) * stride;
      T* o = tmp.data() + (2 * i + 1) * stride;
      for (std::size_t c = 0; c < stride; ++c) {
        e[c] = (lo[c] + hi[c]) * s;
        o[c] = (lo[c] - hi[c]) * s;
      }
    }
    std::copy(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(len * stride), data);
  }
}

}  // namespace

bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

unsigned log2_exact(std::size_t n) {
  require(is_power_of_two(n), ErrorKind::invalid_argument,
          "log2_exact: " + std::to_string(n) + " is not a power of two");
  unsigned b = 0;
  while ((std::size_t{1} << b) < n) ++b;
  return b;
}

// ---------------------------------------------------------------- DFT

FftPlan::FftPlan(std::size_t n) : n_(n) {
  require_pow2(n, "FftPlan");
  const unsigned bits = log2_exact(n);
  bitrev_.resize(n);
  for (std::size_t i = 0; i < n; ++i) bitrev_[i] = reverse_bits(i, bits);
  twiddle_.resize(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    twiddle_[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) /
                                      static_cast<double>(n));
  }
}

void FftPlan::run(cplx* data, std::size_t cols, bool inverse) const {
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t j = bitrev_[i];
    if (j > i) std::swap_ranges(data + i * cols, data + (i + 1) * cols, data + j * cols);
  }
  for (std::size_t m = 2; m <= n_; m *= 2) {
    const std::size_t half = m / 2;
    const std::size_t step = n_ / m;
    for (std::size_t start = 0; start < n_; start += m) {
      for (std::size_t j = 0; j < half; ++j) {
        const double wr = twiddle_[j * step].real();
        const double wi = inverse ? -twiddle_[j * step].imag() : twiddle_[j * step].imag();
        cplx* a = data + (start + j) * cols;
        cplx* b = data + (start + j + half) * cols;
        // Plain product: std::complex operator* adds inf/nan recovery we do not need.
        for (std::size_t c = 0; c < cols; ++c) {
          const double br = b[c].real(), bi = b[c].imag();
          const cplx t(wr * br - wi * bi, wr * bi + wi * br);
          b[c] = a[c] - t;
          a[c] += t;
        }
      }
    }
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_));
  for (std::size_t i = 0; i < n_ * cols; ++i) data[i] *= scale;
}

void FftPlan::forward(std::span<cplx> x) const {
  require(x.size() == n_, ErrorKind::dimension, "FftPlan::forward: length mismatch");
  run(x.data(), 1, false);
}

void FftPlan::inverse(std::span<cplx> x) const {
  require(x.size() == n_, ErrorKind::dimension, "FftPlan::inverse: length mismatch");
  run(x.data(), 1, true);
}

void FftPlan::forward_columns(ComplexArray& a) const {
  require(a.rows() == n_, ErrorKind::dimension, "FftPlan::forward_columns: row count mismatch");
  run(a.data(), a.cols(), false);
}

void FftPlan::inverse_columns(ComplexArray& a) const {
  require(a.rows() == n_, ErrorKind::dimension, "FftPlan::inverse_columns: row count mismatch");
  run(a.data(), a.cols(), true);
}

std::vector<cplx> dft_forward(std::span<const cplx> x) {
  std::vector<cplx> out(x.begin(), x.end());
  FftPlan(x.size()).forward(out);
  return out;
}

std::vector<cplx> dft_inverse(std::span<const cplx> x) {
  std::vector<cplx> out(x.begin(), x.end());
  FftPlan(x.size()).inverse(out);
  return out;
}

// ---------------------------------------------------------------- Walsh

std::vector<std::size_t> sequency_permutation(std::size_t n) {
  require_pow2(n, "sequency_permutation");
  const unsigned bits = log2_exact(n);
  std::vector<std::size_t> perm(n);
  for (std::size_t k = 0; k < n; ++k) perm[k] = reverse_bits(k ^ (k >> 1), bits);
  return perm;
}

std::vector<double> wht_1d(std::span<const double> x) {
  const auto perm = sequency_permutation(x.size());
  std::vector<double> nat(x.begin(), x.end());
  hadamard_blocks(nat.data(), nat.size(), 1);
  const double scale = 1.0 / std::sqrt(static_cast<double>(x.size()));
  std::vector<double> out(x.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = nat[perm[k]] * scale;
  return out;
}

WalshHadamard2D::WalshHadamard2D(std::size_t nx, std::size_t ny)
    : nx_(nx), ny_(ny), perm_x_(sequency_permutation(nx)), perm_y_(sequency_permutation(ny)) {}

template <class T>
void WalshHadamard2D::apply(std::span<T> img) const {
  require(img.size() == size(), ErrorKind::dimension, "WalshHadamard2D: image size mismatch");
  for (std::size_t x = 0; x < nx_; ++x) hadamard_blocks(img.data() + x * ny_, ny_, 1);
  hadamard_blocks(img.data(), nx_, ny_);
  const double scale = 1.0 / std::sqrt(static_cast<double>(size()));
  std::vector<T> nat(img.begin(), img.end());
  for (std::size_t i = 0; i < nx_; ++i) {
    const T* src = nat.data() + perm_x_[i] * ny_;
    T* dst = img.data() + i * ny_;
    for (std::size_t k = 0; k < ny_; ++k) dst[k] = src[perm_y_[k]] * scale;
  }
}

template void WalshHadamard2D::apply<double>(std::span<double>) const;
template void WalshHadamard2D::apply<cplx>(std::span<cplx>) const;

RealArray wht_2d_forward(const RealArray& img) {
  RealArray out = img;
  WalshHadamard2D(img.rows(), img.cols()).apply(out.flat());
  return out;
}

RealArray wht_2d_inverse(const RealArray& coeffs) { return wht_2d_forward(coeffs); }

// ---------------------------------------------------------------- Haar

unsigned dyadic_level(std::size_t index) {
  if (index < 2) return 1;
  unsigned s = 0;
  while ((std::size_t{1} << s) <= index) ++s;
  return s;
}

std::vector<double> haar_1d_forward(std::span<const double> x) {
  require_pow2(x.size(), "haar_1d_forward");
  std::vector<double> out(x.begin(), x.end());
  std::vector<double> tmp;
  haar_blocks_forward(out.data(), out.size(), 1, tmp);
  return out;
}

std::vector<double> haar_1d_inverse(std::span<const double> c) {
  require_pow2(c.size(), "haar_1d_inverse");
  std::vector<double> out(c.begin(), c.end());
  std::vector<double> tmp;
  haar_blocks_inverse(out.data(), out.size(), 1, tmp);
  return out;
}

Haar2D::Haar2D(std::size_t nx, std::size_t ny) : nx_(nx), ny_(ny) {
  require_pow2(nx, "Haar2D");
  require_pow2(ny, "Haar2D");
}

template <class T>
void Haar2D::forward(std::span<T> img) const {
  require(img.size() == size(), ErrorKind::dimension, "Haar2D::forward: image size mismatch");
  std::vector<T> tmp;
  for (std::size_t x = 0; x < nx_; ++x) haar_blocks_forward(img.data() + x * ny_, ny_, 1, tmp);
  haar_blocks_forward(img.data(), nx_, ny_, tmp);
}

template <class T>
void Haar2D::inverse(std::span<T> coeffs) const {
  require(coeffs.size() == size(), ErrorKind::dimension, "Haar2D::inverse: size mismatch");
  std::vector<T> tmp;
  haar_blocks_inverse(coeffs.data(), nx_, ny_, tmp);
  for (std::size_t x = 0; x < nx_; ++x) haar_blocks_inverse(coeffs.data() + x * ny_, ny_, 1, tmp);
}

template void Haar2D::forward<double>(std::span<double>) const;
template void Haar2D::forward<cplx>(std::span<cplx>) const;
template void Haar2D::inverse<double>(std::span<double>) const;
template void Haar2D::inverse<cplx>(std::span<cplx>) const;

RealArray haar_2d_forward(const RealArray& img) {
  RealArray out = img;
  Haar2D(img.rows(), img.cols()).forward(out.flat());
  return out;
}

RealArray haar_2d_inverse(const RealArray& coeffs) {
  RealArray out = coeffs;
  Haar2D(coeffs.rows(), coeffs.cols()).inverse(out.flat());
  return out;
}

}  // namespace spfti
