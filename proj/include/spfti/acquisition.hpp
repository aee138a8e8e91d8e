#pragma once

// Single-pixel FTI forward model Y = P_xi F X H^T P_p^T (+ noise) evaluated
// with fast transforms, its adjoint, and the MUR/ERR system metrics.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "spfti/array.hpp"
#include "spfti/sampling.hpp"
#include "spfti/transforms.hpp"

namespace spfti {

/// Real spectral x spatial volume: values(nu, x * ny + y).
struct HyperCube {
  std::size_t n_nu = 0;
  std::size_t nx = 0;
  std::size_t ny = 0;
  RealArray values;
  std::vector<double> wavelength_nm;  // optional, empty or n_nu entries

  HyperCube() = default;
  HyperCube(std::size_t n_nu, std::size_t nx, std::size_t ny)
      : n_nu(n_nu), nx(nx), ny(ny), values(n_nu, nx * ny) {}

  std::size_t n_pixels() const { return nx * ny; }
  bool operator==(const HyperCube&) const = default;
};

void validate(const HyperCube& cube);

struct MeasurementSet {
  ComplexArray y;  // M_xi x M_p
  double sigma_nyq = 0.0;
  double epsilon = 0.0;
  std::string pattern_ref;  // path of the mask file, when known

  bool operator==(const MeasurementSet&) const = default;
};

/// The sensing operator A of one sampling pattern. A A^* = I on the
/// measurement space because both P F and P H are row-subsampled unitaries.
class SensingOperator {
 public:
  explicit SensingOperator(SamplingPattern pattern);

  const SamplingPattern& pattern() const { return pattern_; }
  std::size_t n_xi() const { return pattern_.n_xi(); }
  std::size_t n_p() const { return pattern_.n_p(); }
  std::size_t m_xi() const { return pattern_.m_xi(); }
  std::size_t m_p() const { return pattern_.m_p(); }

  /// N_xi x N_p -> M_xi x M_p.
  ComplexArray forward(const ComplexArray& u) const;
  /// M_xi x M_p -> N_xi x N_p.
  ComplexArray adjoint(const ComplexArray& y) const;

 private:
  SamplingPattern pattern_;
  FftPlan fft_;
  WalshHadamard2D wht_;
};

ComplexArray forward(const HyperCube& x, const SamplingPattern& pattern);
ComplexArray adjoint(const ComplexArray& y, const SamplingPattern& pattern);

/// sigma * sqrt(M_xi * M_p).
double epsilon_rule(double sigma_nyq, std::size_t m_xi, std::size_t m_p);

/// Adds real i.i.d. N(0, sigma^2) noise and records epsilon by epsilon_rule.
MeasurementSet add_noise(ComplexArray y_clean, double sigma_nyq, std::uint64_t seed);

double mur(std::size_t m_xi, std::size_t m_p, std::size_t n_xi, std::size_t n_p);
double err(std::size_t m_xi, std::size_t m_p, std::size_t n_xi);

}  // namespace spfti
