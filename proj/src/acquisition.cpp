#include "spfti/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "spfti/error.hpp"

namespace spfti {

void validate(const HyperCube& cube) {
  require(is_power_of_two(cube.n_nu) && is_power_of_two(cube.nx) && is_power_of_two(cube.ny),
          ErrorKind::dimension, "hypercube dimensions must be powers of two");
  require(cube.values.rows() == cube.n_nu && cube.values.cols() == cube.n_pixels(),
          ErrorKind::dimension, "hypercube values do not match n_nu x nx*ny");
  require(cube.wavelength_nm.empty() || cube.wavelength_nm.size() == cube.n_nu,
          ErrorKind::dimension, "wavelength axis length must equal n_nu");
  for (double v : cube.values.flat())
    require(std::isfinite(v), ErrorKind::invalid_argument, "hypercube holds non-finite values");
}

SensingOperator::SensingOperator(SamplingPattern pattern)
    : pattern_(std::move(pattern)),
      fft_(pattern_.n_xi()),
      wht_(pattern_.nx, pattern_.ny) {
  validate(pattern_);
}

ComplexArray SensingOperator::forward(const ComplexArray& u) const {
  require(u.rows() == n_xi() && u.cols() == n_p(), ErrorKind::dimension,
          "forward: input is " + std::to_string(u.rows()) + "x" + std::to_string(u.cols()) +
              ", pattern expects " + std::to_string(n_xi()) + "x" + std::to_string(n_p()));
  ComplexArray z = u;
  fft_.forward_columns(z);
  ComplexArray y(m_xi(), m_p());
  const auto& rows = pattern_.spectral.omega;
  const auto& cols = pattern_.spatial.omega;
  for (std::size_t a = 0; a < rows.size(); ++a) {
    auto r = z.row(rows[a]);
    wht_.apply(r);
    for (std::size_t b = 0; b < cols.size(); ++b) y(a, b) = r[cols[b]];
  }
  return y;
}

ComplexArray SensingOperator::adjoint(const ComplexArray& y) const {
  require(y.rows() == m_xi() && y.cols() == m_p(), ErrorKind::dimension,
          "adjoint: measurements do not match the pattern");
  ComplexArray z(n_xi(), n_p());
  const auto& rows = pattern_.spectral.omega;
  const auto& cols = pattern_.spatial.omega;
  for (std::size_t a = 0; a < rows.size(); ++a) {
    auto r = z.row(rows[a]);
    for (std::size_t b = 0; b < cols.size(); ++b) r[cols[b]] = y(a, b);
    wht_.apply(r);
  }
  fft_.inverse_columns(z);
  return z;
}

ComplexArray forward(const HyperCube& x, const SamplingPattern& pattern) {
  require(x.n_nu == pattern.n_xi() && x.nx == pattern.nx && x.ny == pattern.ny, ErrorKind::dimension,
          "forward: hypercube shape does not match the sampling pattern");
  return SensingOperator(pattern).forward(to_complex(x.values));
}

ComplexArray adjoint(const ComplexArray& y, const SamplingPattern& pattern) {
  return SensingOperator(pattern).adjoint(y);
}

double epsilon_rule(double sigma_nyq, std::size_t m_xi, std::size_t m_p) {
  return sigma_nyq * std::sqrt(static_cast<double>(m_xi) * static_cast<double>(m_p));
}

MeasurementSet add_noise(ComplexArray y_clean, double sigma_nyq, std::uint64_t seed) {
  require(sigma_nyq >= 0.0 && std::isfinite(sigma_nyq), ErrorKind::invalid_argument,
          "add_noise: sigma must be a finite non-negative number");
  if (sigma_nyq > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, sigma_nyq);
    for (auto& v : y_clean.flat()) v += gauss(rng);
  }
  MeasurementSet out;
  out.epsilon = epsilon_rule(sigma_nyq, y_clean.rows(), y_clean.cols());
  out.sigma_nyq = sigma_nyq;
  out.y = std::move(y_clean);
  return out;
}

double mur(std::size_t m_xi, std::size_t m_p, std::size_t n_xi, std::size_t n_p) {
  require(n_xi > 0 && n_p > 0, ErrorKind::invalid_argument, "mur: zero denominator");
  require(m_xi > 0 && m_p > 0 && m_xi <= n_xi && m_p <= n_p, ErrorKind::invalid_argument,
          "mur: need 0 < M <= N in both domains");
  return (static_cast<double>(m_xi) * static_cast<double>(m_p)) /
         (static_cast<double>(n_xi) * static_cast<double>(n_p));
}

double err(std::size_t m_xi, std::size_t m_p, std::size_t n_xi) {
  require(m_p >= 1, ErrorKind::invalid_argument, "err: M_p must be at least 1");
  require(m_xi > 0 && m_xi <= n_xi, ErrorKind::invalid_argument, "err: need 0 < M_xi <= N_xi");
  return 0.5 * (1.0 + 1.0 / static_cast<double>(m_p)) * static_cast<double>(m_xi) /
         static_cast<double>(n_xi);
}

}  // namespace spfti
