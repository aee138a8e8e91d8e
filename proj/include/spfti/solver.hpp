#pragma once

// Constrained analysis-l1 recovery
//
//   min_U || F U Psi_p ||_1   s.t.   || Y - A(U) ||_F <= epsilon
//
// solved by a primal-dual (PDHG) splitting, plus the SRE quality metric.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "spfti/acquisition.hpp"
#include "spfti/array.hpp"
#include "spfti/sampling.hpp"

namespace spfti {

/// Spectral DFT along rows composed with 2-D Haar analysis along each
/// spatial slice. Unitary; synthesis is its adjoint and inverse.
class AnalysisOperator {
 public:
  AnalysisOperator(std::size_t n_xi, std::size_t nx, std::size_t ny);

  ComplexArray analysis(const ComplexArray& u) const;
  ComplexArray synthesis(const ComplexArray& c) const;

 private:
  std::size_t n_xi_, nx_, ny_;
  FftPlan fft_;
  Haar2D haar_;
};

ComplexArray analysis(const ComplexArray& u, std::size_t nx, std::size_t ny);
ComplexArray synthesis(const ComplexArray& c, std::size_t nx, std::size_t ny);

double l1_norm(const ComplexArray& a);

/// Complex soft-thresholding: magnitude m -> max(m - lambda, 0), phase kept.
void soft_threshold(std::span<cplx> v, double lambda);

/// Euclidean projection of v onto the Frobenius ball {z : ||z - center|| <= radius}.
ComplexArray project_ball(const ComplexArray& v, const ComplexArray& center, double radius);

/// prox of sigma * (indicator of the ball)^* at v, through the Moreau
/// identity: v - sigma * project_ball(v / sigma).
ComplexArray ball_conjugate_prox(const ComplexArray& v, const ComplexArray& center, double radius,
                                 double sigma);

/// prox of sigma * (||.||_1)^* at v, through the Moreau identity:
/// v - sigma * soft_threshold(v / sigma, 1 / sigma). Clips magnitudes at 1.
void l1_conjugate_prox(std::span<cplx> v, double sigma);

/// Signal-to-reconstruction error in dB; +inf when the error is exactly zero.
double sre(const HyperCube& reference, const HyperCube& estimate);
double sre(const RealArray& reference, const RealArray& estimate);

/// Operator given through its normal map x -> Op^*(Op(x)).
struct NormalMap {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::function<ComplexArray(const ComplexArray&)> apply;
};

/// Power iteration on Op^* Op from a seeded random start; returns the
/// square root of the Rayleigh quotient, which increases monotonically.
double operator_norm_estimate(const NormalMap& op, std::size_t iters, std::uint64_t seed);

/// Projection onto {U real : ||A U - Y||_F <= eps}. For real U the sampled
/// spectral rows fall into conjugate classes: a self-conjugate row (0 or
/// N/2) carries a real value, a row whose mirror N-k is also sampled forms a
/// conjugate pair, and a lone row carries a free complex value whose change
/// costs twice as much in ||dU||^2. The constraint is a weighted ball in
/// these coordinates, so the projection needs one scalar multiplier.
class RealBallProjection {
 public:
  RealBallProjection(const SensingOperator& a, const ComplexArray& y, double eps);

  /// Projects u in place; u must be real-valued (imaginary parts are ignored).
  void operator()(ComplexArray& u) const;

  /// eps^2 minus the residual energy no real volume can remove.
  double budget() const { return budget_; }

 private:
  enum class Kind { self, pair, lone };
  struct Unit {
    std::size_t row;      // position in the spectral sample list
    std::size_t partner;  // position of the mirror row, for pairs
    Kind kind;
  };
  const SensingOperator& a_;
  std::vector<Unit> units_;
  ComplexArray target_;
  double budget_ = 0.0;
};

enum class Splitting {
  /// Real primal iterate, dual variable for the analysis term only; the data
  /// constraint is the exact RealBallProjection. Operator norm 1.
  projected,
  /// Complex primal iterate, stacked [analysis; forward] with a second dual
  /// for the epsilon-ball. Operator norm sqrt(2).
  stacked,
};

std::string to_string(Splitting s);
Splitting splitting_from_string(const std::string& s);

struct SolverConfig {
  std::size_t max_iters = 500;
  double rel_change_tol = 1e-6;
  double feasibility_slack = 1.01;
  double tau = std::numbers::sqrt2 / 2.0;
  double sigma = std::numbers::sqrt2 / 2.0;
  Splitting splitting = Splitting::projected;
  /// Power iterations spent validating tau * sigma * L^2 <= 1; 0 skips.
  std::size_t step_check_iters = 20;
};

void validate(const SolverConfig& cfg);

struct SolverResult {
  HyperCube x_hat;
  std::size_t iterations = 0;
  double final_objective = 0.0;   // ||analysis(x_hat)||_1
  double final_residual = 0.0;    // ||Y - A(x_hat)||_F
  double first_feasible_objective = std::numeric_limits<double>::quiet_NaN();
  double imag_norm = 0.0;         // ||Im U||_F of the complex iterate
  double epsilon = 0.0;
  double operator_norm = 0.0;     // estimate used for the step check
  double wall_ms = 0.0;
  bool converged = false;
};

/// Round-off allowance added to slack * epsilon when judging feasibility,
/// relative to ||Y||_F. Needed for epsilon = 0.
inline constexpr double kFeasibilityFloor = 1e-12;

SolverResult solve(const MeasurementSet& y, const SamplingPattern& pattern, const SolverConfig& cfg);

}  // namespace spfti
