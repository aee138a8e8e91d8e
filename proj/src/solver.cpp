#include "spfti/solver.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include "spfti/error.hpp"

namespace spfti {

AnalysisOperator::AnalysisOperator(std::size_t n_xi, std::size_t nx, std::size_t ny)
    : n_xi_(n_xi), nx_(nx), ny_(ny), fft_(n_xi), haar_(nx, ny) {}

ComplexArray AnalysisOperator::analysis(const ComplexArray& u) const {
  require(u.rows() == n_xi_ && u.cols() == nx_ * ny_, ErrorKind::dimension,
          "analysis: input shape does not match the operator");
  ComplexArray c = u;
  fft_.forward_columns(c);
  for (std::size_t r = 0; r < n_xi_; ++r) haar_.forward(c.row(r));
  return c;
}

ComplexArray AnalysisOperator::synthesis(const ComplexArray& c) const {
  require(c.rows() == n_xi_ && c.cols() == nx_ * ny_, ErrorKind::dimension,
          "synthesis: input shape does not match the operator");
  ComplexArray u = c;
  for (std::size_t r = 0; r < n_xi_; ++r) haar_.inverse(u.row(r));
  fft_.inverse_columns(u);
  return u;
}

ComplexArray analysis(const ComplexArray& u, std::size_t nx, std::size_t ny) {
  return AnalysisOperator(u.rows(), nx, ny).analysis(u);
}

ComplexArray synthesis(const ComplexArray& c, std::size_t nx, std::size_t ny) {
  return AnalysisOperator(c.rows(), nx, ny).synthesis(c);
}

double l1_norm(const ComplexArray& a) {
  double s = 0.0;
  for (const auto& v : a.flat()) s += std::abs(v);
  return s;
}

void soft_threshold(std::span<cplx> v, double lambda) {
  require(lambda >= 0.0, ErrorKind::invalid_argument, "soft_threshold: negative threshold");
  for (auto& z : v) {
    const double m = std::abs(z);
    z = m > lambda ? z * ((m - lambda) / m) : cplx{};
  }
}

ComplexArray project_ball(const ComplexArray& v, const ComplexArray& center, double radius) {
  require(v.same_shape(center), ErrorKind::dimension, "project_ball: shape mismatch");
  require(radius >= 0.0, ErrorKind::invalid_argument, "project_ball: negative radius");
  double d2 = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) d2 += std::norm(v.flat()[i] - center.flat()[i]);
  const double d = std::sqrt(d2);
  if (d <= radius) return v;
  const double s = radius / d;
  ComplexArray out(v.rows(), v.cols());
  for (std::size_t i = 0; i < v.size(); ++i)
    out.flat()[i] = center.flat()[i] + s * (v.flat()[i] - center.flat()[i]);
  return out;
}

ComplexArray ball_conjugate_prox(const ComplexArray& v, const ComplexArray& center, double radius,
                                 double sigma) {
  require(sigma > 0.0, ErrorKind::invalid_argument, "ball_conjugate_prox: sigma must be positive");
  ComplexArray scaled = v;
  for (auto& z : scaled.flat()) z /= sigma;
  const auto p = project_ball(scaled, center, radius);
  ComplexArray out(v.rows(), v.cols());
  for (std::size_t i = 0; i < v.size(); ++i) out.flat()[i] = v.flat()[i] - sigma * p.flat()[i];
  return out;
}

void l1_conjugate_prox(std::span<cplx> v, double sigma) {
  require(sigma > 0.0, ErrorKind::invalid_argument, "l1_conjugate_prox: sigma must be positive");
  // v - sigma * soft(v / sigma, 1 / sigma), written out per entry.
  const double lambda = 1.0 / sigma;
  for (auto& z : v) {
    const cplx s = z / sigma;
    const double m = std::sqrt(std::norm(s));
    const cplx shrunk = m > lambda ? s * ((m - lambda) / m) : cplx{};
    z -= sigma * shrunk;
  }
}

double sre(const RealArray& reference, const RealArray& estimate) {
  require(reference.same_shape(estimate), ErrorKind::dimension, "sre: shape mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double r = reference.flat()[i];
    const double e = r - estimate.flat()[i];
    num += r * r;
    den += e * e;
  }
  if (den == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(num / den);
}

double sre(const HyperCube& reference, const HyperCube& estimate) {
  require(reference.n_nu == estimate.n_nu && reference.nx == estimate.nx && reference.ny == estimate.ny,
          ErrorKind::dimension, "sre: hypercube shapes differ");
  return sre(reference.values, estimate.values);
}

double operator_norm_estimate(const NormalMap& op, std::size_t iters, std::uint64_t seed) {
  require(op.rows > 0 && op.cols > 0 && op.apply, ErrorKind::invalid_argument,
          "operator_norm_estimate: empty operator");
  require(iters > 0, ErrorKind::invalid_argument, "operator_norm_estimate: need at least one iteration");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  ComplexArray x(op.rows, op.cols);
  for (auto& v : x.flat()) v = cplx(gauss(rng), gauss(rng));

  double lambda = 0.0;
  for (std::size_t it = 0; it < iters; ++it) {
    const double nx = frobenius_norm(x);
    if (nx == 0.0) break;
    for (auto& v : x.flat()) v /= nx;
    ComplexArray y = op.apply(x);
    require(y.same_shape(x), ErrorKind::dimension, "operator_norm_estimate: normal map changed shape");
    double rq = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) rq += (std::conj(x.flat()[i]) * y.flat()[i]).real();
    lambda = std::max(lambda, rq);
    x = std::move(y);
  }
  return std::sqrt(std::max(lambda, 0.0));
}

std::string to_string(Splitting s) { return s == Splitting::projected ? "projected" : "stacked"; }

Splitting splitting_from_string(const std::string& s) {
  if (s == "projected") return Splitting::projected;
  if (s == "stacked") return Splitting::stacked;
  fail(ErrorKind::config, "unknown splitting '" + s + "' (expected projected or stacked)");
}

void validate(const SolverConfig& cfg) {
  require(cfg.max_iters > 0, ErrorKind::config, "solver: max_iters must be positive");
  require(cfg.rel_change_tol > 0.0, ErrorKind::config, "solver: rel_change_tol must be positive");
  require(cfg.feasibility_slack >= 1.0, ErrorKind::config, "solver: feasibility_slack must be >= 1");
  require(cfg.tau > 0.0 && cfg.sigma > 0.0 && std::isfinite(cfg.tau) && std::isfinite(cfg.sigma),
          ErrorKind::config, "solver: step sizes must be positive");
}

namespace {

void axpy_into(ComplexArray& out, const ComplexArray& a, double s, const ComplexArray& b) {
  for (std::size_t i = 0; i < out.size(); ++i) out.flat()[i] = a.flat()[i] + s * b.flat()[i];
}

double diff_norm(const ComplexArray& a, const ComplexArray& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(a.flat()[i] - b.flat()[i]);
  return std::sqrt(s);
}

}  // namespace

RealBallProjection::RealBallProjection(const SensingOperator& a, const ComplexArray& y, double eps)
    : a_(a) {
  const auto& rows = a.pattern().spectral.omega;
  const std::size_t n = a.n_xi();
  std::vector<std::ptrdiff_t> pos(n, -1);
  for (std::size_t i = 0; i < rows.size(); ++i) pos[rows[i]] = static_cast<std::ptrdiff_t>(i);
  double c0 = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t k = rows[i];
    const std::size_t mirror = (n - k) % n;
    Unit u{i, i, Kind::lone};
    if (mirror == k) {
      u.kind = Kind::self;
    } else if (pos[mirror] >= 0) {
      if (mirror < k) continue;  // handled with its partner
      u.kind = Kind::pair;
      u.partner = static_cast<std::size_t>(pos[mirror]);
    }
    units_.push_back(u);
  }
  target_ = ComplexArray(units_.size(), y.cols());
  for (std::size_t j = 0; j < units_.size(); ++j) {
    const auto& u = units_[j];
    for (std::size_t q = 0; q < y.cols(); ++q) {
      const cplx yk = y(u.row, q);
      switch (u.kind) {
        case Kind::self:
          target_(j, q) = yk.real();
          c0 += yk.imag() * yk.imag();
          break;
        case Kind::pair: {
          const cplx ym = std::conj(y(u.partner, q));
          target_(j, q) = 0.5 * (yk + ym);
          c0 += 0.5 * std::norm(yk - ym);
          break;
        }
        case Kind::lone:
          target_(j, q) = yk;
          break;
      }
    }
  }
  budget_ = eps * eps - c0;
}

void RealBallProjection::operator()(ComplexArray& u) const {
  const auto z = a_.forward(u);
  // Squared weighted distances of the lone units (rate 1/2) and the rest (rate 1).
  double s_half = 0.0, s_one = 0.0;
  for (std::size_t j = 0; j < units_.size(); ++j) {
    const auto& un = units_[j];
    for (std::size_t q = 0; q < z.cols(); ++q) {
      const double d = std::norm(z(un.row, q) - target_(j, q));
      if (un.kind == Kind::lone) s_half += d;
      else if (un.kind == Kind::pair) s_one += 2.0 * d;
      else s_one += d;
    }
  }
  auto phi = [&](double lam) {
    return s_half / ((1.0 + 0.5 * lam) * (1.0 + 0.5 * lam)) + s_one / ((1.0 + lam) * (1.0 + lam));
  };
  if (budget_ >= 0.0 && s_half + s_one <= budget_) return;

  // shrink[rate] = 1 / (1 + lambda * rate); lambda = inf when the budget is exhausted.
  double shrink_half = 0.0, shrink_one = 0.0;
  if (budget_ > 0.0) {
    double lo = 0.0, hi = 1.0;
    while (phi(hi) > budget_ && hi < 1e300) hi *= 2.0;
    for (int it = 0; it < 200 && hi > lo; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (phi(mid) > budget_ ? lo : hi) = mid;
    }
    shrink_half = 1.0 / (1.0 + 0.5 * hi);
    shrink_one = 1.0 / (1.0 + hi);
  }

  ComplexArray delta(z.rows(), z.cols());
  for (std::size_t j = 0; j < units_.size(); ++j) {
    const auto& un = units_[j];
    for (std::size_t q = 0; q < z.cols(); ++q) {
      const cplx cur = un.kind == Kind::self ? cplx(z(un.row, q).real()) : z(un.row, q);
      const cplx t = target_(j, q);
      const double s = un.kind == Kind::lone ? shrink_half : shrink_one;
      const cplx dz = (t - cur) * (1.0 - s);
      switch (un.kind) {
        case Kind::self: delta(un.row, q) = dz.real(); break;
        case Kind::pair:
          delta(un.row, q) = dz;
          delta(un.partner, q) = std::conj(dz);
          break;
        case Kind::lone: delta(un.row, q) = 2.0 * dz; break;
      }
    }
  }
  const auto du = a_.adjoint(delta);
  for (std::size_t i = 0; i < u.size(); ++i) u.flat()[i] += du.flat()[i].real();
}

SolverResult solve(const MeasurementSet& meas, const SamplingPattern& pattern, const SolverConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  validate(cfg);
  require(meas.epsilon >= 0.0 && std::isfinite(meas.epsilon), ErrorKind::invalid_argument,
          "solve: epsilon must be finite and non-negative");
  const SensingOperator A(pattern);
  require(meas.y.rows() == A.m_xi() && meas.y.cols() == A.m_p(), ErrorKind::dimension,
          "solve: measurements are " + std::to_string(meas.y.rows()) + "x" + std::to_string(meas.y.cols()) +
              ", pattern expects " + std::to_string(A.m_xi()) + "x" + std::to_string(A.m_p()));
  const std::size_t n = A.n_xi(), np = A.n_p();
  const AnalysisOperator D(n, pattern.nx, pattern.ny);
  const ComplexArray& Y = meas.y;
  const double eps = meas.epsilon;

  SolverResult res;
  res.epsilon = eps;

  if (cfg.step_check_iters > 0) {
    NormalMap normal{n, np, nullptr};
    if (cfg.splitting == Splitting::projected) {
      normal.apply = [&](const ComplexArray& x) { return D.synthesis(D.analysis(x)); };
    } else {
      normal.apply = [&](const ComplexArray& x) {
        auto a = D.synthesis(D.analysis(x));
        const auto b = A.adjoint(A.forward(x));
        for (std::size_t i = 0; i < a.size(); ++i) a.flat()[i] += b.flat()[i];
        return a;
      };
    }
    res.operator_norm = operator_norm_estimate(normal, cfg.step_check_iters, 0x5eed);
    require(cfg.tau * cfg.sigma * res.operator_norm * res.operator_norm <= 1.0 + 1e-9, ErrorKind::config,
            "solver: tau * sigma * L^2 = " + std::to_string(cfg.tau * cfg.sigma * res.operator_norm * res.operator_norm) +
                " exceeds 1");
  }

  const double feas_bound = cfg.feasibility_slack * eps + kFeasibilityFloor * std::max(1.0, frobenius_norm(Y));
  const RealBallProjection project_feasible(A, Y, eps);

  ComplexArray x(n, np), xbar(n, np), y1(n, np), y2(A.m_xi(), A.m_p()), xn(n, np);
  RealArray best;
  double best_obj = std::numeric_limits<double>::infinity();
  double best_res = 0.0;
  bool converged = false;
  std::size_t it = 0;

  // Projected iterates are real, so D x is reused for both the objective and
  // the next extrapolation: D xbar = 2 D xn - D x.
  const bool projected = cfg.splitting == Splitting::projected;
  ComplexArray d_x(n, np), d_bar(n, np);

  while (it < cfg.max_iters) {
    ++it;
    // Dual step on the analysis term.
    if (projected) {
      axpy_into(y1, y1, cfg.sigma, d_bar);
    } else {
      axpy_into(y1, y1, cfg.sigma, D.analysis(xbar));
    }
    l1_conjugate_prox(y1.flat(), cfg.sigma);

    auto grad = D.synthesis(y1);
    if (!projected) {
      const auto ax = A.forward(xbar);
      ComplexArray v(y2.rows(), y2.cols());
      axpy_into(v, y2, cfg.sigma, ax);
      y2 = ball_conjugate_prox(v, Y, eps, cfg.sigma);
      const auto g2 = A.adjoint(y2);
      for (std::size_t i = 0; i < grad.size(); ++i) grad.flat()[i] += g2.flat()[i];
    }
    axpy_into(xn, x, -cfg.tau, grad);
    if (projected) {
      for (auto& v : xn.flat()) v = v.real();
      project_feasible(xn);
    }

    for (std::size_t i = 0; i < x.size(); ++i) xbar.flat()[i] = 2.0 * xn.flat()[i] - x.flat()[i];
    const double change = diff_norm(xn, x);
    std::swap(x, xn);

    // Feasibility and objective are judged on the real estimate.
    double r = 0.0, obj = 0.0;
    RealArray xr;
    if (projected) {
      auto d_n = D.analysis(x);
      for (std::size_t i = 0; i < d_n.size(); ++i) d_bar.flat()[i] = 2.0 * d_n.flat()[i] - d_x.flat()[i];
      d_x = std::move(d_n);
      r = diff_norm(A.forward(x), Y);
    } else {
      xr = real_part(x);
      r = diff_norm(A.forward(to_complex(xr)), Y);
    }
    const bool feasible = r <= feas_bound;
    if (feasible) {
      obj = projected ? l1_norm(d_x) : l1_norm(D.analysis(to_complex(xr)));
      if (std::isnan(res.first_feasible_objective)) res.first_feasible_objective = obj;
      if (obj <= best_obj) {
        best_obj = obj;
        best_res = r;
        best = projected ? real_part(x) : std::move(xr);
      }
    }
    if (feasible && change <= cfg.rel_change_tol * std::max(frobenius_norm(x), 1e-300)) {
      converged = true;
      break;
    }
  }

  res.iterations = it;
  res.converged = converged;
  double imag = 0.0;
  for (const auto& v : x.flat()) imag += v.imag() * v.imag();
  res.imag_norm = std::sqrt(imag);

  res.x_hat = HyperCube(n, pattern.nx, pattern.ny);
  if (!best.empty()) {
    res.x_hat.values = std::move(best);
    res.final_objective = best_obj;
    res.final_residual = best_res;
  } else {
    res.x_hat.values = real_part(x);
    const auto cr = to_complex(res.x_hat.values);
    res.final_objective = l1_norm(D.analysis(cr));
    res.final_residual = diff_norm(A.forward(cr), Y);
  }
  res.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace spfti
