#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "spfti/acquisition.hpp"
#include "spfti/error.hpp"

using namespace spfti;

namespace {

ComplexArray random_array(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  ComplexArray a(r, c);
  const auto v = oracle::random_complex(r * c, rng);
  std::copy(v.begin(), v.end(), a.data());
  return a;
}

cplx inner(const ComplexArray& a, const ComplexArray& b) {
  cplx s{};
  for (std::size_t i = 0; i < a.size(); ++i) s += a.flat()[i] * std::conj(b.flat()[i]);
  return s;
}

SamplingPattern random_pattern(std::size_t n_xi, std::size_t nx, std::size_t ny, std::size_t m_xi,
                               std::size_t m_p, std::uint64_t seed) {
  return {make_uds_mask(m_xi, n_xi, seed), make_uds_mask(m_p, nx * ny, seed + 1), nx, ny};
}

// P_xi F X H^T P_p^T with every matrix materialized.
ComplexArray dense_forward(const ComplexArray& x, const SamplingPattern& p) {
  const auto f = oracle::dft_matrix(p.n_xi());
  const auto h = oracle::kron(oracle::walsh_matrix(p.nx), oracle::walsh_matrix(p.ny));
  const auto full = oracle::matmul(oracle::matmul(f, x), oracle::transpose(h));
  ComplexArray y(p.m_xi(), p.m_p());
  for (std::size_t a = 0; a < p.m_xi(); ++a)
    for (std::size_t b = 0; b < p.m_p(); ++b) y(a, b) = full(p.spectral.omega[a], p.spatial.omega[b]);
  return y;
}

double max_diff(const ComplexArray& a, const ComplexArray& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.flat()[i] - b.flat()[i]));
  return m;
}

}  // namespace

TEST_CASE("forward matches the dense model") {
  std::mt19937_64 rng(21);
  for (auto [n_xi, nx, ny] : {std::tuple<std::size_t, std::size_t, std::size_t>{32, 8, 8}, {16, 4, 8}, {8, 2, 2}}) {
    const auto p = random_pattern(n_xi, nx, ny, n_xi / 2, nx * ny / 3, 5);
    const auto x = random_array(n_xi, nx * ny, rng);
    const SensingOperator op(p);
    CHECK(max_diff(op.forward(x), dense_forward(x, p)) < 1e-10);
  }
}

TEST_CASE("a Fourier tone times a Walsh pattern lands on one measurement") {
  const std::size_t n_xi = 16, nx = 4, ny = 4, np = 16;
  SamplingPattern p{Mask{Strategy::uds, 0, n_xi, {{}}, {3}, {1, 5, 9}},
                    Mask{Strategy::uds, 0, np, {{}}, {2}, {3, 10}}, nx, ny};
  for (std::size_t i = 0; i < n_xi; ++i) p.spectral.levels[0].push_back(i);
  for (std::size_t i = 0; i < np; ++i) p.spatial.levels[0].push_back(i);
  const SensingOperator op(p);

  auto tone_pattern = [&](std::size_t k, std::size_t q) {
    std::vector<cplx> e(n_xi);
    e[k] = 1.0;
    const auto tone = dft_inverse(e);
    RealArray unit(nx, ny);
    unit.flat()[q] = 1.0;
    const auto row = wht_2d_forward(unit);  // row q of the symmetric Walsh matrix
    ComplexArray x(n_xi, np);
    for (std::size_t i = 0; i < n_xi; ++i)
      for (std::size_t j = 0; j < np; ++j) x(i, j) = tone[i] * row.flat()[j];
    return x;
  };

  auto y = op.forward(tone_pattern(5, 10));
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 2; ++b) {
      const cplx want = (a == 1 && b == 1) ? cplx(1.0) : cplx(0.0);
      CHECK(std::abs(y(a, b) - want) < 1e-12);
    }
  y = op.forward(tone_pattern(4, 10));  // spectral row not sampled
  for (auto v : y.flat()) CHECK(std::abs(v) < 1e-12);
  y = op.forward(tone_pattern(5, 11));  // pattern not sampled
  for (auto v : y.flat()) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("zero volume and full-sampling isometry") {
  const auto full = full_pattern(16, 4, 4);
  HyperCube zero(16, 4, 4);
  const auto y0 = forward(zero, full);
  for (auto v : y0.flat()) CHECK(v == cplx{});

  std::mt19937_64 rng(22);
  const auto x = random_array(16, 16, rng);
  const SensingOperator op(full);
  const auto y = op.forward(x);
  CHECK(std::abs(frobenius_norm(y) - frobenius_norm(x)) < 1e-10);
  CHECK(max_diff(op.adjoint(y), x) < 1e-10);
  const auto back0 = op.adjoint(ComplexArray(16, 16));
  for (auto v : back0.flat()) CHECK(v == cplx{});
}

TEST_CASE("adjoint identity, linearity and norm bound on random inputs") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_pattern(32, 8, 8, 1 + trial % 32, 1 + (7 * trial) % 64, 100 + trial);
    const SensingOperator op(p);
    const auto x = random_array(32, 64, rng);
    const auto x2 = random_array(32, 64, rng);
    const auto y = random_array(p.m_xi(), p.m_p(), rng);
    const auto ax = op.forward(x);
    CHECK(std::abs(inner(ax, y) - inner(x, op.adjoint(y))) < 1e-10);
    CHECK(frobenius_norm(ax) <= frobenius_norm(x) + 1e-12);

    const cplx a(0.3, -1.2), b(2.0, 0.5);
    ComplexArray combo(32, 64);
    for (std::size_t i = 0; i < combo.size(); ++i) combo.flat()[i] = a * x.flat()[i] + b * x2.flat()[i];
    const auto lhs = op.forward(combo);
    const auto ax2 = op.forward(x2);
    ComplexArray rhs(p.m_xi(), p.m_p());
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs.flat()[i] = a * ax.flat()[i] + b * ax2.flat()[i];
    CHECK(max_diff(lhs, rhs) < 1e-10);

    // A A^* = I on the measurement space.
    CHECK(max_diff(op.forward(op.adjoint(y)), y) < 1e-10);
  }
}

TEST_CASE("shape mismatches are rejected") {
  const auto p = full_pattern(16, 4, 4);
  const SensingOperator op(p);
  CHECK_THROWS_AS(op.forward(ComplexArray(8, 16)), Error);
  CHECK_THROWS_AS(op.adjoint(ComplexArray(16, 8)), Error);
  CHECK_THROWS_AS(forward(HyperCube(16, 8, 8), p), Error);
  auto bad = p;
  bad.spatial.omega.push_back(99);
  CHECK_THROWS_AS(SensingOperator{bad}, Error);
}

TEST_CASE("noise injection") {
  ComplexArray y(10, 20, cplx(1.0, 2.0));
  auto clean = add_noise(y, 0.0, 1);
  CHECK(clean.y == y);
  CHECK(clean.epsilon == 0.0);

  const auto a = add_noise(y, 0.5, 77);
  const auto b = add_noise(y, 0.5, 77);
  CHECK(a.y == b.y);
  CHECK(a.epsilon == doctest::Approx(0.5 * std::sqrt(200.0)));
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(a.y.flat()[i].imag() == 2.0);  // real noise

  ComplexArray big(100, 100);
  const auto n = add_noise(big, 1.0, 5);
  const double ratio = frobenius_norm(n.y) / 100.0;
  CHECK(ratio >= 0.97);
  CHECK(ratio <= 1.03);

  CHECK_THROWS_AS(add_noise(y, -1.0, 1), Error);
}

TEST_CASE("noise norm concentrates around sqrt(M) over seeds") {
  // Monte-Carlo oracle for the epsilon rule.
  ComplexArray zero(100, 100);
  double mean = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) mean += frobenius_norm(add_noise(zero, 0.1, s).y) / (0.1 * 100.0);
  mean /= 100.0;
  CHECK(mean >= 0.99);
  CHECK(mean <= 1.01);
}

TEST_CASE("measurement undersampling and exposure reduction ratios") {
  CHECK(mur(112, 8218, 512, 16384) == doctest::Approx(112.0 * 8218.0 / (512.0 * 16384.0)).epsilon(1e-15));
  CHECK(mur(112, 8218, 512, 16384) == doctest::Approx(0.1097).epsilon(1e-3));
  CHECK(mur(512, 16384, 512, 16384) == 1.0);
  CHECK(mur(1, 1, 2, 2) == 0.25);
  CHECK(err(112, 8218, 512) == doctest::Approx(0.5 * (1.0 + 1.0 / 8218.0) * 112.0 / 512.0).epsilon(1e-15));
  CHECK(err(112, 8218, 512) == doctest::Approx(0.10939).epsilon(1e-4));
  CHECK(err(64, 1, 64) == 1.0);
  CHECK(err(64, 1u << 30, 64) == doctest::Approx(0.5).epsilon(1e-8));

  CHECK_THROWS_AS(mur(1, 1, 0, 4), Error);
  CHECK_THROWS_AS(mur(5, 1, 4, 4), Error);
  CHECK_THROWS_AS(err(1, 0, 4), Error);
  CHECK_THROWS_AS(err(0, 1, 4), Error);
}
