// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "spfti/error.hpp"
#include "spfti/experiment.hpp"

using namespace spfti;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

cplx inner(std::span<const cplx> a, std::span<const cplx> b) {
  cplx s{};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

double norm(std::span<const cplx> a) { return std::sqrt(std::abs(inner(a, a))); }

// ---------------------------------------------------------------- 1

Outcome metrics_exactness() {
  const double m = mur(112, 8218, 512, 16384);
  const double e = err(112, 8218, 512);
  // Exact rationals: 112*8218 / (512*16384) and 112*8219 / (2*8218*512).
  const double m_exact = 920416.0 / 8388608.0;
  const double e_exact = 920528.0 / 8415232.0;
  const std::string m4 = fmt("%.4f", m), e4 = fmt("%.4f", e);
  const bool ok = std::abs(m - m_exact) <= 1e-15 && std::abs(e - e_exact) <= 1e-15 && m4 == "0.1097" &&
                  e4 == "0.1094" && fmt("%.2f", m) == "0.11" && fmt("%.2f", e) == "0.11";
  return {ok, "mur=" + m4 + " err=" + e4};
}

// ---------------------------------------------------------------- 2

Outcome transform_correctness() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<unsigned> pick(1, 5);
  double worst_identity = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = std::size_t{1} << (trial % 10 + 1);
    const std::size_t nx = std::size_t{1} << pick(rng), ny = std::size_t{1} << pick(rng);

    auto x = oracle::random_complex(n, rng), y = oracle::random_complex(n, rng);
    const FftPlan fft(n);
    auto fx = x, iy = y;
    fft.forward(fx);
    fft.inverse(iy);
    worst_identity = std::max({worst_identity, std::abs(norm(fx) - norm(x)), std::abs(inner(fx, y) - inner(x, iy))});
    auto back = fx;
    fft.inverse(back);
    worst_identity = std::max(worst_identity, oracle::max_abs_diff(back, x));

    auto a = oracle::random_complex(nx * ny, rng), b = oracle::random_complex(nx * ny, rng);
    const WalshHadamard2D wht(nx, ny);
    auto wa = a, wb = b;
    wht.apply(std::span<cplx>(wa));
    wht.apply(std::span<cplx>(wb));
    // Symmetric and orthonormal: <Wa, b> = <a, Wb>, W W = I.
    worst_identity = std::max({worst_identity, std::abs(norm(wa) - norm(a)), std::abs(inner(wa, b) - inner(a, wb))});
    wht.apply(std::span<cplx>(wa));
    worst_identity = std::max(worst_identity, oracle::max_abs_diff(wa, a));

    const Haar2D haar(nx, ny);
    auto ha = a, hb = b;
    haar.forward(std::span<cplx>(ha));
    haar.inverse(std::span<cplx>(hb));
    worst_identity = std::max({worst_identity, std::abs(norm(ha) - norm(a)), std::abs(inner(ha, b) - inner(a, hb))});
    haar.inverse(std::span<cplx>(ha));
    worst_identity = std::max(worst_identity, oracle::max_abs_diff(ha, a));
  }

  double worst_dense = 0.0;
  for (std::size_t n = 2; n <= 64; n *= 2) {
    const auto x = oracle::random_complex(n, rng);
    worst_dense = std::max(worst_dense, oracle::max_abs_diff(dft_forward(x), oracle::matvec(oracle::dft_matrix(n), x)));
    worst_dense = std::max(worst_dense,
                           oracle::max_abs_diff(dft_inverse(x), oracle::matvec(oracle::adjoint(oracle::dft_matrix(n)), x)));
    const auto r = oracle::random_real(n, rng);
    worst_dense = std::max(worst_dense, oracle::max_abs_diff(wht_1d(r), oracle::matvec(oracle::walsh_matrix(n), r)));
    worst_dense = std::max(worst_dense, oracle::max_abs_diff(haar_1d_forward(r), oracle::matvec(oracle::haar_matrix(n), r)));
    for (std::size_t nx = 2; nx <= n / 2; nx *= 2) {
      const std::size_t ny = n / nx;
      RealArray img(nx, ny);
      for (std::size_t i = 0; i < n; ++i) img.flat()[i] = r[i];
      const auto w = wht_2d_forward(img);
      const auto h = haar_2d_forward(img);
      const auto w_ref = oracle::matvec(oracle::kron(oracle::walsh_matrix(nx), oracle::walsh_matrix(ny)), r);
      const auto h_ref = oracle::matvec(oracle::kron(oracle::haar_matrix(nx), oracle::haar_matrix(ny)), r);
      for (std::size_t i = 0; i < n; ++i)
        worst_dense = std::max({worst_dense, std::abs(w.flat()[i] - w_ref[i]), std::abs(h.flat()[i] - h_ref[i])});
    }
  }
  return {worst_identity <= 1e-10 && worst_dense <= 1e-12,
          "identities max dev " + fmt("%.1e", worst_identity) + ", dense max dev " + fmt("%.1e", worst_dense)};
}

// ---------------------------------------------------------------- 3

Outcome coherence_oracle() {
  struct Pair {
    LinearMap sensing, sparsity;
    LevelPartition w, t;
  };
  std::vector<Pair> pairs;
  for (std::size_t n : {8, 16, 32, 64}) {
    const auto sp = spectral_partition(n, n / 4);
    const auto dy = dyadic_partition(n);
    pairs.push_back({dft_map(n), idft_map(n), sp, sp});
    pairs.push_back({dft_map(n), haar_1d_synthesis_map(n), sp, dy});
    pairs.push_back({dft_map(n), identity_map(n), sp, dy});
    pairs.push_back({walsh_1d_map(n), haar_1d_synthesis_map(n), dy, dy});
    pairs.push_back({walsh_1d_map(n), idft_map(n), dy, sp});
    pairs.push_back({walsh_1d_map(n), identity_map(n), dy, dy});
    pairs.push_back({identity_map(n), identity_map(n), single_level(n, Domain::spatial), single_level(n, Domain::spatial)});
  }
  for (auto [nx, ny] : {std::pair<std::size_t, std::size_t>{2, 2}, {4, 4}, {8, 8}}) {
    const auto sp = spatial_partition(nx, ny);
    pairs.push_back({walsh_2d_map(nx, ny), haar_2d_synthesis_map(nx, ny), sp, sp});
    pairs.push_back({walsh_2d_map(nx, ny), identity_map(nx * ny), sp, sp});
  }
  std::size_t exact = 0;
  double fast_dev = 0.0;
  for (const auto& p : pairs) {
    const auto phi = materialize(p.sensing);
    const auto psi = materialize(p.sparsity);
    const auto expected = oracle::brute_force_mu(oracle::matmul(phi, psi), p.w, p.t);
    if (multilevel_coherence(dense_map(phi), dense_map(psi), p.w, p.t).mu == expected) ++exact;
    const auto fast = multilevel_coherence(p.sensing, p.sparsity, p.w, p.t);
    for (std::size_t i = 0; i < expected.size(); ++i)
      fast_dev = std::max(fast_dev, std::abs(fast.mu.flat()[i] - expected.flat()[i]));
  }
  double delta_dev = 0.0;
  for (std::size_t n : {8, 16, 32, 64})
    for (std::size_t r : {std::size_t{1}, n / 8, n / 4, n / 2}) {
      if (r == 0) continue;
      const auto w = spectral_partition(n, r);
      const auto mu = multilevel_coherence(dft_map(n), idft_map(n), w, w);
      for (std::size_t t = 0; t < r; ++t)
        for (std::size_t l = 0; l < r; ++l) delta_dev = std::max(delta_dev, std::abs(mu.mu(t, l) - (t == l ? 1.0 : 0.0)));
    }
  const bool ok = exact == pairs.size() && fast_dev <= 1e-12 && delta_dev <= 1e-14;
  return {ok, std::to_string(exact) + "/" + std::to_string(pairs.size()) + " pairs bit-exact, fast dev " +
                  fmt("%.1e", fast_dev) + ", Fourier/Fourier delta dev " + fmt("%.1e", delta_dev)};
}

// ---------------------------------------------------------------- 4

Outcome profile_reproduction() {
  const std::size_t n = 512, r = 32;
  const auto w = spectral_partition(n, r);
  const auto mu = multilevel_coherence(dft_map(n), idft_map(n), w, w);
  // Corpus whose significant coefficients fill levels 1..7 and nothing else.
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> mag(0.5, 1.0);
  std::vector<std::vector<cplx>> corpus(3, std::vector<cplx>(n));
  for (auto& item : corpus)
    for (std::size_t t = 0; t < 7; ++t)
      for (auto i : w.levels[t]) item[i] = mag(rng);
  const auto k = estimate_sparsity_in_levels(corpus, w, 0.01);
  const auto theta = sampling_profile(mu, k);
  std::vector<double> step(r, 0.0);
  std::fill(step.begin(), step.begin() + 7, 1.0);
  const auto m = allocate_samples(theta, w, 112);
  std::vector<std::size_t> want(r, 0);
  std::fill(want.begin(), want.begin() + 7, 16);
  const bool fixture_ok = fixture_profile("fig2-spectral").theta.theta == step;
  const bool ok = theta.theta == step && m == want && fixture_ok;
  std::string ms;
  for (std::size_t t = 0; t < 9; ++t) ms += std::to_string(m[t]) + (t < 8 ? "," : ",...");
  return {ok, std::string("theta ") + (theta.theta == step ? "== step" : "!= step") + ", m = (" + ms +
                  "), total " + std::to_string(std::accumulate(m.begin(), m.end(), std::size_t{0}))};
}

// ---------------------------------------------------------------- 5

Outcome solver_feasibility() {
  const auto t0 = std::chrono::steady_clock::now();
  PhantomSpec spec;
  spec.n_nu = 64;
  spec.nx = spec.ny = 16;
  const auto x = generate_phantom(spec);
  const auto full = full_pattern(64, 16, 16);
  const auto res = solve(add_noise(forward(x, full), 0.0, 0), full, SolverConfig{});
  const double db = sre(x, res.x_hat);
  const double secs = seconds_since(t0);
  const bool exact = res.converged && res.iterations <= 50 && db >= 100.0 && secs < 10.0;

  // Residual bound on every converged solve of a mixed batch.
  std::size_t converged = 0, within = 0;
  for (std::uint64_t seed = 1; seed <= 4; ++seed)
    for (auto split : {Splitting::projected, Splitting::stacked})
      for (double sigma : {0.0, 1e-3, 1e-2}) {
        PhantomSpec s;
        s.n_nu = 16;
        s.nx = s.ny = 8;
        s.seed = seed;
        const auto v = generate_phantom(s);
        const SamplingPattern pat{make_uds_mask(8, 16, seed), make_uds_mask(40, 64, seed + 100), 8, 8};
        const auto meas = add_noise(forward(v, pat), sigma, seed);
        SolverConfig cfg;
        cfg.splitting = split;
        cfg.max_iters = 2000;
        cfg.rel_change_tol = 1e-5;
        const auto r = solve(meas, pat, cfg);
        if (!r.converged) continue;
        ++converged;
        if (r.final_residual <= cfg.feasibility_slack * meas.epsilon + kFeasibilityFloor * std::max(1.0, frobenius_norm(meas.y)))
          ++within;
      }
  const bool bound = converged > 0 && within == converged;
  return {exact && bound, "full sampling: " + fmt("%.1f", db) + " dB in " + std::to_string(res.iterations) +
                              " iterations, " + fmt("%.2f", secs) + " s; residual <= 1.01 eps in " +
                              std::to_string(within) + "/" + std::to_string(converged) + " converged solves"};
}

// ---------------------------------------------------------------- 6

Outcome exact_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = 64, nx = 16, ny = 16, np = nx * ny;
  const auto wx = spectral_partition(n, 8);
  const auto wp = spatial_partition(nx, ny);

  // Real volume: a few cosines at |f| <= 11 (spectral levels 1..3) times
  // single Haar atoms spread over all four spatial levels.
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> freq(0, 11);
  std::uniform_int_distribution<std::size_t> pos(0, np - 1);
  std::uniform_real_distribution<double> amp(0.5, 1.5), phase(0.0, 6.283185307179586);
  HyperCube x(n, nx, ny);
  const Haar2D haar(nx, ny);
  for (int a = 0; a < 10; ++a) {
    std::vector<double> img(np, 0.0);
    img[pos(rng)] = 1.0;
    haar.inverse(std::span<double>(img));
    const double f = freq(rng), ph = phase(rng), w = amp(rng);
    for (std::size_t v = 0; v < n; ++v) {
      const double c = w * std::cos(6.283185307179586 * f * static_cast<double>(v) / static_cast<double>(n) + ph);
      for (std::size_t p = 0; p < np; ++p) x.values(v, p) += c * img[p];
    }
  }

  const auto spectral = make_mls_mask(SamplingProfile{{1, 1, 1, 0, 0, 0, 0, 0}}, wx, 24, 61);
  auto spatial_theta = fixture_profile("fig2-spatial").theta;
  spatial_theta.theta.resize(wp.num_levels());
  const auto spatial = make_mls_mask(spatial_theta, wp, 205, 62);
  const SamplingPattern pat{spectral, spatial, nx, ny};
  SolverConfig cfg;
  cfg.max_iters = 20000;
  cfg.rel_change_tol = 1e-9;
  const auto res = solve(add_noise(forward(x, pat), 0.0, 0), pat, cfg);
  const double db = sre(x, res.x_hat);
  const double secs = seconds_since(t0);
  const double m = mur(pat.m_xi(), pat.m_p(), n, np);
  return {db >= 60.0 && secs < 60.0, "MUR " + fmt("%.3f", m) + ", " + fmt("%.1f", db) + " dB after " +
                                         std::to_string(res.iterations) + " iterations, " + fmt("%.1f", secs) + " s"};
}

// ---------------------------------------------------------------- 7

Outcome mls_vs_uds() {
  const auto t0 = std::chrono::steady_clock::now();
  double gap = 0.0, mls_sum = 0.0, uds_sum = 0.0, mur_v = 0.0;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    ExperimentConfig c;
    c.seeds.mask = 10 * s + 1;
    c.seeds.noise = 10 * s + 2;
    c.seeds.phantom = c.phantom.seed = 10 * s + 3;
    const auto rep = run_experiment(c, false);
    const double a = rep.outcomes.at(0).sre_db, b = rep.outcomes.at(1).sre_db;
    mls_sum += a;
    uds_sum += b;
    gap += a - b;
    mur_v = rep.outcomes.at(0).mur;
  }
  gap /= 5;
  const double secs = seconds_since(t0);
  return {gap >= 6.0 && secs < 300.0, "MUR " + fmt("%.4f", mur_v) + ", mean SRE MLS " + fmt("%.2f", mls_sum / 5) +
                                          " dB, UDS " + fmt("%.2f", uds_sum / 5) + " dB, gap " + fmt("%.2f", gap) +
                                          " dB, " + fmt("%.0f", secs) + " s"};
}

// ---------------------------------------------------------------- 8

// Every output file keyed by relative path; wall_ms removed where it occurs.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir).generic_string();
    std::ifstream f(e.path(), std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    std::string text = s.str();
    if (rel == "metrics.csv") {
      std::istringstream in(text);
      std::string line;
      text.clear();
      while (std::getline(in, line)) text += line.substr(0, line.rfind(',')) + "\n";
    } else if (e.path().filename() == "summary.json") {
      auto j = json::parse(text);
      j.erase("wall_ms");
      text = j.dump();
    }
    files[rel] = text;
  }
  return files;
}

Outcome determinism() {
  ExperimentConfig c;
  c.phantom.n_nu = 64;
  c.phantom.nx = c.phantom.ny = 16;
  c.output_dir = fs::temp_directory_path() / "spfti_acceptance_det";
  fs::remove_all(c.output_dir);
  run_experiment(c);
  const auto first = snapshot(c.output_dir);
  fs::remove_all(c.output_dir);
  run_experiment(c);
  const auto second = snapshot(c.output_dir);
  fs::remove_all(c.output_dir);
  std::size_t same = 0;
  for (const auto& [k, v] : first)
    if (auto it = second.find(k); it != second.end() && it->second == v) ++same;
  const bool ok = first.size() == second.size() && same == first.size() && first.count("metrics.csv");
  return {ok, std::to_string(same) + "/" + std::to_string(first.size()) + " files identical"};
}

// ---------------------------------------------------------------- 9

Outcome noise_calibration() {
  const std::size_t m_xi = 32, m_p = 451;
  const double sigma = 1e-3;
  double sum = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto y = add_noise(ComplexArray(m_xi, m_p), sigma, seed);
    sum += frobenius_norm(y.y) / std::sqrt(static_cast<double>(m_xi * m_p) * sigma * sigma);
  }
  const double mean = sum / 100;
  return {mean >= 0.99 && mean <= 1.01, "mean ratio " + fmt("%.5f", mean)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"metrics exactness", metrics_exactness},   {"transform correctness", transform_correctness},
      {"coherence oracle", coherence_oracle},     {"profile reproduction", profile_reproduction},
      {"solver feasibility", solver_feasibility}, {"exact recovery", exact_recovery},
      {"MLS vs UDS separation", mls_vs_uds},      {"determinism", determinism},
      {"noise calibration", noise_calibration}};
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    all = all && o.pass;
    std::printf("%s %d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
