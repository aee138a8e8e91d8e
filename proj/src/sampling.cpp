#include "spfti/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <random>

#include "spfti/error.hpp"
#include "spfti/transforms.hpp"

namespace spfti {

namespace {

std::string str(std::size_t v) { return std::to_string(v); }

std::vector<std::size_t> iota_vec(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

// Applies a real-valued 1-D transform to real and imaginary parts.
template <class F>
void apply_real_pair(std::span<cplx> x, F&& transform) {
  std::vector<double> re(x.size()), im(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    re[i] = x[i].real();
    im[i] = x[i].imag();
  }
  const auto tr = transform(re);
  const auto ti = transform(im);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = {tr[i], ti[i]};
}

}  // namespace

// ---------------------------------------------------------------- partitions

std::vector<std::size_t> LevelPartition::level_sizes() const {
  std::vector<std::size_t> s;
  s.reserve(levels.size());
  for (const auto& l : levels) s.push_back(l.size());
  return s;
}

std::vector<std::size_t> LevelPartition::level_of() const {
  std::vector<std::size_t> out(n, std::numeric_limits<std::size_t>::max());
  for (std::size_t t = 0; t < levels.size(); ++t)
    for (auto i : levels[t]) out.at(i) = t;
  return out;
}

void validate(const LevelPartition& p) {
  require(!p.levels.empty(), ErrorKind::invalid_argument, "partition has no levels");
  std::vector<char> seen(p.n, 0);
  std::size_t total = 0;
  for (const auto& level : p.levels) {
    require(std::is_sorted(level.begin(), level.end()), ErrorKind::invalid_argument,
            "partition level is not sorted");
    for (auto i : level) {
      require(i < p.n, ErrorKind::dimension, "partition index " + str(i) + " out of range");
      require(!seen[i], ErrorKind::invalid_argument, "partition index " + str(i) + " repeated");
      seen[i] = 1;
    }
    total += level.size();
  }
  require(total == p.n, ErrorKind::invalid_argument, "partition does not cover all indices");
  if (p.domain == Domain::spectral) {
    for (const auto& level : p.levels)
      require(level.size() == p.levels.front().size(), ErrorKind::invalid_argument,
              "spectral partition levels must have equal cardinality");
  }
}

LevelPartition spectral_partition(std::size_t n, std::size_t r) {
  require(is_power_of_two(n) && is_power_of_two(r), ErrorKind::invalid_argument,
          "spectral_partition: N and r must be powers of two");
  require(r <= n && n % r == 0, ErrorKind::invalid_argument,
          "spectral_partition: r=" + str(r) + " does not divide N=" + str(n));
  const std::size_t per_level = n / r;
  require(per_level % 2 == 0, ErrorKind::invalid_argument,
          "spectral_partition: N/r must be even for levels symmetric about DC");
  const std::size_t half_band = per_level / 2;

  LevelPartition p{Domain::spectral, n, std::vector<std::vector<std::size_t>>(r)};
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t shifted = (k + n / 2) % n;
    // Distance from the centre line at n/2 - 1/2, in whole bins.
    const auto twice = static_cast<long long>(2 * shifted) - static_cast<long long>(n) + 1;
    const auto band = static_cast<std::size_t>((std::llabs(twice) - 1) / 2);
    p.levels[band / half_band].push_back(k);
  }
  return p;
}

LevelPartition spatial_partition(std::size_t nx, std::size_t ny) {
  require(nx == ny, ErrorKind::invalid_argument, "spatial_partition: image must be square");
  require(is_power_of_two(nx) && nx >= 2, ErrorKind::invalid_argument,
          "spatial_partition: side must be a power of two >= 2");
  const unsigned r = log2_exact(nx);
  LevelPartition p{Domain::spatial, nx * ny, std::vector<std::vector<std::size_t>>(r)};
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t k = 0; k < ny; ++k) {
      const unsigned level = std::max(dyadic_level(i), dyadic_level(k));
      p.levels[level - 1].push_back(i * ny + k);
    }
  return p;
}

LevelPartition dyadic_partition(std::size_t n) {
  require(is_power_of_two(n) && n >= 2, ErrorKind::invalid_argument,
          "dyadic_partition: length must be a power of two >= 2");
  LevelPartition p{Domain::spatial, n, std::vector<std::vector<std::size_t>>(log2_exact(n))};
  for (std::size_t i = 0; i < n; ++i) p.levels[dyadic_level(i) - 1].push_back(i);
  return p;
}

LevelPartition single_level(std::size_t n, Domain domain) {
  require(n > 0, ErrorKind::invalid_argument, "single_level: empty domain");
  return {domain, n, {iota_vec(n)}};
}

// ---------------------------------------------------------------- maps

LinearMap dense_map(ComplexArray matrix, std::string label) {
  require(matrix.rows() == matrix.cols(), ErrorKind::dimension, "dense_map: matrix must be square");
  const std::size_t n = matrix.rows();
  auto shared = std::make_shared<const ComplexArray>(std::move(matrix));
  return {n,
          [shared, n](std::span<cplx> x) {
            std::vector<cplx> y(n);
            for (std::size_t i = 0; i < n; ++i) {
              cplx s{};
              for (std::size_t k = 0; k < n; ++k) s += (*shared)(i, k) * x[k];
              y[i] = s;
            }
            std::copy(y.begin(), y.end(), x.begin());
          },
          std::move(label)};
}

LinearMap identity_map(std::size_t n) { return {n, [](std::span<cplx>) {}, "identity"}; }

LinearMap dft_map(std::size_t n) {
  auto plan = std::make_shared<const FftPlan>(n);
  return {n, [plan](std::span<cplx> x) { plan->forward(x); }, "dft"};
}

LinearMap idft_map(std::size_t n) {
  auto plan = std::make_shared<const FftPlan>(n);
  return {n, [plan](std::span<cplx> x) { plan->inverse(x); }, "idft"};
}

LinearMap walsh_1d_map(std::size_t n) {
  (void)sequency_permutation(n);
  return {n,
          [](std::span<cplx> x) {
            apply_real_pair(x, [](const std::vector<double>& v) { return wht_1d(v); });
          },
          "walsh1d"};
}

LinearMap haar_1d_synthesis_map(std::size_t n) {
  require(is_power_of_two(n) && n >= 2, ErrorKind::invalid_argument,
          "haar_1d_synthesis_map: length must be a power of two");
  return {n,
          [](std::span<cplx> x) {
            apply_real_pair(x, [](const std::vector<double>& v) { return haar_1d_inverse(v); });
          },
          "haar1d-synthesis"};
}

LinearMap walsh_2d_map(std::size_t nx, std::size_t ny) {
  auto wht = std::make_shared<const WalshHadamard2D>(nx, ny);
  return {nx * ny, [wht](std::span<cplx> x) { wht->apply(x); }, "walsh2d"};
}

LinearMap haar_2d_synthesis_map(std::size_t nx, std::size_t ny) {
  auto haar = std::make_shared<const Haar2D>(nx, ny);
  return {nx * ny, [haar](std::span<cplx> x) { haar->inverse(x); }, "haar2d-synthesis"};
}

ComplexArray materialize(const LinearMap& map) {
  ComplexArray out(map.dim, map.dim);
  std::vector<cplx> col(map.dim);
  for (std::size_t j = 0; j < map.dim; ++j) {
    std::fill(col.begin(), col.end(), cplx{});
    col[j] = 1.0;
    map.apply(col);
    for (std::size_t i = 0; i < map.dim; ++i) out(i, j) = col[i];
  }
  return out;
}

// ---------------------------------------------------------------- coherence

CoherenceMatrix multilevel_coherence(const LinearMap& sensing, const LinearMap& sparsity,
                                     const LevelPartition& sampling_levels,
                                     const LevelPartition& sparsity_levels, std::size_t max_dim) {
  const std::size_t n = sensing.dim;
  require(sparsity.dim == n && sampling_levels.n == n && sparsity_levels.n == n,
          ErrorKind::dimension, "multilevel_coherence: dimension mismatch");
  require(n <= max_dim, ErrorKind::numerical,
          "multilevel_coherence: dimension " + str(n) + " exceeds the dense limit " + str(max_dim));
  validate(sampling_levels);
  validate(sparsity_levels);

  const auto row_level = sampling_levels.level_of();
  const auto col_level = sparsity_levels.level_of();
  const std::size_t rw = sampling_levels.num_levels();
  const std::size_t rt = sparsity_levels.num_levels();

  RealArray block_max(rw, rt, 0.0);
  std::vector<cplx> col(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::fill(col.begin(), col.end(), cplx{});
    col[j] = 1.0;
    sparsity.apply(col);
    sensing.apply(col);
    const std::size_t l = col_level[j];
    for (std::size_t i = 0; i < n; ++i) {
      double& b = block_max(row_level[i], l);
      b = std::max(b, std::abs(col[i]));
    }
  }

  CoherenceMatrix out{RealArray(rw, rt), sensing.label + "/" + sparsity.label};
  for (std::size_t t = 0; t < rw; ++t) {
    double row_max = 0.0;
    for (std::size_t l = 0; l < rt; ++l) row_max = std::max(row_max, block_max(t, l));
    for (std::size_t l = 0; l < rt; ++l) out.mu(t, l) = row_max * block_max(t, l);
  }
  return out;
}

// ---------------------------------------------------------------- sparsity

SparsityProfile estimate_sparsity_in_levels(std::span<const std::vector<cplx>> corpus,
                                            const LevelPartition& sparsity_levels,
                                            double rel_threshold) {
  require(!corpus.empty(), ErrorKind::invalid_argument, "estimate_sparsity_in_levels: empty corpus");
  require(rel_threshold > 0.0 && rel_threshold < 1.0, ErrorKind::invalid_argument,
          "estimate_sparsity_in_levels: threshold must lie in (0, 1)");
  validate(sparsity_levels);
  const auto level = sparsity_levels.level_of();
  const std::size_t r = sparsity_levels.num_levels();

  SparsityProfile out{std::vector<std::size_t>(r, 0), std::vector<double>(r, 0.0)};
  std::vector<std::size_t> counts(r);
  for (const auto& item : corpus) {
    require(item.size() == sparsity_levels.n, ErrorKind::dimension,
            "estimate_sparsity_in_levels: item length does not match the partition");
    double peak = 0.0;
    for (const auto& c : item) peak = std::max(peak, std::abs(c));
    std::fill(counts.begin(), counts.end(), 0);
    const double cut = rel_threshold * peak;
    for (std::size_t i = 0; i < item.size(); ++i)
      if (std::abs(item[i]) > cut) ++counts[level[i]];
    for (std::size_t l = 0; l < r; ++l) out.k[l] = std::max(out.k[l], counts[l]);
  }
  for (std::size_t l = 0; l < r; ++l)
    out.ratio[l] = static_cast<double>(out.k[l]) / static_cast<double>(sparsity_levels.levels[l].size());
  return out;
}

SamplingProfile sampling_profile(const CoherenceMatrix& mu, const SparsityProfile& k) {
  require(mu.mu.cols() == k.k.size(), ErrorKind::dimension,
          "sampling_profile: coherence has " + str(mu.mu.cols()) + " sparsity levels, k has " +
              str(k.k.size()));
  SamplingProfile out{std::vector<double>(mu.mu.rows(), 0.0)};
  for (std::size_t t = 0; t < mu.mu.rows(); ++t) {
    double s = 0.0;
    for (std::size_t l = 0; l < k.k.size(); ++l) s += mu.mu(t, l) * static_cast<double>(k.k[l]);
    out.theta[t] = s < kThetaFloor ? 0.0 : std::min(1.0, s);
  }
  return out;
}

// ---------------------------------------------------------------- allocation

std::vector<std::size_t> allocate_samples(const SamplingProfile& theta,
                                          const LevelPartition& sampling_levels,
                                          std::size_t m_target) {
  const std::size_t r = sampling_levels.num_levels();
  require(theta.theta.size() == r, ErrorKind::dimension,
          "allocate_samples: profile length does not match the level count");
  require(m_target > 0, ErrorKind::invalid_argument, "allocate_samples: target must be positive");
  const auto sizes = sampling_levels.level_sizes();

  std::vector<double> weight(r);
  std::size_t available = 0;
  for (std::size_t t = 0; t < r; ++t) {
    const double th = theta.theta[t];
    require(std::isfinite(th) && th >= 0.0 && th <= 1.0, ErrorKind::invalid_argument,
            "allocate_samples: theta must lie in [0, 1]");
    weight[t] = th * static_cast<double>(sizes[t]);
    if (th > 0.0) available += sizes[t];
  }
  require(m_target <= available, ErrorKind::invalid_argument,
          "allocate_samples: infeasible target " + str(m_target) + " (only " + str(available) +
              " indices in levels with theta > 0)");

  auto alloc = [&](double c) {
    std::vector<std::size_t> m(r, 0);
    for (std::size_t t = 0; t < r; ++t) {
      if (weight[t] == 0.0) continue;
      const double v = std::round(c * weight[t]);
      m[t] = v >= static_cast<double>(sizes[t]) ? sizes[t] : static_cast<std::size_t>(v);
    }
    return m;
  };
  auto total = [](const std::vector<std::size_t>& m) {
    return std::accumulate(m.begin(), m.end(), std::size_t{0});
  };

  double lo = 0.0;
  double hi = 1.0;
  while (total(alloc(hi)) < m_target) hi *= 2.0;
  if (total(alloc(hi)) == m_target) return alloc(hi);
  for (;;) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const auto m = alloc(mid);
    const std::size_t s = total(m);
    if (s == m_target) return m;
    (s < m_target ? lo : hi) = mid;
  }

  // Rounding ties: several levels step up at the same C.
  auto m = alloc(lo);
  const auto upper = alloc(hi);
  std::size_t residual = m_target - total(m);
  std::vector<std::size_t> order;
  for (std::size_t t = 0; t < r; ++t)
    if (m[t] < sizes[t] && weight[t] > 0.0) order.push_back(t);
  auto remainder = [&](std::size_t t) { return lo * weight[t] - static_cast<double>(m[t]); };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const bool ja = upper[a] > m[a], jb = upper[b] > m[b];
    if (ja != jb) return ja;
    return remainder(a) > remainder(b);
  });
  for (std::size_t i = 0; residual > 0; i = (i + 1) % order.size()) {
    if (m[order[i]] < sizes[order[i]]) {
      ++m[order[i]];
      --residual;
    }
  }
  return m;
}

// ---------------------------------------------------------------- masks

namespace {

// Partial Fisher-Yates: the first k entries become a uniform k-subset.
void choose_prefix(std::vector<std::size_t>& pool, std::size_t k, std::mt19937_64& rng) {
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
}

}  // namespace

std::vector<std::size_t> draw_mls_mask(std::span<const std::size_t> m,
                                       const LevelPartition& sampling_levels, std::uint64_t seed) {
  require(m.size() == sampling_levels.num_levels(), ErrorKind::dimension,
          "draw_mls_mask: count vector does not match the level count");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> omega;
  for (std::size_t t = 0; t < m.size(); ++t) {
    const auto& level = sampling_levels.levels[t];
    require(m[t] <= level.size(), ErrorKind::invalid_argument,
            "draw_mls_mask: m_" + str(t + 1) + "=" + str(m[t]) + " exceeds level size " +
                str(level.size()));
    std::vector<std::size_t> pool = level;
    choose_prefix(pool, m[t], rng);
    omega.insert(omega.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m[t]));
  }
  std::sort(omega.begin(), omega.end());
  return omega;
}

std::vector<std::size_t> draw_uds_mask(std::size_t m, std::size_t n, std::uint64_t seed) {
  require(m <= n, ErrorKind::invalid_argument,
          "draw_uds_mask: M=" + str(m) + " exceeds N=" + str(n));
  std::mt19937_64 rng(seed);
  auto pool = iota_vec(n);
  choose_prefix(pool, m, rng);
  pool.resize(m);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::string to_string(Strategy s) { return s == Strategy::mls ? "mls" : "uds"; }

Strategy strategy_from_string(const std::string& s) {
  if (s == "mls" || s == "MLS") return Strategy::mls;
  if (s == "uds" || s == "UDS") return Strategy::uds;
  fail(ErrorKind::config, "unknown sampling strategy '" + s + "'");
}

void validate(const Mask& mask) {
  require(std::is_sorted(mask.omega.begin(), mask.omega.end()) &&
              std::adjacent_find(mask.omega.begin(), mask.omega.end()) == mask.omega.end(),
          ErrorKind::invalid_argument, "mask indices must be sorted and unique");
  require(mask.omega.empty() || mask.omega.back() < mask.n, ErrorKind::dimension,
          "mask index out of range");
  LevelPartition p{Domain::spatial, mask.n, mask.levels};
  validate(p);
  require(mask.m.size() == mask.levels.size(), ErrorKind::invalid_argument,
          "mask has " + str(mask.m.size()) + " counts for " + str(mask.levels.size()) + " levels");
  if (mask.strategy == Strategy::mls) {
    const auto level = p.level_of();
    std::vector<std::size_t> counts(mask.levels.size(), 0);
    for (auto i : mask.omega) ++counts[level[i]];
    require(counts == mask.m, ErrorKind::invalid_argument,
            "mask per-level counts do not match the recorded allocation");
  } else {
    require(std::accumulate(mask.m.begin(), mask.m.end(), std::size_t{0}) == mask.omega.size(),
            ErrorKind::invalid_argument, "mask count does not match its index set");
  }
}

Mask make_mls_mask(const SamplingProfile& theta, const LevelPartition& levels,
                   std::size_t m_target, std::uint64_t seed) {
  auto m = allocate_samples(theta, levels, m_target);
  auto omega = draw_mls_mask(m, levels, seed);
  return {Strategy::mls, seed, levels.n, levels.levels, std::move(m), std::move(omega)};
}

Mask make_full_mask(const LevelPartition& levels, std::uint64_t seed) {
  auto m = levels.level_sizes();
  auto omega = draw_mls_mask(m, levels, seed);
  return {Strategy::mls, seed, levels.n, levels.levels, std::move(m), std::move(omega)};
}

Mask make_uds_mask(std::size_t m, std::size_t n, std::uint64_t seed) {
  return {Strategy::uds, seed, n, {iota_vec(n)}, {m}, draw_uds_mask(m, n, seed)};
}

void validate(const SamplingPattern& pattern) {
  validate(pattern.spectral);
  validate(pattern.spatial);
  require(pattern.nx * pattern.ny == pattern.spatial.n, ErrorKind::dimension,
          "pattern spatial size does not match nx*ny");
  require(is_power_of_two(pattern.spectral.n) && is_power_of_two(pattern.nx) &&
              is_power_of_two(pattern.ny),
          ErrorKind::dimension, "pattern dimensions must be powers of two");
}

SamplingPattern full_pattern(std::size_t n_xi, std::size_t nx, std::size_t ny) {
  return {make_full_mask(single_level(n_xi, Domain::spectral), 0),
          make_full_mask(single_level(nx * ny, Domain::spatial), 0), nx, ny};
}

}  // namespace spfti
