#pragma once

// Multilevel sampling design: level partitions, multilevel coherence,
// sparsity in levels, sampling profiles, per-level allocation and masks.
// Indices are 0-based in memory; files use 1-based indices.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "spfti/array.hpp"

namespace spfti {

enum class Domain { spectral, spatial };

struct LevelPartition {
  Domain domain = Domain::spectral;
  std::size_t n = 0;
  std::vector<std::vector<std::size_t>> levels;  // each sorted ascending

  std::size_t num_levels() const { return levels.size(); }
  std::vector<std::size_t> level_sizes() const;
  /// level_of()[i] is the 0-based level holding index i.
  std::vector<std::size_t> level_of() const;
};

/// Checks disjointness, coverage of {0..n-1}, sorted levels and r >= 1;
/// spectral partitions must also have equal-cardinality levels.
void validate(const LevelPartition& p);

/// N/r DFT bins per level, ordered by distance of the fftshifted position
/// from the centre line between frequencies -1 and 0. Level 1 holds
/// frequencies [-N/(2r), N/(2r)).
LevelPartition spectral_partition(std::size_t n, std::size_t r);

/// Dyadic levels of an n x n image: 1-D bands {0,1}, [2^(s-1), 2^s);
/// the level of flattened pixel (i, k) is max(band(i), band(k)).
LevelPartition spatial_partition(std::size_t nx, std::size_t ny);

/// 1-D dyadic bands {0,1}, [2^(s-1), 2^s) of a length-n signal.
LevelPartition dyadic_partition(std::size_t n);

LevelPartition single_level(std::size_t n, Domain domain);

/// Square linear map applied in place; stands in for a dense matrix whose
/// columns are produced on demand.
struct LinearMap {
  std::size_t dim = 0;
  std::function<void(std::span<cplx>)> apply;
  std::string label;
};

LinearMap dense_map(ComplexArray matrix, std::string label = "dense");
LinearMap identity_map(std::size_t n);
LinearMap dft_map(std::size_t n);
LinearMap idft_map(std::size_t n);
LinearMap walsh_1d_map(std::size_t n);
LinearMap haar_1d_synthesis_map(std::size_t n);
LinearMap walsh_2d_map(std::size_t nx, std::size_t ny);
LinearMap haar_2d_synthesis_map(std::size_t nx, std::size_t ny);

/// Materializes a map column by column.
ComplexArray materialize(const LinearMap& map);

struct CoherenceMatrix {
  RealArray mu;  // r_W x r_T
  std::string basis_pair;
};

inline constexpr std::size_t kDefaultCoherenceMaxDim = 4096;

/// mu(t, l) = max|P_Wt A| * max|P_Wt A P_Tl^T| with A = sensing * sparsity.
/// The product is streamed one column at a time; dim above max_dim is a
/// numerical error.
CoherenceMatrix multilevel_coherence(const LinearMap& sensing, const LinearMap& sparsity,
                                     const LevelPartition& sampling_levels,
                                     const LevelPartition& sparsity_levels,
                                     std::size_t max_dim = kDefaultCoherenceMaxDim);

struct SparsityProfile {
  std::vector<std::size_t> k;
  std::vector<double> ratio;  // k / |T_l|
};

inline constexpr double kDefaultSparsityThreshold = 0.01;

/// Worst-case per-level count over the corpus of coefficients whose
/// magnitude exceeds rel_threshold times the item's largest magnitude.
SparsityProfile estimate_sparsity_in_levels(std::span<const std::vector<cplx>> corpus,
                                            const LevelPartition& sparsity_levels,
                                            double rel_threshold = kDefaultSparsityThreshold);

struct SamplingProfile {
  std::vector<double> theta;

  bool operator==(const SamplingProfile&) const = default;
};

/// theta below this is fast-transform round-off of an exact zero and is set to 0.
inline constexpr double kThetaFloor = 1e-12;

SamplingProfile sampling_profile(const CoherenceMatrix& mu, const SparsityProfile& k);

/// m_t = min(|W_t|, round(C * theta_t * |W_t|)) with C bisected so that the
/// counts sum to m_target; rounding ties go to the largest remainders.
std::vector<std::size_t> allocate_samples(const SamplingProfile& theta,
                                          const LevelPartition& sampling_levels,
                                          std::size_t m_target);

std::vector<std::size_t> draw_mls_mask(std::span<const std::size_t> m,
                                       const LevelPartition& sampling_levels, std::uint64_t seed);
std::vector<std::size_t> draw_uds_mask(std::size_t m, std::size_t n, std::uint64_t seed);

enum class Strategy { mls, uds };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

/// One domain's index set plus the design that produced it.
struct Mask {
  Strategy strategy = Strategy::mls;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::vector<std::vector<std::size_t>> levels;
  std::vector<std::size_t> m;
  std::vector<std::size_t> omega;

  bool operator==(const Mask&) const = default;
};

void validate(const Mask& mask);

Mask make_mls_mask(const SamplingProfile& theta, const LevelPartition& levels,
                   std::size_t m_target, std::uint64_t seed);
/// Draws every level in full.
Mask make_full_mask(const LevelPartition& levels, std::uint64_t seed);
Mask make_uds_mask(std::size_t m, std::size_t n, std::uint64_t seed);

/// Omega_xi (spectral rows) and Omega_p (Walsh patterns) of one acquisition.
struct SamplingPattern {
  Mask spectral;
  Mask spatial;
  std::size_t nx = 0;
  std::size_t ny = 0;

  std::size_t n_xi() const { return spectral.n; }
  std::size_t n_p() const { return spatial.n; }
  std::size_t m_xi() const { return spectral.omega.size(); }
  std::size_t m_p() const { return spatial.omega.size(); }

  bool operator==(const SamplingPattern&) const = default;
};

void validate(const SamplingPattern& pattern);

SamplingPattern full_pattern(std::size_t n_xi, std::size_t nx, std::size_t ny);

}  // namespace spfti
