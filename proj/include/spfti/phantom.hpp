#pragma once

// Seeded synthetic hyperspectral volumes: a few sources, each a Gaussian
// spectral peak times a smooth or blocky spatial map. Stand-in for real
// fluorescence data with the same low-pass spectra and Haar-sparse maps.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "spfti/acquisition.hpp"
#include "spfti/array.hpp"

namespace spfti {

struct SpectralPeak {
  double center = 0.0;     // wavenumber bin
  double width = 4.0;      // standard deviation, in bins
  double amplitude = 1.0;

  bool operator==(const SpectralPeak&) const = default;
};

enum class SpatialStyle {
  blobs,   // sums of Gaussian blobs
  blocks,  // rectangles on an (nx/8) x (ny/8) grid
  flat,    // constant map
};

std::string to_string(SpatialStyle s);
SpatialStyle spatial_style_from_string(const std::string& s);

struct PhantomSpec {
  std::size_t n_nu = 128;
  std::size_t nx = 32;
  std::size_t ny = 32;
  std::size_t n_sources = 3;
  /// Empty: peaks are drawn from the seed. Otherwise one per source.
  std::vector<SpectralPeak> spectral_peaks;
  SpatialStyle spatial_style = SpatialStyle::blobs;
  std::uint64_t seed = 1;

  bool operator==(const PhantomSpec&) const = default;
};

void validate(const PhantomSpec& spec);

struct PhantomSources {
  std::vector<std::vector<double>> spectra;  // n_sources x n_nu
  std::vector<RealArray> maps;               // n_sources of nx x ny, values in [0, 1]
};

PhantomSources generate_sources(const PhantomSpec& spec);

/// Sum of spectrum (x) map over sources, scaled into [0, 1] when it exceeds 1.
HyperCube generate_phantom(const PhantomSpec& spec);

enum class CorpusBasis { spectral_dft, spatial_haar };

/// Analysis coefficients of every source: unitary DFT of each spectrum, or
/// 2-D Haar of each map flattened row-major.
std::vector<std::vector<cplx>> generate_corpus(const std::vector<PhantomSpec>& specs, CorpusBasis basis);

}  // namespace spfti
