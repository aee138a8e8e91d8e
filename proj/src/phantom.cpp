#include "spfti/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "spfti/error.hpp"
#include "spfti/transforms.hpp"

namespace spfti {

std::string to_string(SpatialStyle s) {
  switch (s) {
    case SpatialStyle::blobs: return "blobs";
    case SpatialStyle::blocks: return "blocks";
    case SpatialStyle::flat: return "flat";
  }
  return "?";
}

SpatialStyle spatial_style_from_string(const std::string& s) {
  if (s == "blobs") return SpatialStyle::blobs;
  if (s == "blocks") return SpatialStyle::blocks;
  if (s == "flat") return SpatialStyle::flat;
  fail(ErrorKind::config, "unknown spatial_style '" + s + "' (expected blobs, blocks or flat)");
}

void validate(const PhantomSpec& spec) {
  require(is_power_of_two(spec.n_nu) && spec.n_nu >= 2 && is_power_of_two(spec.nx) && spec.nx >= 2 &&
              is_power_of_two(spec.ny) && spec.ny >= 2,
          ErrorKind::config, "phantom: sizes must be powers of two >= 2");
  require(spec.spectral_peaks.empty() || spec.spectral_peaks.size() == spec.n_sources, ErrorKind::config,
          "phantom: give one spectral peak per source or none");
  for (const auto& p : spec.spectral_peaks) {
    require(p.center >= 0.0 && p.center < static_cast<double>(spec.n_nu), ErrorKind::config,
            "phantom: peak center outside [0, n_nu)");
    require(p.width >= 1.0, ErrorKind::config, "phantom: peak width must be >= 1 bin");
    require(p.amplitude > 0.0 && std::isfinite(p.amplitude), ErrorKind::config,
            "phantom: peak amplitude must be positive");
  }
}

namespace {

std::vector<double> gaussian_spectrum(std::size_t n, const SpectralPeak& p) {
  std::vector<double> s(n);
  for (std::size_t v = 0; v < n; ++v) {
    const double d = (static_cast<double>(v) - p.center) / p.width;
    s[v] = p.amplitude * std::exp(-0.5 * d * d);
  }
  return s;
}

RealArray blob_map(std::size_t nx, std::size_t ny, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(1, 3);
  std::uniform_real_distribution<double> cx(nx / 4.0, 3.0 * nx / 4.0), cy(ny / 4.0, 3.0 * ny / 4.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double rmin = std::max(1.0, std::min(nx, ny) / 10.0), rmax = std::max(rmin, std::min(nx, ny) / 5.0);
  RealArray m(nx, ny);
  const int k = count(rng);
  for (int b = 0; b < k; ++b) {
    const double x0 = cx(rng), y0 = cy(rng);
    const double r = rmin + (rmax - rmin) * unit(rng);
    const double a = 0.5 + 0.5 * unit(rng);
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t y = 0; y < ny; ++y) {
        const double dx = (static_cast<double>(x) - x0) / r, dy = (static_cast<double>(y) - y0) / r;
        m(x, y) += a * std::exp(-0.5 * (dx * dx + dy * dy));
      }
  }
  const double peak = *std::max_element(m.flat().begin(), m.flat().end());
  if (peak > 0.0)
    for (auto& v : m.flat()) v /= peak;
  return m;
}

RealArray block_map(std::size_t nx, std::size_t ny, std::mt19937_64& rng) {
  const std::size_t gx = std::max<std::size_t>(1, nx / 8), gy = std::max<std::size_t>(1, ny / 8);
  const std::size_t cells_x = nx / gx, cells_y = ny / gy;
  std::uniform_int_distribution<int> count(1, 3);
  std::uniform_int_distribution<std::size_t> px(0, cells_x - 1), py(0, cells_y - 1), len(1, 4);
  std::uniform_real_distribution<double> level(0.5, 1.0);
  RealArray m(nx, ny);
  const int k = count(rng);
  for (int b = 0; b < k; ++b) {
    const std::size_t x0 = px(rng), y0 = py(rng);
    const std::size_t x1 = std::min(cells_x, x0 + len(rng)), y1 = std::min(cells_y, y0 + len(rng));
    const double a = level(rng);
    for (std::size_t x = x0 * gx; x < x1 * gx; ++x)
      for (std::size_t y = y0 * gy; y < y1 * gy; ++y) m(x, y) = std::max(m(x, y), a);
  }
  return m;
}

}  // namespace

PhantomSources generate_sources(const PhantomSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);
  const double n = static_cast<double>(spec.n_nu);
  const double wmin = std::max(4.0, n / 32.0), wmax = std::max(wmin, n / 16.0);
  std::uniform_real_distribution<double> center(n / 4.0, 3.0 * n / 4.0), width(wmin, wmax), amp(0.5, 1.0);

  PhantomSources out;
  for (std::size_t s = 0; s < spec.n_sources; ++s) {
    SpectralPeak p;
    if (spec.spectral_peaks.empty()) {
      p.center = center(rng);
      p.width = width(rng);
      p.amplitude = amp(rng);
    } else {
      p = spec.spectral_peaks[s];
    }
    out.spectra.push_back(gaussian_spectrum(spec.n_nu, p));
    switch (spec.spatial_style) {
      case SpatialStyle::blobs: out.maps.push_back(blob_map(spec.nx, spec.ny, rng)); break;
      case SpatialStyle::blocks: out.maps.push_back(block_map(spec.nx, spec.ny, rng)); break;
      case SpatialStyle::flat: out.maps.emplace_back(spec.nx, spec.ny, 1.0); break;
    }
  }
  return out;
}

HyperCube generate_phantom(const PhantomSpec& spec) {
  const auto src = generate_sources(spec);
  HyperCube cube(spec.n_nu, spec.nx, spec.ny);
  for (std::size_t s = 0; s < src.spectra.size(); ++s)
    for (std::size_t v = 0; v < spec.n_nu; ++v) {
      auto row = cube.values.row(v);
      const double a = src.spectra[s][v];
      for (std::size_t p = 0; p < row.size(); ++p) row[p] += a * src.maps[s].flat()[p];
    }
  double peak = 0.0;
  for (double v : cube.values.flat()) peak = std::max(peak, v);
  if (peak > 1.0)
    for (auto& v : cube.values.flat()) v /= peak;
  return cube;
}

std::vector<std::vector<cplx>> generate_corpus(const std::vector<PhantomSpec>& specs, CorpusBasis basis) {
  require(!specs.empty(), ErrorKind::invalid_argument, "generate_corpus: empty spec list");
  std::vector<std::vector<cplx>> corpus;
  for (const auto& spec : specs) {
    const auto src = generate_sources(spec);
    if (basis == CorpusBasis::spectral_dft) {
      for (const auto& s : src.spectra) {
        const std::vector<cplx> c(s.begin(), s.end());
        corpus.push_back(dft_forward(c));
      }
    } else {
      for (const auto& m : src.maps) {
        const auto h = haar_2d_forward(m);
        corpus.emplace_back(h.flat().begin(), h.flat().end());
      }
    }
  }
  return corpus;
}

}  // namespace spfti
