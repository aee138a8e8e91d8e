#pragma once

// File formats. Volumes and measurements are a JSON header next to a raw
// little-endian payload; everything else is plain JSON. Index sets in files
// are 1-based.

#include <filesystem>
#include <string>

#include "json.hpp"
#include "spfti/acquisition.hpp"
#include "spfti/phantom.hpp"
#include "spfti/sampling.hpp"
#include "spfti/solver.hpp"

namespace spfti {

namespace fs = std::filesystem;
using json = nlohmann::json;

enum class Dtype { f32, f64 };

/// Writes header to `header` and values to the same path with extension
/// .bin; returns the payload path.
fs::path write_hypercube(const fs::path& header, const HyperCube& cube, Dtype dtype = Dtype::f64);
HyperCube read_hypercube(const fs::path& header);

fs::path write_measurements(const fs::path& header, const MeasurementSet& m);
MeasurementSet read_measurements(const fs::path& header);

json to_json(const Mask& m);
Mask mask_from_json(const json& j);
json to_json(const SamplingPattern& p);
SamplingPattern pattern_from_json(const json& j);

json to_json(const PhantomSpec& s);
PhantomSpec phantom_spec_from_json(const json& j);

json to_json(const SolverConfig& c);
/// Fields absent from j keep their value in base.
SolverConfig solver_config_from_json(const json& j, SolverConfig base = {});

/// Summary fields only; the volume itself goes through write_hypercube.
json summary_json(const SolverResult& r);

struct ProfileFile {
  std::string domain;  // "spectral" | "spatial"
  std::string source;  // "fixture:<name>" | "computed"
  SamplingProfile theta;
  std::vector<std::size_t> k;  // empty for fixtures
  RealArray mu;                // empty for fixtures

  bool operator==(const ProfileFile&) const = default;
};

json to_json(const ProfileFile& p);
ProfileFile profile_from_json(const json& j);

/// JSON text with a trailing newline; io errors for unwritable paths.
void write_json(const fs::path& path, const json& j);
/// Missing or unreadable files are io errors, malformed text is a config error.
json read_json(const fs::path& path);

/// Shortest round-trip decimal form of a double ("inf", "-inf", "nan" for
/// non-finite values).
std::string format_double(double v);

}  // namespace spfti
