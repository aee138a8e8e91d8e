#include "spfti/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include "spfti/error.hpp"

namespace spfti {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void put_le(std::vector<char>& out, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.insert(out.end(), b, b + sizeof(T));
}

template <class T>
T get_le(const char* p) {
  char b[sizeof(T)];
  std::memcpy(b, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

void write_bytes(const fs::path& path, const std::vector<char>& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) fail(ErrorKind::io, "write failed: " + path.string());
}

std::vector<char> read_bytes(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

template <class T>
T field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) fail(ErrorKind::config, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::config, std::string("bad field '") + key + "': " + e.what());
  }
}

template <class T>
T field_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? field<T>(j, key) : fallback;
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& what) {
  require(j.is_object(), ErrorKind::config, what + ": expected a JSON object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items())
    require(allowed.count(k) > 0, ErrorKind::config, what + ": unknown field '" + k + "'");
}

fs::path payload_path(const fs::path& header) {
  fs::path p = header;
  p.replace_extension(".bin");
  return p;
}

fs::path resolve_payload(const fs::path& header, const json& h) {
  const fs::path name = field<std::string>(h, "payload");
  return name.is_absolute() ? name : header.parent_path() / name;
}

std::vector<std::size_t> to_one_based(const std::vector<std::size_t>& v) {
  std::vector<std::size_t> out(v);
  for (auto& x : out) ++x;
  return out;
}

std::vector<std::size_t> from_one_based(const std::vector<std::size_t>& v, const std::string& what) {
  std::vector<std::size_t> out(v);
  for (auto& x : out) {
    require(x >= 1, ErrorKind::config, what + ": indices are 1-based");
    --x;
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, r.ptr};
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
  f << j.dump(2) << "\n";
  if (!f) fail(ErrorKind::io, "write failed: " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorKind::io, "cannot open " + path.string());
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    fail(ErrorKind::config, "malformed JSON in " + path.string() + ": " + e.what());
  }
}

fs::path write_hypercube(const fs::path& header, const HyperCube& cube, Dtype dtype) {
  validate(cube);
  const auto payload = payload_path(header);
  std::vector<char> bytes;
  bytes.reserve(cube.values.size() * (dtype == Dtype::f64 ? 8 : 4));
  for (double v : cube.values.flat()) {
    if (dtype == Dtype::f64) put_le(bytes, v);
    else put_le(bytes, static_cast<float>(v));
  }
  write_bytes(payload, bytes);
  json h{{"n_nu", cube.n_nu},
         {"nx", cube.nx},
         {"ny", cube.ny},
         {"dtype", dtype == Dtype::f64 ? "f64" : "f32"},
         {"order", "row-major"},
         {"payload", payload.filename().string()}};
  if (!cube.wavelength_nm.empty()) h["wavelength_nm"] = cube.wavelength_nm;
  write_json(header, h);
  return payload;
}

HyperCube read_hypercube(const fs::path& header) {
  const json h = read_json(header);
  reject_unknown(h, {"n_nu", "nx", "ny", "dtype", "order", "wavelength_nm", "payload"}, "hypercube header");
  HyperCube cube(field<std::size_t>(h, "n_nu"), field<std::size_t>(h, "nx"), field<std::size_t>(h, "ny"));
  const auto dtype = field<std::string>(h, "dtype");
  require(dtype == "f32" || dtype == "f64", ErrorKind::config, "hypercube header: dtype must be f32 or f64");
  require(field<std::string>(h, "order") == "row-major", ErrorKind::config,
          "hypercube header: only row-major order is supported");
  cube.wavelength_nm = field_or<std::vector<double>>(h, "wavelength_nm", {});
  require(is_power_of_two(cube.n_nu) && is_power_of_two(cube.nx) && is_power_of_two(cube.ny),
          ErrorKind::dimension, "hypercube header: dimensions must be powers of two");

  const auto bytes = read_bytes(resolve_payload(header, h));
  const std::size_t width = dtype == "f64" ? 8 : 4;
  require(bytes.size() == cube.values.size() * width, ErrorKind::io,
          "hypercube payload has " + std::to_string(bytes.size()) + " bytes, header implies " +
              std::to_string(cube.values.size() * width));
  for (std::size_t i = 0; i < cube.values.size(); ++i)
    cube.values.flat()[i] = width == 8 ? get_le<double>(bytes.data() + 8 * i)
                                       : static_cast<double>(get_le<float>(bytes.data() + 4 * i));
  validate(cube);
  return cube;
}

fs::path write_measurements(const fs::path& header, const MeasurementSet& m) {
  const auto payload = payload_path(header);
  std::vector<char> bytes;
  bytes.reserve(m.y.size() * 16);
  for (const auto& v : m.y.flat()) {
    put_le(bytes, v.real());
    put_le(bytes, v.imag());
  }
  write_bytes(payload, bytes);
  json h{{"m_xi", m.y.rows()},
         {"m_p", m.y.cols()},
         {"sigma_nyq", m.sigma_nyq},
         {"epsilon", m.epsilon},
         {"pattern", m.pattern_ref},
         {"dtype", "c128"},
         {"order", "row-major"},
         {"payload", payload.filename().string()}};
  write_json(header, h);
  return payload;
}

MeasurementSet read_measurements(const fs::path& header) {
  const json h = read_json(header);
  reject_unknown(h, {"m_xi", "m_p", "sigma_nyq", "epsilon", "pattern", "dtype", "order", "payload"},
                 "measurement header");
  require(field<std::string>(h, "dtype") == "c128", ErrorKind::config, "measurement header: dtype must be c128");
  require(field<std::string>(h, "order") == "row-major", ErrorKind::config,
          "measurement header: only row-major order is supported");
  MeasurementSet m;
  m.y = ComplexArray(field<std::size_t>(h, "m_xi"), field<std::size_t>(h, "m_p"));
  m.sigma_nyq = field<double>(h, "sigma_nyq");
  m.epsilon = field<double>(h, "epsilon");
  m.pattern_ref = field_or<std::string>(h, "pattern", "");
  require(m.sigma_nyq >= 0.0 && m.epsilon >= 0.0, ErrorKind::config,
          "measurement header: sigma_nyq and epsilon must be non-negative");
  const auto bytes = read_bytes(resolve_payload(header, h));
  require(bytes.size() == m.y.size() * 16, ErrorKind::io,
          "measurement payload has " + std::to_string(bytes.size()) + " bytes, header implies " +
              std::to_string(m.y.size() * 16));
  for (std::size_t i = 0; i < m.y.size(); ++i)
    m.y.flat()[i] = cplx(get_le<double>(bytes.data() + 16 * i), get_le<double>(bytes.data() + 16 * i + 8));
  return m;
}

json to_json(const Mask& m) {
  json levels = json::array();
  for (const auto& l : m.levels) levels.push_back(to_one_based(l));
  return json{{"strategy", to_string(m.strategy)}, {"seed", m.seed},  {"n", m.n},
              {"levels", levels},                  {"m", m.m},        {"omega", to_one_based(m.omega)}};
}

Mask mask_from_json(const json& j) {
  reject_unknown(j, {"strategy", "seed", "n", "levels", "m", "omega"}, "mask");
  Mask m;
  m.strategy = strategy_from_string(field<std::string>(j, "strategy"));
  m.seed = field<std::uint64_t>(j, "seed");
  m.n = field<std::size_t>(j, "n");
  for (const auto& l : field<std::vector<std::vector<std::size_t>>>(j, "levels"))
    m.levels.push_back(from_one_based(l, "mask levels"));
  m.m = field<std::vector<std::size_t>>(j, "m");
  m.omega = from_one_based(field<std::vector<std::size_t>>(j, "omega"), "mask omega");
  validate(m);
  return m;
}

json to_json(const SamplingPattern& p) {
  return json{{"nx", p.nx}, {"ny", p.ny}, {"spectral", to_json(p.spectral)}, {"spatial", to_json(p.spatial)}};
}

SamplingPattern pattern_from_json(const json& j) {
  reject_unknown(j, {"nx", "ny", "spectral", "spatial"}, "sampling pattern");
  SamplingPattern p{mask_from_json(field<json>(j, "spectral")), mask_from_json(field<json>(j, "spatial")),
                    field<std::size_t>(j, "nx"), field<std::size_t>(j, "ny")};
  validate(p);
  return p;
}

json to_json(const PhantomSpec& s) {
  json peaks = json::array();
  for (const auto& p : s.spectral_peaks)
    peaks.push_back({{"center", p.center}, {"width", p.width}, {"amplitude", p.amplitude}});
  return json{{"n_nu", s.n_nu},
              {"nx", s.nx},
              {"ny", s.ny},
              {"n_sources", s.n_sources},
              {"spectral_peaks", peaks},
              {"spatial_style", to_string(s.spatial_style)},
              {"seed", s.seed}};
}

PhantomSpec phantom_spec_from_json(const json& j) {
  reject_unknown(j, {"n_nu", "nx", "ny", "n_sources", "spectral_peaks", "spatial_style", "seed"}, "phantom");
  PhantomSpec s;
  s.n_nu = field_or(j, "n_nu", s.n_nu);
  s.nx = field_or(j, "nx", s.nx);
  s.ny = field_or(j, "ny", s.ny);
  s.n_sources = field_or(j, "n_sources", s.n_sources);
  s.seed = field_or(j, "seed", s.seed);
  if (j.contains("spatial_style")) s.spatial_style = spatial_style_from_string(field<std::string>(j, "spatial_style"));
  if (j.contains("spectral_peaks")) {
    const json& peaks = j.at("spectral_peaks");
    require(peaks.is_array(), ErrorKind::config, "phantom: spectral_peaks must be an array");
    for (const auto& p : peaks) {
      reject_unknown(p, {"center", "width", "amplitude"}, "spectral peak");
      s.spectral_peaks.push_back({field<double>(p, "center"), field<double>(p, "width"), field<double>(p, "amplitude")});
    }
  }
  validate(s);
  return s;
}

json to_json(const SolverConfig& c) {
  return json{{"max_iters", c.max_iters},
              {"rel_change_tol", c.rel_change_tol},
              {"feasibility_slack", c.feasibility_slack},
              {"tau", c.tau},
              {"sigma", c.sigma},
              {"splitting", to_string(c.splitting)},
              {"step_check_iters", c.step_check_iters}};
}

SolverConfig solver_config_from_json(const json& j, SolverConfig c) {
  reject_unknown(j, {"max_iters", "rel_change_tol", "feasibility_slack", "tau", "sigma", "splitting", "step_check_iters"},
                 "solver");
  c.max_iters = field_or(j, "max_iters", c.max_iters);
  c.rel_change_tol = field_or(j, "rel_change_tol", c.rel_change_tol);
  c.feasibility_slack = field_or(j, "feasibility_slack", c.feasibility_slack);
  c.tau = field_or(j, "tau", c.tau);
  c.sigma = field_or(j, "sigma", c.sigma);
  c.step_check_iters = field_or(j, "step_check_iters", c.step_check_iters);
  if (j.contains("splitting")) c.splitting = splitting_from_string(field<std::string>(j, "splitting"));
  validate(c);
  return c;
}

json summary_json(const SolverResult& r) {
  return json{{"iterations", r.iterations},
              {"final_objective", r.final_objective},
              {"final_residual", r.final_residual},
              {"epsilon", r.epsilon},
              {"converged", r.converged},
              {"imag_norm", r.imag_norm},
              {"operator_norm", r.operator_norm},
              {"wall_ms", r.wall_ms}};
}

json to_json(const ProfileFile& p) {
  json j{{"domain", p.domain}, {"source", p.source}, {"theta", p.theta.theta}};
  if (!p.k.empty()) j["k"] = p.k;
  if (!p.mu.empty()) {
    json rows = json::array();
    for (std::size_t r = 0; r < p.mu.rows(); ++r) rows.push_back(std::vector<double>(p.mu.row(r).begin(), p.mu.row(r).end()));
    j["mu"] = rows;
  }
  return j;
}

ProfileFile profile_from_json(const json& j) {
  reject_unknown(j, {"domain", "source", "theta", "k", "mu"}, "profile");
  ProfileFile p;
  p.domain = field<std::string>(j, "domain");
  require(p.domain == "spectral" || p.domain == "spatial", ErrorKind::config,
          "profile: domain must be spectral or spatial");
  p.source = field_or<std::string>(j, "source", "");
  p.theta.theta = field<std::vector<double>>(j, "theta");
  for (double t : p.theta.theta)
    require(t >= 0.0 && t <= 1.0, ErrorKind::config, "profile: theta values must lie in [0, 1]");
  p.k = field_or<std::vector<std::size_t>>(j, "k", {});
  if (j.contains("mu")) {
    const auto rows = field<std::vector<std::vector<double>>>(j, "mu");
    if (!rows.empty()) {
      p.mu = RealArray(rows.size(), rows[0].size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        require(rows[r].size() == p.mu.cols(), ErrorKind::config, "profile: ragged mu matrix");
        std::copy(rows[r].begin(), rows[r].end(), p.mu.row(r).begin());
      }
    }
  }
  return p;
}

}  // namespace spfti
