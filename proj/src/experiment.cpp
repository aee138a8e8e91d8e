#include "spfti/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <future>
#include <sstream>

#include "spfti/error.hpp"

namespace spfti {

namespace {

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("stage ") + name + ": " + e.what());
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorKind::io, std::string("stage ") + name + ": " + e.what());
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::config, std::string("experiment: bad field '") + key + "': " + e.what());
  }
}

void check_keys(const json& j, std::initializer_list<const char*> keys, const std::string& what) {
  require(j.is_object(), ErrorKind::config, what + ": expected a JSON object");
  for (const auto& [k, v] : j.items())
    require(std::find_if(keys.begin(), keys.end(), [&](const char* a) { return k == a; }) != keys.end(),
            ErrorKind::config, what + ": unknown field '" + k + "'");
}

std::string domain_name(Domain d) { return d == Domain::spectral ? "spectral" : "spatial"; }

std::string csv_join(const std::vector<std::string>& cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) s += ',';
    s += cells[i];
  }
  return s;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc | std::ios::binary);
  if (!f) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
  f << text;
  if (!f) fail(ErrorKind::io, "write failed: " + path.string());
}

}  // namespace

json to_json(const ExperimentConfig& c) {
  json strategies = json::array();
  for (auto s : c.strategies) strategies.push_back(to_string(s));
  json j{{"phantom", to_json(c.phantom)},
         {"sigma_nyq", c.sigma_nyq},
         {"target_mur", c.target_mur},
         {"strategies", strategies},
         {"profiles", {{"spectral", c.profiles.spectral}, {"spatial", c.profiles.spatial}}},
         {"spectral_levels", c.spectral_levels},
         {"m_xi", c.m_xi},
         {"m_p", c.m_p},
         {"spectral_corpus_size", c.spectral_corpus_size},
         {"spatial_corpus_size", c.spatial_corpus_size},
         {"sparsity_threshold", c.sparsity_threshold},
         {"solver", to_json(c.solver)},
         {"seeds", {{"mask", c.seeds.mask}, {"noise", c.seeds.noise}, {"phantom", c.seeds.phantom}, {"corpus", c.seeds.corpus}}},
         {"output_dir", c.output_dir.string()}};
  if (!c.spectrum_pixel.empty()) j["spectrum_pixel"] = c.spectrum_pixel;
  return j;
}

ExperimentConfig experiment_config_from_json(const json& j) {
  check_keys(j,
             {"phantom", "sigma_nyq", "target_mur", "strategies", "profiles", "spectral_levels", "m_xi", "m_p",
              "spectral_corpus_size", "spatial_corpus_size", "sparsity_threshold", "solver", "seeds", "output_dir",
              "spectrum_pixel"},
             "experiment");
  ExperimentConfig c;
  if (j.contains("phantom")) c.phantom = phantom_spec_from_json(j.at("phantom"));
  c.sigma_nyq = get_or(j, "sigma_nyq", c.sigma_nyq);
  c.target_mur = get_or(j, "target_mur", c.target_mur);
  if (j.contains("strategies")) {
    c.strategies.clear();
    for (const auto& s : get_or<std::vector<std::string>>(j, "strategies", {})) c.strategies.push_back(strategy_from_string(s));
  }
  if (j.contains("profiles")) {
    const json& p = j.at("profiles");
    check_keys(p, {"spectral", "spatial"}, "experiment.profiles");
    c.profiles.spectral = get_or(p, "spectral", c.profiles.spectral);
    c.profiles.spatial = get_or(p, "spatial", c.profiles.spatial);
  }
  c.spectral_levels = get_or(j, "spectral_levels", c.spectral_levels);
  c.m_xi = get_or(j, "m_xi", c.m_xi);
  c.m_p = get_or(j, "m_p", c.m_p);
  c.spectral_corpus_size = get_or(j, "spectral_corpus_size", c.spectral_corpus_size);
  c.spatial_corpus_size = get_or(j, "spatial_corpus_size", c.spatial_corpus_size);
  c.sparsity_threshold = get_or(j, "sparsity_threshold", c.sparsity_threshold);
  if (j.contains("solver")) c.solver = solver_config_from_json(j.at("solver"), c.solver);
  if (j.contains("seeds")) {
    const json& s = j.at("seeds");
    check_keys(s, {"mask", "noise", "phantom", "corpus"}, "experiment.seeds");
    c.seeds.mask = get_or(s, "mask", c.seeds.mask);
    c.seeds.noise = get_or(s, "noise", c.seeds.noise);
    c.seeds.phantom = get_or(s, "phantom", c.seeds.phantom);
    c.seeds.corpus = get_or(s, "corpus", c.seeds.corpus);
  }
  c.phantom.seed = c.seeds.phantom;
  c.output_dir = get_or<std::string>(j, "output_dir", c.output_dir.string());
  c.spectrum_pixel = get_or(j, "spectrum_pixel", c.spectrum_pixel);
  validate(c);
  return c;
}

void validate(const ExperimentConfig& c) {
  validate(c.phantom);
  validate(c.solver);
  require(c.target_mur > 0.0 && c.target_mur <= 1.0, ErrorKind::config, "experiment: target_mur must lie in (0, 1]");
  require(c.sigma_nyq >= 0.0 && std::isfinite(c.sigma_nyq), ErrorKind::config,
          "experiment: sigma_nyq must be finite and non-negative");
  require(!c.strategies.empty(), ErrorKind::config, "experiment: no strategies");
  require(c.m_xi <= c.phantom.n_nu, ErrorKind::config, "experiment: m_xi exceeds n_nu");
  require(c.m_p <= c.phantom.nx * c.phantom.ny, ErrorKind::config, "experiment: m_p exceeds nx * ny");
  require(c.spectral_corpus_size > 0 && c.spatial_corpus_size > 0, ErrorKind::config,
          "experiment: corpus sizes must be positive");
  require(c.spectrum_pixel.empty() ||
              (c.spectrum_pixel.size() == 2 && c.spectrum_pixel[0] < c.phantom.nx && c.spectrum_pixel[1] < c.phantom.ny),
          ErrorKind::config, "experiment: spectrum_pixel must be [x, y] inside the image");
  for (const auto* src : {&c.profiles.spectral, &c.profiles.spatial}) {
    const bool known = *src == "computed" || src->rfind("fixture:", 0) == 0 || src->rfind("file:", 0) == 0;
    require(known, ErrorKind::config, "experiment: profile source '" + *src + "' is not computed, fixture:<name> or file:<path>");
    if (src->rfind("fixture:", 0) == 0) {
      const auto names = fixture_names();
      require(std::find(names.begin(), names.end(), src->substr(8)) != names.end(), ErrorKind::config,
              "experiment: unknown fixture '" + src->substr(8) + "'");
    }
  }
}

std::vector<std::string> fixture_names() { return {"fig2-spatial", "fig2-spectral"}; }

ProfileFile fixture_profile(const std::string& name) {
  if (name == "fig2-spatial") {
    // Published Hadamard/Haar profile of a 128 x 128 image, 7 dyadic levels.
    return {"spatial", "fixture:fig2-spatial",
            SamplingProfile{{1.0, 1.0, 0.8125, 0.380208333333333, 0.2421875, 0.187825520833333, 0.0946451822916667}},
            {}, {}};
  }
  if (name == "fig2-spectral") {
    // Published Fourier/Fourier step profile: 32 levels of 16 bins, N = 512.
    std::vector<double> theta(32, 0.0);
    std::fill(theta.begin(), theta.begin() + 7, 1.0);
    return {"spectral", "fixture:fig2-spectral", SamplingProfile{theta}, {}, {}};
  }
  fail(ErrorKind::config, "unknown fixture '" + name + "'");
}

LevelPartition spectral_levels_of(const ExperimentConfig& c) {
  return spectral_partition(c.phantom.n_nu, c.spectral_levels);
}

LevelPartition spatial_levels_of(const ExperimentConfig& c) { return spatial_partition(c.phantom.nx, c.phantom.ny); }

ProfileFile compute_profile(Domain domain, const ExperimentConfig& c) {
  std::vector<PhantomSpec> specs;
  const std::size_t count = domain == Domain::spectral ? c.spectral_corpus_size : c.spatial_corpus_size;
  for (std::size_t i = 0; i < count; ++i) {
    PhantomSpec s = c.phantom;
    s.n_sources = 1;
    s.spectral_peaks.clear();
    s.seed = c.seeds.corpus + i;
    if (domain == Domain::spectral) s.nx = s.ny = 2;  // maps unused
    else s.n_nu = 2;                                  // spectra unused
    specs.push_back(s);
  }
  ProfileFile p;
  p.domain = domain_name(domain);
  p.source = "computed";
  if (domain == Domain::spectral) {
    const auto w = spectral_levels_of(c);
    const auto corpus = generate_corpus(specs, CorpusBasis::spectral_dft);
    // Spectra are sparse in the DFT: the acquisition and sparsity bases coincide.
    const auto mu = multilevel_coherence(dft_map(c.phantom.n_nu), idft_map(c.phantom.n_nu), w, w);
    const auto k = estimate_sparsity_in_levels(corpus, w, c.sparsity_threshold);
    p.theta = sampling_profile(mu, k);
    p.k = k.k;
    p.mu = mu.mu;
  } else {
    const auto w = spatial_levels_of(c);
    const auto corpus = generate_corpus(specs, CorpusBasis::spatial_haar);
    const auto mu = multilevel_coherence(walsh_2d_map(c.phantom.nx, c.phantom.ny),
                                         haar_2d_synthesis_map(c.phantom.nx, c.phantom.ny), w, w);
    const auto k = estimate_sparsity_in_levels(corpus, w, c.sparsity_threshold);
    p.theta = sampling_profile(mu, k);
    p.k = k.k;
    p.mu = mu.mu;
  }
  return p;
}

ProfileFile resolve_profile(Domain domain, const std::string& source, const ExperimentConfig& c) {
  ProfileFile p;
  if (source == "computed") {
    p = compute_profile(domain, c);
  } else if (source.rfind("fixture:", 0) == 0) {
    p = fixture_profile(source.substr(8));
  } else if (source.rfind("file:", 0) == 0) {
    p = profile_from_json(read_json(source.substr(5)));
  } else {
    fail(ErrorKind::config, "unknown profile source '" + source + "'");
  }
  require(p.domain == domain_name(domain), ErrorKind::config,
          "profile '" + source + "' is for the " + p.domain + " domain, expected " + domain_name(domain));
  const auto levels = domain == Domain::spectral ? spectral_levels_of(c) : spatial_levels_of(c);
  // Spatial levels are fixed dyadic bands, so a profile for a larger image
  // covers a smaller one through its coarsest entries.
  if (domain == Domain::spatial && p.theta.theta.size() > levels.num_levels()) {
    p.theta.theta.resize(levels.num_levels());
    if (!p.k.empty()) p.k.resize(levels.num_levels());
    p.mu = RealArray{};
  }
  require(p.theta.theta.size() == levels.num_levels(), ErrorKind::dimension,
          "profile '" + source + "' has " + std::to_string(p.theta.theta.size()) + " levels, the " +
              domain_name(domain) + " partition has " + std::to_string(levels.num_levels()));
  return p;
}

SampleBudget sample_budget(const ProfileFile& spectral, const ExperimentConfig& c) {
  const std::size_t n = c.phantom.n_nu, np = c.phantom.nx * c.phantom.ny;
  SampleBudget b;
  if (c.m_xi > 0) {
    b.m_xi = c.m_xi;
  } else {
    const auto sizes = spectral_levels_of(c).level_sizes();
    double total = 0.0;
    for (std::size_t t = 0; t < sizes.size(); ++t) total += spectral.theta.theta[t] * static_cast<double>(sizes[t]);
    b.m_xi = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(total)), 1, n);
  }
  const double want = c.target_mur * static_cast<double>(n) * static_cast<double>(np);
  double mp = std::round(want / static_cast<double>(b.m_xi));
  if (c.m_p == 0 && mp > static_cast<double>(np)) {
    // The spatial domain saturates first; spend the rest on spectral rows.
    b.m_xi = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(c.target_mur * n)), b.m_xi, n);
    mp = std::round(want / static_cast<double>(b.m_xi));
  }
  b.m_p = c.m_p > 0 ? c.m_p : std::clamp<std::size_t>(static_cast<std::size_t>(mp), 1, np);
  return b;
}

namespace {

Mask mls_domain_mask(const SamplingProfile& theta, const LevelPartition& w, std::size_t m, std::uint64_t seed) {
  if (m == w.n) return make_full_mask(w, seed);
  // Budgets beyond the theta > 0 region spill into the remaining levels.
  std::size_t capacity = 0;
  const auto sizes = w.level_sizes();
  for (std::size_t t = 0; t < sizes.size(); ++t)
    if (theta.theta[t] > 0.0) capacity += sizes[t];
  if (m <= capacity) return make_mls_mask(theta, w, m, seed);
  SamplingProfile padded = theta;
  for (auto& t : padded.theta) t = std::max(t, 1e-9);
  return make_mls_mask(padded, w, m, seed);
}

}  // namespace

SamplingPattern design_pattern(Strategy s, const ProfileFile& spectral, const ProfileFile& spatial,
                               const ExperimentConfig& c) {
  const auto b = sample_budget(spectral, c);
  const std::size_t n = c.phantom.n_nu, np = c.phantom.nx * c.phantom.ny;
  const std::uint64_t seed_xi = c.seeds.mask, seed_p = c.seeds.mask + 1;
  SamplingPattern p;
  p.nx = c.phantom.nx;
  p.ny = c.phantom.ny;
  if (s == Strategy::mls) {
    p.spectral = mls_domain_mask(spectral.theta, spectral_levels_of(c), b.m_xi, seed_xi);
    p.spatial = mls_domain_mask(spatial.theta, spatial_levels_of(c), b.m_p, seed_p);
  } else {
    p.spectral = make_uds_mask(b.m_xi, n, seed_xi);
    p.spatial = make_uds_mask(b.m_p, np, seed_p);
  }
  validate(p);
  return p;
}

std::string metrics_row(const StrategyOutcome& o) {
  return csv_join({to_string(o.strategy), std::to_string(o.pattern.m_xi()), std::to_string(o.pattern.m_p()),
                   format_double(o.mur), format_double(o.err), format_double(o.result.epsilon),
                   std::to_string(o.result.iterations), format_double(o.result.final_residual),
                   format_double(o.sre_db), format_double(std::round(o.result.wall_ms * 1000.0) / 1000.0)});
}

bool ExperimentReport::all_converged() const {
  return std::all_of(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.result.converged; });
}

ExperimentReport run_experiment(const ExperimentConfig& c, bool write_outputs) {
  validate(c);
  const fs::path out = c.output_dir;
  const fs::path marker = out / "INCOMPLETE";
  if (write_outputs) {
    stage("setup", [&] {
      fs::create_directories(out);
      fs::remove(marker);
      write_json(out / "config.json", to_json(c));
    });
  }
  try {
    ExperimentReport rep;
    rep.reference = stage("phantom", [&] { return generate_phantom(c.phantom); });
    if (write_outputs) stage("phantom", [&] { write_hypercube(out / "reference.json", rep.reference); });

    rep.spectral_profile = stage("profile", [&] { return resolve_profile(Domain::spectral, c.profiles.spectral, c); });
    rep.spatial_profile = stage("profile", [&] { return resolve_profile(Domain::spatial, c.profiles.spatial, c); });
    if (write_outputs) {
      stage("profile", [&] {
        write_json(out / "profile_spectral.json", to_json(rep.spectral_profile));
        write_json(out / "profile_spatial.json", to_json(rep.spatial_profile));
      });
    }

    std::vector<Strategy> order = c.strategies;
    std::sort(order.begin(), order.end(), [](Strategy a, Strategy b) { return to_string(a) < to_string(b); });
    order.erase(std::unique(order.begin(), order.end()), order.end());

    // Strategies are independent; solve them concurrently and merge in name order.
    std::vector<std::future<StrategyOutcome>> jobs;
    for (Strategy s : order) {
      jobs.push_back(std::async(std::launch::async, [&rep, &c, s] {
        StrategyOutcome o;
        o.strategy = s;
        o.pattern = stage("mask", [&] { return design_pattern(s, rep.spectral_profile, rep.spatial_profile, c); });
        o.measurements = stage("acquire", [&] { return add_noise(forward(rep.reference, o.pattern), c.sigma_nyq, c.seeds.noise); });
        o.measurements.pattern_ref = "pattern.json";
        o.result = stage("reconstruct", [&] { return solve(o.measurements, o.pattern, c.solver); });
        o.sre_db = stage("evaluate", [&] { return sre(rep.reference, o.result.x_hat); });
        o.mur = mur(o.pattern.m_xi(), o.pattern.m_p(), o.pattern.n_xi(), o.pattern.n_p());
        o.err = err(o.pattern.m_xi(), o.pattern.m_p(), o.pattern.n_xi());
        return o;
      }));
    }
    std::exception_ptr first_error;
    for (auto& j : jobs) {
      try {
        rep.outcomes.push_back(j.get());
      } catch (...) {
        if (!first_error) first_error = std::current_exception();
      }
    }
    if (first_error) std::rethrow_exception(first_error);

    if (write_outputs) {
      stage("write", [&] {
        for (const auto& o : rep.outcomes) {
          const fs::path dir = out / to_string(o.strategy);
          fs::create_directories(dir);
          write_json(dir / "pattern.json", to_json(o.pattern));
          write_measurements(dir / "y.json", o.measurements);
          write_hypercube(dir / "x_hat.json", o.result.x_hat);
          auto summary = summary_json(o.result);
          summary["sre_db"] = format_double(o.sre_db);
          write_json(dir / "summary.json", summary);
        }
      });
    }

    if (write_outputs) {
      stage("write", [&] {
        std::ostringstream csv;
        csv << kMetricsHeader << "\n";
        for (const auto& o : rep.outcomes) csv << metrics_row(o) << "\n";
        write_text(out / "metrics.csv", csv.str());

        const std::size_t px = c.spectrum_pixel.empty() ? c.phantom.nx / 2 : c.spectrum_pixel[0];
        const std::size_t py = c.spectrum_pixel.empty() ? c.phantom.ny / 2 : c.spectrum_pixel[1];
        const std::size_t p = px * c.phantom.ny + py;
        std::ostringstream sp;
        std::vector<std::string> head{"bin", "reference"};
        for (const auto& o : rep.outcomes) head.push_back(to_string(o.strategy));
        sp << csv_join(head) << "\n";
        for (std::size_t v = 0; v < c.phantom.n_nu; ++v) {
          std::vector<std::string> row{std::to_string(v), format_double(rep.reference.values(v, p))};
          for (const auto& o : rep.outcomes) row.push_back(format_double(o.result.x_hat.values(v, p)));
          sp << csv_join(row) << "\n";
        }
        write_text(out / "spectra.csv", sp.str());
      });
    }
    return rep;
  } catch (const Error& e) {
    if (write_outputs) {
      std::ofstream(marker) << e.what() << "\n";
    }
    throw;
  }
}

}  // namespace spfti
