// spfti: stage-wise and end-to-end driver for the SP-FTI pipeline.
//
// Every subcommand reads the same experiment config (--config), so running
// phantom -> mask -> acquire -> reconstruct by hand reproduces the files of
// run-experiment byte for byte.

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "spfti/error.hpp"
#include "spfti/experiment.hpp"

using namespace spfti;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;
constexpr int kExitDimension = 5;

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::io: return kExitIo;
    case ErrorKind::numerical: return kExitNumerical;
    case ErrorKind::dimension: return kExitDimension;
    case ErrorKind::config:
    case ErrorKind::invalid_argument: return kExitConfig;
  }
  return kExitConfig;
}

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool quiet = false;
};

// --seed s sets mask = s, noise = s + 1, phantom = s + 2.
ExperimentConfig load_config(const Globals& g) {
  ExperimentConfig c = g.config.empty() ? ExperimentConfig{} : experiment_config_from_json(read_json(g.config));
  if (g.seed) {
    c.seeds.mask = *g.seed;
    c.seeds.noise = *g.seed + 1;
    c.seeds.phantom = *g.seed + 2;
    c.phantom.seed = c.seeds.phantom;
  }
  if (!g.out.empty()) c.output_dir = g.out;
  validate(c);
  return c;
}

fs::path out_dir(const ExperimentConfig& c) {
  fs::create_directories(c.output_dir);
  return c.output_dir;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
  return s;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + format_double(v[i]);
  return s;
}

ProfileFile profile_for(Domain d, const std::string& file, const ExperimentConfig& c) {
  const std::string& configured = d == Domain::spectral ? c.profiles.spectral : c.profiles.spatial;
  return resolve_profile(d, file.empty() ? configured : "file:" + file, c);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SP-FTI simulation, multilevel sampling design and reconstruction"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "experiment config (JSON); defaults apply to absent fields");
  app.add_option("--seed", g.seed, "base seed: mask = s, noise = s+1, phantom = s+2");
  app.add_option("--out", g.out, "output directory (overrides output_dir)");
  app.add_flag("--quiet", g.quiet, "print nothing on success");

  auto* phantom = app.add_subcommand("phantom", "write the synthetic reference volume");

  auto* profile = app.add_subcommand("profile", "write sampling profiles");
  std::string domain = "both", source;
  profile->add_option("--domain", domain, "spectral, spatial or both")
      ->check(CLI::IsMember({"spectral", "spatial", "both"}));
  profile->add_option("--source", source, "computed, fixture:<name> or file:<path> (overrides the config)");

  auto* mask = app.add_subcommand("mask", "design a sampling pattern");
  std::string strategy, spectral_file, spatial_file;
  std::size_t m_xi = 0;
  mask->add_option("--strategy", strategy, "mls or uds")->required();
  mask->add_option("--spectral-profile", spectral_file, "profile JSON (default: the config's source)");
  mask->add_option("--spatial-profile", spatial_file, "profile JSON (default: the config's source)");
  mask->add_option("--m-xi", m_xi, "spectral sample count (default: from the spectral profile)");

  auto* acquire = app.add_subcommand("acquire", "simulate noisy measurements");
  std::string phantom_file, pattern_file;
  std::optional<double> sigma;
  acquire->add_option("--phantom", phantom_file, "reference volume header")->required();
  acquire->add_option("--pattern", pattern_file, "sampling pattern JSON")->required();
  acquire->add_option("--sigma", sigma, "noise level (default: sigma_nyq of the config)");

  auto* reconstruct = app.add_subcommand("reconstruct", "solve the analysis-l1 recovery problem");
  std::string meas_file, rec_pattern, reference_file, splitting;
  std::optional<std::size_t> max_iters;
  reconstruct->add_option("--measurements", meas_file, "measurement header")->required();
  reconstruct->add_option("--pattern", rec_pattern, "sampling pattern (default: the one the header names)");
  reconstruct->add_option("--reference", reference_file, "reference volume; adds sre_db to the summary");
  reconstruct->add_option("--splitting", splitting, "projected or stacked");
  reconstruct->add_option("--max-iters", max_iters, "iteration cap");

  auto* evaluate = app.add_subcommand("evaluate", "print the SRE in dB of an estimate");
  std::string eval_ref, eval_est;
  evaluate->add_option("reference", eval_ref, "reference volume header")->required();
  evaluate->add_option("estimate", eval_est, "estimated volume header")->required();

  auto* run = app.add_subcommand("run-experiment", "phantom -> masks -> acquisition -> solve -> SRE per strategy");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  auto say = [&](const std::string& s) {
    if (!g.quiet) std::cout << s << "\n";
  };

  try {
    if (phantom->parsed()) {
      const auto c = load_config(g);
      const auto path = out_dir(c) / "reference.json";
      write_hypercube(path, generate_phantom(c.phantom));
      say(path.string());
    } else if (profile->parsed()) {
      auto c = load_config(g);
      const auto dir = out_dir(c);
      for (Domain d : {Domain::spectral, Domain::spatial}) {
        const std::string name = d == Domain::spectral ? "spectral" : "spatial";
        if (domain != "both" && domain != name) continue;
        const std::string& src = source.empty() ? (d == Domain::spectral ? c.profiles.spectral : c.profiles.spatial) : source;
        const auto p = resolve_profile(d, src, c);
        write_json(dir / ("profile_" + name + ".json"), to_json(p));
        say(name + " theta: " + join(p.theta.theta));
        if (!p.k.empty()) say(name + " k: " + join(p.k));
      }
    } else if (mask->parsed()) {
      auto c = load_config(g);
      if (m_xi > 0) c.m_xi = m_xi;
      const Strategy s = strategy_from_string(strategy);
      const auto spectral = profile_for(Domain::spectral, spectral_file, c);
      const auto spatial = profile_for(Domain::spatial, spatial_file, c);
      const auto pattern = design_pattern(s, spectral, spatial, c);
      write_json(out_dir(c) / "pattern.json", to_json(pattern));
      say("spectral m = " + join(pattern.spectral.m) + " (M_xi = " + std::to_string(pattern.m_xi()) + " of " +
          std::to_string(pattern.n_xi()) + ")");
      say("spatial m = " + join(pattern.spatial.m) + " (M_p = " + std::to_string(pattern.m_p()) + " of " +
          std::to_string(pattern.n_p()) + ")");
      say("mur = " + format_double(mur(pattern.m_xi(), pattern.m_p(), pattern.n_xi(), pattern.n_p())) +
          ", err = " + format_double(err(pattern.m_xi(), pattern.m_p(), pattern.n_xi())));
    } else if (acquire->parsed()) {
      const auto c = load_config(g);
      const auto reference = read_hypercube(phantom_file);
      const auto pattern = pattern_from_json(read_json(pattern_file));
      auto meas = add_noise(forward(reference, pattern), sigma.value_or(c.sigma_nyq), c.seeds.noise);
      const auto dir = out_dir(c);
      meas.pattern_ref = fs::relative(fs::absolute(pattern_file), fs::absolute(dir)).generic_string();
      write_measurements(dir / "y.json", meas);
      say("epsilon = " + format_double(meas.epsilon));
    } else if (reconstruct->parsed()) {
      auto c = load_config(g);
      if (!splitting.empty()) c.solver.splitting = splitting_from_string(splitting);
      if (max_iters) c.solver.max_iters = *max_iters;
      validate(c.solver);
      const auto meas = read_measurements(meas_file);
      fs::path pat = rec_pattern;
      if (pat.empty()) {
        require(!meas.pattern_ref.empty(), ErrorKind::config, "measurements name no pattern; pass --pattern");
        pat = fs::path(meas_file).parent_path() / meas.pattern_ref;
      }
      const auto pattern = pattern_from_json(read_json(pat));
      const auto res = solve(meas, pattern, c.solver);
      const auto dir = out_dir(c);
      write_hypercube(dir / "x_hat.json", res.x_hat);
      auto summary = summary_json(res);
      if (!reference_file.empty()) summary["sre_db"] = format_double(sre(read_hypercube(reference_file), res.x_hat));
      write_json(dir / "summary.json", summary);
      say("iterations " + std::to_string(res.iterations) + ", residual " + format_double(res.final_residual) +
          ", epsilon " + format_double(res.epsilon) + (res.converged ? ", converged" : ", NOT converged"));
      if (!res.converged) {
        std::cerr << "spfti: no convergence within " << c.solver.max_iters << " iterations\n";
        return kExitNumerical;
      }
    } else if (evaluate->parsed()) {
      std::cout << format_double(sre(read_hypercube(eval_ref), read_hypercube(eval_est))) << "\n";
    } else if (run->parsed()) {
      const auto c = load_config(g);
      const auto rep = run_experiment(c);
      if (!g.quiet) {
        std::cout << kMetricsHeader << "\n";
        for (const auto& o : rep.outcomes) std::cout << metrics_row(o) << "\n";
      }
      if (!rep.all_converged()) {
        std::cerr << "spfti: at least one strategy did not converge; see metrics.csv\n";
        return kExitNumerical;
      }
    }
  } catch (const Error& e) {
    std::cerr << "spfti: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "spfti: " << e.what() << "\n";
    return kExitIo;
  } catch (const json::exception& e) {
    std::cerr << "spfti: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}
