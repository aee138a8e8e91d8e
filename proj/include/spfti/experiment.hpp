#pragma once

// End-to-end MLS-vs-UDS comparison and the building blocks the CLI
// subcommands share with it.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spfti/io.hpp"

namespace spfti {

/// "computed" (coherence x corpus sparsity), "fixture:<name>" or "file:<path>".
/// Spatial defaults to the published profile: for smooth synthetic maps the
/// computed one saturates at 1 on every level (see README).
struct ProfileSource {
  std::string spectral = "computed";
  std::string spatial = "fixture:fig2-spatial";
};

struct ExperimentSeeds {
  std::uint64_t mask = 1;
  std::uint64_t noise = 2;
  std::uint64_t phantom = 3;
  std::uint64_t corpus = 1000;
};

/// Solver settings for experiment runs: the library defaults stop on a 1e-6
/// relative change, which analysis-l1 PDHG at desk scale does not reach in
/// 500 iterations.
inline SolverConfig desk_solver() {
  SolverConfig s;
  s.max_iters = 1500;
  s.rel_change_tol = 1e-4;
  return s;
}

struct ExperimentConfig {
  PhantomSpec phantom;
  double sigma_nyq = 1e-3;
  double target_mur = 0.11;
  std::vector<Strategy> strategies{Strategy::mls, Strategy::uds};
  ProfileSource profiles;
  std::size_t spectral_levels = 8;       // r for the spectral partition
  std::size_t m_xi = 0;                  // 0: round(sum theta_t |W_t|) of the spectral profile
  std::size_t m_p = 0;                   // 0: derived from target_mur
  std::size_t spectral_corpus_size = 24;
  std::size_t spatial_corpus_size = 48;
  double sparsity_threshold = kDefaultSparsityThreshold;
  SolverConfig solver = desk_solver();
  ExperimentSeeds seeds;
  fs::path output_dir = "out";
  /// (x, y) of the exported spectrum; defaults to the image centre.
  std::vector<std::size_t> spectrum_pixel;
};

json to_json(const ExperimentConfig& c);
/// Missing fields keep their defaults; seeds.phantom overrides phantom.seed.
ExperimentConfig experiment_config_from_json(const json& j);
void validate(const ExperimentConfig& c);

std::vector<std::string> fixture_names();
ProfileFile fixture_profile(const std::string& name);

/// Coherence of the acquisition basis against the sparsity basis times the
/// worst-case per-level sparsity of a seeded single-source corpus.
ProfileFile compute_profile(Domain domain, const ExperimentConfig& c);

/// Resolves a ProfileSource entry for one domain.
ProfileFile resolve_profile(Domain domain, const std::string& source, const ExperimentConfig& c);

LevelPartition spectral_levels_of(const ExperimentConfig& c);
LevelPartition spatial_levels_of(const ExperimentConfig& c);

struct SampleBudget {
  std::size_t m_xi = 0;
  std::size_t m_p = 0;
};

/// M_xi from the spectral profile (or the override), then
/// M_p = round(target_mur * N_xi * N_p / M_xi) clamped to [1, N_p] (or the
/// override). If M_p would exceed N_p, M_xi grows towards target_mur * N_xi.
SampleBudget sample_budget(const ProfileFile& spectral, const ExperimentConfig& c);

/// MLS draws per-level counts from the profiles; UDS draws the same totals
/// uniformly over each whole domain. A domain whose budget is the full size
/// is sampled in full.
SamplingPattern design_pattern(Strategy s, const ProfileFile& spectral, const ProfileFile& spatial,
                               const ExperimentConfig& c);

inline constexpr const char* kMetricsHeader = "strategy,m_xi,m_p,mur,err,epsilon,iters,residual,sre_db,wall_ms";

struct StrategyOutcome {
  Strategy strategy = Strategy::mls;
  SamplingPattern pattern;
  MeasurementSet measurements;
  SolverResult result;
  double sre_db = 0.0;
  double mur = 0.0;
  double err = 0.0;
};

std::string metrics_row(const StrategyOutcome& o);

struct ExperimentReport {
  HyperCube reference;
  ProfileFile spectral_profile;
  ProfileFile spatial_profile;
  std::vector<StrategyOutcome> outcomes;  // sorted by strategy name

  bool all_converged() const;
};

/// Runs phantom -> profiles -> masks -> forward -> noise -> solve -> SRE per
/// strategy. With write_outputs, fills c.output_dir with the metrics CSV, the
/// spectrum CSV and every intermediate file. A failing stage aborts with its
/// name and leaves an INCOMPLETE marker in the output directory.
ExperimentReport run_experiment(const ExperimentConfig& c, bool write_outputs = true);

}  // namespace spfti
