#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hotdef/asymptotic_solver.hpp"
#include "hotdef/deflation.hpp"
#include "hotdef/experiment_config.hpp"
#include "hotdef/rmt_kernel.hpp"

namespace hotdef {

/// Rank-2 statistics in CSV column order.
inline constexpr std::array<const char*, 7> kStatNames{"lambda1", "lambda2", "rho11", "rho12",
                                                       "rho21", "rho22", "eta12"};
using StatVector = std::array<double, 7>;

StatVector flatten(const SummaryStatistics& stats);
StatVector flatten(const LimitStats& stats);

struct TrialRecord {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  SummaryStatistics stats;
  std::vector<RankOneFit> fits;
};

struct SweepRow {
  double beta1 = 0.0;
  StatVector mean{};
  StatVector std{};
  std::optional<StatVector> prediction;  ///< present iff the solver converged
  double residual = 0.0;                 ///< solver residual; NaN when not solved
  bool converged = false;
  int completed_trials = 0;
  std::optional<SolveReport> solve;
  std::string solver_note;
  std::vector<TrialRecord> trials;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double max_eig_residual = 0.0;     ///< over every fit of every trial
  double max_matrix_residual = 0.0;  ///< same, matrix-eigenpair form
  int failed_trials = 0;
};

/// Seed for trial `trial` at grid point `grid`: base_seed XOR a hash of the
/// pair.
std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t grid, std::size_t trial);

/// Worker count from HOTDEF_WORKERS, else the available hardware threads.
unsigned default_workers();

/// One realization at the given beta_1: sample, deflate, align. Throws on
/// deflation failure.
TrialRecord run_trial(const ExperimentConfig& config, double beta1, std::uint64_t seed);

/// Monte-Carlo sweep over the beta_1 grid. Trials run on `workers` threads
/// into pre-assigned slots, so the result does not depend on the worker
/// count. Failed trials and solver failures are recorded, never thrown.
SweepResult run_sweep(const ExperimentConfig& config, unsigned workers);

/// Fixed CSV header, one SweepRow per line.
std::string sweep_csv_header();
std::string sweep_csv(const std::vector<SweepRow>& rows);
std::vector<SweepRow> parse_sweep_csv(const std::string& text);
nlohmann::json sweep_json(const ExperimentConfig& config, const SweepResult& result);

struct SpectrumRun {
  std::uint64_t seed = 0;
  SpectrumReport report;
  std::optional<double> lambda_hat;  ///< top fit eigenvalue in spiked mode
};

struct SpectrumResult {
  std::vector<SpectrumRun> runs;
  std::vector<double> bin_edges;
  std::vector<double> histogram;  ///< density over all runs' bulk + outliers
  std::vector<double> semicircle;  ///< density at bin centers
  double median_ks = 0.0;
};

/// Noise-only (or spiked) contraction spectra over spectrum.seeds seeds.
/// Noise mode contracts (1/sqrt(n)) W with an independent random unit
/// vector; spiked mode contracts the spiked tensor with its top rank-1 fit.
SpectrumResult run_spectrum(const ExperimentConfig& config, unsigned workers);
nlohmann::json spectrum_json(const ExperimentConfig& config, const SpectrumResult& result);

/// Writes the requested formats to config.output_dir and returns the paths.
std::vector<std::filesystem::path> write_sweep_outputs(const ExperimentConfig& config,
                                                       const SweepResult& result);
std::vector<std::filesystem::path> write_spectrum_outputs(const ExperimentConfig& config,
                                                          const SpectrumResult& result);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace hotdef
