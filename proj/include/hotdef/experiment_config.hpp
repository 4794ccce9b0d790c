#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hotdef/asymptotic_solver.hpp"
#include "hotdef/deflation.hpp"
#include "hotdef/spike_model.hpp"

namespace hotdef {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SweepGrid {
  double start = 1.0;
  double stop = 10.0;
  int steps = 10;

  /// Evenly spaced, endpoints included. Throws ConfigError unless strictly
  /// increasing (steps == 1 gives the single point `start`).
  std::vector<double> points() const;
};

struct SpectrumSettings {
  int seeds = 10;
  bool spiked = false;  ///< contract the spiked tensor with its top fit
  int bins = 40;
  double margin = kOutlierMargin;
};

enum class OutputFormat { csv, json, svg };

struct ExperimentConfig {
  SpikeParams model;  ///< model.seed is ignored; trial seeds derive from base_seed
  std::optional<SweepGrid> beta1_sweep;
  int trials = 20;
  std::uint64_t base_seed = 0;
  PowerIterOptions power_iter;
  SolveOptions solver;
  SpectrumSettings spectrum;
  std::filesystem::path output_dir = "out";
  std::set<OutputFormat> formats{OutputFormat::csv, OutputFormat::json};

  /// beta_1 values of the sweep; just model.beta[0] without a sweep block.
  std::vector<double> beta1_values() const;
  bool wants(OutputFormat f) const { return formats.contains(f); }
  void validate() const;
};

/// Parses a config document. Unknown keys at any level are rejected.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& config);

/// Reads {"beta": [...], and either "alpha": a (rank 2) or "gram": [[...]]}
/// from `obj`, consuming those keys from `seen`.
ModelParams parse_model_params(const nlohmann::json& obj, std::set<std::string>& seen);

/// Rejects keys of `obj` not in `allowed`.
void require_known_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                        const std::string& where);

Eigen::MatrixXd json_to_matrix(const nlohmann::json& value, const std::string& where);
Eigen::VectorXd json_to_vector(const nlohmann::json& value, const std::string& where);
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
nlohmann::json vector_to_json(const Eigen::VectorXd& v);

nlohmann::json to_json(const LimitStats& stats);
nlohmann::json to_json(const ModelParams& params);
/// {"mode", "params", "solution", "residual_norm", "iterations", "converged",
///  "init_source"}.
nlohmann::json to_json(const SolveReport& report);
nlohmann::json to_json(const SpectrumReport& report);
nlohmann::json to_json(const SummaryStatistics& stats);
nlohmann::json to_json(const RankOneFit& fit);

}  // namespace hotdef
