// hotdef: command-line front end for the deflation experiments.
//
//   hotdef sweep    --config fig1.json
//   hotdef spectrum --config spectrum.json
//   hotdef solve    --mode forward --params '{"beta": [8, 5], "alpha": 0.4}'
//   hotdef solve    --mode inverse --params observed.json
//   hotdef deflate  --config fig1.json --dump-stats
//   hotdef plot     --input out/sweep.csv --kind alignments
//
// Worker threads: HOTDEF_WORKERS (default: hardware concurrency).

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "hotdef/asymptotic_solver.hpp"
#include "hotdef/deflation.hpp"
#include "hotdef/errors.hpp"
#include "hotdef/experiment_config.hpp"
#include "hotdef/experiments.hpp"
#include "hotdef/random.hpp"
#include "hotdef/svg_plot.hpp"

using namespace hotdef;
using nlohmann::json;

namespace {

json read_params(const std::string& arg) {
  const auto first = arg.find_first_not_of(" \t\n");
  const std::string text =
      (first != std::string::npos && arg[first] == '{') ? arg : read_text_file(arg);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("--params: ") + e.what());
  }
}

int get_order(const json& doc) {
  return doc.contains("d") ? doc.at("d").get<int>() : 3;
}

SolveReport solve_forward_command(const json& doc) {
  require_known_keys(doc, {"beta", "alpha", "gram", "d", "init"}, "params");
  std::set<std::string> seen;
  const ModelParams params = parse_model_params(doc, seen);
  const int d = get_order(doc);
  if (!doc.contains("init")) return solve_forward_continuation(params, d);
  const json& init = doc.at("init");
  require_known_keys(init, {"lambda", "rho", "eta"}, "params.init");
  LimitStats start;
  start.lambda = json_to_vector(init.at("lambda"), "init.lambda");
  start.rho = json_to_matrix(init.at("rho"), "init.rho");
  start.eta = json_to_matrix(init.at("eta"), "init.eta");
  return solve_forward(params, d, start, InitSource::user);
}

SolveReport solve_inverse_command(const json& doc) {
  require_known_keys(doc, {"lambda", "eta12", "d", "init"}, "params");
  const Eigen::VectorXd lambda = json_to_vector(doc.at("lambda"), "lambda");
  if (lambda.size() != 2) throw ConfigError("params.lambda: expected two eigenvalues");
  const ObservedSpectrum observed{lambda[0], lambda[1], doc.at("eta12").get<double>()};
  InverseInit start = default_inverse_init(observed);
  if (doc.contains("init")) {
    const json& init = doc.at("init");
    require_known_keys(init, {"beta", "alpha", "gram", "rho"}, "params.init");
    std::set<std::string> seen;
    start.params = parse_model_params(init, seen);
    if (init.contains("rho")) start.rho = json_to_matrix(init.at("rho"), "init.rho");
  }
  SolveReport report = estimate_params(observed, get_order(doc), start.params, start.rho);
  if (!doc.contains("init")) report.init_source = InitSource::observation;
  return report;
}

int run_sweep_command(const std::string& path) {
  const ExperimentConfig config = load_config(path);
  const SweepResult result = run_sweep(config, default_workers());
  for (const auto& file : write_sweep_outputs(config, result)) {
    std::cerr << "wrote " << file.string() << "\n";
  }
  int incomplete = 0;
  for (const SweepRow& row : result.rows) {
    std::fprintf(stderr, "beta1=%g trials=%d converged=%s%s%s\n", row.beta1,
                 row.completed_trials, row.converged ? "yes" : "no",
                 row.solver_note.empty() ? "" : " note: ", row.solver_note.c_str());
    if (row.completed_trials == 0) ++incomplete;
  }
  std::fprintf(stderr, "failed trials: %d, max eigen residual: %.3e, max matrix residual: %.3e\n",
               result.failed_trials, result.max_eig_residual, result.max_matrix_residual);
  return incomplete == 0 ? 0 : 1;
}

int run_spectrum_command(const std::string& path) {
  const ExperimentConfig config = load_config(path);
  const SpectrumResult result = run_spectrum(config, default_workers());
  for (const auto& file : write_spectrum_outputs(config, result)) {
    std::cerr << "wrote " << file.string() << "\n";
  }
  for (const SpectrumRun& run : result.runs) {
    std::fprintf(stderr, "seed=%llu ks=%.4f outliers=%zu\n",
                 static_cast<unsigned long long>(run.seed), run.report.ks_distance,
                 run.report.outliers.size());
  }
  std::fprintf(stderr, "median ks: %.4f\n", result.median_ks);
  return 0;
}

int run_deflate_command(const std::string& path, bool dump_stats, bool with_spectrum) {
  const ExperimentConfig config = load_config(path);
  const double beta1 = config.beta1_values().front();
  const TrialRecord trial = run_trial(config, beta1, trial_seed(config.base_seed, 0, 0));
  json out = {{"beta1", beta1}, {"seed", trial.seed}};
  json fits = json::array();
  for (const RankOneFit& fit : trial.fits) {
    json entry = to_json(fit);
    if (!dump_stats) entry.erase("u");
    fits.push_back(entry);
  }
  out["fits"] = fits;
  if (dump_stats) out["stats"] = to_json(trial.stats);
  if (with_spectrum) {
    SpikeParams params = config.model;
    params.beta[0] = beta1;
    params.seed = trial.seed;
    const SymmetricTensord s = sample_spiked_tensor(make_ground_truth(params));
    out["spectrum"] =
        to_json(contraction_spectrum(s, trial.fits.front().u.vec(), config.spectrum.margin));
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hotelling deflation on symmetric spiked tensors"};
  app.require_subcommand(1);

  std::string config_path;
  auto* sweep = app.add_subcommand("sweep", "Monte-Carlo sweep over beta_1 with predictions");
  sweep->add_option("--config", config_path, "experiment config (JSON)")->required();

  auto* spectrum = app.add_subcommand("spectrum", "contraction spectra against the semicircle");
  spectrum->add_option("--config", config_path, "experiment config (JSON)")->required();

  std::string mode;
  std::string params_arg;
  auto* solve = app.add_subcommand("solve", "forward or inverse solve of the limiting system");
  solve->add_option("--mode", mode, "forward|inverse")
      ->required()
      ->check(CLI::IsMember({"forward", "inverse"}));
  solve->add_option("--params", params_arg, "inline JSON or path to a JSON file")->required();

  bool dump_stats = false;
  bool with_spectrum = false;
  auto* deflate_cmd = app.add_subcommand("deflate", "one deflation run at the first beta_1");
  deflate_cmd->add_option("--config", config_path, "experiment config (JSON)")->required();
  deflate_cmd->add_flag("--dump-stats", dump_stats, "include vectors and summary statistics");
  deflate_cmd->add_flag("--spectrum", with_spectrum, "contraction spectrum at the first fit");

  std::string input;
  std::string kind;
  std::string output;
  auto* plot = app.add_subcommand("plot", "SVG figure from a sweep CSV");
  plot->add_option("--input", input, "sweep CSV")->required();
  plot->add_option("--kind", kind, "alignments|eigenvalues|eta")
      ->required()
      ->check(CLI::IsMember({"alignments", "eigenvalues", "eta"}));
  plot->add_option("--output", output, "SVG path (default: next to the input)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sweep->parsed()) return run_sweep_command(config_path);
    if (spectrum->parsed()) return run_spectrum_command(config_path);
    if (deflate_cmd->parsed()) return run_deflate_command(config_path, dump_stats, with_spectrum);
    if (solve->parsed()) {
      const json doc = read_params(params_arg);
      const SolveReport report =
          mode == "forward" ? solve_forward_command(doc) : solve_inverse_command(doc);
      std::cout << to_json(report).dump(2) << "\n";
      return report.converged ? 0 : 1;
    }
    if (plot->parsed()) {
      const std::vector<SweepRow> rows = parse_sweep_csv(read_text_file(input));
      const PlotKind plot_kind = parse_plot_kind(kind);
      std::filesystem::path target = output;
      if (target.empty()) {
        target = std::filesystem::path(input).replace_extension().string() + "_" + kind + ".svg";
      }
      emit_plot(rows, plot_kind, target);
      std::cerr << "wrote " << target.string() << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
