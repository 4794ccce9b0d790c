#include "hotdef/experiment_config.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace hotdef {

using nlohmann::json;

namespace {

template <typename T>
T get_as(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <typename T>
void read_optional(const json& obj, const char* key, T& out, const std::string& where) {
  if (obj.contains(key)) out = get_as<T>(obj, key, where);
}

const json& require_object(const json& obj, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
  return obj;
}

std::string to_string(OutputFormat f) {
  switch (f) {
    case OutputFormat::csv: return "csv";
    case OutputFormat::json: return "json";
    case OutputFormat::svg: return "svg";
  }
  return "unknown";
}

OutputFormat parse_format(const std::string& name) {
  if (name == "csv") return OutputFormat::csv;
  if (name == "json") return OutputFormat::json;
  if (name == "svg") return OutputFormat::svg;
  throw ConfigError("outputs.formats: unknown format '" + name + "'");
}

}  // namespace

void require_known_keys(const json& obj, const std::set<std::string>& allowed,
                        const std::string& where) {
  require_object(obj, where);
  for (const auto& item : obj.items()) {
    if (!allowed.contains(item.key())) {
      throw ConfigError(where + ": unknown key '" + item.key() + "'");
    }
  }
}

Eigen::VectorXd json_to_vector(const json& value, const std::string& where) {
  if (!value.is_array()) throw ConfigError(where + ": expected an array");
  Eigen::VectorXd v(static_cast<Index>(value.size()));
  for (std::size_t i = 0; i < value.size(); ++i) {
    if (!value[i].is_number()) throw ConfigError(where + ": expected numbers");
    v[static_cast<Index>(i)] = value[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd json_to_matrix(const json& value, const std::string& where) {
  if (!value.is_array() || value.empty()) throw ConfigError(where + ": expected nested arrays");
  const auto rows = static_cast<Index>(value.size());
  const auto cols = static_cast<Index>(value[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Eigen::VectorXd row = json_to_vector(value[static_cast<std::size_t>(i)], where);
    if (row.size() != cols) throw ConfigError(where + ": ragged matrix");
    m.row(i) = row.transpose();
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Index i = 0; i < m.rows(); ++i) out.push_back(vector_to_json(m.row(i).transpose()));
  return out;
}

ModelParams parse_model_params(const json& obj, std::set<std::string>& seen) {
  ModelParams params;
  if (!obj.contains("beta")) throw ConfigError("model: missing 'beta'");
  params.beta = json_to_vector(obj.at("beta"), "beta");
  seen.insert("beta");
  const bool has_alpha = obj.contains("alpha");
  const bool has_gram = obj.contains("gram");
  if (has_alpha == has_gram) throw ConfigError("model: give exactly one of 'alpha' or 'gram'");
  if (has_alpha) {
    if (params.beta.size() != 2) throw ConfigError("model: 'alpha' needs exactly two weights");
    params.gram = two_component_gram(get_as<double>(obj, "alpha", "model"));
    seen.insert("alpha");
  } else {
    params.gram = json_to_matrix(obj.at("gram"), "gram");
    seen.insert("gram");
  }
  return params;
}

std::vector<double> SweepGrid::points() const {
  if (steps < 1) throw ConfigError("beta1_sweep.steps must be at least 1");
  if (steps == 1) return {start};
  if (!(stop > start)) throw ConfigError("beta1_sweep must be strictly increasing");
  std::vector<double> out;
  for (int k = 0; k < steps; ++k) {
    out.push_back(start + (stop - start) * static_cast<double>(k) / (steps - 1));
  }
  return out;
}

std::vector<double> ExperimentConfig::beta1_values() const {
  if (beta1_sweep) return beta1_sweep->points();
  return {model.beta[0]};
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (spectrum.seeds < 1) throw ConfigError("spectrum.seeds must be at least 1");
  if (spectrum.bins < 1) throw ConfigError("spectrum.bins must be at least 1");
  if (!(spectrum.margin >= 0.0)) throw ConfigError("spectrum.margin must be non-negative");
  if (!(solver.tol > 0.0) || solver.max_iters < 1) throw ConfigError("invalid solver settings");
  try {
    power_iter.validate();
    for (double b : beta1_values()) {
      SpikeParams p = model;
      p.beta[0] = b;
      p.validate();
    }
  } catch (const std::exception& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
}

ExperimentConfig parse_config(const json& doc) {
  require_known_keys(doc, {"model", "trials", "base_seed", "power_iter", "solver", "spectrum",
                           "outputs"},
                     "config");
  ExperimentConfig config;

  if (!doc.contains("model")) throw ConfigError("config: missing 'model'");
  const json& model = doc.at("model");
  require_known_keys(model, {"n", "d", "r", "beta", "alpha", "gram", "noise_scale",
                             "beta1_sweep"},
                     "model");
  std::set<std::string> seen;
  const ModelParams params = parse_model_params(model, seen);
  config.model.beta = params.beta;
  config.model.gram = params.gram;
  config.model.r = static_cast<int>(params.beta.size());
  read_optional(model, "n", config.model.n, "model");
  read_optional(model, "d", config.model.d, "model");
  if (model.contains("r") && get_as<int>(model, "r", "model") != config.model.r) {
    throw ConfigError("model.r disagrees with the number of weights");
  }
  read_optional(model, "noise_scale", config.model.noise_scale, "model");
  if (model.contains("beta1_sweep")) {
    const json& sweep = model.at("beta1_sweep");
    require_known_keys(sweep, {"start", "stop", "steps"}, "model.beta1_sweep");
    SweepGrid grid;
    read_optional(sweep, "start", grid.start, "model.beta1_sweep");
    read_optional(sweep, "stop", grid.stop, "model.beta1_sweep");
    read_optional(sweep, "steps", grid.steps, "model.beta1_sweep");
    config.beta1_sweep = grid;
  }

  read_optional(doc, "trials", config.trials, "config");
  read_optional(doc, "base_seed", config.base_seed, "config");

  if (doc.contains("power_iter")) {
    const json& pi = doc.at("power_iter");
    require_known_keys(pi, {"max_iters", "tol", "restarts"}, "power_iter");
    read_optional(pi, "max_iters", config.power_iter.max_iters, "power_iter");
    read_optional(pi, "tol", config.power_iter.tol, "power_iter");
    read_optional(pi, "restarts", config.power_iter.restarts, "power_iter");
  }
  if (doc.contains("solver")) {
    const json& solver = doc.at("solver");
    require_known_keys(solver, {"tol", "max_iters"}, "solver");
    read_optional(solver, "tol", config.solver.tol, "solver");
    read_optional(solver, "max_iters", config.solver.max_iters, "solver");
  }
  if (doc.contains("spectrum")) {
    const json& spectrum = doc.at("spectrum");
    require_known_keys(spectrum, {"seeds", "spiked", "bins", "margin"}, "spectrum");
    read_optional(spectrum, "seeds", config.spectrum.seeds, "spectrum");
    read_optional(spectrum, "spiked", config.spectrum.spiked, "spectrum");
    read_optional(spectrum, "bins", config.spectrum.bins, "spectrum");
    read_optional(spectrum, "margin", config.spectrum.margin, "spectrum");
  }
  if (doc.contains("outputs")) {
    const json& outputs = doc.at("outputs");
    require_known_keys(outputs, {"directory", "formats"}, "outputs");
    if (outputs.contains("directory")) {
      config.output_dir = get_as<std::string>(outputs, "directory", "outputs");
    }
    if (outputs.contains("formats")) {
      config.formats.clear();
      for (const auto& f : get_as<std::vector<std::string>>(outputs, "formats", "outputs")) {
        config.formats.insert(parse_format(f));
      }
    }
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

json to_json(const ExperimentConfig& config) {
  json model = {{"n", config.model.n},
                {"d", config.model.d},
                {"r", config.model.r},
                {"beta", vector_to_json(config.model.beta)},
                {"gram", matrix_to_json(config.model.gram)},
                {"noise_scale", config.model.noise_scale}};
  if (config.beta1_sweep) {
    model["beta1_sweep"] = {{"start", config.beta1_sweep->start},
                            {"stop", config.beta1_sweep->stop},
                            {"steps", config.beta1_sweep->steps}};
  }
  json formats = json::array();
  for (OutputFormat f : config.formats) formats.push_back(to_string(f));
  return {{"model", model},
          {"trials", config.trials},
          {"base_seed", config.base_seed},
          {"power_iter",
           {{"max_iters", config.power_iter.max_iters},
            {"tol", config.power_iter.tol},
            {"restarts", config.power_iter.restarts}}},
          {"solver", {{"tol", config.solver.tol}, {"max_iters", config.solver.max_iters}}},
          {"spectrum",
           {{"seeds", config.spectrum.seeds},
            {"spiked", config.spectrum.spiked},
            {"bins", config.spectrum.bins},
            {"margin", config.spectrum.margin}}},
          {"outputs", {{"directory", config.output_dir.string()}, {"formats", formats}}}};
}

json to_json(const LimitStats& stats) {
  return {{"lambda", vector_to_json(stats.lambda)},
          {"rho", matrix_to_json(stats.rho)},
          {"eta", matrix_to_json(stats.eta)}};
}

json to_json(const ModelParams& params) {
  return {{"beta", vector_to_json(params.beta)}, {"gram", matrix_to_json(params.gram)}};
}

json to_json(const SolveReport& report) {
  json params;
  json solution;
  if (report.mode == SolveMode::forward) {
    params = to_json(report.params);
    solution = to_json(report.stats);
  } else {
    params = {{"lambda", vector_to_json(report.stats.lambda)},
              {"eta", matrix_to_json(report.stats.eta)}};
    solution = to_json(report.params);
    solution["rho"] = matrix_to_json(report.stats.rho);
  }
  return {{"mode", to_string(report.mode)},
          {"params", params},
          {"solution", solution},
          {"residual_norm", report.residual_norm},
          {"iterations", report.iterations},
          {"converged", report.converged},
          {"init_source", to_string(report.init_source)}};
}

json to_json(const SpectrumReport& report) {
  return {{"eigenvalues", report.eigenvalues},
          {"outliers", report.outliers},
          {"ks_distance", report.ks_distance},
          {"gamma", report.gamma}};
}

json to_json(const SummaryStatistics& stats) {
  return {{"lambda_hat", vector_to_json(stats.lambda_hat)},
          {"rho_hat", matrix_to_json(stats.rho_hat)},
          {"eta_hat", matrix_to_json(stats.eta_hat)}};
}

json to_json(const RankOneFit& fit) {
  return {{"lambda_hat", fit.lambda_hat},
          {"u", vector_to_json(fit.u.vec())},
          {"eig_residual", fit.eig_residual},
          {"matrix_residual", fit.matrix_residual},
          {"iterations", fit.iterations},
          {"converged_restarts", fit.converged_restarts},
          {"objective_monotone", fit.objective_monotone}};
}

}  // namespace hotdef
