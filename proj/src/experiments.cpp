#include "hotdef/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "hotdef/random.hpp"
#include "hotdef/svg_plot.hpp"

namespace hotdef {

using nlohmann::json;

namespace {

constexpr std::uint64_t kPowerStream = 3;
constexpr std::uint64_t kProbeStream = 4;
constexpr std::uint64_t kSpectrumTag = 0x5bec7ULL;
constexpr double kPredictionRecheck = 1e-9;

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

// Runs task(k) for k in [0, count) on up to `workers` threads. Each task
// writes only its own output slot.
template <typename Task>
void parallel_for(std::size_t count, unsigned workers, Task&& task) {
  std::atomic<std::size_t> next{0};
  const auto drain = [&] {
    for (std::size_t k = next++; k < count; k = next++) task(k);
  };
  const auto threads = std::min<std::size_t>(std::max(1U, workers), count);
  if (threads <= 1) {
    drain();
    return;
  }
  std::vector<std::jthread> pool;
  for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(drain);
}

void mean_and_std(const std::vector<StatVector>& samples, StatVector& mean, StatVector& std) {
  mean.fill(0.0);
  std.fill(0.0);
  if (samples.empty()) {
    mean.fill(std::numeric_limits<double>::quiet_NaN());
    std.fill(std::numeric_limits<double>::quiet_NaN());
    return;
  }
  const auto count = static_cast<double>(samples.size());
  for (const StatVector& s : samples) {
    for (std::size_t k = 0; k < s.size(); ++k) mean[k] += s[k] / count;
  }
  if (samples.size() < 2) return;
  for (const StatVector& s : samples) {
    for (std::size_t k = 0; k < s.size(); ++k) std[k] += (s[k] - mean[k]) * (s[k] - mean[k]);
  }
  for (double& v : std) v = std::sqrt(v / (count - 1.0));
}

void solve_prediction(const ExperimentConfig& config, SweepRow& row,
                      const SummaryStatistics& first) {
  ModelParams params{config.model.beta, config.model.gram};
  params.beta[0] = row.beta1;
  const int d = config.model.d;
  const LimitStats init = LimitStats::from_summary(first);
  if (!((init.lambda.array() > domain_threshold(d)).all())) {
    row.solver_note = "empirical eigenvalue at or below gamma_d (d - 1); no prediction";
    return;
  }

  std::optional<SolveReport> report;
  try {
    report = solve_forward(params, d, init, InitSource::empirical, config.solver);
  } catch (const std::exception& e) {
    row.solver_note = std::string("empirical init: ") + e.what();
  }
  if (!report || !report->converged) {
    try {
      report = solve_forward_continuation(params, d, config.solver);
    } catch (const std::exception& e) {
      row.solver_note += std::string(row.solver_note.empty() ? "" : "; ") +
                         "continuation: " + e.what();
    }
  }
  if (!report) return;
  row.solve = report;
  row.residual = report->residual_norm;
  if (!report->converged) {
    if (row.solver_note.empty()) row.solver_note = "solver did not converge";
    return;
  }
  const double recheck =
      system_residual(report->stats, params, d).lpNorm<Eigen::Infinity>();
  if (!(recheck <= kPredictionRecheck)) {
    row.solver_note = "prediction failed residual re-check";
    return;
  }
  row.converged = true;
  row.prediction = flatten(report->stats);
}

json stat_object(const StatVector& v) {
  json out = json::object();
  for (std::size_t k = 0; k < kStatNames.size(); ++k) out[kStatNames[k]] = v[k];
  return out;
}

json fit_summary(const RankOneFit& fit) {
  return {{"lambda_hat", fit.lambda_hat},
          {"eig_residual", fit.eig_residual},
          {"matrix_residual", fit.matrix_residual},
          {"iterations", fit.iterations},
          {"converged_restarts", fit.converged_restarts},
          {"objective_monotone", fit.objective_monotone}};
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& field, const std::string& column) {
  if (field.empty()) return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  const double value = std::strtod(field.c_str(), &end);
  if (end == field.c_str() || *end != '\0') {
    throw std::invalid_argument("CSV column " + column + ": not a number: " + field);
  }
  return value;
}

}  // namespace

StatVector flatten(const SummaryStatistics& s) {
  return {s.lambda_hat[0], s.lambda_hat[1], s.rho_hat(0, 0), s.rho_hat(0, 1),
          s.rho_hat(1, 0), s.rho_hat(1, 1), s.eta_hat(1, 0)};
}

StatVector flatten(const LimitStats& s) {
  return {s.lambda[0], s.lambda[1], s.rho(0, 0), s.rho(0, 1), s.rho(1, 0), s.rho(1, 1),
          s.eta(1, 0)};
}

std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t grid, std::size_t trial) {
  return base_seed ^ derive_seed(0x7e57ULL, grid, trial);
}

unsigned default_workers() {
  if (const char* env = std::getenv("HOTDEF_WORKERS")) {
    const long value = std::strtol(env, nullptr, 10);
    if (value >= 1) return static_cast<unsigned>(value);
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

TrialRecord run_trial(const ExperimentConfig& config, double beta1, std::uint64_t seed) {
  SpikeParams params = config.model;
  params.beta[0] = beta1;
  params.seed = seed;
  const GroundTruth truth = make_ground_truth(params);
  const SymmetricTensord s = sample_spiked_tensor(truth);
  PowerIterOptions opts = config.power_iter;
  opts.seed = derive_seed(seed, kPowerStream);
  auto [result, stats] = deflate(s, params.r, truth, opts);
  align_signs(stats, params.d);
  canonicalize_tied_labels(stats, params.beta, params.gram);
  TrialRecord record;
  record.seed = seed;
  record.ok = true;
  record.stats = std::move(stats);
  record.fits = std::move(result.fits);
  return record;
}

SweepResult run_sweep(const ExperimentConfig& config, unsigned workers) {
  config.validate();
  if (config.model.r != 2) throw ConfigError("sweep tables are defined for rank r = 2");
  const std::vector<double> grid = config.beta1_values();
  const auto trials = static_cast<std::size_t>(config.trials);

  std::vector<TrialRecord> slots(grid.size() * trials);
  parallel_for(slots.size(), workers, [&](std::size_t k) {
    const std::size_t g = k / trials;
    const std::size_t t = k % trials;
    const std::uint64_t seed = trial_seed(config.base_seed, g, t);
    try {
      slots[k] = run_trial(config, grid[g], seed);
    } catch (const std::exception& e) {
      slots[k].seed = seed;
      slots[k].ok = false;
      slots[k].error = e.what();
    }
  });

  SweepResult result;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    SweepRow row;
    row.beta1 = grid[g];
    row.residual = std::numeric_limits<double>::quiet_NaN();
    std::vector<StatVector> samples;
    const SummaryStatistics* first = nullptr;
    for (std::size_t t = 0; t < trials; ++t) {
      TrialRecord& trial = slots[g * trials + t];
      if (!trial.ok) {
        ++result.failed_trials;
      } else {
        samples.push_back(flatten(trial.stats));
        if (!first) first = &trial.stats;
        for (const RankOneFit& fit : trial.fits) {
          result.max_eig_residual = std::max(result.max_eig_residual, fit.eig_residual);
          result.max_matrix_residual = std::max(result.max_matrix_residual, fit.matrix_residual);
        }
      }
    }
    row.completed_trials = static_cast<int>(samples.size());
    mean_and_std(samples, row.mean, row.std);
    if (first) {
      solve_prediction(config, row, *first);
    } else {
      row.solver_note = "no trial completed";
    }
    row.trials.assign(std::make_move_iterator(slots.begin() + static_cast<std::ptrdiff_t>(g * trials)),
                      std::make_move_iterator(slots.begin() + static_cast<std::ptrdiff_t>((g + 1) * trials)));
    result.rows.push_back(std::move(row));
  }
  return result;
}

std::string sweep_csv_header() {
  std::string header = "beta1";
  for (const char* name : kStatNames) {
    header += std::string(",") + name + "_mean," + name + "_std";
  }
  for (const char* name : kStatNames) header += std::string(",") + name + "_pred";
  header += ",residual,converged";
  return header;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = sweep_csv_header() + "\n";
  for (const SweepRow& row : rows) {
    out += format_number(row.beta1);
    for (std::size_t k = 0; k < kStatNames.size(); ++k) {
      out += "," + format_number(row.mean[k]) + "," + format_number(row.std[k]);
    }
    for (std::size_t k = 0; k < kStatNames.size(); ++k) {
      out += ",";
      if (row.prediction) out += format_number((*row.prediction)[k]);
    }
    out += ",";
    if (!std::isnan(row.residual)) out += format_number(row.residual);
    out += row.converged ? ",true\n" : ",false\n";
  }
  return out;
}

std::vector<SweepRow> parse_sweep_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != sweep_csv_header()) {
    throw std::invalid_argument("sweep CSV: unexpected header");
  }
  const std::vector<std::string> columns = split_csv_line(sweep_csv_header());
  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != columns.size()) {
      throw std::invalid_argument("sweep CSV: wrong number of fields");
    }
    SweepRow row;
    std::size_t c = 0;
    row.beta1 = parse_double(fields[c], columns[c]);
    ++c;
    for (std::size_t k = 0; k < kStatNames.size(); ++k, c += 2) {
      row.mean[k] = parse_double(fields[c], columns[c]);
      row.std[k] = parse_double(fields[c + 1], columns[c + 1]);
    }
    StatVector pred{};
    bool any_prediction = false;
    for (std::size_t k = 0; k < kStatNames.size(); ++k, ++c) {
      pred[k] = parse_double(fields[c], columns[c]);
      any_prediction = any_prediction || !fields[c].empty();
    }
    row.residual = parse_double(fields[c], columns[c]);
    ++c;
    if (fields[c] != "true" && fields[c] != "false") {
      throw std::invalid_argument("sweep CSV: converged must be true or false");
    }
    row.converged = fields[c] == "true";
    if (any_prediction) row.prediction = pred;
    rows.push_back(row);
  }
  return rows;
}

json sweep_json(const ExperimentConfig& config, const SweepResult& result) {
  json rows = json::array();
  for (const SweepRow& row : result.rows) {
    json trials = json::array();
    for (const TrialRecord& t : row.trials) {
      json entry = {{"seed", t.seed}, {"ok", t.ok}};
      if (t.ok) {
        entry["stats"] = to_json(t.stats);
        json fits = json::array();
        for (const RankOneFit& fit : t.fits) fits.push_back(fit_summary(fit));
        entry["fits"] = fits;
      } else {
        entry["error"] = t.error;
      }
      trials.push_back(entry);
    }
    rows.push_back({{"beta1", row.beta1},
                    {"mean", stat_object(row.mean)},
                    {"std", stat_object(row.std)},
                    {"prediction", row.prediction ? stat_object(*row.prediction) : json(nullptr)},
                    {"residual", std::isnan(row.residual) ? json(nullptr) : json(row.residual)},
                    {"converged", row.converged},
                    {"completed_trials", row.completed_trials},
                    {"solver", row.solve ? to_json(*row.solve) : json(nullptr)},
                    {"solver_note", row.solver_note},
                    {"trials", trials}});
  }
  return {{"config", to_json(config)},
          {"rows", rows},
          {"max_eig_residual", result.max_eig_residual},
          {"max_matrix_residual", result.max_matrix_residual},
          {"failed_trials", result.failed_trials}};
}

SpectrumResult run_spectrum(const ExperimentConfig& config, unsigned workers) {
  config.validate();
  const SpikeParams& model = config.model;
  const auto seeds = static_cast<std::size_t>(config.spectrum.seeds);
  SpectrumResult result;
  result.runs.resize(seeds);
  parallel_for(seeds, workers, [&](std::size_t k) {
    const std::uint64_t seed = derive_seed(config.base_seed, kSpectrumTag, k);
    SpectrumRun& run = result.runs[k];
    run.seed = seed;
    if (config.spectrum.spiked) {
      SpikeParams params = model;
      params.seed = seed;
      const SymmetricTensord s = sample_spiked_tensor(make_ground_truth(params));
      PowerIterOptions opts = config.power_iter;
      opts.seed = derive_seed(seed, kPowerStream);
      const RankOneFit fit = best_rank1(s, opts);
      run.lambda_hat = fit.lambda_hat;
      run.report = contraction_spectrum(s, fit.u.vec(), config.spectrum.margin);
    } else {
      const SymmetricTensord w =
          (model.noise_scale / std::sqrt(static_cast<double>(model.n))) *
          sample_noise(model.n, model.d, derive_seed(seed, kNoiseStream));
      const CounterNormals normals(derive_seed(seed, kProbeStream));
      Eigen::VectorXd u(model.n);
      for (Index i = 0; i < model.n; ++i) u[i] = normals(static_cast<std::uint64_t>(i));
      u.normalize();
      run.report = contraction_spectrum(w, u, config.spectrum.margin);
    }
  });

  std::vector<double> ks;
  double extent = 1.5 * gamma_d(model.d);
  for (const SpectrumRun& run : result.runs) {
    ks.push_back(run.report.ks_distance);
    for (double mu : run.report.eigenvalues) extent = std::max(extent, 1.05 * std::abs(mu));
  }
  std::sort(ks.begin(), ks.end());
  result.median_ks = ks.size() % 2 == 1
                         ? ks[ks.size() / 2]
                         : 0.5 * (ks[ks.size() / 2 - 1] + ks[ks.size() / 2]);

  const int bins = config.spectrum.bins;
  const double width = 2.0 * extent / bins;
  result.histogram.assign(static_cast<std::size_t>(bins), 0.0);
  std::size_t total = 0;
  for (const SpectrumRun& run : result.runs) {
    for (double mu : run.report.eigenvalues) {
      const auto b = std::clamp(static_cast<int>(std::floor((mu + extent) / width)), 0, bins - 1);
      result.histogram[static_cast<std::size_t>(b)] += 1.0;
      ++total;
    }
  }
  const SemicircleLaw law = SemicircleLaw::for_order(model.d);
  for (int b = 0; b <= bins; ++b) result.bin_edges.push_back(-extent + b * width);
  for (int b = 0; b < bins; ++b) {
    result.histogram[static_cast<std::size_t>(b)] /= static_cast<double>(total) * width;
    result.semicircle.push_back(law.density(-extent + (b + 0.5) * width));
  }
  return result;
}

json spectrum_json(const ExperimentConfig& config, const SpectrumResult& result) {
  json runs = json::array();
  for (const SpectrumRun& run : result.runs) {
    json entry = to_json(run.report);
    entry["seed"] = run.seed;
    if (run.lambda_hat) entry["lambda_hat"] = *run.lambda_hat;
    runs.push_back(entry);
  }
  return {{"config", to_json(config)},
          {"runs", runs},
          {"median_ks", result.median_ks},
          {"histogram",
           {{"bin_edges", result.bin_edges},
            {"density", result.histogram},
            {"semicircle", result.semicircle}}}};
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<std::filesystem::path> write_sweep_outputs(const ExperimentConfig& config,
                                                       const SweepResult& result) {
  std::vector<std::filesystem::path> written;
  const auto& dir = config.output_dir;
  if (config.wants(OutputFormat::csv)) {
    written.push_back(dir / "sweep.csv");
    write_text_file(written.back(), sweep_csv(result.rows));
  }
  if (config.wants(OutputFormat::json)) {
    written.push_back(dir / "sweep.json");
    write_text_file(written.back(), sweep_json(config, result).dump(2) + "\n");
  }
  if (config.wants(OutputFormat::svg)) {
    for (PlotKind kind : {PlotKind::alignments, PlotKind::eigenvalues, PlotKind::eta}) {
      written.push_back(dir / ("sweep_" + to_string(kind) + ".svg"));
      emit_plot(result.rows, kind, written.back());
    }
  }
  return written;
}

std::vector<std::filesystem::path> write_spectrum_outputs(const ExperimentConfig& config,
                                                          const SpectrumResult& result) {
  std::vector<std::filesystem::path> written;
  const auto& dir = config.output_dir;
  if (config.wants(OutputFormat::csv)) {
    std::string csv = "bin_left,bin_right,density,semicircle\n";
    for (std::size_t b = 0; b < result.histogram.size(); ++b) {
      csv += format_number(result.bin_edges[b]) + "," + format_number(result.bin_edges[b + 1]) +
             "," + format_number(result.histogram[b]) + "," +
             format_number(result.semicircle[b]) + "\n";
    }
    written.push_back(dir / "spectrum.csv");
    write_text_file(written.back(), csv);
  }
  if (config.wants(OutputFormat::json)) {
    written.push_back(dir / "spectrum.json");
    write_text_file(written.back(), spectrum_json(config, result).dump(2) + "\n");
  }
  if (config.wants(OutputFormat::svg)) {
    written.push_back(dir / "spectrum.svg");
    emit_plot(result, written.back());
  }
  return written;
}

}  // namespace hotdef
