#include "dtd/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>

#include <omp.h>

#include "dtd/errors.hpp"

namespace dtd {

namespace {

constexpr std::uint64_t kEnvStream = 1;
constexpr std::uint64_t kAgentStream = 2;

std::string cell_id(Algorithm algorithm, double alpha, double eta) {
  std::string id = to_string(algorithm) + "_a" + format_number(alpha);
  if (algorithm == Algorithm::diff_q) id += "_e" + format_number(eta);
  return id;
}

RunRecord blank_record(const ExperimentConfig& config, const CellSpec& cell, std::uint64_t seed) {
  RunRecord rec;
  rec.config_id = cell.config_id;
  rec.algorithm = cell.algorithm;
  rec.alpha = cell.alpha;
  rec.eta = cell.eta;
  rec.seed = seed;
  rec.num_steps = config.num_steps;
  rec.curve_stride = config.curve_stride;
  if (config.curve_stride > 0) rec.cumulative.reserve(static_cast<std::size_t>(config.num_steps / config.curve_stride));
  return rec;
}

// Shared bookkeeping of the cumulative curve and the final-quarter mean.
class Tally {
 public:
  Tally(RunRecord& rec) : rec_(rec) {
    const std::int64_t n = rec.num_steps;
    quarter_ = n > 0 ? std::max<std::int64_t>(1, n / 4) : 0;
    quarter_begin_ = n - quarter_;
  }

  void step(std::int64_t t, bool finished) {
    if (finished) ++rec_.episodes;
    if (rec_.curve_stride > 0 && t % rec_.curve_stride == 0)
      rec_.cumulative.push_back(static_cast<std::uint32_t>(rec_.episodes));
    if (t > quarter_begin_) quarter_sum_ += static_cast<double>(rec_.episodes);
  }

  void finish() { rec_.final_quarter_mean = quarter_ > 0 ? quarter_sum_ / static_cast<double>(quarter_) : 0.0; }

 private:
  RunRecord& rec_;
  std::int64_t quarter_ = 0;
  std::int64_t quarter_begin_ = 0;
  double quarter_sum_ = 0.0;
};

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("write to " + path.string() + " failed");
}

std::string svg_chart(const ComparisonResult& results) {
  constexpr double W = 640, H = 400, L = 60, R = 20, T = 30, B = 50;
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"};
  double ymax = 1.0;
  for (const auto& a : results.algorithms)
    for (std::size_t i = 0; i < a.curve.mean.size(); ++i) ymax = std::max(ymax, a.curve.mean[i] + a.curve.std_error[i]);
  const double xmax = std::max<double>(1.0, static_cast<double>(results.num_steps));
  auto px = [&](double x) { return L + (W - L - R) * x / xmax; };
  auto py = [&](double y) { return H - B - (H - T - B) * y / ymax; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << L << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << results.name << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << (W / 2) << "\" y=\"" << H - 10 << "\" font-family=\"sans-serif\" font-size=\"12\">steps (max "
     << results.num_steps << ")</text>\n";
  os << "<text x=\"5\" y=\"" << T - 5 << "\" font-family=\"sans-serif\" font-size=\"12\">episodes (max "
     << format_number(ymax) << ")</text>\n";

  for (std::size_t k = 0; k < results.algorithms.size(); ++k) {
    const auto& a = results.algorithms[k];
    const char* color = colors[k % 4];
    const auto& m = a.curve.mean;
    const auto& se = a.curve.std_error;
    if (m.empty()) continue;
    const double stride = results.curve_stride;
    std::ostringstream band, line;
    for (std::size_t i = 0; i < m.size(); ++i)
      band << (i ? " " : "") << px(stride * (i + 1)) << "," << py(m[i] + se[i]);
    for (std::size_t i = m.size(); i-- > 0;) band << " " << px(stride * (i + 1)) << "," << py(m[i] - se[i]);
    for (std::size_t i = 0; i < m.size(); ++i) line << (i ? " " : "") << px(stride * (i + 1)) << "," << py(m[i]);
    os << "<polygon points=\"" << band.str() << "\" fill=\"" << color << "\" fill-opacity=\"0.25\" stroke=\"none\"/>\n";
    os << "<polyline points=\"" << line.str() << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
    os << "<text x=\"" << L + 10 << "\" y=\"" << T + 15 + 15 * k << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\""
       << color << "\">" << to_string(a.algorithm) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace

std::string to_string(Algorithm algorithm) { return algorithm == Algorithm::q ? "q" : "diff_q"; }

Algorithm parse_algorithm(std::string_view text) {
  if (text == "q") return Algorithm::q;
  if (text == "diff_q") return Algorithm::diff_q;
  throw ConfigError("unknown algorithm '" + std::string(text) + "' (expected q or diff_q)");
}

std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void ExperimentConfig::validate() const {
  if (num_runs < 1) throw ConfigError("num_runs must be >= 1");
  if (num_steps < 0) throw ConfigError("num_steps must be >= 0");
  if (num_steps > static_cast<std::int64_t>(UINT32_MAX)) throw ConfigError("num_steps must fit in 32 bits");
  if (alphas.empty()) throw ConfigError("alphas must be non-empty");
  if (algorithm == Algorithm::diff_q && etas.empty()) throw ConfigError("diff_q requires a non-empty etas list");
  for (double a : alphas)
    if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("every alpha must lie in [0, 1]");
  for (double e : etas)
    if (!(e >= 0.0)) throw ConfigError("every eta must be >= 0");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
  if (curve_stride < 0) throw ConfigError("curve_stride must be >= 0");
  if (const auto* g = std::get_if<GridSpec>(&env); g && (g->width < 2 || g->height < 2))
    throw ConfigError("grid width and height must be >= 2");
}

TabularMDP ExperimentConfig::build_env() const {
  if (const auto* g = std::get_if<GridSpec>(&env)) {
    GridSpec spec = *g;
    spec.gamma = gamma;
    return make_gridworld(spec);
  }
  return make_diagnostic(std::get<std::string>(env), gamma);
}

std::vector<CellSpec> sweep_cells(const ExperimentConfig& config) {
  std::vector<CellSpec> cells;
  for (double alpha : config.alphas) {
    if (config.algorithm == Algorithm::q) {
      cells.push_back({cell_id(Algorithm::q, alpha, 0.0), Algorithm::q, alpha, 0.0});
      continue;
    }
    for (double eta : config.etas) cells.push_back({cell_id(Algorithm::diff_q, alpha, eta), Algorithm::diff_q, alpha, eta});
  }
  return cells;
}

RunRecord run_trial(const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  const TabularMDP mdp = config.build_env();
  return run_trial(mdp, config, sweep_cells(config).front(), seed);
}

RunRecord run_trial(const TabularMDP& mdp, const ExperimentConfig& config, const CellSpec& cell, std::uint64_t seed) {
  AgentParams params;
  params.alpha = cell.alpha;
  params.eta = cell.algorithm == Algorithm::diff_q ? cell.eta : 0.0;
  params.gamma = config.gamma;
  params.form = config.form;
  params.task = mdp.has_terminal() ? TaskKind::episodic : TaskKind::continuing;
  AgentState agent = make_q_agent(mdp.layout(), params);

  Rng env_rng = make_rng(seed, kEnvStream);
  Rng agent_rng = make_rng(seed, kAgentStream);
  RunRecord rec = blank_record(config, cell, seed);
  Tally tally(rec);

  StateId s = sample_start(mdp, env_rng);
  for (std::int64_t t = 1; t <= config.num_steps; ++t) {
    const ActionId a = epsilon_greedy(agent.q_row(s), config.epsilon, agent_rng);
    const StepResult step = sample_step(mdp, s, a, env_rng);
    const Transition tr{s, a, step.reward, step.next, step.terminal};
    if (cell.algorithm == Algorithm::q)
      q_step(agent, tr);
    else
      diff_q_step(agent, tr);
    s = step.terminal ? sample_start(mdp, env_rng) : step.next;
    tally.step(t, step.terminal);
  }
  tally.finish();
  return rec;
}

RunRecord run_policy_trial(const TabularMDP& mdp, const PolicyTable& pi, std::int64_t num_steps, std::uint64_t seed,
                           int curve_stride) {
  ExperimentConfig config;
  config.num_steps = num_steps;
  config.curve_stride = curve_stride;
  RunRecord rec = blank_record(config, {"policy", Algorithm::q, 0.0, 0.0}, seed);
  Rng env_rng = make_rng(seed, kEnvStream);
  Rng agent_rng = make_rng(seed, kAgentStream);
  Tally tally(rec);
  StateId s = sample_start(mdp, env_rng);
  for (std::int64_t t = 1; t <= num_steps; ++t) {
    const ActionId a = sample_action(pi, s, agent_rng);
    const StepResult step = sample_step(mdp, s, a, env_rng);
    s = step.terminal ? sample_start(mdp, env_rng) : step.next;
    tally.step(t, step.terminal);
  }
  tally.finish();
  return rec;
}

std::vector<RunRecord> run_trials(const TabularMDP& mdp, const ExperimentConfig& config,
                                  std::span<const TrialSpec> trials, Execution exec, int jobs) {
  const auto n = static_cast<std::int64_t>(trials.size());
  std::vector<RunRecord> out(trials.size());
  if (exec == Execution::serial) {
    for (std::int64_t i = 0; i < n; ++i) out[i] = run_trial(mdp, config, trials[i].cell, trials[i].seed);
    return out;
  }

  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
  std::vector<std::exception_ptr> errors(trials.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      out[i] = run_trial(mdp, config, trials[i].cell, trials[i].seed);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

SweepResult sweep(const ExperimentConfig& config, Execution exec, int jobs) {
  config.validate();
  const TabularMDP mdp = config.build_env();
  ExperimentConfig summary_only = config;
  summary_only.curve_stride = 0;

  const auto cells = sweep_cells(config);
  std::vector<TrialSpec> trials;
  trials.reserve(cells.size() * static_cast<std::size_t>(config.num_runs));
  for (const auto& cell : cells)
    for (int run = 0; run < config.num_runs; ++run) trials.push_back({cell, run_seed(config, run)});
  const auto records = run_trials(mdp, summary_only, trials, exec, jobs);

  SweepResult result;
  std::size_t k = 0;
  for (const auto& cell : cells) {
    CellSummary cs;
    cs.cell = cell;
    std::vector<double> totals;
    for (int run = 0; run < config.num_runs; ++run, ++k) {
      cs.totals.push_back(records[k].episodes);
      cs.final_quarter.push_back(records[k].final_quarter_mean);
      totals.push_back(static_cast<double>(records[k].episodes));
    }
    std::tie(cs.mean_total, cs.stderr_total) = mean_stderr(totals);
    std::tie(cs.mean_final_quarter, cs.stderr_final_quarter) = mean_stderr(cs.final_quarter);
    result.cells.push_back(std::move(cs));
  }
  for (std::size_t i = 1; i < result.cells.size(); ++i)
    if (result.cells[i].mean_total > result.cells[result.best].mean_total) result.best = i;
  return result;
}

std::pair<double, double> mean_stderr(std::span<const double> xs) {
  if (xs.empty()) throw ConfigError("mean of an empty sample");
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  if (xs.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

Aggregate aggregate(std::span<const std::vector<double>> curves) {
  if (curves.empty()) throw ConfigError("aggregate needs at least one curve");
  const std::size_t len = curves.front().size();
  for (const auto& c : curves)
    if (c.size() != len)
      throw ConfigError("curve lengths differ (" + std::to_string(c.size()) + " vs " + std::to_string(len) + ")");
  Aggregate agg;
  agg.count = static_cast<int>(curves.size());
  agg.mean.resize(len);
  agg.std_error.resize(len);
  std::vector<double> column(curves.size());
  for (std::size_t i = 0; i < len; ++i) {
    for (std::size_t k = 0; k < curves.size(); ++k) column[k] = curves[k][i];
    std::tie(agg.mean[i], agg.std_error[i]) = mean_stderr(column);
  }
  return agg;
}

Aggregate aggregate(std::span<const RunRecord> records) {
  std::vector<std::vector<double>> curves;
  curves.reserve(records.size());
  for (const auto& r : records) curves.emplace_back(r.cumulative.begin(), r.cumulative.end());
  return aggregate(std::span<const std::vector<double>>(curves));
}

ComparisonResult compare_algorithms(const ExperimentConfig& base, std::span<const Algorithm> algorithms,
                                    const std::string& name, Execution exec, int jobs) {
  ComparisonResult result;
  result.name = name;
  result.num_steps = base.num_steps;
  result.curve_stride = base.curve_stride;
  for (Algorithm algorithm : algorithms) {
    ExperimentConfig config = base;
    config.algorithm = algorithm;
    AlgorithmResult ar;
    ar.algorithm = algorithm;
    ar.sweep = sweep(config, exec, jobs);
    if (config.curve_stride > 0) {
      const TabularMDP mdp = config.build_env();
      std::vector<TrialSpec> trials;
      for (int run = 0; run < config.num_runs; ++run) trials.push_back({ar.sweep.best_cell().cell, run_seed(config, run)});
      ar.best_runs = run_trials(mdp, config, trials, exec, jobs);
      ar.curve = aggregate(std::span<const RunRecord>(ar.best_runs));
    }
    result.algorithms.push_back(std::move(ar));
  }
  return result;
}

std::vector<std::filesystem::path> export_results(const ComparisonResult& results, const std::filesystem::path& dir,
                                                  const ExportOptions& options) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

  std::ostringstream runs, sweep_csv, summary;
  runs << "config_id,algorithm,alpha,eta,seed,step,cumulative_episodes\n";
  sweep_csv << "config_id,algorithm,alpha,eta,num_runs,mean_total_episodes,stderr_total_episodes,"
               "mean_final_quarter,stderr_final_quarter,best\n";
  summary << "step,algorithm,mean_cumulative,stderr_cumulative,mean_rate,stderr_rate\n";

  for (const auto& a : results.algorithms) {
    const std::string alg = to_string(a.algorithm);
    for (const auto& r : a.best_runs) {
      const std::string prefix =
          r.config_id + "," + alg + "," + format_number(r.alpha) + "," + format_number(r.eta) + "," + std::to_string(r.seed) + ",";
      for (std::size_t i = 0; i < r.cumulative.size(); ++i)
        runs << prefix << (static_cast<std::int64_t>(i + 1) * r.curve_stride) << "," << r.cumulative[i] << "\n";
    }
    for (std::size_t i = 0; i < a.sweep.cells.size(); ++i) {
      const auto& c = a.sweep.cells[i];
      sweep_csv << c.cell.config_id << "," << alg << "," << format_number(c.cell.alpha) << "," << format_number(c.cell.eta)
                << "," << c.totals.size() << "," << format_number(c.mean_total) << "," << format_number(c.stderr_total)
                << "," << format_number(c.mean_final_quarter) << "," << format_number(c.stderr_final_quarter) << ","
                << (i == a.sweep.best ? 1 : 0) << "\n";
    }
    for (std::size_t i = 0; i < a.curve.mean.size(); ++i) {
      const auto step = static_cast<std::int64_t>(i + 1) * results.curve_stride;
      const double s = static_cast<double>(step);
      summary << step << "," << alg << "," << format_number(a.curve.mean[i]) << "," << format_number(a.curve.std_error[i])
              << "," << format_number(a.curve.mean[i] / s) << "," << format_number(a.curve.std_error[i] / s) << "\n";
    }
  }

  std::vector<std::filesystem::path> paths{dir / (results.name + "_runs.csv"), dir / (results.name + "_sweep.csv"),
                                           dir / (results.name + "_summary.csv")};
  write_file(paths[0], runs.str());
  write_file(paths[1], sweep_csv.str());
  write_file(paths[2], summary.str());
  if (options.svg) {
    paths.push_back(dir / (results.name + ".svg"));
    write_file(paths.back(), svg_chart(results));
  }
  return paths;
}

}  // namespace dtd
