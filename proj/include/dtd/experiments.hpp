#pragma once

// Seeded trials of tabular control agents, hyperparameter sweeps, multi-seed aggregation
// and export of learning curves.
//
// Trials are independent: run_trials has an OpenMP kernel and a serial reference path that
// must produce identical records (results are stored by trial index, never by completion order).

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dtd/agents.hpp"
#include "dtd/envs.hpp"
#include "dtd/mdp.hpp"

namespace dtd {

enum class Algorithm { q, diff_q };

std::string to_string(Algorithm algorithm);
Algorithm parse_algorithm(std::string_view text);

enum class Execution { serial, openmp };

struct ExperimentConfig {
  std::variant<GridSpec, std::string> env = GridSpec{};  // grid spec or diagnostic name
  Algorithm algorithm = Algorithm::diff_q;
  std::vector<double> alphas{0.1};
  std::vector<double> etas{0.001};
  double gamma = 0.9;
  double epsilon = 0.1;
  std::int64_t num_steps = 40'000;
  int num_runs = 1;
  std::uint64_t base_seed = 0;
  UpdateForm form = UpdateForm::continuing;
  int curve_stride = 1;  // record the cumulative episode count every this many steps; 0 = summary only

  void validate() const;
  TabularMDP build_env() const;
};

/// One sweep cell: a single (alpha, eta) setting.
struct CellSpec {
  std::string config_id;
  Algorithm algorithm = Algorithm::q;
  double alpha = 0.0;
  double eta = 0.0;
};

/// All cells of the sweep in (alpha-major, eta-minor) order. Q-learning cells carry eta = 0.
std::vector<CellSpec> sweep_cells(const ExperimentConfig& config);

struct RunRecord {
  std::string config_id;
  Algorithm algorithm = Algorithm::q;
  double alpha = 0.0;
  double eta = 0.0;
  std::uint64_t seed = 0;
  std::int64_t num_steps = 0;
  int curve_stride = 1;
  std::vector<std::uint32_t> cumulative;  // cumulative[i]: episodes completed after (i + 1) * curve_stride steps
  std::int64_t episodes = 0;
  double final_quarter_mean = 0.0;  // mean cumulative count over the last quarter of the steps

  double rate() const { return num_steps > 0 ? static_cast<double>(episodes) / static_cast<double>(num_steps) : 0.0; }
  bool operator==(const RunRecord&) const = default;
};

/// Seed of run `run` of a sweep cell.
inline std::uint64_t run_seed(const ExperimentConfig& config, int run) { return config.base_seed + static_cast<std::uint64_t>(run); }

/// A single agent for config.num_steps environment steps, resetting on termination.
/// Uses the first (alpha, eta) cell of the config.
RunRecord run_trial(const ExperimentConfig& config, std::uint64_t seed);
RunRecord run_trial(const TabularMDP& mdp, const ExperimentConfig& config, const CellSpec& cell, std::uint64_t seed);

/// A fixed policy in place of a learner (used as an oracle for the completion rate).
RunRecord run_policy_trial(const TabularMDP& mdp, const PolicyTable& pi, std::int64_t num_steps, std::uint64_t seed,
                           int curve_stride = 1);

struct TrialSpec {
  CellSpec cell;
  std::uint64_t seed = 0;
};

/// Runs every trial; records come back in the order of `trials`.
std::vector<RunRecord> run_trials(const TabularMDP& mdp, const ExperimentConfig& config,
                                  std::span<const TrialSpec> trials, Execution exec = Execution::openmp, int jobs = 0);

struct CellSummary {
  CellSpec cell;
  std::vector<std::int64_t> totals;        // per seed
  std::vector<double> final_quarter;       // per seed
  double mean_total = 0.0;
  double stderr_total = 0.0;
  double mean_final_quarter = 0.0;
  double stderr_final_quarter = 0.0;
};

struct SweepResult {
  std::vector<CellSummary> cells;
  std::size_t best = 0;  // highest mean total episodes; first cell wins ties

  const CellSummary& best_cell() const { return cells.at(best); }
};

SweepResult sweep(const ExperimentConfig& config, Execution exec = Execution::openmp, int jobs = 0);

struct Aggregate {
  std::vector<double> mean;
  std::vector<double> std_error;
  int count = 0;
};

/// Pointwise mean and standard error (sample standard deviation / sqrt(n)) of cumulative curves.
/// Throws ConfigError for an empty list or mismatched lengths.
Aggregate aggregate(std::span<const RunRecord> records);
Aggregate aggregate(std::span<const std::vector<double>> curves);

/// Mean and standard error of a sample.
std::pair<double, double> mean_stderr(std::span<const double> xs);

struct AlgorithmResult {
  Algorithm algorithm = Algorithm::q;
  SweepResult sweep;
  std::vector<RunRecord> best_runs;  // full curves for the best cell
  Aggregate curve;
};

struct ComparisonResult {
  std::string name;
  std::int64_t num_steps = 0;
  int curve_stride = 1;
  std::vector<AlgorithmResult> algorithms;
};

/// Sweeps each algorithm on the same environment, then re-runs the best cell of each with curves.
ComparisonResult compare_algorithms(const ExperimentConfig& base, std::span<const Algorithm> algorithms,
                                    const std::string& name, Execution exec = Execution::openmp, int jobs = 0);

struct ExportOptions {
  bool svg = false;
};

/// Writes <name>_runs.csv, <name>_sweep.csv, <name>_summary.csv (and <name>.svg) under dir.
/// Returns the written paths.
std::vector<std::filesystem::path> export_results(const ComparisonResult& results, const std::filesystem::path& dir,
                                                  const ExportOptions& options = {});

/// Shortest round-trip decimal form used in every exported file.
std::string format_number(double x);

}  // namespace dtd
