#pragma once

// The `dtd` command line: configuration schema, subcommand dispatch and the verify suite.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dtd/experiments.hpp"

namespace dtd::cli {

enum ExitCode : int { kSuccess = 0, kVerificationFailed = 1, kUsageError = 2 };

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kOutDirEnv = "DTD_OUT_DIR";

struct ExperimentSection {
  ExperimentConfig config;
  std::vector<Algorithm> algorithms{Algorithm::q, Algorithm::diff_q};
  bool svg = true;
};

enum class FeatureKind { bias_only, tabular, gaussian };

struct OracleSection {
  std::string mdp = "two_state_loop(1)";
  FeatureKind features = FeatureKind::bias_only;
  int feature_dim = 2;
  std::uint64_t feature_seed = 0;
  std::optional<FeatureMode> mode;  // default: episodic when the MDP has terminal states
  double gamma = 0.9;
  std::vector<double> etas{0.01, 0.1, 1.0, 10.0, 100.0};
};

struct VerifySection {
  std::uint64_t seed = 0;
  int random_mdps = 20;
  int random_chains = 20;
  int return_episodes = 100;
  int equivalence_transitions = 10'000;
  double tolerance_equivalence = 1e-12;
  double tolerance_return = 1e-8;
  double tolerance_b_star = 1e-10;
};

struct CliConfig {
  int schema_version = kSchemaVersion;
  std::string name = "experiment";
  std::optional<ExperimentSection> experiment;
  std::optional<OracleSection> oracle;
  VerifySection verify;
};

/// Parses and validates a YAML document. Errors are ConfigError with "<source>:<line>: " prefixes.
CliConfig parse_config(const std::string& text, const std::string& source = "<config>");
CliConfig load_config(const std::filesystem::path& path);

struct InvariantResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// The full invariant suite behind `dtd verify`.
std::vector<InvariantResult> run_verify_suite(const VerifySection& section);

/// Runs the command line; returns the process exit status.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dtd::cli
