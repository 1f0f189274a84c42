#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <yaml-cpp/yaml.h>

#include "dtd/errors.hpp"
#include "dtd/linear_oracle.hpp"
#include "dtd/mdp_io.hpp"
#include "dtd/shaping.hpp"

namespace dtd::cli {

namespace {

// ---------------------------------------------------------------------------------------------
// Configuration parsing

class Reader {
 public:
  Reader(YAML::Node node, const std::string& source, std::string section)
      : node_(std::move(node)), source_(source), section_(std::move(section)) {
    if (!node_.IsMap()) fail(node_, section_ + " must be a mapping");
  }

  bool has(const std::string& key) const { return static_cast<bool>(node_[key]); }

  YAML::Node take(const std::string& key) {
    seen_.insert(key);
    return node_[key];
  }

  template <typename T>
  void read(const std::string& key, T& into) {
    if (!has(key)) return;
    into = convert<T>(take(key), key);
  }

  template <typename T>
  T convert(const YAML::Node& n, const std::string& key) const {
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, "'" + key + "' has the wrong type");
    }
  }

  template <typename T>
  std::vector<T> list(const std::string& key) {
    const YAML::Node n = take(key);
    if (!n.IsSequence()) fail(n, "'" + key + "' must be a list");
    std::vector<T> out;
    for (const auto& item : n) out.push_back(convert<T>(item, key));
    return out;
  }

  void reject_unknown() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      const std::string key = it->first.as<std::string>();
      if (!seen_.count(key)) fail(it->first, "unknown key '" + key + "' in " + section_);
    }
  }

  [[noreturn]] void fail(const YAML::Node& n, const std::string& message) const {
    throw ConfigError(source_ + ":" + std::to_string(n.Mark().line + 1) + ": " + message);
  }

  const YAML::Node& node() const { return node_; }

 private:
  YAML::Node node_;
  const std::string& source_;
  std::string section_;
  std::set<std::string> seen_;
};

template <typename F>
auto checked(const Reader& r, const YAML::Node& n, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    r.fail(n, e.what());
  } catch (const DomainError& e) {
    r.fail(n, e.what());
  }
}

ExperimentSection parse_experiment(const YAML::Node& node, const std::string& source) {
  Reader r(node, source, "experiment");
  ExperimentSection sec;
  auto& c = sec.config;

  if (r.has("env")) {
    const YAML::Node env = r.take("env");
    if (env.IsScalar()) {
      c.env = env.as<std::string>();
    } else {
      Reader g(env, source, "experiment.env");
      GridSpec spec;
      g.read("width", spec.width);
      g.read("height", spec.height);
      if (g.has("reward")) {
        const YAML::Node m = g.take("reward");
        spec.reward_mode = checked(g, m, [&] { return parse_reward_mode(g.convert<std::string>(m, "reward")); });
      }
      g.reject_unknown();
      c.env = spec;
    }
  }
  if (r.has("algorithms")) {
    const YAML::Node n = r.node()["algorithms"];
    sec.algorithms.clear();
    for (const auto& name : r.list<std::string>("algorithms"))
      sec.algorithms.push_back(checked(r, n, [&] { return parse_algorithm(name); }));
    if (sec.algorithms.empty()) r.fail(n, "'algorithms' must be non-empty");
  }
  if (r.has("alphas")) c.alphas = r.list<double>("alphas");
  if (r.has("etas")) c.etas = r.list<double>("etas");
  r.read("gamma", c.gamma);
  r.read("epsilon", c.epsilon);
  r.read("num_steps", c.num_steps);
  r.read("num_runs", c.num_runs);
  r.read("base_seed", c.base_seed);
  r.read("curve_stride", c.curve_stride);
  r.read("svg", sec.svg);
  if (r.has("form")) {
    const YAML::Node n = r.take("form");
    c.form = checked(r, n, [&] { return parse_update_form(r.convert<std::string>(n, "form")); });
  }
  r.reject_unknown();

  for (Algorithm a : sec.algorithms) {
    ExperimentConfig probe = c;
    probe.algorithm = a;
    checked(r, node, [&] {
      probe.validate();
      return 0;
    });
  }
  checked(r, node["env"] ? node["env"] : node, [&] { return c.build_env().num_states(); });
  return sec;
}

OracleSection parse_oracle(const YAML::Node& node, const std::string& source) {
  Reader r(node, source, "oracle");
  OracleSection sec;
  r.read("mdp", sec.mdp);
  if (r.has("features")) {
    const YAML::Node n = r.take("features");
    const auto kind = r.convert<std::string>(n, "features");
    if (kind == "bias_only")
      sec.features = FeatureKind::bias_only;
    else if (kind == "tabular")
      sec.features = FeatureKind::tabular;
    else if (kind == "gaussian")
      sec.features = FeatureKind::gaussian;
    else
      r.fail(n, "unknown feature kind '" + kind + "' (expected bias_only, tabular or gaussian)");
  }
  r.read("feature_dim", sec.feature_dim);
  r.read("feature_seed", sec.feature_seed);
  if (r.has("mode")) {
    const YAML::Node n = r.take("mode");
    const auto mode = r.convert<std::string>(n, "mode");
    if (mode == "continuing")
      sec.mode = FeatureMode::continuing;
    else if (mode == "episodic")
      sec.mode = FeatureMode::episodic;
    else
      r.fail(n, "unknown mode '" + mode + "' (expected continuing or episodic)");
  }
  r.read("gamma", sec.gamma);
  if (r.has("etas")) sec.etas = r.list<double>("etas");
  r.reject_unknown();

  if (!(sec.gamma >= 0.0 && sec.gamma <= 1.0)) r.fail(node["gamma"], "gamma must lie in [0, 1]");
  if (sec.feature_dim < 1) r.fail(node["feature_dim"], "feature_dim must be >= 1");
  for (double e : sec.etas)
    if (!(e > 0.0)) r.fail(node["etas"], "every eta must be > 0");
  checked(r, node["mdp"] ? node["mdp"] : node, [&] { return make_diagnostic(sec.mdp, sec.gamma).num_states(); });
  return sec;
}

VerifySection parse_verify(const YAML::Node& node, const std::string& source) {
  Reader r(node, source, "verify");
  VerifySection sec;
  r.read("seed", sec.seed);
  r.read("random_mdps", sec.random_mdps);
  r.read("random_chains", sec.random_chains);
  r.read("return_episodes", sec.return_episodes);
  r.read("equivalence_transitions", sec.equivalence_transitions);
  r.reject_unknown();
  if (sec.random_mdps < 0 || sec.random_chains < 0 || sec.return_episodes < 1 || sec.equivalence_transitions < 0)
    r.fail(node, "verify counts must be non-negative (return_episodes >= 1)");
  return sec;
}

// ---------------------------------------------------------------------------------------------
// Verify suite

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(3) << x;
  return os.str();
}

std::string fixed2(double x) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << x;
  return os.str();
}

InvariantResult shaping_invariance(const VerifySection& sec) {
  std::vector<std::pair<std::string, TabularMDP>> mdps;
  for (int i = 0; i < sec.random_mdps; ++i)
    mdps.emplace_back("random", make_random_mdp(3 + i % 6, 2 + i % 2, sec.seed + static_cast<std::uint64_t>(i)));
  mdps.emplace_back("painful grid", make_gridworld({10, 10, RewardMode::painful, 0.9}));
  mdps.emplace_back("sparse grid", make_gridworld({10, 10, RewardMode::sparse, 0.9}));
  int checks = 0;
  for (const auto& [label, mdp] : mdps) {
    const auto base = value_iteration(mdp, mdp.gamma());
    for (double b : {-5.0, -1.0, 0.0, 1.0, 5.0}) {
      const auto shaped = value_iteration(shaped_mdp(mdp, {b, mdp.gamma(), std::nullopt}), mdp.gamma());
      if (shaped.greedy_sets != base.greedy_sets)
        return {"shaping_invariance", false, "greedy actions changed on a " + label + " MDP with b = " + fmt(b)};
      ++checks;
    }
  }
  return {"shaping_invariance", true, std::to_string(checks) + " shaped/unshaped pairs"};
}

std::vector<Transition> random_transitions(const TabularMDP& mdp, int count, std::uint64_t seed) {
  Rng rng = make_rng(seed, 7);
  std::vector<StateId> live;
  for (StateId s = 0; s < mdp.num_states(); ++s)
    if (!mdp.is_terminal(s)) live.push_back(s);
  std::vector<Transition> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const StateId s = live[uniform_index(rng, static_cast<int>(live.size()))];
    const ActionId a = uniform_index(rng, mdp.num_actions(s));
    const auto st = sample_step(mdp, s, a, rng);
    out.push_back({s, a, st.reward, st.next, st.terminal});
  }
  return out;
}

InvariantResult equivalence(const VerifySection& sec) {
  const TabularMDP mdp = make_random_mdp(6, 3, sec.seed);
  double worst = 0.0;
  for (double gamma : {0.5, 0.9, 0.99}) {
    const auto transitions = random_transitions(mdp, sec.equivalence_transitions, sec.seed + 1);
    Rng rng = make_rng(sec.seed, 11);
    std::vector<double> w0(mdp.layout().size());
    for (double& w : w0) w = standard_normal(rng);
    worst = std::max(worst, equivalence_harness(transitions, mdp.layout(), gamma, 0.1, 0.5, standard_normal(rng), w0));
  }
  return {"equivalence_harness", worst <= sec.tolerance_equivalence, "max divergence " + fmt(worst)};
}

InvariantResult return_identity(const VerifySection& sec) {
  double worst = 0.0;
  for (RewardMode mode : {RewardMode::painful, RewardMode::sparse}) {
    const TabularMDP mdp = make_gridworld({10, 10, mode, 0.9});
    const PolicyTable pi = uniform_policy(mdp);
    for (double b : {-1.0, 2.5})
      worst = std::max(worst, verify_return_identity(mdp, pi, {b, 0.9, std::nullopt}, sec.return_episodes, sec.seed));
  }
  return {"return_identity", worst <= sec.tolerance_return, "max residual " + fmt(worst)};
}

InvariantResult b_star_agreement(const VerifySection& sec) {
  double worst = 0.0;
  for (int k = 1; k <= 10; ++k)
    for (double gamma : {0.5, 0.9, 0.99, 1.0}) {
      const TabularMDP mdp = make_corridor(k, gamma);
      const auto rep = b_star(mdp, uniform_policy(mdp), gamma);
      worst = std::max(worst, std::abs(rep.formula - rep.exact_discount));
    }
  return {"b_star_agreement", worst <= sec.tolerance_b_star, "max |formula - exact| " + fmt(worst)};
}

std::string spectral_failure(const MeanFieldSystem& sys, const std::vector<double>& etas) {
  const auto def = definiteness_report(sys);
  if (!def.negative_definite) return "symmetric part max eigenvalue " + fmt(def.max_symmetric_eigenvalue);
  for (double eta : etas) {
    MeanFieldSystem s = sys;
    s.k_diag[0] = eta;
    s.eta = eta;
    const auto h = hurwitz_check(s);
    if (!h.hurwitz) return "K A not Hurwitz at eta = " + fmt(eta);
  }
  const auto w = fixed_point(sys);
  const double res = fixed_point_residual(sys, w);
  if (res > 1e-8 * std::max(1.0, w.norm())) return "fixed point residual " + fmt(res);
  return {};
}

const std::vector<double> kEtas{0.01, 0.1, 1.0, 10.0, 100.0};

InvariantResult stability_continuing_check(const VerifySection& sec) {
  int checks = 0;
  for (int i = 0; i < sec.random_chains; ++i) {
    const int n = 3 + i % 8;
    const std::uint64_t seed = sec.seed + static_cast<std::uint64_t>(i);
    const ChainView chain = with_stationary(make_random_ergodic_chain(n, seed));
    const auto fs = expand_features(gaussian_features(n, std::max(1, n / 2), seed, true), chain.terminal,
                                    FeatureMode::continuing);
    for (double gamma : {0.5, 0.9, 0.99}) {
      const auto why = spectral_failure(build_system(fs, chain, gamma, 1.0), kEtas);
      if (!why.empty())
        return {"stability_continuing", false, why + " (chain seed " + std::to_string(seed) + ", gamma " + fmt(gamma) + ")"};
      ++checks;
    }
  }
  return {"stability_continuing", true, std::to_string(checks) + " systems"};
}

InvariantResult stability_episodic_check(const VerifySection& sec) {
  int checks = 0;
  for (int i = 0; i < sec.random_chains; ++i) {
    const int n = 3 + i % 8;
    const std::uint64_t seed = sec.seed + static_cast<std::uint64_t>(i);
    const TabularMDP mdp = make_random_mdp(n, 2, seed, 1.0);
    const ChainView chain = with_stationary(unroll(mdp, make_random_policy(mdp, seed)));
    const auto fs = expand_features(gaussian_features(mdp.num_states(), std::max(1, n / 2), seed, true), mdp,
                                    FeatureMode::episodic);
    const auto why = spectral_failure(build_system(fs, chain, 1.0, 1.0), kEtas);
    if (!why.empty()) return {"stability_episodic", false, why + " (MDP seed " + std::to_string(seed) + ")"};
    ++checks;
  }
  return {"stability_episodic", true, std::to_string(checks) + " systems at gamma = 1"};
}

// ---------------------------------------------------------------------------------------------
// Subcommands

std::string describe_env(const ExperimentConfig& c) {
  if (const auto* g = std::get_if<GridSpec>(&c.env))
    return std::to_string(g->width) + "x" + std::to_string(g->height) + " " + to_string(g->reward_mode) + " grid";
  return std::get<std::string>(c.env);
}

std::filesystem::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return "results";
}

void report_comparison(const ComparisonResult& res, std::ostream& out) {
  for (const auto& a : res.algorithms) {
    const auto& c = a.sweep.best_cell();
    out << std::left << std::setw(7) << to_string(a.algorithm) << " best " << c.cell.config_id
        << "  alpha=" << format_number(c.cell.alpha) << " eta=" << format_number(c.cell.eta)
        << "  total episodes " << fixed2(c.mean_total) << " +- " << fixed2(c.stderr_total) << "  final-quarter cumulative "
        << fixed2(c.mean_final_quarter) << " +- " << fixed2(c.stderr_final_quarter) << "\n";
  }
  if (res.algorithms.size() == 2) {
    const auto& a = res.algorithms[0].sweep.best_cell();
    const auto& b = res.algorithms[1].sweep.best_cell();
    const double gap = b.mean_final_quarter - a.mean_final_quarter;
    const double se = std::hypot(a.stderr_final_quarter, b.stderr_final_quarter);
    out << "final-quarter gap (" << to_string(res.algorithms[1].algorithm) << " - "
        << to_string(res.algorithms[0].algorithm) << "): " << fixed2(gap) << " (combined stderr " << fixed2(se) << ")\n";
  }
}

int run_experiment(const CliConfig& cfg, bool full_sweep, const std::string& out_flag, int jobs, std::ostream& out) {
  ExperimentSection sec = *cfg.experiment;
  if (!full_sweep) {
    sec.config.alphas.resize(1);
    if (!sec.config.etas.empty()) sec.config.etas.resize(1);
  }
  const auto& c = sec.config;
  out << (full_sweep ? "sweep " : "run ") << cfg.name << ": " << describe_env(c) << ", " << c.num_runs << " runs x "
      << c.num_steps << " steps, gamma " << format_number(c.gamma) << ", epsilon " << format_number(c.epsilon) << "\n";
  const auto res = compare_algorithms(c, sec.algorithms, cfg.name, Execution::openmp, jobs);
  report_comparison(res, out);
  for (const auto& p : export_results(res, output_dir(out_flag), {sec.svg})) out << "wrote " << p.string() << "\n";
  return kSuccess;
}

void print_vector(std::ostream& out, const Eigen::VectorXd& v) {
  out << "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? ", " : "") << format_number(v[i]);
  out << "]";
}

int oracle_check(const OracleSection& sec, std::ostream& out) {
  const TabularMDP mdp = make_diagnostic(sec.mdp, sec.gamma);
  const PolicyTable pi = uniform_policy(mdp);
  const FeatureMode mode = sec.mode.value_or(mdp.has_terminal() ? FeatureMode::episodic : FeatureMode::continuing);
  const ChainView chain = with_stationary(unroll(mdp, pi));
  Eigen::MatrixXd phi;
  switch (sec.features) {
    case FeatureKind::bias_only: phi = Eigen::MatrixXd(mdp.num_states(), 0); break;
    case FeatureKind::tabular: phi = tabular_nonterminal_features(mdp.terminal()); break;
    case FeatureKind::gaussian: phi = gaussian_features(mdp.num_states(), sec.feature_dim, sec.feature_seed, true); break;
  }
  const FeatureSet fs = expand_features(phi, mdp, mode);
  const MeanFieldSystem sys = build_system(fs, chain, sec.gamma, 1.0);

  out << "system: " << sec.mdp << " under the uniform policy, " << to_string(mode) << " features, dimension "
      << sys.dim() << ", gamma " << format_number(sec.gamma) << "\n";
  out << "feature sigma_min/sigma_max: " << fmt(fs.singular_ratio) << "\n";
  out << "stationary distribution: ";
  print_vector(out, *chain.d);
  out << "\n";
  const auto def = definiteness_report(sys);
  out << "A eigenvalues:";
  for (const auto& ev : def.eigenvalues) out << " " << fmt(ev.real()) << (ev.imag() >= 0 ? "+" : "") << fmt(ev.imag()) << "i";
  out << "\nsymmetric part max eigenvalue: " << fmt(def.max_symmetric_eigenvalue)
      << (def.negative_definite ? " (negative definite)" : " (NOT negative definite)") << "\n";
  bool ok = def.negative_definite;
  for (double eta : sec.etas) {
    MeanFieldSystem s = sys;
    s.k_diag[0] = eta;
    s.eta = eta;
    const auto h = hurwitz_check(s);
    out << "eta " << format_number(eta) << ": max Re(eig(K A)) " << fmt(h.max_real_part)
        << (h.hurwitz ? " (Hurwitz)" : " (NOT Hurwitz)") << ", K^1/2 A K^1/2 symmetric max eigenvalue "
        << fmt(h.similar_max_symmetric_eigenvalue) << "\n";
    ok = ok && h.hurwitz;
  }
  const Eigen::VectorXd w = fixed_point(sys);
  out << "fixed point [b, w]: ";
  print_vector(out, w);
  out << "\nfixed point residual: " << fmt(fixed_point_residual(sys, w)) << "\n";
  return ok ? kSuccess : kVerificationFailed;
}

int verify(const VerifySection& sec, std::ostream& out, std::ostream& err) {
  std::string first_failure;
  for (const auto& r : run_verify_suite(sec)) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    if (!r.passed && first_failure.empty()) first_failure = r.name;
  }
  if (first_failure.empty()) return kSuccess;
  err << "verification failed: " << first_failure << "\n";
  return kVerificationFailed;
}

std::string file_stem(const std::string& name) {
  std::string s;
  for (char ch : name) {
    if (std::isalnum(static_cast<unsigned char>(ch)))
      s += ch;
    else if (!s.empty() && s.back() != '_')
      s += '_';
  }
  while (!s.empty() && s.back() == '_') s.pop_back();
  return s;
}

}  // namespace

CliConfig parse_config(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root.IsMap()) throw ConfigError(source + ":1: configuration must be a mapping");
  Reader r(root, source, "the top level");
  CliConfig cfg;
  if (!r.has("schema_version")) r.fail(root, "missing schema_version");
  r.read("schema_version", cfg.schema_version);
  if (cfg.schema_version != kSchemaVersion)
    r.fail(root["schema_version"], "unsupported schema_version " + std::to_string(cfg.schema_version) + " (expected " +
                                       std::to_string(kSchemaVersion) + ")");
  r.read("name", cfg.name);
  if (cfg.name.empty() || file_stem(cfg.name) != cfg.name)
    r.fail(root["name"] ? root["name"] : root, "name must be non-empty and use only letters, digits and '_'");
  if (r.has("experiment")) cfg.experiment = parse_experiment(r.take("experiment"), source);
  if (r.has("oracle")) cfg.oracle = parse_oracle(r.take("oracle"), source);
  if (r.has("verify")) cfg.verify = parse_verify(r.take("verify"), source);
  r.reject_unknown();
  return cfg;
}

CliConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ":0: cannot open configuration file");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str(), path.string());
}

std::vector<InvariantResult> run_verify_suite(const VerifySection& section) {
  using Check = InvariantResult (*)(const VerifySection&);
  const std::vector<std::pair<const char*, Check>> checks{
      {"shaping_invariance", shaping_invariance}, {"equivalence_harness", equivalence},
      {"return_identity", return_identity},       {"b_star_agreement", b_star_agreement},
      {"stability_continuing", stability_continuing_check}, {"stability_episodic", stability_episodic_check}};
  std::vector<InvariantResult> out;
  for (const auto& [name, check] : checks) {
    try {
      out.push_back(check(section));
    } catch (const std::exception& e) {
      out.push_back({name, false, std::string("error: ") + e.what()});
    }
  }
  return out;
}

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Differential TD with reward centering in episodic problems: experiments and checks", "dtd"};
  app.require_subcommand(1);
  app.footer(std::string("Exit status: 0 success, 1 verification failure, 2 usage or configuration error.\n") +
             "Output directory: --out, else $" + kOutDirEnv + ", else ./results.");

  std::string config_path, out_dir, mdp_name;
  std::optional<std::uint64_t> seed;
  int jobs = 0;
  auto common = [&](CLI::App* sc, bool needs_config) {
    auto* opt = sc->add_option("--config", config_path, "YAML configuration file (schema_version: 1)")
                    ->check(CLI::ExistingFile);
    if (needs_config) opt->required();
    sc->add_option("--out", out_dir, std::string("output directory (default $") + kOutDirEnv + " or ./results)");
    sc->add_option("--seed", seed, "override the base seed");
    sc->add_option("--jobs", jobs, "trial-level parallelism (0 = all available threads)")->check(CLI::NonNegativeNumber);
  };
  auto* run = app.add_subcommand("run", "run the first (alpha, eta) setting for every algorithm and export curves");
  auto* sweep_cmd = app.add_subcommand("sweep", "sweep (alpha, eta), report the best setting per algorithm, export curves");
  auto* oracle = app.add_subcommand("oracle-check", "print the spectral and fixed-point report of a linear system");
  auto* verify_cmd = app.add_subcommand("verify", "run the invariant suite; exits 1 naming the first violated invariant");
  auto* export_cmd = app.add_subcommand("export-mdp", "serialize a named diagnostic MDP (stdout unless --out is given)");
  common(run, true);
  common(sweep_cmd, true);
  common(oracle, false);
  common(verify_cmd, false);
  export_cmd->add_option("name", mdp_name, "corridor(k), two_state_loop[(c)], random(n,a,seed), gridworld(w,h,mode)")
      ->required();
  export_cmd->add_option("--out", out_dir, "directory for <name>.json");
  double export_gamma = 0.9;
  export_cmd->add_option("--gamma", export_gamma, "discount stored with the MDP")->check(CLI::Range(0.0, 1.0));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }

  try {
    CliConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    if (seed) {
      if (cfg.experiment) cfg.experiment->config.base_seed = *seed;
      if (cfg.oracle) cfg.oracle->feature_seed = *seed;
      cfg.verify.seed = *seed;
    }

    if (*run || *sweep_cmd) {
      if (!cfg.experiment) {
        err << config_path << ":1: the configuration has no experiment section\n";
        return kUsageError;
      }
      return run_experiment(cfg, static_cast<bool>(*sweep_cmd), out_dir, jobs, out);
    }
    if (*oracle) return oracle_check(cfg.oracle.value_or(OracleSection{}), out);
    if (*verify_cmd) return verify(cfg.verify, out, err);
    if (*export_cmd) {
      const TabularMDP mdp = make_diagnostic(mdp_name, export_gamma);
      if (out_dir.empty()) {
        out << mdp_to_text(mdp);
      } else {
        std::filesystem::create_directories(out_dir);
        const auto path = std::filesystem::path(out_dir) / (file_stem(mdp_name) + ".json");
        save_mdp(mdp, path);
        out << "wrote " << path.string() << "\n";
      }
      return kSuccess;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  }
  return kUsageError;
}

}  // namespace dtd::cli
