#pragma once

// Finite MDPs, tabular policies, the Markov chains they induce, and the
// dynamic-programming / chain-analysis routines used as ground truth.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dtd {

using StateId = int;
using ActionId = int;

/// Absolute tolerance used when collecting maximizing actions.
inline constexpr double kGreedyTieTolerance = 1e-9;
/// gamma = 1 evaluation requires the non-terminal block to have spectral radius below 1 - this.
inline constexpr double kProperPolicyMargin = 1e-8;

struct Outcome {
  StateId next = 0;
  double reward = 0.0;
  double prob = 0.0;
};

/// Flat indexing for per-(state, action) arrays with a variable number of actions per state.
class TableLayout {
 public:
  TableLayout() = default;
  explicit TableLayout(std::span<const int> actions_per_state);

  int num_states() const noexcept { return static_cast<int>(offsets_.size()) - 1; }
  int num_actions(StateId s) const { return static_cast<int>(offsets_[s + 1] - offsets_[s]); }
  std::size_t row_begin(StateId s) const { return offsets_[s]; }
  std::size_t index(StateId s, ActionId a) const { return offsets_[s] + static_cast<std::size_t>(a); }
  std::size_t size() const noexcept { return offsets_.empty() ? 0 : offsets_.back(); }

  bool operator==(const TableLayout&) const = default;

 private:
  std::vector<std::size_t> offsets_{0};
};

/// Action-value table laid out by TableLayout. Terminal states have empty rows.
struct QTable {
  TableLayout layout;
  std::vector<double> values;

  QTable() = default;
  explicit QTable(TableLayout l, double init = 0.0) : layout(std::move(l)), values(layout.size(), init) {}

  std::span<double> row(StateId s) { return {values.data() + layout.row_begin(s), static_cast<std::size_t>(layout.num_actions(s))}; }
  std::span<const double> row(StateId s) const {
    return {values.data() + layout.row_begin(s), static_cast<std::size_t>(layout.num_actions(s))};
  }
  double& at(StateId s, ActionId a) { return values[layout.index(s, a)]; }
  double at(StateId s, ActionId a) const { return values[layout.index(s, a)]; }
};

/// Finite MDP with explicit terminal states. Immutable after construction;
/// the constructor validates every invariant and throws ConfigError.
class TabularMDP {
 public:
  /// transitions[s][a] lists the outcomes of action a in state s.
  /// Terminal states must have no actions.
  TabularMDP(std::vector<std::vector<std::vector<Outcome>>> transitions, std::vector<double> start_dist,
             std::vector<bool> terminal, double gamma);

  int num_states() const noexcept { return layout_.num_states(); }
  int num_actions(StateId s) const { return layout_.num_actions(s); }
  const TableLayout& layout() const noexcept { return layout_; }
  std::span<const Outcome> outcomes(StateId s, ActionId a) const;
  double expected_reward(StateId s, ActionId a) const;

  bool is_terminal(StateId s) const { return terminal_[s]; }
  const std::vector<bool>& terminal() const noexcept { return terminal_; }
  bool has_terminal() const noexcept;
  const std::vector<double>& start_dist() const noexcept { return start_; }
  double gamma() const noexcept { return gamma_; }

  /// Same structure with rewards replaced by f(s, a, outcome).
  template <typename F>
  TabularMDP map_rewards(F&& f) const {
    auto t = nested_transitions();
    for (StateId s = 0; s < num_states(); ++s)
      for (ActionId a = 0; a < num_actions(s); ++a)
        for (auto& o : t[s][a]) o.reward = f(s, a, o);
    return TabularMDP(std::move(t), start_, terminal_, gamma_);
  }

  std::vector<std::vector<std::vector<Outcome>>> nested_transitions() const;

  bool operator==(const TabularMDP& other) const;

 private:
  TableLayout layout_;
  std::vector<std::size_t> outcome_offsets_;
  std::vector<Outcome> outcomes_;
  std::vector<double> start_;
  std::vector<bool> terminal_;
  double gamma_;
};

/// pi(a|s). Rows of terminal states are empty.
struct PolicyTable {
  std::vector<std::vector<double>> probs;

  /// Throws ConfigError when the table does not fit the MDP or a row is not a distribution.
  void validate(const TabularMDP& mdp) const;
};

PolicyTable uniform_policy(const TabularMDP& mdp);
/// Uniform over each state's action set; sets must be non-empty for non-terminal states.
PolicyTable set_policy(const TabularMDP& mdp, const std::vector<std::vector<ActionId>>& action_sets, double epsilon = 0.0);
PolicyTable deterministic_policy(const TabularMDP& mdp, std::span<const ActionId> actions);

enum class TerminalConvention {
  absorbing,  // terminal rows are zero-reward self-loops
  restart,    // terminal rows copy the start distribution (unrolled chain)
};

struct ChainView {
  Eigen::MatrixXd P;
  Eigen::VectorXd r;
  std::optional<Eigen::VectorXd> d;
  std::vector<bool> terminal;
  TerminalConvention convention = TerminalConvention::absorbing;

  int size() const noexcept { return static_cast<int>(P.rows()); }
};

/// Chain from an explicit row-stochastic matrix and reward vector (no terminal states).
ChainView make_chain(Eigen::MatrixXd P, Eigen::VectorXd r);

ChainView policy_matrices(const TabularMDP& mdp, const PolicyTable& pi);
/// Episodic MDPs become a continuing chain whose terminal rows restart from the start distribution.
ChainView unroll(const TabularMDP& mdp, const PolicyTable& pi);

struct ErgodicityReport {
  bool irreducible = false;
  int period = 0;  // 0 when undefined (reducible)
  std::optional<StateId> witness;
  std::string message;

  bool ergodic() const noexcept { return irreducible && period == 1; }
};

ErgodicityReport check_ergodic(const ChainView& chain);

/// Dense solve of d^T P = d^T with sum(d) = 1. Throws DomainError for non-ergodic chains.
Eigen::VectorXd stationary_distribution(const ChainView& chain);
/// Long-run fraction of time in each state; needs irreducibility only, so periodic chains
/// (e.g. unrolled fixed-length episodes) are accepted.
Eigen::VectorXd occupancy_distribution(const ChainView& chain);
/// Power iteration, kept as an independent cross-check of stationary_distribution.
Eigen::VectorXd stationary_distribution_power(const ChainView& chain, double tol = 1e-14, int max_iter = 1'000'000);
/// Copy of chain with d filled in.
ChainView with_stationary(ChainView chain);

/// d^T r. Absorbing episodic chains whose states all reach a terminal state have average reward 0.
double average_reward(const ChainView& chain);

struct Values {
  Eigen::VectorXd v;
  QTable q;
};

/// Spectral radius of the non-terminal block of P_pi.
double nonterminal_spectral_radius(const TabularMDP& mdp, const PolicyTable& pi);

Values exact_values(const TabularMDP& mdp, const PolicyTable& pi, double gamma);

struct OptimalValues {
  QTable q_star;
  std::vector<std::vector<ActionId>> greedy_sets;
  double residual = 0.0;  // sup-norm Bellman optimality residual of q_star
  int iterations = 0;
};

OptimalValues value_iteration(const TabularMDP& mdp, double gamma, int max_iter = 1'000'000);

std::vector<std::vector<ActionId>> greedy_action_sets(const QTable& q, double tol = kGreedyTieTolerance);

/// Bellman optimality backup of q, sup-norm difference.
double bellman_optimality_residual(const TabularMDP& mdp, const QTable& q, double gamma);

/// T(s): expected number of steps until termination; 0 at terminal states.
Eigen::VectorXd expected_remaining_length(const TabularMDP& mdp, const PolicyTable& pi);
/// E[gamma^T | S_0 = s]; 1 at terminal states.
Eigen::VectorXd discounted_termination(const TabularMDP& mdp, const PolicyTable& pi, double gamma);

}  // namespace dtd
