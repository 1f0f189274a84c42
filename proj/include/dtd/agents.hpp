#pragma once

// Incremental learners: Q-learning, generalized differential Q-learning (both update forms),
// differential TD prediction, and linear TD over expanded features.
//
// Update forms (delta is shared by the weight and bias updates):
//
//   continuing form   non-terminal  r - b + gamma max Q(s', .) - Q(s, a)
//                     terminal      r - b / (1 - gamma) - Q(s, a)
//   episodic form     non-terminal  r - (1 - gamma) b + gamma max Q(s', .) - Q(s, a)
//                     terminal      r - b - Q(s, a)
//
//   Q(s, a) += alpha * delta,  b += eta * alpha * delta

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dtd/linear_oracle.hpp"
#include "dtd/mdp.hpp"
#include "dtd/random.hpp"

namespace dtd {

enum class UpdateForm { continuing, episodic };
enum class TaskKind { continuing, episodic };

std::string to_string(UpdateForm form);
UpdateForm parse_update_form(std::string_view text);

struct StepSchedule {
  enum class Kind { constant, robbins_monro } kind = Kind::constant;
  double c = 1.0;
  double t0 = 1000.0;

  static StepSchedule constant() { return {}; }
  static StepSchedule robbins_monro(double c = 1.0, double t0 = 1000.0) { return {Kind::robbins_monro, c, t0}; }
};

struct AgentParams {
  double alpha = 0.1;  // used by the constant schedule
  double eta = 0.0;
  double gamma = 0.9;
  UpdateForm form = UpdateForm::continuing;
  TaskKind task = TaskKind::episodic;
  StepSchedule schedule = StepSchedule::constant();

  /// alpha in [0, 1], eta >= 0, gamma in [0, 1], and the form/gamma/task pairing allowed at gamma = 1.
  void validate() const;
};

/// Learner state. `weights` holds a Q^Delta table (laid out by `layout`), a V^Delta table, or a
/// linear weight vector; `bias` is the centering scalar b.
struct AgentState {
  AgentParams params;
  TableLayout layout;
  std::vector<double> weights;
  double bias = 0.0;
  std::uint64_t updates = 0;

  std::span<const double> q_row(StateId s) const {
    return {weights.data() + layout.row_begin(s), static_cast<std::size_t>(layout.num_actions(s))};
  }
  double q(StateId s, ActionId a) const { return weights[layout.index(s, a)]; }
  /// Step size for the next update.
  double step_size() const;
};

AgentState make_q_agent(const TableLayout& layout, const AgentParams& params, double q0 = 0.0, double b0 = 0.0);
AgentState make_v_agent(int num_states, const AgentParams& params, double v0 = 0.0, double b0 = 0.0);
AgentState make_linear_agent(int dim, const AgentParams& params);

struct Transition {
  StateId s = 0;
  ActionId a = 0;
  double r = 0.0;
  StateId next = 0;
  bool terminal_next = false;
};

/// Uncentered Q-learning; the bias is untouched.
void q_step(AgentState& state, const Transition& t);
/// Generalized differential Q-learning; returns delta.
double diff_q_step(AgentState& state, const Transition& t);
/// Differential TD prediction over a V^Delta table; returns delta.
double diff_td_predict_step(AgentState& state, const Transition& t);
/// Differential TD prediction with V^Delta(s) = phi(s)^T w (raw features, no bias column); returns delta.
double diff_td_predict_step(AgentState& state, const Eigen::MatrixXd& phi, const Transition& t);
/// w~ += alpha delta K phi~(s) with phi~(terminal successor) = 0; state.bias is w~[0] when the
/// features carry a bias column. Returns delta.
double linear_diff_td_step(AgentState& state, const FeatureSet& features, const Transition& t);
/// Current w~ = [b, w] of a linear agent (just w without a bias column).
Eigen::VectorXd expanded_weights(const AgentState& state, const FeatureSet& features);

struct Reparameterized {
  double b_hat = 0.0;
  double eta_hat = 0.0;
};

/// Episodic-form (b, eta) to the equivalent continuing-form (b_hat, eta_hat) = ((1-gamma) b, (1-gamma) eta).
Reparameterized reparameterize(double b, double eta, double gamma);

/// Runs the episodic form with (b0, eta) and the continuing form with the reparameterized
/// (b_hat0, eta_hat) over the same transitions; returns the largest of max|w_A - w_B| and
/// |(1 - gamma) b_A - b_hat_B| seen over all steps.
double equivalence_harness(std::span<const Transition> transitions, const TableLayout& layout, double gamma,
                           double alpha, double eta, double b0, std::span<const double> w0);

/// With probability epsilon a uniform action, otherwise uniform over actions within
/// kGreedyTieTolerance of the row maximum.
ActionId epsilon_greedy(std::span<const double> q_row, double epsilon, Rng& rng);

}  // namespace dtd
