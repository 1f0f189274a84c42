#include "dtd/agents.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "dtd/errors.hpp"

namespace dtd {

namespace {

double max_of(std::span<const double> row) { return *std::max_element(row.begin(), row.end()); }

// Centering term subtracted from r on non-terminal transitions.
double nonterminal_center(const AgentParams& p, double b) { return p.form == UpdateForm::continuing ? b : (1.0 - p.gamma) * b; }

// Offset that replaces the bootstrap on terminal transitions.
double terminal_center(const AgentParams& p, double b) {
  if (p.form == UpdateForm::episodic) return b;
  if (p.gamma >= 1.0)
    throw ConfigError("continuing update form reached a terminal transition at gamma = 1; use the episodic form");
  return b / (1.0 - p.gamma);
}

}  // namespace

std::string to_string(UpdateForm form) { return form == UpdateForm::continuing ? "continuing" : "episodic"; }

UpdateForm parse_update_form(std::string_view text) {
  if (text == "continuing") return UpdateForm::continuing;
  if (text == "episodic") return UpdateForm::episodic;
  throw ConfigError("unknown update form '" + std::string(text) + "' (expected continuing or episodic)");
}

void AgentParams::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (!(eta >= 0.0)) throw ConfigError("eta must be >= 0");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  if (schedule.kind == StepSchedule::Kind::robbins_monro && !(schedule.c > 0.0 && schedule.t0 > 0.0))
    throw ConfigError("Robbins-Monro schedule needs c > 0 and t0 > 0");
  if (gamma == 1.0) {
    if (task == TaskKind::episodic && form == UpdateForm::continuing)
      throw ConfigError("gamma = 1 on an episodic task requires the episodic update form");
    if (task == TaskKind::continuing && form == UpdateForm::episodic)
      throw ConfigError("gamma = 1 on a continuing task requires the continuing update form");
  }
}

double AgentState::step_size() const {
  if (params.schedule.kind == StepSchedule::Kind::constant) return params.alpha;
  return params.schedule.c / (params.schedule.t0 + static_cast<double>(updates));
}

AgentState make_q_agent(const TableLayout& layout, const AgentParams& params, double q0, double b0) {
  params.validate();
  AgentState st;
  st.params = params;
  st.layout = layout;
  st.weights.assign(layout.size(), q0);
  st.bias = b0;
  return st;
}

AgentState make_v_agent(int num_states, const AgentParams& params, double v0, double b0) {
  params.validate();
  AgentState st;
  st.params = params;
  st.weights.assign(num_states, v0);
  st.bias = b0;
  return st;
}

AgentState make_linear_agent(int dim, const AgentParams& params) {
  params.validate();
  AgentState st;
  st.params = params;
  st.weights.assign(dim, 0.0);
  return st;
}

void q_step(AgentState& state, const Transition& t) {
  const double alpha = state.step_size();
  double& q = state.weights[state.layout.index(t.s, t.a)];
  const double target = t.terminal_next ? t.r : t.r + state.params.gamma * max_of(state.q_row(t.next));
  q += alpha * (target - q);
  ++state.updates;
}

double diff_q_step(AgentState& state, const Transition& t) {
  const auto& p = state.params;
  const double alpha = state.step_size();
  const double b = state.bias;
  double& q = state.weights[state.layout.index(t.s, t.a)];
  double delta;
  if (t.terminal_next)
    delta = t.r - terminal_center(p, b) - q;
  else
    delta = t.r - nonterminal_center(p, b) + p.gamma * max_of(state.q_row(t.next)) - q;
  q += alpha * delta;
  state.bias += p.eta * alpha * delta;
  ++state.updates;
  return delta;
}

double diff_td_predict_step(AgentState& state, const Transition& t) {
  const auto& p = state.params;
  const double alpha = state.step_size();
  const double b = state.bias;
  double& v = state.weights.at(t.s);
  double delta;
  if (t.terminal_next)
    delta = t.r - terminal_center(p, b) - v;
  else
    delta = t.r - nonterminal_center(p, b) + p.gamma * state.weights.at(t.next) - v;
  v += alpha * delta;
  state.bias += p.eta * alpha * delta;
  ++state.updates;
  return delta;
}

double diff_td_predict_step(AgentState& state, const Eigen::MatrixXd& phi, const Transition& t) {
  if (phi.cols() != static_cast<Eigen::Index>(state.weights.size()))
    throw ConfigError("feature dimension does not match the weight vector");
  const auto& p = state.params;
  const double alpha = state.step_size();
  const double b = state.bias;
  const Eigen::Map<Eigen::VectorXd> w(state.weights.data(), static_cast<Eigen::Index>(state.weights.size()));
  const double v = phi.row(t.s).dot(w);
  double delta;
  if (t.terminal_next)
    delta = t.r - terminal_center(p, b) - v;
  else
    delta = t.r - nonterminal_center(p, b) + p.gamma * phi.row(t.next).dot(w) - v;
  Eigen::Map<Eigen::VectorXd>(state.weights.data(), w.size()) += alpha * delta * phi.row(t.s).transpose();
  state.bias += p.eta * alpha * delta;
  ++state.updates;
  return delta;
}

Eigen::VectorXd expanded_weights(const AgentState& state, const FeatureSet& features) {
  const int off = features.has_bias ? 1 : 0;
  Eigen::VectorXd w(static_cast<Eigen::Index>(state.weights.size()) + off);
  if (off) w[0] = state.bias;
  for (std::size_t i = 0; i < state.weights.size(); ++i) w[static_cast<Eigen::Index>(i) + off] = state.weights[i];
  return w;
}

double linear_diff_td_step(AgentState& state, const FeatureSet& features, const Transition& t) {
  const int off = features.has_bias ? 1 : 0;
  if (features.dim() != static_cast<int>(state.weights.size()) + off)
    throw ConfigError("expanded feature dimension does not match the agent's weights");
  const auto& X = features.phi_tilde;
  const double alpha = state.step_size();
  auto value = [&](StateId s) {
    double v = off ? X(s, 0) * state.bias : 0.0;
    for (std::size_t i = 0; i < state.weights.size(); ++i) v += X(s, static_cast<Eigen::Index>(i) + off) * state.weights[i];
    return v;
  };
  const double next_value = t.terminal_next ? 0.0 : value(t.next);
  const double delta = t.r + state.params.gamma * next_value - value(t.s);
  if (off) state.bias += alpha * delta * state.params.eta * X(t.s, 0);
  for (std::size_t i = 0; i < state.weights.size(); ++i)
    state.weights[i] += alpha * delta * X(t.s, static_cast<Eigen::Index>(i) + off);
  ++state.updates;
  return delta;
}

Reparameterized reparameterize(double b, double eta, double gamma) {
  if (gamma >= 1.0) throw DomainError("reparameterization divides out (1 - gamma); undefined at gamma = 1");
  return {(1.0 - gamma) * b, eta * (1.0 - gamma)};
}

double equivalence_harness(std::span<const Transition> transitions, const TableLayout& layout, double gamma,
                           double alpha, double eta, double b0, std::span<const double> w0) {
  if (w0.size() != layout.size()) throw ConfigError("initial table does not match the layout");
  const auto rp = reparameterize(b0, eta, gamma);

  AgentParams pa{alpha, eta, gamma, UpdateForm::episodic, TaskKind::episodic, StepSchedule::constant()};
  AgentParams pb{alpha, rp.eta_hat, gamma, UpdateForm::continuing, TaskKind::episodic, StepSchedule::constant()};
  AgentState a = make_q_agent(layout, pa, 0.0, b0);
  AgentState b = make_q_agent(layout, pb, 0.0, rp.b_hat);
  std::copy(w0.begin(), w0.end(), a.weights.begin());
  std::copy(w0.begin(), w0.end(), b.weights.begin());

  double worst = std::abs((1.0 - gamma) * a.bias - b.bias);
  for (const auto& t : transitions) {
    diff_q_step(a, t);
    diff_q_step(b, t);
    for (std::size_t i = 0; i < a.weights.size(); ++i) worst = std::max(worst, std::abs(a.weights[i] - b.weights[i]));
    worst = std::max(worst, std::abs((1.0 - gamma) * a.bias - b.bias));
  }
  return worst;
}

ActionId epsilon_greedy(std::span<const double> q_row, double epsilon, Rng& rng) {
  const int k = static_cast<int>(q_row.size());
  if (k == 0) throw UsageError("epsilon_greedy: empty action set");
  if (uniform01(rng) < epsilon) return uniform_index(rng, k);
  const double best = max_of(q_row);
  std::array<ActionId, 16> small{};
  std::vector<ActionId> large;
  int count = 0;
  for (int a = 0; a < k; ++a) {
    if (q_row[a] < best - kGreedyTieTolerance) continue;
    if (count < static_cast<int>(small.size()))
      small[count] = a;
    else
      large.push_back(a);
    ++count;
  }
  if (count == 1) return small[0];
  const int pick = uniform_index(rng, count);
  return pick < static_cast<int>(small.size()) ? small[pick] : large[pick - small.size()];
}

}  // namespace dtd
