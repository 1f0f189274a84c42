#include "dtd/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>

#include "dtd/errors.hpp"

namespace dtd {

namespace {

constexpr double kProbTolerance = 1e-12;

std::vector<int> nonterminal_index(const std::vector<bool>& terminal, int& count) {
  std::vector<int> idx(terminal.size(), -1);
  count = 0;
  for (std::size_t s = 0; s < terminal.size(); ++s)
    if (!terminal[s]) idx[s] = count++;
  return idx;
}

// P restricted to non-terminal states, plus the one-step probability of terminating.
struct NonterminalBlock {
  std::vector<int> index;
  std::vector<StateId> states;
  Eigen::MatrixXd P;
  Eigen::VectorXd r;
  Eigen::VectorXd p_term;
};

NonterminalBlock nonterminal_block(const TabularMDP& mdp, const PolicyTable& pi) {
  pi.validate(mdp);
  NonterminalBlock blk;
  int n = 0;
  blk.index = nonterminal_index(mdp.terminal(), n);
  blk.P = Eigen::MatrixXd::Zero(n, n);
  blk.r = Eigen::VectorXd::Zero(n);
  blk.p_term = Eigen::VectorXd::Zero(n);
  for (StateId s = 0; s < mdp.num_states(); ++s) {
    const int i = blk.index[s];
    if (i < 0) continue;
    blk.states.push_back(s);
    for (ActionId a = 0; a < mdp.num_actions(s); ++a) {
      const double pa = pi.probs[s][a];
      if (pa == 0.0) continue;
      for (const auto& o : mdp.outcomes(s, a)) {
        blk.r[i] += pa * o.prob * o.reward;
        if (mdp.is_terminal(o.next))
          blk.p_term[i] += pa * o.prob;
        else
          blk.P(i, blk.index[o.next]) += pa * o.prob;
      }
    }
  }
  return blk;
}

double spectral_radius(const Eigen::MatrixXd& M) {
  if (M.rows() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

void require_proper(const NonterminalBlock& blk, const char* what) {
  const double rho = spectral_radius(blk.P);
  if (rho >= 1.0 - kProperPolicyMargin) {
    std::ostringstream os;
    os << what << ": policy does not terminate from every state (spectral radius of non-terminal block = " << rho
       << ")";
    throw DomainError(os.str());
  }
}

QTable q_from_v(const TabularMDP& mdp, const Eigen::VectorXd& v, double gamma) {
  QTable q(mdp.layout());
  for (StateId s = 0; s < mdp.num_states(); ++s)
    for (ActionId a = 0; a < mdp.num_actions(s); ++a) {
      double acc = 0.0;
      for (const auto& o : mdp.outcomes(s, a)) acc += o.prob * (o.reward + gamma * v[o.next]);
      q.at(s, a) = acc;
    }
  return q;
}

double row_max(std::span<const double> row) { return row.empty() ? 0.0 : *std::max_element(row.begin(), row.end()); }

QTable bellman_optimality_backup(const TabularMDP& mdp, const QTable& q, double gamma) {
  Eigen::VectorXd v(mdp.num_states());
  for (StateId s = 0; s < mdp.num_states(); ++s) v[s] = mdp.is_terminal(s) ? 0.0 : row_max(q.row(s));
  return q_from_v(mdp, v, gamma);
}

double sup_diff(const QTable& a, const QTable& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

}  // namespace

TableLayout::TableLayout(std::span<const int> actions_per_state) {
  offsets_.assign(actions_per_state.size() + 1, 0);
  for (std::size_t s = 0; s < actions_per_state.size(); ++s) {
    if (actions_per_state[s] < 0) throw ConfigError("negative action count");
    offsets_[s + 1] = offsets_[s] + static_cast<std::size_t>(actions_per_state[s]);
  }
}

TabularMDP::TabularMDP(std::vector<std::vector<std::vector<Outcome>>> transitions, std::vector<double> start_dist,
                       std::vector<bool> terminal, double gamma)
    : start_(std::move(start_dist)), terminal_(std::move(terminal)), gamma_(gamma) {
  const std::size_t n = transitions.size();
  if (n == 0) throw ConfigError("MDP must have at least one state");
  if (start_.size() != n || terminal_.size() != n)
    throw ConfigError("MDP: transitions, start distribution and terminal flags disagree on the number of states");
  if (!(gamma_ >= 0.0 && gamma_ <= 1.0)) throw ConfigError("MDP: gamma must lie in [0, 1]");

  std::vector<int> counts(n);
  for (std::size_t s = 0; s < n; ++s) {
    counts[s] = static_cast<int>(transitions[s].size());
    if (terminal_[s] && counts[s] != 0)
      throw ConfigError("MDP: terminal state " + std::to_string(s) + " must not store outgoing transitions");
    if (!terminal_[s] && counts[s] == 0)
      throw ConfigError("MDP: non-terminal state " + std::to_string(s) + " has no actions");
  }
  layout_ = TableLayout(counts);
  outcome_offsets_.reserve(layout_.size() + 1);
  outcome_offsets_.push_back(0);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t a = 0; a < transitions[s].size(); ++a) {
      const auto& outs = transitions[s][a];
      if (outs.empty())
        throw ConfigError("MDP: (" + std::to_string(s) + "," + std::to_string(a) + ") has no outcomes");
      double total = 0.0;
      for (const auto& o : outs) {
        if (o.next < 0 || static_cast<std::size_t>(o.next) >= n)
          throw ConfigError("MDP: (" + std::to_string(s) + "," + std::to_string(a) + ") successor out of range");
        if (!(o.prob >= 0.0)) throw ConfigError("MDP: negative transition probability");
        if (!std::isfinite(o.reward)) throw ConfigError("MDP: non-finite reward");
        total += o.prob;
        outcomes_.push_back(o);
      }
      if (std::abs(total - 1.0) > kProbTolerance)
        throw ConfigError("MDP: probabilities of (" + std::to_string(s) + "," + std::to_string(a) +
                          ") sum to " + std::to_string(total));
      outcome_offsets_.push_back(outcomes_.size());
    }
  }

  double start_total = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    if (!(start_[s] >= 0.0)) throw ConfigError("MDP: negative start probability");
    if (terminal_[s] && start_[s] != 0.0)
      throw ConfigError("MDP: start distribution puts mass on terminal state " + std::to_string(s));
    start_total += start_[s];
  }
  if (start_total == 0.0) throw ConfigError("MDP: start distribution is all zero");
  if (std::abs(start_total - 1.0) > kProbTolerance) throw ConfigError("MDP: start distribution does not sum to 1");
}

std::span<const Outcome> TabularMDP::outcomes(StateId s, ActionId a) const {
  const std::size_t i = layout_.index(s, a);
  return {outcomes_.data() + outcome_offsets_[i], outcome_offsets_[i + 1] - outcome_offsets_[i]};
}

double TabularMDP::expected_reward(StateId s, ActionId a) const {
  double acc = 0.0;
  for (const auto& o : outcomes(s, a)) acc += o.prob * o.reward;
  return acc;
}

bool TabularMDP::has_terminal() const noexcept {
  return std::any_of(terminal_.begin(), terminal_.end(), [](bool t) { return t; });
}

std::vector<std::vector<std::vector<Outcome>>> TabularMDP::nested_transitions() const {
  std::vector<std::vector<std::vector<Outcome>>> t(num_states());
  for (StateId s = 0; s < num_states(); ++s) {
    t[s].resize(num_actions(s));
    for (ActionId a = 0; a < num_actions(s); ++a) {
      auto o = outcomes(s, a);
      t[s][a].assign(o.begin(), o.end());
    }
  }
  return t;
}

bool TabularMDP::operator==(const TabularMDP& other) const {
  if (layout_ != other.layout_ || outcome_offsets_ != other.outcome_offsets_ || start_ != other.start_ ||
      terminal_ != other.terminal_ || gamma_ != other.gamma_)
    return false;
  return std::equal(outcomes_.begin(), outcomes_.end(), other.outcomes_.begin(), other.outcomes_.end(),
                    [](const Outcome& x, const Outcome& y) {
                      return x.next == y.next && x.reward == y.reward && x.prob == y.prob;
                    });
}

void PolicyTable::validate(const TabularMDP& mdp) const {
  if (probs.size() != static_cast<std::size_t>(mdp.num_states()))
    throw ConfigError("policy has " + std::to_string(probs.size()) + " rows but the MDP has " +
                      std::to_string(mdp.num_states()) + " states");
  for (StateId s = 0; s < mdp.num_states(); ++s) {
    if (mdp.is_terminal(s)) continue;
    const auto& row = probs[s];
    if (row.size() != static_cast<std::size_t>(mdp.num_actions(s)))
      throw ConfigError("policy row " + std::to_string(s) + " does not match the state's action count");
    double total = 0.0;
    for (double p : row) {
      if (!(p >= 0.0)) throw ConfigError("policy row " + std::to_string(s) + " has a negative entry");
      total += p;
    }
    if (std::abs(total - 1.0) > kProbTolerance)
      throw ConfigError("policy row " + std::to_string(s) + " sums to " + std::to_string(total));
  }
}

PolicyTable uniform_policy(const TabularMDP& mdp) {
  PolicyTable pi;
  pi.probs.resize(mdp.num_states());
  for (StateId s = 0; s < mdp.num_states(); ++s) {
    const int k = mdp.num_actions(s);
    pi.probs[s].assign(k, k > 0 ? 1.0 / k : 0.0);
  }
  return pi;
}

PolicyTable set_policy(const TabularMDP& mdp, const std::vector<std::vector<ActionId>>& action_sets, double epsilon) {
  if (action_sets.size() != static_cast<std::size_t>(mdp.num_states()))
    throw ConfigError("action sets do not match the MDP's state count");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
  PolicyTable pi;
  pi.probs.resize(mdp.num_states());
  for (StateId s = 0; s < mdp.num_states(); ++s) {
    const int k = mdp.num_actions(s);
    if (k == 0) continue;
    const auto& set = action_sets[s];
    if (set.empty()) throw ConfigError("empty action set for state " + std::to_string(s));
    pi.probs[s].assign(k, epsilon / k);
    for (ActionId a : set) pi.probs[s].at(a) += (1.0 - epsilon) / static_cast<double>(set.size());
  }
  return pi;
}

PolicyTable deterministic_policy(const TabularMDP& mdp, std::span<const ActionId> actions) {
  std::vector<std::vector<ActionId>> sets(mdp.num_states());
  for (StateId s = 0; s < mdp.num_states(); ++s)
    if (!mdp.is_terminal(s)) sets[s] = {actions[s]};
  return set_policy(mdp, sets);
}

ChainView make_chain(Eigen::MatrixXd P, Eigen::VectorXd r) {
  if (P.rows() != P.cols() || P.rows() != r.size()) throw ConfigError("chain: P must be square and match r");
  for (int i = 0; i < P.rows(); ++i)
    if (std::abs(P.row(i).sum() - 1.0) > 1e-10 || (P.row(i).array() < 0.0).any())
      throw ConfigError("chain: row " + std::to_string(i) + " is not a probability distribution");
  ChainView c;
  c.P = std::move(P);
  c.r = std::move(r);
  c.terminal.assign(c.P.rows(), false);
  return c;
}

ChainView policy_matrices(const TabularMDP& mdp, const PolicyTable& pi) {
  pi.validate(mdp);
  const int n = mdp.num_states();
  ChainView c;
  c.P = Eigen::MatrixXd::Zero(n, n);
  c.r = Eigen::VectorXd::Zero(n);
  c.terminal = mdp.terminal();
  c.convention = TerminalConvention::absorbing;
  for (StateId s = 0; s < n; ++s) {
    if (mdp.is_terminal(s)) {
      c.P(s, s) = 1.0;
      continue;
    }
    for (ActionId a = 0; a < mdp.num_actions(s); ++a) {
      const double pa = pi.probs[s][a];
      for (const auto& o : mdp.outcomes(s, a)) {
        c.P(s, o.next) += pa * o.prob;
        c.r[s] += pa * o.prob * o.reward;
      }
    }
  }
  return c;
}

ChainView unroll(const TabularMDP& mdp, const PolicyTable& pi) {
  ChainView c = policy_matrices(mdp, pi);
  const auto& start = mdp.start_dist();
  if (std::all_of(start.begin(), start.end(), [](double p) { return p == 0.0; }))
    throw ConfigError("unroll: start distribution is all zero");
  for (StateId s = 0; s < mdp.num_states(); ++s) {
    if (!mdp.is_terminal(s)) continue;
    for (StateId j = 0; j < mdp.num_states(); ++j) c.P(s, j) = start[j];
    c.r[s] = 0.0;
  }
  c.convention = TerminalConvention::restart;
  return c;
}

ErgodicityReport check_ergodic(const ChainView& chain) {
  ErgodicityReport rep;
  const int n = chain.size();
  if (n == 0) {
    rep.message = "empty chain";
    return rep;
  }
  std::vector<std::vector<int>> fwd(n), bwd(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (chain.P(i, j) > 0.0) {
        fwd[i].push_back(j);
        bwd[j].push_back(i);
      }

  auto bfs = [n](const std::vector<std::vector<int>>& g, std::vector<int>& level) {
    level.assign(n, -1);
    std::queue<int> q;
    level[0] = 0;
    q.push(0);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int v : g[u])
        if (level[v] < 0) {
          level[v] = level[u] + 1;
          q.push(v);
        }
    }
  };

  std::vector<int> level, back;
  bfs(fwd, level);
  bfs(bwd, back);
  for (int s = 0; s < n; ++s) {
    if (level[s] < 0 || back[s] < 0) {
      rep.irreducible = false;
      rep.witness = s;
      std::ostringstream os;
      os << "reducible: state " << s << (level[s] < 0 ? " is not reachable from" : " cannot reach") << " state 0";
      rep.message = os.str();
      return rep;
    }
  }
  rep.irreducible = true;

  int g = 0;
  for (int u = 0; u < n; ++u)
    for (int v : fwd[u]) g = std::gcd(g, std::abs(level[u] + 1 - level[v]));
  rep.period = g;
  if (g != 1) {
    rep.witness = 0;
    rep.message = "periodic: period " + std::to_string(g) + " through state 0";
  } else {
    rep.message = "ergodic";
  }
  return rep;
}

Eigen::VectorXd stationary_distribution(const ChainView& chain) {
  const auto rep = check_ergodic(chain);
  if (!rep.ergodic()) throw DomainError("stationary distribution undefined: " + rep.message);
  return occupancy_distribution(chain);
}

Eigen::VectorXd occupancy_distribution(const ChainView& chain) {
  const auto rep = check_ergodic(chain);
  if (!rep.irreducible) throw DomainError("occupancy distribution undefined: " + rep.message);
  const int n = chain.size();
  Eigen::MatrixXd A = chain.P.transpose() - Eigen::MatrixXd::Identity(n, n);
  A.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs[n - 1] = 1.0;
  Eigen::VectorXd d = A.fullPivLu().solve(rhs);
  // Clip round-off and renormalize.
  for (int i = 0; i < n; ++i)
    if (d[i] < 0.0 && d[i] > -1e-14) d[i] = 0.0;
  d /= d.sum();
  if ((d.array() <= 0.0).any()) throw DomainError("stationary distribution has non-positive entries");
  return d;
}

Eigen::VectorXd stationary_distribution_power(const ChainView& chain, double tol, int max_iter) {
  const int n = chain.size();
  Eigen::RowVectorXd d = Eigen::RowVectorXd::Constant(n, 1.0 / n);
  double change = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::RowVectorXd next = d * chain.P;
    next /= next.sum();
    change = (next - d).lpNorm<1>();
    d = next;
    if (change < tol) return d.transpose();
  }
  throw NumericalError("power iteration did not converge", change);
}

ChainView with_stationary(ChainView chain) {
  chain.d = stationary_distribution(chain);
  return chain;
}

double average_reward(const ChainView& chain) {
  if (chain.d) return chain.d->dot(chain.r);
  const bool absorbing = chain.convention == TerminalConvention::absorbing &&
                         std::any_of(chain.terminal.begin(), chain.terminal.end(), [](bool t) { return t; });
  if (absorbing) {
    // Every trajectory ends in a zero-reward self-loop when all states reach a terminal state.
    const int n = chain.size();
    std::vector<bool> reaches(chain.terminal.begin(), chain.terminal.end());
    for (bool grew = true; grew;) {
      grew = false;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n && !reaches[i]; ++j)
          if (chain.P(i, j) > 0.0 && reaches[j]) reaches[i] = grew = true;
    }
    if (std::all_of(reaches.begin(), reaches.end(), [](bool b) { return b; })) return 0.0;
    throw DomainError("average reward undefined: some state never reaches a terminal state");
  }
  return stationary_distribution(chain).dot(chain.r);
}

double nonterminal_spectral_radius(const TabularMDP& mdp, const PolicyTable& pi) {
  return spectral_radius(nonterminal_block(mdp, pi).P);
}

Values exact_values(const TabularMDP& mdp, const PolicyTable& pi, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  const auto blk = nonterminal_block(mdp, pi);
  if (gamma == 1.0) require_proper(blk, "exact_values at gamma = 1");
  const int m = static_cast<int>(blk.states.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(m, m) - gamma * blk.P;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  Eigen::VectorXd vn = lu.solve(blk.r);
  if (!vn.allFinite()) throw DomainError("exact_values: singular Bellman system");

  Values out;
  out.v = Eigen::VectorXd::Zero(mdp.num_states());
  for (int i = 0; i < m; ++i) out.v[blk.states[i]] = vn[i];
  out.q = q_from_v(mdp, out.v, gamma);
  return out;
}

std::vector<std::vector<ActionId>> greedy_action_sets(const QTable& q, double tol) {
  std::vector<std::vector<ActionId>> sets(q.layout.num_states());
  for (StateId s = 0; s < q.layout.num_states(); ++s) {
    const auto row = q.row(s);
    if (row.empty()) continue;
    const double best = row_max(row);
    for (std::size_t a = 0; a < row.size(); ++a)
      if (row[a] >= best - tol) sets[s].push_back(static_cast<ActionId>(a));
  }
  return sets;
}

double bellman_optimality_residual(const TabularMDP& mdp, const QTable& q, double gamma) {
  return sup_diff(bellman_optimality_backup(mdp, q, gamma), q);
}

OptimalValues value_iteration(const TabularMDP& mdp, double gamma, int max_iter) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  if (gamma == 1.0) require_proper(nonterminal_block(mdp, uniform_policy(mdp)), "value_iteration at gamma = 1");

  QTable q(mdp.layout());
  double delta = 0.0;
  int it = 0;
  for (; it < max_iter; ++it) {
    QTable next = bellman_optimality_backup(mdp, q, gamma);
    delta = sup_diff(next, q);
    q = std::move(next);
    if (delta <= 1e-12) break;
  }
  if (delta > 1e-12) throw NumericalError("value iteration hit the iteration cap", delta);

  // Polish with exact policy evaluation of the greedy policy until it is stable.
  QTable best = q;
  double best_res = bellman_optimality_residual(mdp, q, gamma);
  try {
    for (int round = 0; round < 100; ++round) {
      std::vector<ActionId> greedy(mdp.num_states(), 0);
      for (StateId s = 0; s < mdp.num_states(); ++s) {
        const auto row = q.row(s);
        if (!row.empty()) greedy[s] = static_cast<ActionId>(std::max_element(row.begin(), row.end()) - row.begin());
      }
      QTable qpi = exact_values(mdp, deterministic_policy(mdp, greedy), gamma).q;
      const double res = bellman_optimality_residual(mdp, qpi, gamma);
      const bool stable = sup_diff(qpi, q) == 0.0;
      if (res < best_res) {
        best = qpi;
        best_res = res;
      }
      q = std::move(qpi);
      if (stable || res <= 1e-13 * (1.0 + *std::max_element(q.values.begin(), q.values.end(),
                                                            [](double a, double b) { return std::abs(a) < std::abs(b); })))
        break;
    }
  } catch (const DomainError&) {
    // Greedy policy improper at gamma = 1; keep the value-iteration fixed point.
  }

  OptimalValues out;
  out.q_star = std::move(best);
  out.residual = best_res;
  out.iterations = it + 1;
  out.greedy_sets = greedy_action_sets(out.q_star);
  return out;
}

Eigen::VectorXd expected_remaining_length(const TabularMDP& mdp, const PolicyTable& pi) {
  const auto blk = nonterminal_block(mdp, pi);
  require_proper(blk, "expected_remaining_length");
  const int m = static_cast<int>(blk.states.size());
  Eigen::VectorXd tn = (Eigen::MatrixXd::Identity(m, m) - blk.P).partialPivLu().solve(Eigen::VectorXd::Ones(m));
  Eigen::VectorXd t = Eigen::VectorXd::Zero(mdp.num_states());
  for (int i = 0; i < m; ++i) t[blk.states[i]] = tn[i];
  return t;
}

Eigen::VectorXd discounted_termination(const TabularMDP& mdp, const PolicyTable& pi, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  const auto blk = nonterminal_block(mdp, pi);
  require_proper(blk, "discounted_termination");
  const int m = static_cast<int>(blk.states.size());
  Eigen::VectorXd mn =
      (Eigen::MatrixXd::Identity(m, m) - gamma * blk.P).partialPivLu().solve(gamma * blk.p_term);
  Eigen::VectorXd out = Eigen::VectorXd::Ones(mdp.num_states());
  for (int i = 0; i < m; ++i) out[blk.states[i]] = mn[i];
  return out;
}

}  // namespace dtd
