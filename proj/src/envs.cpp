#include "dtd/envs.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <vector>

#include "dtd/errors.hpp"

namespace dtd {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view text, std::string_view context) {
  T value{};
  text = trim(text);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ConfigError("diagnostic '" + std::string(context) + "': cannot parse argument '" + std::string(text) + "'");
  return value;
}

std::vector<double> random_simplex(Rng& rng, int k) {
  std::vector<double> w(k);
  double total = 0.0;
  for (auto& x : w) {
    x = 0.05 + uniform01(rng);
    total += x;
  }
  for (auto& x : w) x /= total;
  return w;
}

}  // namespace

std::string to_string(RewardMode mode) { return mode == RewardMode::painful ? "painful" : "sparse"; }

RewardMode parse_reward_mode(std::string_view text) {
  if (text == "painful") return RewardMode::painful;
  if (text == "sparse") return RewardMode::sparse;
  throw ConfigError("unknown reward mode '" + std::string(text) + "' (expected painful or sparse)");
}

TabularMDP make_gridworld(const GridSpec& spec) {
  if (spec.width < 2 || spec.height < 2) throw ConfigError("grid world needs width and height >= 2");
  const int n = spec.width * spec.height;
  const StateId goal = n - 1;
  std::vector<std::vector<std::vector<Outcome>>> t(n);
  std::vector<bool> terminal(n, false);
  terminal[goal] = true;
  for (int row = 0; row < spec.height; ++row) {
    for (int col = 0; col < spec.width; ++col) {
      const StateId s = grid_state(spec, row, col);
      if (s == goal) continue;
      const int moves[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};  // Up, Down, Left, Right
      for (const auto& m : moves) {
        const int r2 = std::clamp(row + m[0], 0, spec.height - 1);
        const int c2 = std::clamp(col + m[1], 0, spec.width - 1);
        const StateId next = grid_state(spec, r2, c2);
        double reward = -1.0;
        if (spec.reward_mode == RewardMode::sparse) reward = next == goal ? 1.0 : 0.0;
        t[s].push_back({Outcome{next, reward, 1.0}});
      }
    }
  }
  std::vector<double> start(n, 0.0);
  start[0] = 1.0;
  return TabularMDP(std::move(t), std::move(start), std::move(terminal), spec.gamma);
}

StepResult sample_step(const TabularMDP& mdp, StateId s, ActionId a, Rng& rng) {
  if (mdp.is_terminal(s)) throw UsageError("sample_step called at terminal state " + std::to_string(s));
  if (a < 0 || a >= mdp.num_actions(s)) throw UsageError("sample_step: invalid action");
  const auto outs = mdp.outcomes(s, a);
  const Outcome* pick = &outs.back();
  if (outs.size() > 1) {
    double u = uniform01(rng);
    for (const auto& o : outs) {
      if (u < o.prob) {
        pick = &o;
        break;
      }
      u -= o.prob;
    }
  }
  return {pick->next, pick->reward, mdp.is_terminal(pick->next)};
}

StateId sample_start(const TabularMDP& mdp, Rng& rng) {
  const auto& start = mdp.start_dist();
  double u = uniform01(rng);
  StateId last = 0;
  for (StateId s = 0; s < mdp.num_states(); ++s) {
    if (start[s] == 0.0) continue;
    if (u < start[s]) return s;
    u -= start[s];
    last = s;
  }
  return last;
}

ActionId sample_action(const PolicyTable& pi, StateId s, Rng& rng) {
  const auto& row = pi.probs[s];
  double u = uniform01(rng);
  for (std::size_t a = 0; a < row.size(); ++a) {
    if (u < row[a]) return static_cast<ActionId>(a);
    u -= row[a];
  }
  for (std::size_t a = row.size(); a-- > 0;)
    if (row[a] > 0.0) return static_cast<ActionId>(a);
  throw UsageError("sample_action: empty policy row");
}

TabularMDP make_corridor(int k, double gamma) {
  if (k < 1) throw ConfigError("corridor length must be >= 1");
  std::vector<std::vector<std::vector<Outcome>>> t(k + 1);
  for (int s = 0; s < k; ++s) t[s].push_back({Outcome{s + 1, -1.0, 1.0}});
  std::vector<bool> terminal(k + 1, false);
  terminal[k] = true;
  std::vector<double> start(k + 1, 0.0);
  start[0] = 1.0;
  return TabularMDP(std::move(t), std::move(start), std::move(terminal), gamma);
}

TabularMDP make_two_state_loop(double reward, double gamma) {
  std::vector<std::vector<std::vector<Outcome>>> t = {
      {{Outcome{0, reward, 0.9}, Outcome{1, reward, 0.1}}},
      {{Outcome{0, reward, 0.5}, Outcome{1, reward, 0.5}}},
  };
  return TabularMDP(std::move(t), {1.0, 0.0}, {false, false}, gamma);
}

TabularMDP make_random_mdp(int n, int actions, std::uint64_t seed, double gamma) {
  if (n < 1 || actions < 1) throw ConfigError("random MDP needs n >= 1 and actions >= 1");
  Rng rng = make_rng(seed, 0x6d6470);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<std::vector<std::vector<Outcome>>> t(n + 1);
    for (int s = 0; s < n; ++s) {
      for (int a = 0; a < actions; ++a) {
        const int k = 1 + uniform_index(rng, std::min(3, n));
        std::vector<int> succ;
        while (static_cast<int>(succ.size()) < k) {
          const int c = uniform_index(rng, n);
          if (std::find(succ.begin(), succ.end(), c) == succ.end()) succ.push_back(c);
        }
        const double p_term = uniform(rng, 0.05, 0.3);
        const auto w = random_simplex(rng, k);
        std::vector<Outcome> outs;
        double used = 0.0;
        for (int i = 0; i < k; ++i) {
          const double p = (1.0 - p_term) * w[i];
          outs.push_back({succ[i], uniform(rng, -1.0, 1.0), p});
          used += p;
        }
        outs.push_back({n, uniform(rng, -1.0, 1.0), 1.0 - used});
        t[s].push_back(std::move(outs));
      }
    }
    std::vector<double> start(n + 1, 0.0);
    const auto w = random_simplex(rng, n);
    std::copy(w.begin(), w.end(), start.begin());
    std::vector<bool> terminal(n + 1, false);
    terminal[n] = true;
    TabularMDP mdp(std::move(t), std::move(start), std::move(terminal), gamma);
    if (check_ergodic(unroll(mdp, uniform_policy(mdp))).ergodic()) return mdp;
  }
  throw DomainError("random MDP: no ergodic sample found");
}

ChainView make_random_ergodic_chain(int n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("random chain needs n >= 1");
  Rng rng = make_rng(seed, 0x636861696e);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd r(n);
  for (int i = 0; i < n; ++i) {
    // A ring plus a self-loop keeps the chain irreducible and aperiodic; other edges are random.
    P(i, (i + 1) % n) += uniform(rng, 0.1, 1.0);
    P(i, i) += uniform(rng, 0.1, 1.0);
    for (int j = 0; j < n; ++j)
      if (uniform01(rng) < 0.4) P(i, j) += uniform01(rng);
    P.row(i) /= P.row(i).sum();
    r[i] = uniform(rng, -1.0, 1.0);
  }
  return make_chain(std::move(P), std::move(r));
}

PolicyTable make_random_policy(const TabularMDP& mdp, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0x706f6c);
  PolicyTable pi;
  pi.probs.resize(mdp.num_states());
  for (StateId s = 0; s < mdp.num_states(); ++s)
    if (mdp.num_actions(s) > 0) pi.probs[s] = random_simplex(rng, mdp.num_actions(s));
  return pi;
}

TabularMDP make_diagnostic(std::string_view name, double gamma) {
  const std::string full(name);
  name = trim(name);
  std::string_view head = name;
  std::vector<std::string_view> args;
  if (const auto open = name.find('('); open != std::string_view::npos) {
    if (name.back() != ')') throw ConfigError("diagnostic '" + full + "': missing ')'");
    head = trim(name.substr(0, open));
    std::string_view inner = name.substr(open + 1, name.size() - open - 2);
    while (!inner.empty()) {
      const auto comma = inner.find(',');
      args.push_back(trim(inner.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      inner.remove_prefix(comma + 1);
    }
  }
  auto expect_args = [&](std::size_t lo, std::size_t hi) {
    if (args.size() < lo || args.size() > hi)
      throw ConfigError("diagnostic '" + full + "': wrong number of arguments");
  };

  if (head == "corridor") {
    expect_args(1, 1);
    return make_corridor(parse_number<int>(args[0], full), gamma);
  }
  if (head == "two_state_loop") {
    expect_args(0, 1);
    return make_two_state_loop(args.empty() ? 1.0 : parse_number<double>(args[0], full), gamma);
  }
  if (head == "random") {
    expect_args(3, 3);
    return make_random_mdp(parse_number<int>(args[0], full), parse_number<int>(args[1], full),
                           parse_number<std::uint64_t>(args[2], full), gamma);
  }
  if (head == "gridworld") {
    expect_args(3, 3);
    GridSpec spec{parse_number<int>(args[0], full), parse_number<int>(args[1], full), parse_reward_mode(args[2]),
                  gamma};
    return make_gridworld(spec);
  }
  throw ConfigError("unknown diagnostic '" + full +
                    "' (expected corridor(k), two_state_loop, random(n,a,seed) or gridworld(w,h,mode))");
}

}  // namespace dtd
