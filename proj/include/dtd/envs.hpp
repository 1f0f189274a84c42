#pragma once

// Grid worlds, small diagnostic MDPs, random generators and a sampler over any TabularMDP.

#include <cstdint>
#include <string>
#include <string_view>

#include "dtd/mdp.hpp"
#include "dtd/random.hpp"

namespace dtd {

enum class RewardMode { painful, sparse };

/// Fixed action order for every grid world.
enum GridAction : ActionId { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };

struct GridSpec {
  int width = 10;
  int height = 10;
  RewardMode reward_mode = RewardMode::painful;
  double gamma = 0.9;
};

/// Row-major cells; start is the top-left cell, the bottom-right cell is terminal.
/// painful: -1 on every transition. sparse: +1 on transitions entering the terminal cell, 0 otherwise.
TabularMDP make_gridworld(const GridSpec& spec);

inline StateId grid_state(const GridSpec& spec, int row, int col) { return row * spec.width + col; }

std::string to_string(RewardMode mode);
RewardMode parse_reward_mode(std::string_view text);

struct StepResult {
  StateId next = 0;
  double reward = 0.0;
  bool terminal = false;
};

/// Draw (s', r) ~ p(., . | s, a). Throws UsageError at terminal states.
StepResult sample_step(const TabularMDP& mdp, StateId s, ActionId a, Rng& rng);
StateId sample_start(const TabularMDP& mdp, Rng& rng);
ActionId sample_action(const PolicyTable& pi, StateId s, Rng& rng);

/// k non-terminal states in a line followed by the terminal state; one action; -1 per step; starts at 0.
TabularMDP make_corridor(int k, double gamma = 0.9);
/// Continuing two-state chain with P = [[0.9, 0.1], [0.5, 0.5]] and reward `reward` on every transition.
TabularMDP make_two_state_loop(double reward = 1.0, double gamma = 0.9);
/// Episodic random MDP: n non-terminal states plus one terminal state (index n), `actions` actions each,
/// every (s, a) terminates with positive probability. Rejection-sampled until the unrolled chain under
/// the uniform policy is ergodic.
TabularMDP make_random_mdp(int n, int actions, std::uint64_t seed, double gamma = 0.9);

/// Parse and build a named diagnostic: corridor(k), two_state_loop, two_state_loop(c),
/// random(n,a,seed), gridworld(w,h,painful|sparse). Throws ConfigError for unknown names.
TabularMDP make_diagnostic(std::string_view name, double gamma = 0.9);

/// Random irreducible, aperiodic chain on n states with rewards in [-1, 1].
ChainView make_random_ergodic_chain(int n, std::uint64_t seed);
/// Random policy with every action probability bounded away from zero.
PolicyTable make_random_policy(const TabularMDP& mdp, std::uint64_t seed);

}  // namespace dtd
