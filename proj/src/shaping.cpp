#include "dtd/shaping.hpp"

#include <algorithm>
#include <cmath>

#include "dtd/envs.hpp"
#include "dtd/errors.hpp"

namespace dtd {

void PotentialSpec::validate() const {
  if (!per_state_gamma) {
    if (gamma >= 1.0)
      throw DomainError("constant potential b/(1-gamma) is undefined at gamma = 1; use the episodic update form");
    if (!(gamma >= 0.0)) throw ConfigError("gamma must lie in [0, 1)");
    return;
  }
  for (double g : *per_state_gamma) {
    if (g >= 1.0) throw DomainError("state-dependent potential is undefined where gamma(s) = 1");
    if (!(g >= 0.0)) throw ConfigError("per-state discounts must lie in [0, 1)");
  }
}

void PotentialSpec::validate(const TabularMDP& mdp) const {
  validate();
  if (!per_state_gamma) return;
  if (per_state_gamma->size() != static_cast<std::size_t>(mdp.num_states()))
    throw ConfigError("per-state discounts do not match the MDP's state count");
  for (StateId s = 0; s < mdp.num_states(); ++s)
    if (((*per_state_gamma)[s] == 0.0) != mdp.is_terminal(s))
      throw ConfigError("per-state discount must be zero exactly on terminal states (state " + std::to_string(s) + ")");
}

double shaping_term(const PotentialSpec& spec, bool next_is_terminal) {
  if (spec.gamma >= 1.0)
    throw DomainError("shaping term b/(1-gamma) is undefined at gamma = 1; use the episodic update form");
  return next_is_terminal ? -spec.b / (1.0 - spec.gamma) : -spec.b;
}

double potential(const PotentialSpec& spec, StateId s) {
  const double g = spec.per_state_gamma ? spec.per_state_gamma->at(s) : spec.gamma;
  if (g >= 1.0) throw DomainError("potential undefined at gamma(s) = 1");
  return spec.b / (1.0 - g);
}

double shaping_term_state_dependent(const PotentialSpec& spec, StateId s, StateId next) {
  if (!spec.per_state_gamma) throw ConfigError("state-dependent shaping requires per-state discounts");
  const double gs = spec.per_state_gamma->at(s);
  const double gn = spec.per_state_gamma->at(next);
  if (gs >= 1.0 || gn >= 1.0) throw DomainError("state-dependent potential is undefined where gamma(s) = 1");
  const double b = spec.b;
  if (gn == 0.0) return -b / (1.0 - gs);
  if (gs == 0.0) return gn * b / (1.0 - gn) - b;
  return gn * b / (1.0 - gn) - b / (1.0 - gs);
}

TabularMDP shaped_mdp(const TabularMDP& mdp, const PotentialSpec& spec) {
  spec.validate();
  return mdp.map_rewards(
      [&](StateId, ActionId, const Outcome& o) { return o.reward + shaping_term(spec, mdp.is_terminal(o.next)); });
}

std::vector<double> episodic_discounts(const TabularMDP& mdp, double gamma) {
  std::vector<double> g(mdp.num_states());
  for (StateId s = 0; s < mdp.num_states(); ++s) g[s] = mdp.is_terminal(s) ? 0.0 : gamma;
  return g;
}

double verify_return_identity(const TabularMDP& mdp, const PolicyTable& pi, const PotentialSpec& spec,
                              int num_episodes, std::uint64_t seed) {
  pi.validate(mdp);
  PotentialSpec sd = spec;
  if (!sd.per_state_gamma) sd.per_state_gamma = episodic_discounts(mdp, spec.gamma);
  sd.validate(mdp);
  const auto& gam = *sd.per_state_gamma;

  // One unrolled stream: episodes joined by zero-reward terminal -> start transitions.
  Rng rng = make_rng(seed, 0x7265);
  std::vector<StateId> states;
  std::vector<double> rewards;  // rewards[t] is R_{t+1}
  for (int ep = 0; ep < num_episodes; ++ep) {
    StateId s = sample_start(mdp, rng);
    if (!states.empty()) rewards.push_back(0.0);
    states.push_back(s);
    while (!mdp.is_terminal(s)) {
      const auto step = sample_step(mdp, s, sample_action(pi, s, rng), rng);
      rewards.push_back(step.reward);
      states.push_back(step.next);
      s = step.next;
    }
  }
  if (states.size() < 2) return 0.0;

  const std::size_t last = states.size() - 1;  // final terminal state; its continuation is not sampled
  std::vector<double> raw(states.size(), 0.0), shaped(states.size(), 0.0);
  for (std::size_t t = last; t-- > 0;) {
    const StateId s = states[t], next = states[t + 1];
    raw[t] = rewards[t] + gam[next] * raw[t + 1];
    shaped[t] = rewards[t] + shaping_term_state_dependent(sd, s, next) + gam[next] * shaped[t + 1];
  }
  double worst = 0.0;
  for (std::size_t t = 0; t < last; ++t)
    worst = std::max(worst, std::abs(shaped[t] - (raw[t] - potential(sd, states[t]))));
  return worst;
}

}  // namespace dtd
