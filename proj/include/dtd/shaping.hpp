#pragma once

// Potential-based reward shaping with the constant potential Phi(s) = b / (1 - gamma),
// zero at terminal states, and its state-dependent-discount generalization.

#include <cstdint>
#include <optional>
#include <vector>

#include "dtd/mdp.hpp"

namespace dtd {

struct PotentialSpec {
  double b = 0.0;
  double gamma = 0.9;
  /// gamma(s); terminal states must map to 0.
  std::optional<std::vector<double>> per_state_gamma;

  /// Throws DomainError (gamma >= 1) or ConfigError (malformed per-state discounts).
  void validate() const;
  /// Check per_state_gamma against the MDP's terminal set.
  void validate(const TabularMDP& mdp) const;
};

/// -b / (1 - gamma) when the successor is terminal, otherwise -b.
double shaping_term(const PotentialSpec& spec, bool next_is_terminal);

/// Three-case F(s, a, s') under state-dependent discounting with Phi(s) = b / (1 - gamma(s)).
double shaping_term_state_dependent(const PotentialSpec& spec, StateId s, StateId next);

/// Phi(s) = b / (1 - gamma(s)) (state-dependent form; 0-discount states give b).
double potential(const PotentialSpec& spec, StateId s);

/// Every reward r becomes r + F. Structure is unchanged.
TabularMDP shaped_mdp(const TabularMDP& mdp, const PotentialSpec& spec);

/// Per-state discounts: spec.gamma on non-terminal states, 0 on terminal states.
std::vector<double> episodic_discounts(const TabularMDP& mdp, double gamma);

/// Rolls out `num_episodes` episodes as one unrolled stream and checks, at every time step whose
/// continuation is in the stream, that the shaped return equals the raw return minus Phi(S_t).
/// Returns the largest absolute residual.
double verify_return_identity(const TabularMDP& mdp, const PolicyTable& pi, const PotentialSpec& spec,
                              int num_episodes, std::uint64_t seed);

}  // namespace dtd
