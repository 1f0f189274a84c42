#include <doctest.h>

#include <cmath>

#include "dtd/envs.hpp"
#include "dtd/errors.hpp"
#include "dtd/shaping.hpp"
#include "oracles.hpp"

using namespace dtd;

TEST_CASE("shaping_term") {
  CHECK(shaping_term({0.5, 0.9, std::nullopt}, false) == doctest::Approx(-0.5));
  CHECK(shaping_term({1.0, 0.9, std::nullopt}, true) == doctest::Approx(-10.0));
  CHECK(shaping_term({0.0, 0.9, std::nullopt}, true) == 0.0);
  CHECK(shaping_term({0.0, 0.9, std::nullopt}, false) == 0.0);
  CHECK_THROWS_WITH_AS(shaping_term({1.0, 1.0, std::nullopt}, false), doctest::Contains("episodic"), DomainError);
}

TEST_CASE("shaping_term_state_dependent") {
  const auto mdp = make_corridor(3);
  PotentialSpec spec{1.0, 0.9, episodic_discounts(mdp, 0.9)};
  CHECK(shaping_term_state_dependent(spec, 2, 3) == doctest::Approx(-10.0));
  CHECK(shaping_term_state_dependent(spec, 3, 0) == doctest::Approx(8.0));
  CHECK(shaping_term_state_dependent(spec, 0, 1) == doctest::Approx(-1.0));

  SUBCASE("equals gamma(s') Phi(s') - Phi(s) and collapses to the two-case form") {
    for (double b : {-3.0, -0.5, 0.0, 2.0}) {
      spec.b = b;
      for (StateId s = 0; s < 4; ++s)
        for (StateId n = 0; n < 4; ++n) {
          const double f = shaping_term_state_dependent(spec, s, n);
          const double gs = (*spec.per_state_gamma)[s], gn = (*spec.per_state_gamma)[n];
          const double phi_s = b / (1.0 - gs), phi_n = b / (1.0 - gn);
          CHECK(f == doctest::Approx(gn * phi_n - phi_s).epsilon(1e-12));
          if (!mdp.is_terminal(s))
            CHECK(f == doctest::Approx(shaping_term({b, 0.9, std::nullopt}, mdp.is_terminal(n))).epsilon(1e-12));
        }
    }
  }
  SUBCASE("discount of one is rejected") {
    PotentialSpec bad{1.0, 0.9, std::vector<double>{1.0, 0.9, 0.9, 0.0}};
    CHECK_THROWS_AS(shaping_term_state_dependent(bad, 0, 1), DomainError);
  }
  SUBCASE("per-state discounts must vanish exactly on terminal states") {
    PotentialSpec bad{1.0, 0.9, std::vector<double>{0.9, 0.9, 0.9, 0.1}};
    CHECK_THROWS_AS(bad.validate(mdp), ConfigError);
    PotentialSpec short_vec{1.0, 0.9, std::vector<double>{0.9, 0.0}};
    CHECK_THROWS_AS(short_vec.validate(mdp), ConfigError);
  }
}

TEST_CASE("shaped_mdp") {
  SUBCASE("b = 0 leaves the MDP unchanged") {
    const auto mdp = make_random_mdp(5, 2, 1);
    CHECK(shaped_mdp(mdp, {0.0, 0.9, std::nullopt}) == mdp);
  }
  SUBCASE("painful grid with b = -1") {
    const auto mdp = make_gridworld({10, 10, RewardMode::painful, 0.9});
    const auto shaped = shaped_mdp(mdp, {-1.0, 0.9, std::nullopt});
    for (StateId s = 0; s < 99; ++s)
      for (ActionId a = 0; a < 4; ++a)
        for (const auto& o : shaped.outcomes(s, a)) CHECK(o.reward == doctest::Approx(o.next == 99 ? 9.0 : 0.0));
  }
  SUBCASE("gamma = 1 is rejected") {
    const auto mdp = make_corridor(2, 1.0);
    CHECK_THROWS_AS(shaped_mdp(mdp, {1.0, 1.0, std::nullopt}), DomainError);
  }
}

TEST_CASE("policy invariance under shaping") {
  Rng rng = make_rng(2024);
  std::vector<TabularMDP> mdps;
  for (std::uint64_t seed = 0; seed < 20; ++seed) mdps.push_back(make_random_mdp(4 + seed % 5, 2 + seed % 3, seed));
  mdps.push_back(make_gridworld({10, 10, RewardMode::painful, 0.9}));
  mdps.push_back(make_gridworld({10, 10, RewardMode::sparse, 0.9}));
  for (const auto& mdp : mdps) {
    const auto base = value_iteration(mdp, mdp.gamma());
    const double b = uniform(rng, -5.0, 5.0);
    const auto shaped = value_iteration(shaped_mdp(mdp, {b, mdp.gamma(), std::nullopt}), mdp.gamma());
    CHECK(shaped.greedy_sets == base.greedy_sets);
    // Shaped q* differs from q* by -Phi(s), the same for every action of s.
    for (StateId s = 0; s < mdp.num_states(); ++s)
      for (ActionId a = 0; a < mdp.num_actions(s); ++a)
        CHECK(std::abs(shaped.q_star.at(s, a) - base.q_star.at(s, a) + b / (1.0 - mdp.gamma())) <= 1e-8);
  }
}

TEST_CASE("verify_return_identity") {
  SUBCASE("b = 0 gives an exact zero") {
    const auto mdp = make_random_mdp(5, 2, 3);
    CHECK(verify_return_identity(mdp, uniform_policy(mdp), {0.0, 0.9, std::nullopt}, 20, 1) == 0.0);
  }
  SUBCASE("corridor of length 3 against the closed form") {
    const auto mdp = make_corridor(3);
    CHECK(verify_return_identity(mdp, uniform_policy(mdp), {1.0, 0.9, std::nullopt}, 5, 0) <= 1e-10);
    // Shaped return from s0: rewards -2, -2, -1 + ... : (-1 - 1) + 0.9 (-1 - 1) + 0.81 (-1 - 10)
    const double shaped = -2.0 - 1.8 + 0.81 * -11.0;
    CHECK(shaped == doctest::Approx(-2.71 - 10.0));
  }
  SUBCASE("grid worlds, 100 episodes") {
    for (auto mode : {RewardMode::painful, RewardMode::sparse}) {
      const auto mdp = make_gridworld({10, 10, mode, 0.9});
      const auto pi = set_policy(mdp, value_iteration(mdp, 0.9).greedy_sets, 0.3);
      CHECK(verify_return_identity(mdp, pi, {-2.0, 0.9, std::nullopt}, 100, 5) <= 1e-8);
    }
  }
}
