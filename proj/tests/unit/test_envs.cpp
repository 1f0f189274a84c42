#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "dtd/envs.hpp"
#include "dtd/errors.hpp"
#include "dtd/mdp_io.hpp"
#include "oracles.hpp"

using namespace dtd;

TEST_CASE("make_gridworld") {
  SUBCASE("2x2 painful") {
    const auto mdp = make_gridworld({2, 2, RewardMode::painful, 0.9});
    CHECK(mdp.num_states() == 4);
    const auto opt = value_iteration(mdp, 0.9);
    double best = -1e300;
    for (double q : opt.q_star.row(0)) best = std::max(best, q);
    CHECK(best == doctest::Approx(-1.9));
  }
  SUBCASE("10x10 painful and sparse optimal start values") {
    const auto painful = make_gridworld({10, 10, RewardMode::painful, 0.9});
    const auto sparse = make_gridworld({10, 10, RewardMode::sparse, 0.9});
    auto v0 = [](const TabularMDP& m) {
      const auto opt = value_iteration(m, 0.9);
      double best = -1e300;
      for (double q : opt.q_star.row(0)) best = std::max(best, q);
      return best;
    };
    CHECK(v0(painful) == doctest::Approx(-(1.0 - std::pow(0.9, 18)) / 0.1).epsilon(1e-12));
    CHECK(v0(sparse) == doctest::Approx(std::pow(0.9, 17)).epsilon(1e-12));
  }
  SUBCASE("structure") {
    for (auto [w, h] : {std::pair{2, 2}, std::pair{3, 5}, std::pair{10, 10}}) {
      const auto mdp = make_gridworld({w, h, RewardMode::sparse, 0.9});
      CHECK(mdp.num_states() == w * h);
      CHECK(std::count(mdp.terminal().begin(), mdp.terminal().end(), true) == 1);
      CHECK(mdp.is_terminal(w * h - 1));
      CHECK(mdp.start_dist()[0] == 1.0);
      for (StateId s = 0; s + 1 < w * h; ++s) {
        CHECK(mdp.num_actions(s) == 4);
        for (ActionId a = 0; a < 4; ++a) {
          REQUIRE(mdp.outcomes(s, a).size() == 1);
          const auto& o = mdp.outcomes(s, a)[0];
          CHECK(o.reward == (o.next == w * h - 1 ? 1.0 : 0.0));
        }
      }
    }
    CHECK_THROWS_AS(make_gridworld({1, 4, RewardMode::painful, 0.9}), ConfigError);
  }
  SUBCASE("moves and walls") {
    const GridSpec spec{4, 3, RewardMode::painful, 0.9};
    const auto mdp = make_gridworld(spec);
    auto next = [&](int row, int col, ActionId a) { return mdp.outcomes(grid_state(spec, row, col), a)[0].next; };
    CHECK(next(0, 0, kUp) == grid_state(spec, 0, 0));
    CHECK(next(0, 0, kLeft) == grid_state(spec, 0, 0));
    CHECK(next(0, 0, kDown) == grid_state(spec, 1, 0));
    CHECK(next(0, 0, kRight) == grid_state(spec, 0, 1));
    CHECK(next(2, 0, kDown) == grid_state(spec, 2, 0));
    CHECK(next(1, 3, kRight) == grid_state(spec, 1, 3));
    CHECK(mdp.outcomes(0, kUp)[0].reward == -1.0);
  }
}

TEST_CASE("sample_step") {
  Rng rng = make_rng(5);
  SUBCASE("deterministic transition") {
    const auto mdp = make_corridor(3);
    for (int i = 0; i < 100; ++i) {
      const auto st = sample_step(mdp, 1, 0, rng);
      CHECK(st.next == 2);
      CHECK(st.reward == -1.0);
      CHECK_FALSE(st.terminal);
    }
    CHECK(sample_step(mdp, 2, 0, rng).terminal);
  }
  SUBCASE("50/50 branch") {
    const TabularMDP mdp({{{{1, 0.0, 0.5}, {2, 1.0, 0.5}}}, {}, {}}, {1.0, 0.0, 0.0}, {false, true, true}, 0.9);
    const int n = 100000;
    int ones = 0;
    for (int i = 0; i < n; ++i) ones += sample_step(mdp, 0, 0, rng).next == 1;
    CHECK(std::abs(ones - n / 2) <= 3.0 * std::sqrt(n * 0.25));
  }
  SUBCASE("grid edges keep the agent in place") {
    const auto mdp = make_gridworld({10, 10, RewardMode::painful, 0.9});
    CHECK(sample_step(mdp, 0, kUp, rng).next == 0);
    CHECK(sample_step(mdp, 9, kRight, rng).next == 9);
  }
  SUBCASE("terminal states cannot be sampled from") {
    const auto mdp = make_corridor(1);
    CHECK_THROWS_AS(sample_step(mdp, 1, 0, rng), UsageError);
  }
}

TEST_CASE("make_diagnostic") {
  const auto c = make_diagnostic("corridor(3)");
  CHECK(c.num_states() == 4);
  CHECK(c == make_corridor(3));
  for (StateId s = 0; s < 3; ++s) CHECK(c.outcomes(s, 0)[0].reward == -1.0);

  const auto loop = make_diagnostic("two_state_loop");
  CHECK_FALSE(loop.has_terminal());
  CHECK(check_ergodic(policy_matrices(loop, uniform_policy(loop))).ergodic());
  CHECK(make_diagnostic("two_state_loop(2.5)").outcomes(0, 0)[0].reward == 2.5);

  const auto r1 = make_diagnostic("random(5,2,7)");
  const auto r2 = make_diagnostic(" random( 5, 2, 7 ) ");
  CHECK(r1 == r2);
  CHECK(mdp_to_text(r1) == mdp_to_text(r2));
  CHECK(check_ergodic(unroll(r1, uniform_policy(r1))).ergodic());
  CHECK(make_diagnostic("gridworld(3,4,sparse)") == make_gridworld({3, 4, RewardMode::sparse, 0.9}));

  for (const char* bad : {"corridor", "corridor(0)", "random(5,2)", "spiral(3)", "gridworld(3,3,calm)", ""})
    CHECK_THROWS_AS(make_diagnostic(bad), ConfigError);
}

TEST_CASE("random(5,2,7) matches the golden snapshot") {
  std::ifstream in(DTD_GOLDEN_DIR "/random_5_2_7.json", std::ios::binary);
  REQUIRE(in);
  std::ostringstream os;
  os << in.rdbuf();
  CHECK(mdp_to_text(make_diagnostic("random(5,2,7)")) == os.str());
}

TEST_CASE("random generators") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto mdp = make_random_mdp(2 + seed % 7, 1 + seed % 3, seed);
    CHECK(mdp == make_random_mdp(2 + seed % 7, 1 + seed % 3, seed));
    CHECK(check_ergodic(unroll(mdp, uniform_policy(mdp))).ergodic());
    CHECK(nonterminal_spectral_radius(mdp, uniform_policy(mdp)) < 1.0);
    const auto pi = make_random_policy(mdp, seed);
    CHECK_NOTHROW(pi.validate(mdp));
    const auto chain = make_random_ergodic_chain(3 + seed % 8, seed);
    CHECK(check_ergodic(chain).ergodic());
    CHECK((chain.r.array().abs() <= 1.0).all());
  }
  CHECK(make_random_mdp(5, 2, 1) != make_random_mdp(5, 2, 2));
}

TEST_CASE("sample_start and sample_action follow their distributions") {
  Rng rng = make_rng(8);
  const TabularMDP mdp({{{{2, 0.0, 1.0}}, {{2, 0.0, 1.0}}}, {{{2, 0.0, 1.0}}}, {}}, {0.3, 0.7, 0.0}, {false, false, true}, 0.9);
  const int n = 50000;
  int zeros = 0;
  for (int i = 0; i < n; ++i) zeros += sample_start(mdp, rng) == 0;
  CHECK(std::abs(zeros - 0.3 * n) <= 3.0 * std::sqrt(n * 0.21));
  PolicyTable pi{{{0.2, 0.8}, {1.0}, {}}};
  int first = 0;
  for (int i = 0; i < n; ++i) first += sample_action(pi, 0, rng) == 0;
  CHECK(std::abs(first - 0.2 * n) <= 3.0 * std::sqrt(n * 0.16));
}
