#include <doctest.h>

#include <cmath>
#include <numeric>

#include "dtd/agents.hpp"
#include "dtd/envs.hpp"
#include "dtd/errors.hpp"
#include "oracles.hpp"

using namespace dtd;

namespace {

AgentParams params(double alpha, double eta, double gamma, UpdateForm form, TaskKind task = TaskKind::episodic) {
  return {alpha, eta, gamma, form, task, StepSchedule::constant()};
}

std::vector<Transition> random_transitions(const TabularMDP& mdp, int count, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::vector<Transition> out;
  StateId s = sample_start(mdp, rng);
  for (int i = 0; i < count; ++i) {
    const ActionId a = uniform_index(rng, mdp.num_actions(s));
    const auto st = sample_step(mdp, s, a, rng);
    out.push_back({s, a, st.reward, st.next, st.terminal});
    s = st.terminal ? sample_start(mdp, rng) : st.next;
  }
  return out;
}

}  // namespace

TEST_CASE("AgentParams validation") {
  CHECK_THROWS_AS(params(1.5, 0.0, 0.9, UpdateForm::continuing).validate(), ConfigError);
  CHECK_THROWS_AS(params(0.1, -1.0, 0.9, UpdateForm::continuing).validate(), ConfigError);
  CHECK_THROWS_AS(params(0.1, 0.1, 1.0, UpdateForm::continuing, TaskKind::episodic).validate(), ConfigError);
  CHECK_THROWS_AS(params(0.1, 0.1, 1.0, UpdateForm::episodic, TaskKind::continuing).validate(), ConfigError);
  CHECK_NOTHROW(params(0.1, 0.1, 1.0, UpdateForm::episodic, TaskKind::episodic).validate());
  CHECK_NOTHROW(params(0.1, 0.1, 1.0, UpdateForm::continuing, TaskKind::continuing).validate());
  CHECK(parse_update_form("episodic") == UpdateForm::episodic);
  CHECK_THROWS_AS(parse_update_form("other"), ConfigError);
}

TEST_CASE("q_step") {
  const auto mdp = make_corridor(2);
  SUBCASE("terminal transition") {
    auto st = make_q_agent(mdp.layout(), params(0.5, 0.0, 0.9, UpdateForm::continuing));
    q_step(st, {1, 0, 1.0, 2, true});
    CHECK(st.q(1, 0) == 0.5);
    CHECK(st.bias == 0.0);
  }
  SUBCASE("alpha = 0 is the identity") {
    auto st = make_q_agent(mdp.layout(), params(0.0, 0.0, 0.9, UpdateForm::continuing), 0.3);
    const auto before = st.weights;
    for (const auto& t : random_transitions(mdp, 50, 1)) q_step(st, t);
    CHECK(st.weights == before);
  }
  SUBCASE("optimal table has zero TD error on every transition") {
    const auto rnd = make_random_mdp(5, 3, 2);
    const auto opt = value_iteration(rnd, 0.9);
    for (StateId s = 0; s < rnd.num_states(); ++s)
      for (ActionId a = 0; a < rnd.num_actions(s); ++a) {
        // Expected TD error over outcomes of (s, a).
        double expected = 0.0;
        for (const auto& o : rnd.outcomes(s, a)) {
          auto st = make_q_agent(rnd.layout(), params(1.0, 0.0, 0.9, UpdateForm::continuing));
          st.weights = opt.q_star.values;
          q_step(st, {s, a, o.reward, o.next, rnd.is_terminal(o.next)});
          expected += o.prob * (st.q(s, a) - opt.q_star.at(s, a));
        }
        CHECK(std::abs(expected) <= 1e-9);
      }
  }
}

TEST_CASE("diff_q_step") {
  const auto mdp = make_corridor(2);
  SUBCASE("episodic form at gamma = 1 drops the bias from non-terminal targets") {
    auto st = make_q_agent(mdp.layout(), params(0.5, 0.2, 1.0, UpdateForm::episodic), 0.0, 3.0);
    st.weights[mdp.layout().index(1, 0)] = 2.0;
    const double delta = diff_q_step(st, {0, 0, -1.0, 1, false});
    CHECK(delta == doctest::Approx(-1.0 + 2.0 - 0.0));
    CHECK(st.q(0, 0) == doctest::Approx(0.5));
    CHECK(st.bias == doctest::Approx(3.0 + 0.2 * 0.5 * 1.0));
  }
  SUBCASE("continuing form, terminal transition") {
    auto st = make_q_agent(mdp.layout(), params(0.1, 0.0, 0.9, UpdateForm::continuing), 0.0, 1.0);
    CHECK(diff_q_step(st, {1, 0, 0.0, 2, true}) == doctest::Approx(-10.0));
  }
  SUBCASE("episodic form, terminal transition") {
    auto st = make_q_agent(mdp.layout(), params(0.1, 0.0, 0.9, UpdateForm::episodic), 0.0, 1.0);
    CHECK(diff_q_step(st, {1, 0, 0.0, 2, true}) == doctest::Approx(-1.0));
  }
  SUBCASE("non-terminal centering of each form") {
    auto c = make_q_agent(mdp.layout(), params(0.1, 0.0, 0.9, UpdateForm::continuing), 0.0, 2.0);
    auto e = make_q_agent(mdp.layout(), params(0.1, 0.0, 0.9, UpdateForm::episodic), 0.0, 2.0);
    CHECK(diff_q_step(c, {0, 0, 1.0, 1, false}) == doctest::Approx(1.0 - 2.0));
    CHECK(diff_q_step(e, {0, 0, 1.0, 1, false}) == doctest::Approx(1.0 - 0.2));
  }
  SUBCASE("continuing form reaching a terminal state at gamma = 1") {
    auto st = make_q_agent(mdp.layout(), params(0.1, 0.1, 1.0, UpdateForm::continuing, TaskKind::continuing));
    CHECK_THROWS_AS(diff_q_step(st, {1, 0, 0.0, 2, true}), ConfigError);
  }
  SUBCASE("terminal updates never read the successor row") {
    // The successor index is out of range on purpose.
    auto st = make_q_agent(mdp.layout(), params(0.1, 0.1, 0.9, UpdateForm::episodic));
    CHECK_NOTHROW(diff_q_step(st, {1, 0, -1.0, 1000, true}));
  }
  SUBCASE("eta = 0, b = 0 is bit-identical to q_step") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto rnd = make_random_mdp(6, 3, seed);
      for (auto form : {UpdateForm::continuing, UpdateForm::episodic}) {
        auto q = make_q_agent(rnd.layout(), params(0.3, 0.0, 0.9, form));
        auto d = make_q_agent(rnd.layout(), params(0.3, 0.0, 0.9, form));
        for (const auto& t : random_transitions(rnd, 2000, seed)) {
          q_step(q, t);
          diff_q_step(d, t);
        }
        CHECK(q.weights == d.weights);
        CHECK(d.bias == 0.0);
      }
    }
  }
}

TEST_CASE("diff_td_predict_step") {
  SUBCASE("all-zero state and reward") {
    const auto mdp = make_corridor(3);
    auto st = make_v_agent(4, params(0.5, 0.5, 0.9, UpdateForm::continuing));
    diff_td_predict_step(st, {0, 0, 0.0, 1, false});
    CHECK(st.weights == std::vector<double>(4, 0.0));
    CHECK(st.bias == 0.0);
  }
  SUBCASE("continuing one-state self-loop, r = c") {
    const double c = 2.0, eta = 1.0;
    AgentParams p{0.0, eta, 0.9, UpdateForm::continuing, TaskKind::continuing, StepSchedule::robbins_monro(10.0, 100.0)};
    auto st = make_v_agent(1, p);
    for (int i = 0; i < 200000; ++i) diff_td_predict_step(st, {0, 0, c, 0, false});
    // Expected update vanishes when c = b + (1 - gamma) V; b - eta V stays at its initial value 0.
    CHECK(st.bias + 0.1 * st.weights[0] == doctest::Approx(c).epsilon(1e-6));
    CHECK(st.bias == doctest::Approx(eta * c / (0.1 + eta)).epsilon(1e-6));
  }
  SUBCASE("episodic corridor: V + b converges to v_pi") {
    const auto mdp = make_corridor(3);
    AgentParams p{0.0, 0.5, 0.9, UpdateForm::episodic, TaskKind::episodic, StepSchedule::robbins_monro(20.0, 200.0)};
    auto st = make_v_agent(4, p);
    Rng rng = make_rng(1);
    StateId s = 0;
    for (int i = 0; i < 300000; ++i) {
      const auto step = sample_step(mdp, s, 0, rng);
      diff_td_predict_step(st, {s, 0, step.reward, step.next, step.terminal});
      s = step.terminal ? 0 : step.next;
    }
    const auto v = exact_values(mdp, uniform_policy(mdp), 0.9).v;
    for (StateId k = 0; k < 3; ++k) CHECK(st.weights[k] + st.bias == doctest::Approx(v[k]).epsilon(1e-3));
  }
  SUBCASE("tabular updates conserve b / eta - sum V") {
    const auto mdp = make_random_mdp(5, 2, 9);
    auto st = make_v_agent(mdp.num_states(), params(0.2, 0.05, 0.9, UpdateForm::episodic));
    for (const auto& t : random_transitions(mdp, 5000, 3)) diff_td_predict_step(st, t);
    const double total = std::accumulate(st.weights.begin(), st.weights.end(), 0.0);
    CHECK(std::abs(st.bias / 0.05 - total) <= 1e-9);
  }
}

TEST_CASE("linear_diff_td_step") {
  SUBCASE("bias-only continuing features reduce to b += eta alpha (r - (1 - gamma) b)") {
    const std::vector<bool> term{false, false};
    const auto fs = expand_features(Eigen::MatrixXd(2, 0), term, FeatureMode::continuing);
    auto st = make_linear_agent(0, params(0.1, 0.5, 0.9, UpdateForm::continuing, TaskKind::continuing));
    st.bias = 2.0;
    linear_diff_td_step(st, fs, {0, 0, 1.0, 1, false});
    CHECK(st.bias == doctest::Approx(2.0 + 0.5 * 0.1 * (1.0 - 0.1 * 2.0)));
  }
  SUBCASE("eta = 1 is plain linear TD on the expanded features") {
    const auto mdp = make_random_mdp(6, 2, 4);
    const auto fs = expand_features(gaussian_features(7, 3, 4, true), mdp, FeatureMode::episodic);
    auto st = make_linear_agent(3, params(0.05, 1.0, 0.9, UpdateForm::episodic));
    Eigen::VectorXd w = Eigen::VectorXd::Zero(4);
    for (const auto& t : random_transitions(mdp, 500, 8)) {
      linear_diff_td_step(st, fs, t);
      const double next = t.terminal_next ? 0.0 : fs.row(t.next).dot(w);
      const double delta = t.r + 0.9 * next - fs.row(t.s).dot(w);
      w += 0.05 * delta * fs.row(t.s);
    }
    CHECK((expanded_weights(st, fs) - w).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("dimension mismatch") {
    const std::vector<bool> term{false, false};
    const auto fs = expand_features(Eigen::MatrixXd::Zero(2, 0), term, FeatureMode::continuing);
    auto st = make_linear_agent(2, params(0.1, 0.5, 0.9, UpdateForm::continuing, TaskKind::continuing));
    CHECK_THROWS_AS(linear_diff_td_step(st, fs, {0, 0, 1.0, 1, false}), ConfigError);
  }
}

TEST_CASE("reparameterize and the equivalence harness") {
  const auto r = reparameterize(2.0, 0.5, 0.9);
  CHECK(r.b_hat == doctest::Approx(0.2));
  CHECK(r.eta_hat == doctest::Approx(0.05));
  const auto z = reparameterize(1.7, 0.3, 0.0);
  CHECK(z.b_hat == 1.7);
  CHECK(z.eta_hat == 0.3);
  CHECK_THROWS_AS(reparameterize(1.0, 1.0, 1.0), DomainError);

  const auto mdp = make_random_mdp(6, 3, 5);
  const std::vector<double> zeros(mdp.layout().size(), 0.0);
  const auto transitions = random_transitions(mdp, 10000, 5);
  CHECK(equivalence_harness(transitions, mdp.layout(), 0.9, 0.2, 0.0, 0.0, zeros) == 0.0);

  SUBCASE("single transition by hand") {
    // Episodic form with b = 1, eta = 0.5; continuing form with b_hat = 0.1, eta_hat = 0.05; gamma = 0.9.
    std::vector<Transition> one{{0, 0, 2.0, 1, false}};
    const TabularMDP tiny({{{{1, 2.0, 1.0}}}, {{{2, 0.0, 1.0}}}, {}}, {1.0, 0.0, 0.0}, {false, false, true}, 0.9);
    std::vector<double> w0{0.5, -1.0};
    // delta = 2 - 0.1 + 0.9 (-1) - 0.5 = 0.5 in both forms.
    CHECK(equivalence_harness(one, tiny.layout(), 0.9, 0.1, 0.5, 1.0, w0) <= 1e-15);
  }
  for (double g : {0.5, 0.9, 0.99}) {
    Rng rng = make_rng(static_cast<std::uint64_t>(g * 100));
    std::vector<double> w0(mdp.layout().size());
    for (double& w : w0) w = standard_normal(rng);
    CHECK(equivalence_harness(transitions, mdp.layout(), g, 0.1, 0.3, 1.5, w0) <= 1e-12);
  }
}

TEST_CASE("epsilon_greedy") {
  Rng rng = make_rng(3);
  const std::vector<double> row{0.0, 2.0, 1.0, 2.0 - 1e-12};
  SUBCASE("epsilon = 0 picks the argmax, splitting exact ties") {
    const std::vector<double> unique{0.0, 3.0, 1.0};
    for (int i = 0; i < 100; ++i) CHECK(epsilon_greedy(unique, 0.0, rng) == 1);
    int ones = 0;
    for (int i = 0; i < 10000; ++i) {
      const auto a = epsilon_greedy(row, 0.0, rng);
      CHECK((a == 1 || a == 3));
      ones += a == 1;
    }
    CHECK(std::abs(ones - 5000) <= 3 * 50);
  }
  SUBCASE("frequencies match the mixture within 4 sigma") {
    const int n = 100000;
    std::vector<int> counts(4, 0);
    for (int i = 0; i < n; ++i) ++counts[epsilon_greedy(row, 0.1, rng)];
    const std::vector<double> p{0.025, 0.475, 0.025, 0.475};
    for (int a = 0; a < 4; ++a) CHECK(std::abs(counts[a] - n * p[a]) <= 4.0 * std::sqrt(n * p[a] * (1 - p[a])));
  }
  SUBCASE("epsilon = 1 is uniform") {
    const int n = 40000;
    std::vector<int> counts(4, 0);
    for (int i = 0; i < n; ++i) ++counts[epsilon_greedy(row, 1.0, rng)];
    for (int c : counts) CHECK(std::abs(c - n / 4) <= 3.0 * std::sqrt(n * 0.25 * 0.75));
  }
  CHECK_THROWS_AS(epsilon_greedy(std::vector<double>{}, 0.1, rng), UsageError);
}

TEST_CASE("tabular control: the combined value approaches q*") {
  // Q^Delta + b (episodic form) or Q^Delta + b / (1 - gamma) (continuing form) against value iteration.
  const std::vector<TabularMDP> problems{make_corridor(4), make_gridworld({3, 3, RewardMode::painful, 0.9})};
  for (const auto& mdp : problems) {
    const auto opt = value_iteration(mdp, 0.9);
    for (auto form : {UpdateForm::episodic, UpdateForm::continuing}) {
      AgentParams p{0.0, 0.1, 0.9, form, TaskKind::episodic, StepSchedule::robbins_monro(200.0, 1000.0)};
      auto st = make_q_agent(mdp.layout(), p);
      Rng rng = make_rng(17);
      StateId s = sample_start(mdp, rng);
      for (int i = 0; i < 2'000'000; ++i) {
        const ActionId a = epsilon_greedy(st.q_row(s), 0.5, rng);
        const auto step = sample_step(mdp, s, a, rng);
        diff_q_step(st, {s, a, step.reward, step.next, step.terminal});
        s = step.terminal ? sample_start(mdp, rng) : step.next;
      }
      const double shift = form == UpdateForm::episodic ? st.bias : st.bias / (1.0 - 0.9);
      double worst = 0.0;
      for (std::size_t i = 0; i < st.weights.size(); ++i)
        worst = std::max(worst, std::abs(st.weights[i] + shift - opt.q_star.values[i]));
      CHECK(worst < 0.05);
    }
  }
}
