#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dtd/envs.hpp"
#include "dtd/errors.hpp"
#include "dtd/mdp_io.hpp"

using namespace dtd;
namespace fs = std::filesystem;

namespace {

std::string replace_once(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  return text.replace(pos, from.size(), to);
}

}  // namespace

TEST_CASE("round trip") {
  std::vector<TabularMDP> mdps{make_corridor(3), make_two_state_loop(2.5, 0.5), make_gridworld({4, 3, RewardMode::sparse, 0.9}),
                               make_corridor(2, 1.0)};
  for (std::uint64_t seed = 0; seed < 10; ++seed) mdps.push_back(make_random_mdp(3 + seed % 4, 1 + seed % 3, seed, 0.99));
  for (const auto& mdp : mdps) {
    const auto text = mdp_to_text(mdp);
    const auto back = mdp_from_text(text);
    CHECK(back == mdp);
    CHECK(mdp_to_text(back) == text);
  }
}

TEST_CASE("files") {
  const fs::path dir = fs::temp_directory_path() / "dtd_mdp_io_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto mdp = make_random_mdp(5, 2, 7);
  save_mdp(mdp, dir / "m.json");
  CHECK(load_mdp(dir / "m.json") == mdp);
  CHECK(load_mdp(DTD_GOLDEN_DIR "/random_5_2_7.json") == mdp);
  CHECK_THROWS_AS(load_mdp(dir / "missing.json"), ConfigError);
  CHECK_THROWS_AS(save_mdp(mdp, dir / "no_such_dir" / "m.json"), std::runtime_error);
  fs::remove_all(dir);
}

TEST_CASE("malformed documents are rejected") {
  const auto text = mdp_to_text(make_corridor(1));
  CHECK_THROWS_AS(mdp_from_text("not json"), ConfigError);
  CHECK_THROWS_AS(mdp_from_text("[]"), ConfigError);
  CHECK_THROWS_WITH_AS(mdp_from_text(replace_once(text, "\"gamma\"", "\"extra\": 1, \"gamma\"")),
                       doctest::Contains("unknown field 'extra'"), ConfigError);
  CHECK_THROWS_WITH_AS(mdp_from_text(replace_once(text, "\"next\"", "\"nxt\"")), doctest::Contains("nxt"), ConfigError);
  CHECK_THROWS_AS(mdp_from_text(replace_once(text, "\"dtd-mdp\"", "\"other\"")), ConfigError);
  CHECK_THROWS_AS(mdp_from_text(replace_once(text, "\"version\": 1", "\"version\": 2")), ConfigError);
  CHECK_THROWS_AS(mdp_from_text(replace_once(text, "\"num_states\": 2", "\"num_states\": 3")), ConfigError);
  CHECK_THROWS_WITH_AS(mdp_from_text(replace_once(text, "\"prob\": 1.0", "\"prob\": 0.5")), doctest::Contains("probabilities"),
                       ConfigError);
  CHECK_THROWS_AS(mdp_from_text(replace_once(text, "\"gamma\": 0.9", "\"gamma\": \"high\"")), ConfigError);
}
