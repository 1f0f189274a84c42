#pragma once

// Text serialization of TabularMDP. The document is JSON with these fields:
//
//   format       "dtd-mdp"
//   version      1
//   num_states   integer
//   gamma        discount in [0, 1]
//   terminal     array of booleans, one per state
//   start        array of start probabilities, one per state
//   transitions  per state, per action, an array of {"next", "reward", "prob"} triples;
//                terminal states carry an empty action list
//
// Unknown fields are rejected.

#include <filesystem>
#include <string>

#include "dtd/mdp.hpp"

namespace dtd {

std::string mdp_to_text(const TabularMDP& mdp);
TabularMDP mdp_from_text(const std::string& text);

void save_mdp(const TabularMDP& mdp, const std::filesystem::path& path);
TabularMDP load_mdp(const std::filesystem::path& path);

}  // namespace dtd
