#include "dtd/mdp_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dtd/errors.hpp"

namespace dtd {

namespace {

using nlohmann::ordered_json;

constexpr const char* kFormat = "dtd-mdp";
constexpr int kVersion = 1;

void reject_unknown(const ordered_json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : obj.items())
    if (!allowed.contains(key)) throw ConfigError(where + ": unknown field '" + key + "'");
}

const ordered_json& field(const ordered_json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(std::string("mdp: missing field '") + key + "'");
  return *it;
}

}  // namespace

std::string mdp_to_text(const TabularMDP& mdp) {
  ordered_json doc;
  doc["format"] = kFormat;
  doc["version"] = kVersion;
  doc["num_states"] = mdp.num_states();
  doc["gamma"] = mdp.gamma();
  doc["terminal"] = mdp.terminal();
  doc["start"] = mdp.start_dist();
  ordered_json states = ordered_json::array();
  for (StateId s = 0; s < mdp.num_states(); ++s) {
    ordered_json actions = ordered_json::array();
    for (ActionId a = 0; a < mdp.num_actions(s); ++a) {
      ordered_json outs = ordered_json::array();
      for (const auto& o : mdp.outcomes(s, a)) outs.push_back({{"next", o.next}, {"reward", o.reward}, {"prob", o.prob}});
      actions.push_back(std::move(outs));
    }
    states.push_back(std::move(actions));
  }
  doc["transitions"] = std::move(states);
  return doc.dump(1) + "\n";
}

TabularMDP mdp_from_text(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("mdp: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("mdp: document must be an object");
  reject_unknown(doc, {"format", "version", "num_states", "gamma", "terminal", "start", "transitions"}, "mdp");
  try {
    if (field(doc, "format").get<std::string>() != kFormat) throw ConfigError("mdp: unexpected format tag");
    if (field(doc, "version").get<int>() != kVersion) throw ConfigError("mdp: unsupported version");
    const auto n = field(doc, "num_states").get<std::size_t>();
    auto terminal = field(doc, "terminal").get<std::vector<bool>>();
    auto start = field(doc, "start").get<std::vector<double>>();
    const auto& states = field(doc, "transitions");
    if (!states.is_array() || states.size() != n) throw ConfigError("mdp: transitions must list every state");
    std::vector<std::vector<std::vector<Outcome>>> t(n);
    for (std::size_t s = 0; s < n; ++s) {
      for (const auto& action : states[s]) {
        std::vector<Outcome> outs;
        for (const auto& o : action) {
          reject_unknown(o, {"next", "reward", "prob"}, "mdp transition");
          outs.push_back({field(o, "next").get<StateId>(), field(o, "reward").get<double>(), field(o, "prob").get<double>()});
        }
        t[s].push_back(std::move(outs));
      }
    }
    return TabularMDP(std::move(t), std::move(start), std::move(terminal), field(doc, "gamma").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("mdp: ") + e.what());
  }
}

void save_mdp(const TabularMDP& mdp, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << mdp_to_text(mdp);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

TabularMDP load_mdp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return mdp_from_text(ss.str());
}

}  // namespace dtd
