#include "sbl/env_io.hpp"

#include <fstream>

#include "sbl/errors.hpp"

namespace sbl {

using nlohmann::json;

namespace {

const json& require(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw InvalidEnvironment(std::string("missing field '") + key + "'");
  return *it;
}

std::vector<std::string> string_list(const json& value, const char* key) {
  if (!value.is_array()) throw InvalidEnvironment(std::string("'") + key + "' must be a list");
  std::vector<std::string> out;
  for (const auto& item : value) {
    if (!item.is_string()) {
      throw InvalidEnvironment(std::string("'") + key + "' must contain strings");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

}  // namespace

EnvDescription parse_env_description(const json& doc) {
  if (!doc.is_object()) throw InvalidEnvironment("environment config must be an object");
  try {
    EnvDescription desc;
    desc.name = doc.value("name", std::string{});
    desc.alpha = require(doc, "alpha").get<double>();
    desc.epsilon = require(doc, "epsilon").get<double>();
    desc.actions = string_list(require(doc, "actions"), "actions");
    desc.observations = string_list(require(doc, "observations"), "observations");
    if (auto it = doc.find("initial_state"); it != doc.end() && !it->is_null()) {
      desc.initial_state = it->get<long long>();
    }
    const auto& states = require(doc, "states");
    if (!states.is_array()) throw InvalidEnvironment("'states' must be a list");
    for (const auto& s : states) {
      EnvDescription::StateRecord rec;
      rec.id = require(s, "id").get<long long>();
      rec.observation = require(s, "observation").get<std::string>();
      const auto& transitions = require(s, "transitions");
      if (!transitions.is_object()) {
        throw InvalidEnvironment("state " + std::to_string(rec.id) +
                                 ": 'transitions' must be an object");
      }
      for (const auto& [action, target] : transitions.items()) {
        rec.transitions[action] = target.get<long long>();
      }
      desc.states.push_back(std::move(rec));
    }
    return desc;
  } catch (const json::exception& e) {
    throw InvalidEnvironment(std::string("malformed environment config: ") + e.what());
  }
}

EnvDescription read_env_description(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidEnvironment("cannot open environment file " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw InvalidEnvironment("cannot parse " + path.string() + ": " + e.what());
  }
  return parse_env_description(doc);
}

AlphaEpsilonEnv load_env(const std::filesystem::path& path) {
  return AlphaEpsilonEnv::from_description(read_env_description(path));
}

json env_description_to_json(const EnvDescription& desc) {
  json doc;
  if (!desc.name.empty()) doc["name"] = desc.name;
  doc["alpha"] = desc.alpha;
  doc["epsilon"] = desc.epsilon;
  doc["actions"] = desc.actions;
  doc["observations"] = desc.observations;
  if (desc.initial_state) doc["initial_state"] = *desc.initial_state;
  doc["states"] = json::array();
  for (const auto& s : desc.states) {
    json rec;
    rec["id"] = s.id;
    rec["observation"] = s.observation;
    rec["transitions"] = json::object();
    for (const auto& [action, target] : s.transitions) rec["transitions"][action] = target;
    doc["states"].push_back(std::move(rec));
  }
  return doc;
}

}  // namespace sbl
