#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "sbl/env.hpp"

namespace sbl {

/// Parses the environment config schema:
///   { "name": str?, "alpha": num, "epsilon": num, "actions": [str],
///     "observations": [str], "initial_state": int?,
///     "states": [ {"id": int, "observation": str,
///                  "transitions": {action: next_id}} ] }
/// Throws InvalidEnvironment on schema errors (missing fields, wrong types).
/// Semantic checks are left to validate_env.
EnvDescription parse_env_description(const nlohmann::json& doc);

EnvDescription read_env_description(const std::filesystem::path& path);

/// Reads, validates and builds. Throws InvalidEnvironment with every violation.
AlphaEpsilonEnv load_env(const std::filesystem::path& path);

nlohmann::json env_description_to_json(const EnvDescription& desc);

}  // namespace sbl
