#pragma once

#include <stdexcept>
#include <string>

#include "json.hpp"
#include "rtrc/tasks.hpp"

namespace rtrc {

/// Invalid configuration; `key()` is the dotted path of the offending entry.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& message)
        : std::runtime_error(key + ": " + message), key_(std::move(key)) {}

    const std::string& key() const { return key_; }

private:
    std::string key_;
};

/// Parses an experiment config. Unknown keys are rejected. A run manifest is
/// accepted too, in which case its embedded config is used.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// Every field, defaults included, in the same schema config_from_json reads.
nlohmann::json config_to_json(const ExperimentConfig& cfg);

}  // namespace rtrc
