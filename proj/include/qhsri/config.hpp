#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "qhsri/driver.hpp"

namespace qhsri {

/// Invalid configuration; the message names the source and line when known.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parses a YAML experiment configuration. `overrides` are "key=value" pairs
/// with dotted keys for nested fields (e.g. "qhsri.margin=0.3"); they are
/// applied before validation. Unknown keys are rejected.
ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {},
                              const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

}  // namespace qhsri
