#pragma once

#include <istream>
#include <string>
#include <vector>

#include "CLI11.hpp"

namespace sae::cli {

/// CLI11 config reader for JSON files. Nested objects address subcommands:
///   {"seed": 1, "train-reasoner": {"hops": 3, "edges": "1,2"}}
/// Arrays become multi-value inputs; booleans become "true"/"false".
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool write_description,
                        std::string prefix) const override;
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override;
};

}  // namespace sae::cli
