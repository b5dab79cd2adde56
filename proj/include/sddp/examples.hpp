#pragma once

#include <map>
#include <string>
#include <vector>

#include "sddp/graph.hpp"

namespace sddp {

std::vector<std::string> example_names();

/// Builds one of the library examples with paper defaults; scalar overrides
/// replace named parameters (unknown names or keys throw ConfigError).
PolicyGraph build_example(const std::string& name,
                          const std::map<std::string, double>& overrides = {});

}  // namespace sddp
