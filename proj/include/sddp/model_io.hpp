#pragma once

#include <string>

#include "sddp/graph.hpp"

namespace sddp {

/// Parses the JSON model document (see README for the schema).  Unknown keys
/// are rejected; schema_version is required.  The top-level discount factor is
/// folded into every non-root arc.
PolicyGraph parse_model(const std::string& json_text);
PolicyGraph load_model_file(const std::string& path);

std::string serialize_model(const PolicyGraph& g);
void save_model_file(const PolicyGraph& g, const std::string& path);

}  // namespace sddp
