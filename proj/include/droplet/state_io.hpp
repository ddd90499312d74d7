#pragma once

#include <filesystem>
#include <string>

#include "droplet/types.hpp"

namespace droplet {

// Self-describing, versioned state document. Serialization is byte-stable:
// fixed field order and 17-significant-digit floats, so saving the same
// state twice yields identical files.
std::string serialize_state(const ExperimentState& state);
ExperimentState deserialize_state(const std::string& text);

void save_state(const ExperimentState& state, const std::filesystem::path& path);
ExperimentState load_state(const std::filesystem::path& path);

// %.17g rendering used everywhere a double must round-trip exactly.
std::string format_double(double v);

}  // namespace droplet
