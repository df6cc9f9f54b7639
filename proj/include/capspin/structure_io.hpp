#pragma once

#include <string>
#include <vector>

#include "capspin/spin_system.hpp"

namespace capspin {

// Parses and validates a structure file (JSON). Field errors name the
// offending key/pair. strict rejects unknown keys; otherwise they are
// collected into `warnings` (when given) and ignored.
SpinSystem parse_structure(const std::string& path, bool strict = true,
                           std::vector<std::string>* warnings = nullptr);

SpinSystem parse_structure_text(const std::string& text, bool strict = true,
                                std::vector<std::string>* warnings = nullptr,
                                const std::string& origin = "<string>");

// FNV-1a 64-bit hash of the canonical serialization, "fnv1a:" + 16 hex digits.
std::string structure_hash(const SpinSystem& sys);

}  // namespace capspin
