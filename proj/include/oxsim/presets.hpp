#pragma once

#include <string>

#include "oxsim/hourglass.hpp"

namespace oxsim::presets {

/// Built-in material presets: "hfo2" (reference stack, pronounced
/// relaxation and correlation loss), "hfalo" (peaked initial distribution,
/// limited drift) and "tao" (stable, near-zero drift). Throws ConfigError
/// for unknown names.
hourglass::HourglassParams material(const std::string& name);

bool is_known_material(const std::string& name);

/// Keyed plain-text form, one `name = value` per line, SI units (energies
/// in eV where the key says so).
std::string serialize_params(const hourglass::HourglassParams& params);
hourglass::HourglassParams parse_params(const std::string& text);

}  // namespace oxsim::presets
