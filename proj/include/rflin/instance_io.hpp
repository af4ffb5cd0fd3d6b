#pragma once

#include <string>

#include "rflin/linear_mdp.hpp"

namespace rflin {

// Instance documents are JSON objects with the keys
//   d, H, states, actions, phi, mu, theta, initial_state
// plus an optional "version" (currently 1). phi is indexed [state][action]
// -> d numbers, mu is [step][state] -> d numbers, theta is [step] -> d
// numbers, initial_state names one entry of "states". Floats are written
// with 17 significant digits, so a write/read cycle is bit-exact.

std::string serialize(const LinearMDP& mdp);

/// Throws ParseError naming the offending line or field.
LinearMDP deserialize(const std::string& text);

void save_instance(const LinearMDP& mdp, const std::string& path);
LinearMDP load_instance(const std::string& path);

}  // namespace rflin
