#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "relu_forge/network.hpp"

namespace relu_forge {

// JSON layout:
//   {"layers": [{"weights": [[row0...], [row1...]], "bias": [...]}, ...]}
// Doubles are emitted with the library's shortest round-trip formatting, so
// save/load is bit-exact.
nlohmann::json network_to_json(const Network& net);

// Throws ParseError / ValidationError / DimensionError with the offending
// layer index in the message.
Network network_from_json(const nlohmann::json& j);

void save_network(const Network& net, const std::string& path);
Network load_network(const std::string& path);

} // namespace relu_forge
