#pragma once

#include <filesystem>
#include <string>

#include "clever/net.hpp"

namespace clever {

// Model file schema:
// {"input_dim": d, "num_classes": K,
//  "layers": [{"weights": [[...row...], ...], "bias": [...],
//              "activation": "identity"|"relu"|"softplus"|"brelu",
//              "cap": number (brelu only)}]}
Network load_network_json(const std::filesystem::path& path);
Network network_from_json_text(const std::string& text, const std::string& origin);
std::string network_to_json_text(const Network& net);
void save_network_json(const Network& net, const std::filesystem::path& path);

}  // namespace clever
