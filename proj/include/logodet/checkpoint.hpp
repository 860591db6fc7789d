#pragma once

#include <string>

#include "logodet/network.hpp"

namespace logodet {

// Binary model checkpoint ("LDCK" magic, versioned, little-endian f32
// payloads, trailing integrity hash). Factored FC layers are tagged so
// compressed models round-trip. Layout details in docs/checkpoint-format.md.
void save_checkpoint(const std::string& path, const NetworkParams& params);
NetworkParams load_checkpoint(const std::string& path);

}  // namespace logodet
