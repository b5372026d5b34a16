#pragma once

#include <string>
#include <string_view>

namespace cml {

// Hex-encoded SHA-256.
std::string sha256_hex(std::string_view bytes);

}  // namespace cml
