#pragma once

#include <string>
#include <string_view>

namespace armarecon {

/// Hex SHA-256 digest of a byte string (run-manifest input fingerprints).
std::string sha256_hex(std::string_view bytes);

}  // namespace armarecon
