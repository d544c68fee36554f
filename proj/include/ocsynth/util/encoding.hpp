#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ocs {

std::string base64_encode(std::span<const std::uint8_t> bytes);
// Throws ProtocolError on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);

}  // namespace ocs
