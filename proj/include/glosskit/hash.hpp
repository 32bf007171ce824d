#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace glosskit {

// SHA-256 digest of `data`.
std::array<std::uint8_t, 32> sha256(std::string_view data);

// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

// First eight digest bytes as a big-endian integer; a stable 64-bit hash.
std::uint64_t stable_hash64(std::string_view data);

// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

}  // namespace glosskit
