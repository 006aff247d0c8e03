#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace aesp::crypto {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;
using Hash32 = std::array<std::uint8_t, 32>;

inline ByteView as_bytes(std::string_view s) noexcept {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline Bytes to_bytes(std::string_view s) {
  auto v = as_bytes(s);
  return {v.begin(), v.end()};
}

std::string to_hex(ByteView data);
/// Accepts an optional "0x" prefix and either letter case.
Bytes from_hex(std::string_view hex);

std::string to_base64(ByteView data);
Bytes from_base64(std::string_view text);

/// Bitcoin alphabet; each leading zero byte becomes a leading '1'.
std::string to_base58(ByteView data);
Bytes from_base58(std::string_view text);

}  // namespace aesp::crypto
