#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace pnsim {

inline constexpr std::string_view kToolName = "pnsim";
inline constexpr std::string_view kVersion = "0.1.0";

/// FNV-1a over bytes; used to stamp outputs with a config fingerprint.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string to_hex(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

}  // namespace pnsim
