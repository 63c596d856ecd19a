#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace mrloc {

// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::string_view bytes);

std::uint64_t splitmix64(std::uint64_t x);

// Order-dependent mix of several integers into one seed.
template <typename... Ts>
std::uint64_t derive_seed(std::uint64_t base, Ts... parts) {
  std::uint64_t h = splitmix64(base);
  ((h = splitmix64(h ^ static_cast<std::uint64_t>(parts))), ...);
  return h;
}

}  // namespace mrloc
