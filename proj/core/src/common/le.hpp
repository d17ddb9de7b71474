#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace procwasm::detail {

template <typename T>
inline void store_le(std::span<std::byte> out, std::size_t offset, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out[offset + i] = static_cast<std::byte>((u >> (8 * i)) & 0xff);
  }
}

template <typename T>
inline T load_le(std::span<const std::byte> in, std::size_t offset) {
  using U = std::make_unsigned_t<T>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    u |= static_cast<U>(static_cast<U>(in[offset + i]) << (8 * i));
  }
  return static_cast<T>(u);
}

}  // namespace procwasm::detail
