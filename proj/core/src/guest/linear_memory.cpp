#include "procwasm/guest/linear_memory.hpp"

#include <cstring>
#include <string>

namespace procwasm::guest {

LinearMemory::LinearMemory(std::uint32_t pages) : bytes_(std::size_t{pages} * 65536) {}

void LinearMemory::check(std::uint64_t offset, std::uint64_t len) const {
  if (!contains(offset, len)) {
    throw OutOfBounds("guest access [" + std::to_string(offset) + ", +" + std::to_string(len) +
                      ") exceeds linear memory of " + std::to_string(size()) + " bytes");
  }
}

std::vector<std::byte> LinearMemory::read(std::uint64_t offset, std::uint64_t len) const {
  check(offset, len);
  return {bytes_.begin() + static_cast<std::ptrdiff_t>(offset),
          bytes_.begin() + static_cast<std::ptrdiff_t>(offset + len)};
}

void LinearMemory::read_into(std::uint64_t offset, std::span<std::byte> out) const {
  check(offset, out.size());
  if (!out.empty()) std::memcpy(out.data(), bytes_.data() + offset, out.size());
}

void LinearMemory::write(std::uint64_t offset, std::span<const std::byte> data) {
  check(offset, data.size());
  if (!data.empty()) std::memcpy(bytes_.data() + offset, data.data(), data.size());
}

}  // namespace procwasm::guest
