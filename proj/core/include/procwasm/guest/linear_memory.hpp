#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace procwasm::guest {

/// Guest passed an address range outside its linear memory.
class OutOfBounds : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// A guest's linear memory: fixed size, a whole number of 64 KiB pages.
class LinearMemory {
 public:
  explicit LinearMemory(std::uint32_t pages);

  std::uint64_t size() const noexcept { return bytes_.size(); }
  std::uint32_t pages() const noexcept { return static_cast<std::uint32_t>(bytes_.size() / 65536); }

  /// True iff [offset, offset + len) lies inside the memory.
  bool contains(std::uint64_t offset, std::uint64_t len) const noexcept {
    return offset <= size() && len <= size() - offset;
  }

  std::vector<std::byte> read(std::uint64_t offset, std::uint64_t len) const;
  void read_into(std::uint64_t offset, std::span<std::byte> out) const;
  void write(std::uint64_t offset, std::span<const std::byte> data);

  std::uint8_t* data() noexcept { return reinterpret_cast<std::uint8_t*>(bytes_.data()); }
  const std::uint8_t* data() const noexcept { return reinterpret_cast<const std::uint8_t*>(bytes_.data()); }

 private:
  void check(std::uint64_t offset, std::uint64_t len) const;

  std::vector<std::byte> bytes_;
};

}  // namespace procwasm::guest
