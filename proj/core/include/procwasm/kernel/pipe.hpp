#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace procwasm::kernel {

/// Fixed-capacity byte ring. Reader/writer counts track open descriptions.
class Pipe {
 public:
  static constexpr std::size_t kCapacity = 64 * 1024;

  Pipe() : ring_(kCapacity) {}

  std::size_t available() const noexcept { return count_; }
  std::size_t space() const noexcept { return kCapacity - count_; }

  /// Copies min(space(), bytes.size()) bytes in; returns the count.
  std::size_t write(std::span<const std::byte> bytes) noexcept;
  /// Copies min(available(), out.size()) bytes out; returns the count.
  std::size_t read(std::span<std::byte> out) noexcept;

  int readers = 0;
  int writers = 0;

 private:
  std::vector<std::byte> ring_;
  std::size_t head_ = 0;  // next byte to read
  std::size_t count_ = 0;
};

}  // namespace procwasm::kernel
