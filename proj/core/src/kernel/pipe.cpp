#include "procwasm/kernel/pipe.hpp"

#include <algorithm>
#include <cstring>

namespace procwasm::kernel {

std::size_t Pipe::write(std::span<const std::byte> bytes) noexcept {
  const std::size_t n = std::min(space(), bytes.size());
  const std::size_t tail = (head_ + count_) % kCapacity;
  const std::size_t first = std::min(n, kCapacity - tail);
  std::memcpy(ring_.data() + tail, bytes.data(), first);
  std::memcpy(ring_.data(), bytes.data() + first, n - first);
  count_ += n;
  return n;
}

std::size_t Pipe::read(std::span<std::byte> out) noexcept {
  const std::size_t n = std::min(count_, out.size());
  const std::size_t first = std::min(n, kCapacity - head_);
  std::memcpy(out.data(), ring_.data() + head_, first);
  std::memcpy(out.data() + first, ring_.data(), n - first);
  head_ = (head_ + n) % kCapacity;
  count_ -= n;
  return n;
}

}  // namespace procwasm::kernel
