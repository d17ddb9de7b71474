#pragma once

#include <cstdint>
#include <vector>

namespace procwasm::transport {

struct ChunkPlan {
  std::vector<std::uint64_t> chunks;
  friend bool operator==(const ChunkPlan&, const ChunkPlan&) = default;
};

/// Splits a transfer of `total` bytes into chunks of at most `data_capacity`
/// bytes; every chunk but the last is full. Throws std::invalid_argument when
/// data_capacity is 0.
ChunkPlan plan_chunks(std::uint64_t total, std::uint64_t data_capacity);

}  // namespace procwasm::transport
