#include "procwasm/transport/chunking.hpp"

#include <stdexcept>

namespace procwasm::transport {

ChunkPlan plan_chunks(std::uint64_t total, std::uint64_t data_capacity) {
  if (data_capacity == 0) throw std::invalid_argument("plan_chunks: data capacity must be positive");
  ChunkPlan plan;
  std::uint64_t full = total / data_capacity;
  std::uint64_t rest = total % data_capacity;
  plan.chunks.assign(full, data_capacity);
  if (rest != 0) plan.chunks.push_back(rest);
  return plan;
}

}  // namespace procwasm::transport
