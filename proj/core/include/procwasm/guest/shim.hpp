#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <vector>

#include "procwasm/guest/instance.hpp"
#include "procwasm/guest/linear_memory.hpp"
#include "procwasm/transport/aux_buffer.hpp"
#include "procwasm/transport/message.hpp"

namespace procwasm::guest {

struct ShimStats {
  std::map<std::uint32_t, std::uint64_t> requests;  // kernel requests issued, by syscall number
  std::uint64_t empty_reads = 0;                    // read requests that returned 0 bytes
  std::chrono::nanoseconds marshal_time{0};         // copies and encoding, waits excluded

  std::uint64_t count(std::uint32_t no) const {
    auto it = requests.find(no);
    return it == requests.end() ? 0 : it->second;
  }
};

/// Guest-side syscall runtime. Validates guest (offset, length) arguments,
/// copies buffers between linear memory and the aux data region, splits
/// transfers larger than the data capacity into several requests, and
/// blocks in post_and_wait for each one. The kernel never sees guest memory.
///
/// Errors come back to the guest as negative errno values; a bad guest
/// address yields -EFAULT without contacting the kernel.
class Shim : public SyscallHandler {
 public:
  Shim(LinearMemory& memory, transport::AuxBuffer& aux);

  std::int64_t syscall(std::uint32_t no, const std::array<std::int64_t, 6>& args) override;
  void on_trap(const std::string& reason) override;

  const ShimStats& stats() const noexcept { return stats_; }

 private:
  using Clock = std::chrono::steady_clock;

  transport::SyscallResponse call(std::uint32_t no, std::vector<std::int64_t> args,
                                  std::vector<transport::PayloadRef> payloads = {});
  std::int64_t do_read(std::int64_t fd, std::uint64_t buf, std::uint64_t len);
  std::int64_t do_write(std::int64_t fd, std::uint64_t buf, std::uint64_t len);
  std::int64_t do_writev(std::int64_t fd, std::uint64_t iov, std::int64_t iovcnt);
  std::int64_t do_open(std::uint64_t path, std::uint64_t len, std::int64_t flags);
  std::int64_t do_stat(std::uint64_t path, std::uint64_t len, std::uint64_t out);
  std::int64_t do_pipe(std::uint64_t out);
  std::int64_t do_spawn(const std::array<std::int64_t, 6>& a);
  std::int64_t do_args_sizes(std::uint64_t out);
  std::int64_t do_args_get(std::uint64_t argv, std::uint64_t buf);

  void to_aux(std::uint32_t aux_offset, std::uint64_t guest_offset, std::uint64_t len);
  void from_aux(std::uint32_t aux_offset, std::uint64_t guest_offset, std::uint64_t len);

  LinearMemory& memory_;
  transport::AuxBuffer& aux_;
  ShimStats stats_;
  Clock::time_point mark_;
};

}  // namespace procwasm::guest
