#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "procwasm/transport/aux_buffer.hpp"

namespace procwasm::transport {

/// (absolute buffer offset, length) of a payload in the data region.
struct PayloadRef {
  std::uint32_t offset = 0;
  std::uint32_t length = 0;
  friend bool operator==(const PayloadRef&, const PayloadRef&) = default;
};

inline constexpr std::size_t kMaxArgs = 8;

struct SyscallRequest {
  std::uint32_t syscall_no = 0;
  std::vector<std::int64_t> args;
  std::vector<PayloadRef> payloads;
  friend bool operator==(const SyscallRequest&, const SyscallRequest&) = default;
};

struct SyscallResponse {
  std::int64_t return_value = 0;
  std::uint32_t error = 0;
  std::vector<PayloadRef> out_payloads;

  static SyscallResponse ok(std::int64_t value, std::vector<PayloadRef> out = {}) {
    return {value, 0, std::move(out)};
  }
  static SyscallResponse fail(std::int32_t errno_value) {
    return {-static_cast<std::int64_t>(errno_value), static_cast<std::uint32_t>(errno_value), {}};
  }
  friend bool operator==(const SyscallResponse&, const SyscallResponse&) = default;
};

// Header layout, little-endian.
namespace layout {
inline constexpr std::size_t kStatus = 0;
inline constexpr std::size_t kSyscallNo = 4;
inline constexpr std::size_t kArgCount = 8;
inline constexpr std::size_t kErrno = 12;
inline constexpr std::size_t kReturnValue = 16;
inline constexpr std::size_t kArgs = 32;
inline constexpr std::size_t kPayloadCount = 96;
inline constexpr std::size_t kDescriptors = 100;
inline constexpr std::size_t kMaxDescriptors = (kHeaderSize - kDescriptors) / 8;
}  // namespace layout

/// Writes the request fields, then sets status REQUEST. Requires IDLE.
void encode_request(AuxBuffer& aux, const SyscallRequest& req);
/// Requires REQUEST.
SyscallRequest decode_request(const AuxBuffer& aux);
/// Writes the response fields, then sets status DONE. Requires REQUEST.
void encode_response(AuxBuffer& aux, const SyscallResponse& resp);
/// Requires DONE.
SyscallResponse decode_response(const AuxBuffer& aux);

/// Checks payload extents against `aux` without touching it.
void check_payloads(const AuxBuffer& aux, const std::vector<PayloadRef>& payloads);

/// Shim side of a syscall: post `req`, ring the kernel, block until DONE,
/// decode, and reset the status to IDLE. Throws KernelGone if the buffer is
/// closed before the response arrives.
SyscallResponse post_and_wait(AuxBuffer& aux, const SyscallRequest& req);

}  // namespace procwasm::transport
