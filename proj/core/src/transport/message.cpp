#include "procwasm/transport/message.hpp"

#include <algorithm>

#include "common/le.hpp"

namespace procwasm::transport {

using detail::load_le;
using detail::store_le;

namespace {

void require_status(const AuxBuffer& aux, Status expected, const char* op) {
  Status actual = aux.status();
  if (actual != expected) {
    throw ProtocolState(std::string(op) + " requires status " + to_string(expected) + ", found " +
                        to_string(actual));
  }
}

void write_descriptors(std::span<std::byte> header, const std::vector<PayloadRef>& payloads) {
  store_le<std::uint32_t>(header, layout::kPayloadCount, static_cast<std::uint32_t>(payloads.size()));
  for (std::size_t i = 0; i < payloads.size(); ++i) {
    store_le<std::uint32_t>(header, layout::kDescriptors + 8 * i, payloads[i].offset);
    store_le<std::uint32_t>(header, layout::kDescriptors + 8 * i + 4, payloads[i].length);
  }
}

std::vector<PayloadRef> read_descriptors(const AuxBuffer& aux) {
  auto header = aux.bytes();
  auto count = load_le<std::uint32_t>(header, layout::kPayloadCount);
  if (count > layout::kMaxDescriptors) {
    throw MalformedMessage("payload descriptor count " + std::to_string(count) + " exceeds header space");
  }
  std::vector<PayloadRef> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i].offset = load_le<std::uint32_t>(header, layout::kDescriptors + 8 * i);
    out[i].length = load_le<std::uint32_t>(header, layout::kDescriptors + 8 * i + 4);
  }
  check_payloads(aux, out);
  return out;
}

}  // namespace

void check_payloads(const AuxBuffer& aux, const std::vector<PayloadRef>& payloads) {
  if (payloads.size() > layout::kMaxDescriptors) {
    throw MalformedMessage("too many payload descriptors: " + std::to_string(payloads.size()));
  }
  std::uint64_t total = 0;
  for (const auto& p : payloads) {
    std::uint64_t end = std::uint64_t{p.offset} + p.length;
    if (p.offset < kHeaderSize || end > aux.capacity()) {
      throw Overflow("payload [" + std::to_string(p.offset) + ", +" + std::to_string(p.length) +
                     ") outside data region of " + std::to_string(aux.data_capacity()) + " bytes");
    }
    total += p.length;
  }
  if (total > aux.data_capacity()) {
    throw Overflow("payloads total " + std::to_string(total) + " bytes, data capacity is " +
                   std::to_string(aux.data_capacity()));
  }
  std::vector<PayloadRef> sorted;
  sorted.reserve(payloads.size());
  for (const auto& p : payloads) {
    if (p.length > 0) sorted.push_back(p);
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const PayloadRef& a, const PayloadRef& b) { return a.offset < b.offset; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (std::uint64_t{sorted[i - 1].offset} + sorted[i - 1].length > sorted[i].offset) {
      throw MalformedMessage("overlapping payload regions at offset " + std::to_string(sorted[i].offset));
    }
  }
}

void encode_request(AuxBuffer& aux, const SyscallRequest& req) {
  require_status(aux, Status::Idle, "encode_request");
  if (req.args.size() > kMaxArgs) {
    throw MalformedMessage("request carries " + std::to_string(req.args.size()) + " args, max 8");
  }
  check_payloads(aux, req.payloads);
  auto header = aux.bytes();
  store_le<std::uint32_t>(header, layout::kSyscallNo, req.syscall_no);
  store_le<std::uint32_t>(header, layout::kArgCount, static_cast<std::uint32_t>(req.args.size()));
  store_le<std::uint32_t>(header, layout::kErrno, 0);
  store_le<std::int64_t>(header, layout::kReturnValue, 0);
  for (std::size_t i = 0; i < kMaxArgs; ++i) {
    store_le<std::int64_t>(header, layout::kArgs + 8 * i, i < req.args.size() ? req.args[i] : 0);
  }
  write_descriptors(header, req.payloads);
  aux.set_status(Status::Request);
}

SyscallRequest decode_request(const AuxBuffer& aux) {
  require_status(aux, Status::Request, "decode_request");
  auto header = aux.bytes();
  SyscallRequest req;
  req.syscall_no = load_le<std::uint32_t>(header, layout::kSyscallNo);
  auto argc = load_le<std::uint32_t>(header, layout::kArgCount);
  if (argc > kMaxArgs) {
    throw MalformedMessage("arg count " + std::to_string(argc) + " exceeds 8");
  }
  req.args.resize(argc);
  for (std::size_t i = 0; i < argc; ++i) {
    req.args[i] = load_le<std::int64_t>(header, layout::kArgs + 8 * i);
  }
  req.payloads = read_descriptors(aux);
  return req;
}

void encode_response(AuxBuffer& aux, const SyscallResponse& resp) {
  require_status(aux, Status::Request, "encode_response");
  if (resp.error != 0 && resp.return_value >= 0) {
    throw MalformedMessage("error response must carry a negative return value");
  }
  check_payloads(aux, resp.out_payloads);
  auto header = aux.bytes();
  store_le<std::uint32_t>(header, layout::kErrno, resp.error);
  store_le<std::int64_t>(header, layout::kReturnValue, resp.return_value);
  write_descriptors(header, resp.out_payloads);
  aux.set_status(Status::Done);
}

SyscallResponse decode_response(const AuxBuffer& aux) {
  require_status(aux, Status::Done, "decode_response");
  auto header = aux.bytes();
  SyscallResponse resp;
  resp.error = load_le<std::uint32_t>(header, layout::kErrno);
  resp.return_value = load_le<std::int64_t>(header, layout::kReturnValue);
  resp.out_payloads = read_descriptors(aux);
  return resp;
}

SyscallResponse post_and_wait(AuxBuffer& aux, const SyscallRequest& req) {
  if (aux.closed()) throw KernelGone("kernel closed the aux buffer");
  encode_request(aux, req);
  aux.ring_doorbell();
  if (!aux.wait_for(Status::Done)) {
    throw KernelGone("kernel closed the aux buffer before replying to syscall " +
                     std::to_string(req.syscall_no));
  }
  SyscallResponse resp = decode_response(aux);
  aux.set_status(Status::Idle);
  return resp;
}

}  // namespace procwasm::transport
