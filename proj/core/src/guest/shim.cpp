#include "procwasm/guest/shim.hpp"

#include <cstring>

#include "common/le.hpp"
#include "procwasm/abi.hpp"
#include "procwasm/transport/chunking.hpp"

namespace procwasm::guest {

using transport::PayloadRef;
using transport::SyscallResponse;

namespace {

constexpr std::int64_t kMaxIovecs = 1024;

std::int64_t neg(std::int32_t e) { return -static_cast<std::int64_t>(e); }

std::uint32_t align8(std::uint64_t v) { return static_cast<std::uint32_t>((v + 7) & ~std::uint64_t{7}); }

bool bad_range(std::int64_t off, std::int64_t len) { return off < 0 || len < 0; }

}  // namespace

Shim::Shim(LinearMemory& memory, transport::AuxBuffer& aux) : memory_(memory), aux_(aux) {}

void Shim::to_aux(std::uint32_t aux_offset, std::uint64_t guest_offset, std::uint64_t len) {
  memory_.read_into(guest_offset, aux_.data_at(aux_offset, len));
}

void Shim::from_aux(std::uint32_t aux_offset, std::uint64_t guest_offset, std::uint64_t len) {
  auto src = aux_.data_at(aux_offset, len);
  memory_.write(guest_offset, src);
}

SyscallResponse Shim::call(std::uint32_t no, std::vector<std::int64_t> args, std::vector<PayloadRef> payloads) {
  ++stats_.requests[no];
  stats_.marshal_time += Clock::now() - mark_;
  transport::SyscallRequest req{no, std::move(args), std::move(payloads)};
  auto resp = transport::post_and_wait(aux_, req);
  mark_ = Clock::now();
  return resp;
}

std::int64_t Shim::syscall(std::uint32_t no, const std::array<std::int64_t, 6>& a) {
  mark_ = Clock::now();
  std::int64_t result = 0;
  switch (no) {
    case abi::sys::kExit: {
      call(no, {a[0], 0});
      stats_.marshal_time += Clock::now() - mark_;
      throw GuestExit{static_cast<std::int32_t>(a[0])};
    }
    case abi::sys::kRead:
      result = bad_range(a[1], a[2]) ? neg(abi::err::kEFAULT)
                                     : do_read(a[0], static_cast<std::uint64_t>(a[1]), static_cast<std::uint64_t>(a[2]));
      break;
    case abi::sys::kWrite:
      result = bad_range(a[1], a[2]) ? neg(abi::err::kEFAULT)
                                     : do_write(a[0], static_cast<std::uint64_t>(a[1]), static_cast<std::uint64_t>(a[2]));
      break;
    case abi::sys::kWritev:
      result = a[1] < 0 ? neg(abi::err::kEFAULT) : do_writev(a[0], static_cast<std::uint64_t>(a[1]), a[2]);
      break;
    case abi::sys::kOpen:
      result = bad_range(a[0], a[1]) ? neg(abi::err::kEFAULT)
                                     : do_open(static_cast<std::uint64_t>(a[0]), static_cast<std::uint64_t>(a[1]), a[2]);
      break;
    case abi::sys::kStat:
      result = bad_range(a[0], a[1]) || a[2] < 0
                   ? neg(abi::err::kEFAULT)
                   : do_stat(static_cast<std::uint64_t>(a[0]), static_cast<std::uint64_t>(a[1]),
                             static_cast<std::uint64_t>(a[2]));
      break;
    case abi::sys::kPipe:
      result = a[0] < 0 ? neg(abi::err::kEFAULT) : do_pipe(static_cast<std::uint64_t>(a[0]));
      break;
    case abi::sys::kSpawn:
      result = do_spawn(a);
      break;
    case abi::sys::kArgsSizesGet:
      result = a[0] < 0 ? neg(abi::err::kEFAULT) : do_args_sizes(static_cast<std::uint64_t>(a[0]));
      break;
    case abi::sys::kArgsGet:
      result = a[0] < 0 || a[1] < 0
                   ? neg(abi::err::kEFAULT)
                   : do_args_get(static_cast<std::uint64_t>(a[0]), static_cast<std::uint64_t>(a[1]));
      break;
    case abi::sys::kClose:
    case abi::sys::kWaitpid:
      result = call(no, {a[0]}).return_value;
      break;
    case abi::sys::kSeek:
      result = call(no, {a[0], a[1], a[2]}).return_value;
      break;
    default:
      result = call(no, {a.begin(), a.end()}).return_value;
      break;
  }
  stats_.marshal_time += Clock::now() - mark_;
  return result;
}

void Shim::on_trap(const std::string&) {
  try {
    if (aux_.status() == transport::Status::Idle) {
      mark_ = Clock::now();
      call(abi::sys::kExit, {abi::kTrapExitCode, 1});
    }
  } catch (const transport::TransportError&) {
    // Kernel already gone; nothing left to notify.
  }
}

std::int64_t Shim::do_read(std::int64_t fd, std::uint64_t buf, std::uint64_t len) {
  if (!memory_.contains(buf, len)) return neg(abi::err::kEFAULT);
  const auto base = static_cast<std::uint32_t>(transport::AuxBuffer::data_offset());
  if (len == 0) return call(abi::sys::kRead, {fd, base, 0, 0}).return_value;

  auto plan = transport::plan_chunks(len, aux_.data_capacity());
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < plan.chunks.size(); ++i) {
    const auto chunk = plan.chunks[i];
    auto resp = call(abi::sys::kRead, {fd, base, static_cast<std::int64_t>(chunk), i == 0 ? 0 : abi::kReadContinuation});
    if (resp.error != 0) return i == 0 ? resp.return_value : static_cast<std::int64_t>(total);
    auto n = static_cast<std::uint64_t>(resp.return_value);
    if (n == 0) ++stats_.empty_reads;
    if (n > chunk) return neg(abi::err::kEFAULT);
    from_aux(base, buf + total, n);
    total += n;
    if (n < chunk) break;
  }
  return static_cast<std::int64_t>(total);
}

std::int64_t Shim::do_write(std::int64_t fd, std::uint64_t buf, std::uint64_t len) {
  if (!memory_.contains(buf, len)) return neg(abi::err::kEFAULT);
  const auto base = static_cast<std::uint32_t>(transport::AuxBuffer::data_offset());
  if (len == 0) return call(abi::sys::kWrite, {fd, base, 0}, {{base, 0}}).return_value;

  auto plan = transport::plan_chunks(len, aux_.data_capacity());
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < plan.chunks.size(); ++i) {
    const auto chunk = plan.chunks[i];
    to_aux(base, buf + total, chunk);
    auto resp = call(abi::sys::kWrite, {fd, base, static_cast<std::int64_t>(chunk)},
                     {{base, static_cast<std::uint32_t>(chunk)}});
    if (resp.error != 0) return i == 0 ? resp.return_value : static_cast<std::int64_t>(total);
    total += static_cast<std::uint64_t>(resp.return_value);
    if (static_cast<std::uint64_t>(resp.return_value) < chunk) break;
  }
  return static_cast<std::int64_t>(total);
}

std::int64_t Shim::do_writev(std::int64_t fd, std::uint64_t iov, std::int64_t iovcnt) {
  if (iovcnt < 0 || iovcnt > kMaxIovecs) return neg(abi::err::kEINVAL);
  const auto count = static_cast<std::uint64_t>(iovcnt);
  if (!memory_.contains(iov, count * 8)) return neg(abi::err::kEFAULT);

  struct Segment {
    std::uint64_t base;
    std::uint64_t len;
  };
  std::vector<Segment> segs;
  segs.reserve(count);
  {
    auto raw = memory_.read(iov, count * 8);
    for (std::uint64_t i = 0; i < count; ++i) {
      Segment s{detail::load_le<std::uint32_t>(raw, i * 8), detail::load_le<std::uint32_t>(raw, i * 8 + 4)};
      if (!memory_.contains(s.base, s.len)) return neg(abi::err::kEFAULT);
      if (s.len != 0) segs.push_back(s);
    }
  }

  const auto base = static_cast<std::uint32_t>(transport::AuxBuffer::data_offset());
  const std::uint64_t cap = aux_.data_capacity();
  std::uint64_t total = 0;
  std::size_t seg = 0;
  std::uint64_t seg_done = 0;
  bool first = true;
  do {
    // Pack as many (possibly split) segments as fit into one request.
    std::vector<PayloadRef> payloads;
    std::uint64_t used = 0;
    while (seg < segs.size() && used < cap && payloads.size() < transport::layout::kMaxDescriptors) {
      std::uint64_t take = std::min(segs[seg].len - seg_done, cap - used);
      auto at = static_cast<std::uint32_t>(base + used);
      to_aux(at, segs[seg].base + seg_done, take);
      payloads.push_back({at, static_cast<std::uint32_t>(take)});
      used += take;
      seg_done += take;
      if (seg_done == segs[seg].len) {
        ++seg;
        seg_done = 0;
      }
    }
    auto nseg = static_cast<std::int64_t>(payloads.size());
    auto resp = call(abi::sys::kWritev, {fd, nseg}, std::move(payloads));
    if (resp.error != 0) return first ? resp.return_value : static_cast<std::int64_t>(total);
    total += static_cast<std::uint64_t>(resp.return_value);
    if (static_cast<std::uint64_t>(resp.return_value) < used) break;
    first = false;
  } while (seg < segs.size());
  return static_cast<std::int64_t>(total);
}

std::int64_t Shim::do_open(std::uint64_t path, std::uint64_t len, std::int64_t flags) {
  if (!memory_.contains(path, len)) return neg(abi::err::kEFAULT);
  if (len > aux_.data_capacity()) return neg(abi::err::kEINVAL);
  const auto base = static_cast<std::uint32_t>(transport::AuxBuffer::data_offset());
  to_aux(base, path, len);
  return call(abi::sys::kOpen, {base, static_cast<std::int64_t>(len), flags}, {{base, static_cast<std::uint32_t>(len)}})
      .return_value;
}

std::int64_t Shim::do_stat(std::uint64_t path, std::uint64_t len, std::uint64_t out) {
  if (!memory_.contains(path, len) || !memory_.contains(out, abi::kStatRecordSize)) return neg(abi::err::kEFAULT);
  const auto base = static_cast<std::uint32_t>(transport::AuxBuffer::data_offset());
  if (align8(len) + abi::kStatRecordSize > aux_.data_capacity()) return neg(abi::err::kEINVAL);
  const auto out_at = base + align8(len);
  to_aux(base, path, len);
  auto resp = call(abi::sys::kStat, {base, static_cast<std::int64_t>(len), out_at},
                   {{base, static_cast<std::uint32_t>(len)}});
  if (resp.error == 0) from_aux(out_at, out, abi::kStatRecordSize);
  return resp.return_value;
}

std::int64_t Shim::do_pipe(std::uint64_t out) {
  if (!memory_.contains(out, 8)) return neg(abi::err::kEFAULT);
  const auto base = static_cast<std::uint32_t>(transport::AuxBuffer::data_offset());
  auto resp = call(abi::sys::kPipe, {base});
  if (resp.error == 0) from_aux(base, out, 8);
  return resp.return_value;
}

std::int64_t Shim::do_spawn(const std::array<std::int64_t, 6>& a) {
  // a: path, path_len, argv_blob, argv_len, stdio (3 x i32, 0 = inherit 0/1/2)
  if (bad_range(a[0], a[1]) || bad_range(a[2], a[3]) || a[4] < 0) return neg(abi::err::kEFAULT);
  const auto path = static_cast<std::uint64_t>(a[0]), plen = static_cast<std::uint64_t>(a[1]);
  const auto argv = static_cast<std::uint64_t>(a[2]), alen = static_cast<std::uint64_t>(a[3]);
  const auto stdio = static_cast<std::uint64_t>(a[4]);
  if (!memory_.contains(path, plen) || !memory_.contains(argv, alen)) return neg(abi::err::kEFAULT);
  std::int64_t fds[3] = {0, 1, 2};
  if (stdio != 0) {
    if (!memory_.contains(stdio, 12)) return neg(abi::err::kEFAULT);
    auto raw = memory_.read(stdio, 12);
    for (int i = 0; i < 3; ++i) fds[i] = detail::load_le<std::int32_t>(raw, 4 * i);
  }
  if (align8(plen) + alen > aux_.data_capacity()) return neg(abi::err::kEINVAL);
  const auto base = static_cast<std::uint32_t>(transport::AuxBuffer::data_offset());
  const auto argv_at = base + align8(plen);
  to_aux(base, path, plen);
  to_aux(argv_at, argv, alen);
  return call(abi::sys::kSpawn,
              {base, static_cast<std::int64_t>(plen), argv_at, static_cast<std::int64_t>(alen), fds[0], fds[1], fds[2]},
              {{base, static_cast<std::uint32_t>(plen)}, {argv_at, static_cast<std::uint32_t>(alen)}})
      .return_value;
}

std::int64_t Shim::do_args_sizes(std::uint64_t out) {
  if (!memory_.contains(out, 8)) return neg(abi::err::kEFAULT);
  const auto base = static_cast<std::uint32_t>(transport::AuxBuffer::data_offset());
  auto resp = call(abi::sys::kArgsSizesGet, {base});
  if (resp.error == 0) from_aux(base, out, 8);
  return resp.return_value;
}

std::int64_t Shim::do_args_get(std::uint64_t argv, std::uint64_t buf) {
  const auto base = static_cast<std::uint32_t>(transport::AuxBuffer::data_offset());
  auto resp = call(abi::sys::kArgsGet, {base});
  if (resp.error != 0) return resp.return_value;
  if (resp.out_payloads.size() != 1) return neg(abi::err::kEINVAL);
  const auto blob_len = resp.out_payloads[0].length;
  const auto argc = static_cast<std::uint64_t>(resp.return_value);
  if (!memory_.contains(argv, argc * 4) || !memory_.contains(buf, blob_len)) return neg(abi::err::kEFAULT);
  auto blob = aux_.data_at(resp.out_payloads[0].offset, blob_len);
  memory_.write(buf, blob);
  std::vector<std::byte> ptrs(argc * 4);
  std::uint64_t start = 0;
  std::uint64_t k = 0;
  for (std::uint64_t i = 0; i < blob_len && k < argc; ++i) {
    if (blob[i] == std::byte{0}) {
      detail::store_le<std::uint32_t>(ptrs, k * 4, static_cast<std::uint32_t>(buf + start));
      ++k;
      start = i + 1;
    }
  }
  memory_.write(argv, ptrs);
  return resp.return_value;
}

}  // namespace procwasm::guest
