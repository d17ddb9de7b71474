#include <gtest/gtest.h>

#include <cstring>
#include <deque>
#include <random>

#include "kernel_env.hpp"
#include "procwasm/abi.hpp"
#include "procwasm/kernel/kernel_core.hpp"
#include "procwasm/transport/message.hpp"
#include "wasm_builder.hpp"

using namespace procwasm;
using namespace procwasm::kernel;
using procwasm::testing::bytes_of;
using procwasm::testing::random_bytes;
using transport::PayloadRef;
using transport::Status;
using transport::SyscallResponse;
namespace pabi = procwasm::abi;
namespace of = procwasm::abi::open_flags;

namespace {

constexpr std::uint32_t kData = 4096;

// A process with no guest behind it: requests are encoded straight into its
// aux buffer and serviced on the calling thread.
class Client {
 public:
  Client(KernelCore& k, std::size_t capacity = 65536, StdioSpec io = {}, std::optional<Pid> parent = std::nullopt)
      : k_(k), aux_(std::make_shared<transport::AuxBuffer>(capacity)) {
    pid = k_.attach(parent, {"client"}, io, aux_);
  }

  /// Posts a request; returns the response unless the kernel parked it.
  std::optional<SyscallResponse> post(std::uint32_t no, std::vector<std::int64_t> args,
                                      std::vector<PayloadRef> payloads = {}) {
    transport::encode_request(*aux_, {no, std::move(args), std::move(payloads)});
    k_.service(pid);
    return poll();
  }

  /// Collects a response that arrived after parking.
  std::optional<SyscallResponse> poll() {
    if (aux_->status() != Status::Done) return std::nullopt;
    auto r = transport::decode_response(*aux_);
    aux_->set_status(Status::Idle);
    return r;
  }

  SyscallResponse call(std::uint32_t no, std::vector<std::int64_t> args, std::vector<PayloadRef> payloads = {}) {
    auto r = post(no, std::move(args), std::move(payloads));
    if (!r) throw std::runtime_error("unexpectedly parked");
    return *r;
  }

  std::uint32_t put(std::uint32_t at, std::span<const std::byte> bytes) {
    std::memcpy(aux_->data_at(at, bytes.size()).data(), bytes.data(), bytes.size());
    return static_cast<std::uint32_t>(bytes.size());
  }
  std::vector<std::byte> get(std::uint32_t at, std::size_t n) {
    auto s = aux_->data_at(at, n);
    return {s.begin(), s.end()};
  }

  std::int64_t open(std::string_view path, std::int64_t flags) {
    const auto n = put(kData, bytes_of(path));
    return call(pabi::sys::kOpen, {kData, n, flags}, {{kData, n}}).return_value;
  }
  std::optional<SyscallResponse> post_write(int fd, std::span<const std::byte> bytes) {
    const auto n = put(kData, bytes);
    return post(pabi::sys::kWrite, {fd, kData, n}, {{kData, n}});
  }
  std::int64_t write(int fd, std::span<const std::byte> bytes) { return post_write(fd, bytes).value().return_value; }
  std::int64_t write(int fd, std::string_view s) { return write(fd, bytes_of(s)); }
  std::optional<SyscallResponse> post_read(int fd, std::size_t len, std::int64_t flags = 0) {
    return post(pabi::sys::kRead, {fd, kData, static_cast<std::int64_t>(len), flags});
  }
  /// Bytes named by a read response.
  std::vector<std::byte> read_result(const SyscallResponse& r) {
    if (r.return_value <= 0) return {};
    return get(r.out_payloads.at(0).offset, r.out_payloads[0].length);
  }
  std::vector<std::byte> read(int fd, std::size_t len) { return read_result(post_read(fd, len).value()); }
  std::int64_t close(int fd) { return call(pabi::sys::kClose, {fd}).return_value; }
  std::pair<int, int> pipe() {
    auto r = call(pabi::sys::kPipe, {kData});
    EXPECT_EQ(r.return_value, 0);
    auto raw = get(kData, 8);
    std::int32_t fds[2];
    std::memcpy(fds, raw.data(), 8);
    return {fds[0], fds[1]};
  }
  struct StatResult {
    std::int64_t ret;
    std::uint32_t kind = 0;
    std::uint64_t size = 0;
  };
  StatResult stat(std::string_view path) {
    const auto n = put(kData, bytes_of(path));
    const std::uint32_t out = kData + 1024;
    auto r = call(pabi::sys::kStat, {kData, n, out}, {{kData, n}});
    StatResult s{r.return_value};
    if (r.return_value == 0) {
      auto raw = get(out, 16);
      std::memcpy(&s.kind, raw.data(), 4);
      std::memcpy(&s.size, raw.data() + 8, 8);
    }
    return s;
  }

  transport::AuxBuffer& aux() { return *aux_; }
  Pid pid = 0;

 private:
  KernelCore& k_;
  std::shared_ptr<transport::AuxBuffer> aux_;
};

std::int64_t neg(std::int32_t e) { return -static_cast<std::int64_t>(e); }

std::string text(const std::vector<std::byte>& b) { return {reinterpret_cast<const char*>(b.data()), b.size()}; }

}  // namespace

TEST(Boot, EmptyImageHasEmptyRoot) {
  auto vfs = Vfs::boot({});
  EXPECT_TRUE(vfs.root()->is_dir());
  EXPECT_TRUE(vfs.root()->children.empty());
}

TEST(Boot, NestedFileIsVisible) {
  FsImage img;
  img.add_file("/a/b.txt", "hello");
  KernelCore k(Vfs::boot(img));
  Client c(k);
  auto s = c.stat("/a/b.txt");
  EXPECT_EQ(s.ret, 0);
  EXPECT_EQ(s.kind, pabi::kStatKindFile);
  EXPECT_EQ(s.size, 5u);
  EXPECT_EQ(c.stat("/a").kind, pabi::kStatKindDirectory);
}

TEST(Boot, DuplicateOrConflictingPathIsBadImage) {
  FsImage dup;
  dup.add_file("/x", "1");
  dup.add_file("/x", "2");
  EXPECT_THROW(Vfs::boot(dup), BadImage);
  FsImage conflict;
  conflict.add_file("/x", "1");
  conflict.add_file("/x/y", "2");
  EXPECT_THROW(Vfs::boot(conflict), BadImage);
  FsImage relative;
  relative.add_file("x", "1");
  EXPECT_THROW(Vfs::boot(relative), BadImage);
}

TEST(Boot, MirrorsHostDirectory) {
  auto dir = std::filesystem::temp_directory_path() / "procwasm-boot-test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir / "sub" / "empty");
  std::ofstream(dir / "sub" / "f.txt") << "abc";
  auto vfs = Vfs::boot(FsImage::from_host(dir));
  ASSERT_TRUE(vfs.exists("/sub/empty"));
  ASSERT_TRUE(vfs.exists("/sub/f.txt"));
  EXPECT_EQ(vfs.lookup("/sub/f.txt")->size(), 3u);
  std::filesystem::remove_all(dir);
  EXPECT_THROW(FsImage::from_host(dir), BadImage);
}

TEST(Syscalls, OpenReadEof) {
  FsImage img;
  img.add_file("/f", "hello");
  KernelCore k(Vfs::boot(img));
  Client c(k);
  const auto fd = c.open("/f", of::kRdOnly);
  ASSERT_GE(fd, 3);
  EXPECT_EQ(text(c.read(fd, 5)), "hello");
  EXPECT_EQ(c.post_read(fd, 5)->return_value, 0);
  EXPECT_EQ(c.close(fd), 0);
}

TEST(Syscalls, PipeIsFifo) {
  KernelCore k;
  Client c(k);
  auto [r, w] = c.pipe();
  EXPECT_EQ(c.write(w, "xyz"), 3);
  EXPECT_EQ(c.write(w, "uv"), 2);
  EXPECT_EQ(text(c.read(r, 3)), "xyz");
  EXPECT_EQ(text(c.read(r, 10)), "uv");
}

TEST(Syscalls, StatAfterWrite) {
  KernelCore k;
  Client c(k);
  const auto fd = c.open("/new", of::kWrOnly | of::kCreat);
  ASSERT_GE(fd, 0);
  EXPECT_EQ(c.write(fd, "12345"), 5);
  EXPECT_EQ(c.stat("/new").size, 5u);
  EXPECT_EQ(c.stat("/missing").ret, neg(pabi::err::kENOENT));
}

TEST(Syscalls, ClosedDescriptorIsEbadf) {
  KernelCore k;
  Client c(k);
  const auto fd = c.open("/f", of::kRdWr | of::kCreat);
  ASSERT_EQ(c.close(fd), 0);
  const auto ebadf = neg(pabi::err::kEBADF);
  EXPECT_EQ(c.post_read(fd, 4)->return_value, ebadf);
  EXPECT_EQ(c.write(fd, "x"), ebadf);
  EXPECT_EQ(c.close(fd), ebadf);
  EXPECT_EQ(c.call(pabi::sys::kSeek, {fd, 0, pabi::whence::kSet}).return_value, ebadf);
  EXPECT_EQ(c.call(pabi::sys::kWritev, {fd, 0}).return_value, ebadf);
  EXPECT_EQ(c.post_read(999, 4)->return_value, ebadf);
  EXPECT_EQ(c.post_read(-1, 4)->return_value, ebadf);
}

TEST(Syscalls, WrongModeIsEbadf) {
  FsImage img;
  img.add_file("/f", "data");
  KernelCore k(Vfs::boot(img));
  Client c(k);
  const auto ro = c.open("/f", of::kRdOnly);
  EXPECT_EQ(c.write(ro, "x"), neg(pabi::err::kEBADF));
  const auto wo = c.open("/f", of::kWrOnly);
  EXPECT_EQ(c.post_read(wo, 1)->return_value, neg(pabi::err::kEBADF));
  auto [r, w] = c.pipe();
  EXPECT_EQ(c.write(r, "x"), neg(pabi::err::kEBADF));
  EXPECT_EQ(c.post_read(w, 1)->return_value, neg(pabi::err::kEBADF));
}

TEST(Syscalls, OpenErrors) {
  KernelCore k;
  Client c(k);
  EXPECT_EQ(c.open("/nope", of::kRdOnly), neg(pabi::err::kENOENT));
  EXPECT_EQ(c.open("/no/dir/file", of::kWrOnly | of::kCreat), neg(pabi::err::kENOENT));
  EXPECT_EQ(c.open("/f", 0x8000), neg(pabi::err::kEINVAL));
  EXPECT_EQ(c.open("/f", 3), neg(pabi::err::kEINVAL));
  EXPECT_EQ(c.open("/", of::kWrOnly), neg(pabi::err::kEINVAL));
  EXPECT_EQ(c.call(pabi::sys::kOpen, {kData, -1, 0}).return_value, neg(pabi::err::kEFAULT));
}

TEST(Syscalls, UnknownNumberIsEnosys) {
  KernelCore k;
  Client c(k);
  EXPECT_EQ(c.call(999, {1, 2, 3}).return_value, neg(pabi::err::kENOSYS));
  EXPECT_EQ(c.call(999, {}).error, static_cast<std::uint32_t>(pabi::err::kENOSYS));
}

TEST(Syscalls, SeekWhence) {
  FsImage img;
  img.add_file("/f", "0123456789");
  KernelCore k(Vfs::boot(img));
  Client c(k);
  const auto fd = c.open("/f", of::kRdWr);
  auto seek = [&](std::int64_t off, std::int64_t wh) { return c.call(pabi::sys::kSeek, {fd, off, wh}).return_value; };
  EXPECT_EQ(seek(3, pabi::whence::kSet), 3);
  EXPECT_EQ(text(c.read(fd, 2)), "34");
  EXPECT_EQ(seek(1, pabi::whence::kCur), 6);
  EXPECT_EQ(seek(-2, pabi::whence::kEnd), 8);
  EXPECT_EQ(text(c.read(fd, 5)), "89");
  EXPECT_EQ(seek(0, 7), neg(pabi::err::kEINVAL));
  EXPECT_EQ(seek(-1, pabi::whence::kSet), neg(pabi::err::kEINVAL));
  // Writing past the end zero-fills the gap.
  EXPECT_EQ(seek(12, pabi::whence::kSet), 12);
  EXPECT_EQ(c.write(fd, "x"), 1);
  EXPECT_EQ(seek(10, pabi::whence::kSet), 10);
  EXPECT_EQ(c.read(fd, 3), (std::vector<std::byte>{std::byte{0}, std::byte{0}, std::byte{'x'}}));
  auto [r, w] = c.pipe();
  EXPECT_EQ(c.call(pabi::sys::kSeek, {r, 0, 0}).return_value, neg(pabi::err::kEINVAL));
}

TEST(Syscalls, TruncAndAppend) {
  FsImage img;
  img.add_file("/f", "abcdef");
  KernelCore k(Vfs::boot(img));
  Client c(k);
  auto fd = c.open("/f", of::kWrOnly | of::kAppend);
  c.call(pabi::sys::kSeek, {fd, 0, pabi::whence::kSet});
  EXPECT_EQ(c.write(fd, "gh"), 2);
  EXPECT_EQ(c.stat("/f").size, 8u);
  fd = c.open("/f", of::kWrOnly | of::kTrunc);
  EXPECT_EQ(c.stat("/f").size, 0u);
  EXPECT_EQ(c.write(fd, "z"), 1);
  const auto rd = c.open("/f", of::kRdOnly);
  EXPECT_EQ(text(c.read(rd, 10)), "z");
}

TEST(Syscalls, WritevGathersSegments) {
  KernelCore k;
  Client c(k);
  const auto fd = c.open("/v", of::kRdWr | of::kCreat);
  c.put(kData, bytes_of("hello "));
  c.put(kData + 100, bytes_of("world"));
  EXPECT_EQ(c.call(pabi::sys::kWritev, {fd, 2}, {{kData, 6}, {kData + 100, 5}}).return_value, 11);
  EXPECT_EQ(c.call(pabi::sys::kWritev, {fd, 3}, {{kData, 6}}).return_value, neg(pabi::err::kEINVAL));
  c.call(pabi::sys::kSeek, {fd, 0, 0});
  EXPECT_EQ(text(c.read(fd, 20)), "hello world");
}

TEST(Syscalls, WriteToPipeWithoutReadersIsEpipe) {
  KernelCore k;
  Client c(k);
  auto [r, w] = c.pipe();
  c.close(r);
  EXPECT_EQ(c.write(w, "x"), neg(pabi::err::kEPIPE));
}

TEST(Syscalls, ReadOnWidowedEmptyPipeIsEof) {
  KernelCore k;
  Client c(k);
  auto [r, w] = c.pipe();
  c.write(w, "ab");
  c.close(w);
  EXPECT_EQ(text(c.read(r, 10)), "ab");
  EXPECT_EQ(c.post_read(r, 10)->return_value, 0);
}

TEST(Syscalls, BadDataRegionIsEfault) {
  KernelCore k;
  Client c(k, 8192);
  auto [r, w] = c.pipe();
  EXPECT_EQ(c.call(pabi::sys::kWrite, {w, 100, 4}).return_value, neg(pabi::err::kEFAULT));
  EXPECT_EQ(c.call(pabi::sys::kRead, {r, kData, 8192}).return_value, neg(pabi::err::kEFAULT));
  EXPECT_EQ(c.call(pabi::sys::kPipe, {8190}).return_value, neg(pabi::err::kEFAULT));
}

TEST(Syscalls, ArgsDelivery) {
  KernelCore k;
  auto aux = std::make_shared<transport::AuxBuffer>(8192);
  const Pid pid = k.attach(std::nullopt, {"prog", "a", "bc"}, {}, aux);
  transport::encode_request(*aux, {pabi::sys::kArgsSizesGet, {kData}, {}});
  k.service(pid);
  auto r = transport::decode_response(*aux);
  aux->set_status(Status::Idle);
  std::uint32_t sizes[2];
  std::memcpy(sizes, aux->data_at(kData, 8).data(), 8);
  EXPECT_EQ(sizes[0], 3u);
  EXPECT_EQ(sizes[1], 10u);
  transport::encode_request(*aux, {pabi::sys::kArgsGet, {kData}, {}});
  k.service(pid);
  r = transport::decode_response(*aux);
  EXPECT_EQ(r.return_value, 3);
  ASSERT_EQ(r.out_payloads.size(), 1u);
  auto blob = aux->data_at(r.out_payloads[0].offset, r.out_payloads[0].length);
  EXPECT_EQ(std::string(reinterpret_cast<const char*>(blob.data()), blob.size()), std::string("prog\0a\0bc\0", 10));
}

TEST(Syscalls, WaitpidRejectsSelfAndUnknown) {
  KernelCore k;
  Client c(k);
  EXPECT_EQ(c.call(pabi::sys::kWaitpid, {c.pid}).return_value, neg(pabi::err::kEINVAL));
  EXPECT_EQ(c.call(pabi::sys::kWaitpid, {12345}).return_value, neg(pabi::err::kEINVAL));
}

TEST(Parking, ReadOnEmptyPipeParksUntilWrite) {
  KernelCore k;
  Client writer(k);
  auto [r, w] = writer.pipe();
  StdioSpec io;
  io.fds[0] = StdioBinding::inherit(r);
  Client reader(k, 65536, io, writer.pid);

  EXPECT_EQ(k.dispatch(reader.pid, {pabi::sys::kRead, {0, kData, 16, 0}, {}}).index(), 1u);  // Parked
  EXPECT_FALSE(reader.post_read(0, 16).has_value());
  EXPECT_EQ(k.parked_count(), 2u);
  EXPECT_EQ(writer.write(w, "ping"), 4);
  // The first parked read (from dispatch, whose response goes to the same
  // buffer) takes the bytes.
  auto got = reader.poll();
  ASSERT_TRUE(got.has_value());
  EXPECT_EQ(got->return_value, 4);
}

TEST(Parking, ContinuationReadDoesNotPark) {
  KernelCore k;
  Client c(k);
  auto [r, w] = c.pipe();
  auto resp = c.post_read(r, 8, pabi::kReadContinuation);
  ASSERT_TRUE(resp.has_value());
  EXPECT_EQ(resp->return_value, 0);
  EXPECT_EQ(k.parked_count(), 0u);
}

TEST(Parking, FullPipeWriteParksUntilDrained) {
  KernelCore k;
  Client writer(k, 256 * 1024);
  auto [r, w] = writer.pipe();
  StdioSpec io;
  io.fds[0] = StdioBinding::inherit(r);
  Client reader(k, 256 * 1024, io, writer.pid);
  writer.close(r);

  const auto data = random_bytes(Pipe::kCapacity + 1000, 4);
  EXPECT_FALSE(writer.post_write(w, data).has_value());
  EXPECT_EQ(k.parked_count(), 1u);

  std::vector<std::byte> got = reader.read(0, 4000);
  EXPECT_EQ(got.size(), 4000u);
  auto done = writer.poll();
  ASSERT_TRUE(done.has_value());
  EXPECT_EQ(done->return_value, static_cast<std::int64_t>(data.size()));
  while (got.size() < data.size()) {
    auto more = reader.read(0, 100000);
    ASSERT_FALSE(more.empty());
    got.insert(got.end(), more.begin(), more.end());
  }
  EXPECT_EQ(got, data);
}

TEST(Parking, ParkedWriteReportsPartialCountWhenReadersVanish) {
  KernelCore k;
  Client writer(k, 256 * 1024);
  auto [r, w] = writer.pipe();
  StdioSpec io;
  io.fds[0] = StdioBinding::inherit(r);
  Client reader(k, 65536, io, writer.pid);
  writer.close(r);

  EXPECT_FALSE(writer.post_write(w, random_bytes(Pipe::kCapacity + 10, 5)).has_value());
  reader.call(pabi::sys::kExit, {0});
  auto resp = writer.poll();
  ASSERT_TRUE(resp.has_value());
  EXPECT_EQ(resp->return_value, static_cast<std::int64_t>(Pipe::kCapacity));
}

// Readers and writers with random request sizes, some above the ring size.
TEST(Parking, PipeConservationUnderRandomInterleaving) {
  int parked_reads = 0, parked_writes = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    KernelCore k;
    Client writer(k, 256 * 1024);
    auto [r, w] = writer.pipe();
    StdioSpec io;
    io.fds[0] = StdioBinding::inherit(r);
    Client reader(k, 256 * 1024, io, writer.pid);
    writer.close(r);

    const auto data = random_bytes(1 << 20, seed);
    std::size_t sent = 0, in_flight = 0;
    bool closed = false, writer_busy = false, reader_busy = false, eof = false;
    std::vector<std::byte> got;
    while (!eof) {
      if (!writer_busy && !closed) {
        if (sent == data.size()) {
          writer.close(w);
          closed = true;
        } else if (rng() % 2) {
          const std::size_t n = std::min<std::size_t>(data.size() - sent, 1 + rng() % (200 * 1024));
          auto resp = writer.post_write(w, std::span(data).subspan(sent, n));
          in_flight = n;
          if (resp) {
            ASSERT_EQ(resp->return_value, static_cast<std::int64_t>(n));
            sent += n;
          } else {
            writer_busy = true;
            ++parked_writes;
          }
        }
      }
      if (!reader_busy && rng() % 2) {
        auto resp = reader.post_read(0, 1 + rng() % (100 * 1024));
        if (resp) {
          if (resp->return_value == 0) eof = true;
          auto bytes = reader.read_result(*resp);
          got.insert(got.end(), bytes.begin(), bytes.end());
        } else {
          reader_busy = true;
          ++parked_reads;
        }
      }
      if (writer_busy) {
        if (auto resp = writer.poll()) {
          ASSERT_EQ(resp->return_value, static_cast<std::int64_t>(in_flight));
          sent += in_flight;
          writer_busy = false;
        }
      }
      if (reader_busy) {
        if (auto resp = reader.poll()) {
          if (resp->return_value == 0) eof = true;
          auto bytes = reader.read_result(*resp);
          got.insert(got.end(), bytes.begin(), bytes.end());
          reader_busy = false;
        }
      }
    }
    EXPECT_EQ(got, data) << "seed " << seed;
  }
  EXPECT_GT(parked_writes, 0);
  EXPECT_GT(parked_reads, 0);
}

TEST(Isolation, SyntheticRequestWithoutGuest) {
  // No launcher and no guest: the kernel only ever sees the aux buffer.
  KernelCore k;
  auto aux = std::make_shared<transport::AuxBuffer>(8192);
  const Pid pid = k.attach(std::nullopt, {"synthetic"}, {}, aux);
  const char path[] = "/made-by-hand";
  std::memcpy(aux->data_at(kData, sizeof path - 1).data(), path, sizeof path - 1);
  transport::encode_request(*aux, {pabi::sys::kOpen, {kData, sizeof path - 1, of::kWrOnly | of::kCreat},
                                   {{kData, sizeof path - 1}}});
  k.service(pid);
  auto resp = transport::decode_response(*aux);
  EXPECT_EQ(resp.return_value, 3);
  EXPECT_TRUE(k.vfs().exists(path));
}

TEST(Isolation, SpawnWithoutLauncherFails) {
  FsImage img;
  img.add_file("/bin/x", "not wasm");
  KernelCore k(Vfs::boot(img));
  try {
    k.spawn(std::nullopt, "/bin/x", {}, {});
    FAIL() << "spawn succeeded";
  } catch (const SpawnError& e) {
    EXPECT_EQ(e.error, pabi::err::kEINVAL);
  }
}

TEST(FdTable, GenerationsChangeOnReuse) {
  FdTable t;
  const int fd = t.install(OpenFile::null_device());
  EXPECT_EQ(fd, 0);
  const auto g = t.generation(fd);
  EXPECT_TRUE(t.is_current(fd, g));
  t.remove(fd);
  EXPECT_FALSE(t.is_current(fd, g));
  EXPECT_EQ(t.get(fd), nullptr);
  EXPECT_EQ(t.install(OpenFile::null_device()), fd);
  EXPECT_FALSE(t.is_current(fd, g));
  EXPECT_EQ(t.remove(77), nullptr);
  for (int i = 1; i < FdTable::kMaxFds; ++i) ASSERT_EQ(t.install(OpenFile::null_device()), i);
  EXPECT_EQ(t.install(OpenFile::null_device()), -1);
}

TEST(FsAppend, GrowthExamples) {
  FsNode n(FsNode::Kind::File);
  fs_append(n, random_bytes(1, 1));
  EXPECT_EQ(n.data.size(), 1u);
  EXPECT_EQ(n.data.capacity(), 4096u);
  fs_append(n, random_bytes(4096, 2));
  EXPECT_EQ(n.data.size(), 4097u);
  EXPECT_EQ(n.data.capacity(), 8192u);
  EXPECT_EQ(n.data.reallocations(), 2u);
  fs_append(n, {});
  EXPECT_EQ(n.data.reallocations(), 2u);
}

TEST(FsAppend, HundredThousandSingleBytes) {
  FsNode n(FsNode::Kind::File);
  std::vector<std::byte> oracle;
  std::mt19937 rng(8);
  for (int i = 0; i < 100000; ++i) {
    const std::byte b{static_cast<unsigned char>(rng())};
    fs_append(n, std::span(&b, 1));
    oracle.push_back(b);
  }
  auto c = n.data.contents();
  EXPECT_TRUE(std::equal(c.begin(), c.end(), oracle.begin(), oracle.end()));
  EXPECT_LE(n.data.reallocations(), 26u);
  EXPECT_EQ(n.data.capacity() % 4096, 0u);
}

TEST(FsAppend, AmortizationBound) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    FsNode n(FsNode::Kind::File);
    std::uint64_t total = 0;
    const int appends = 1 + static_cast<int>(rng() % 500);
    for (int i = 0; i < appends; ++i) {
      const std::size_t len = rng() % 3 == 0 ? rng() % 20000 : rng() % 64;
      const auto before = n.data.reallocations();
      fs_append(n, random_bytes(len, rng()));
      total += len;
      ASSERT_LE(n.data.reallocations() - before, 1u);
      ASSERT_LE(n.data.size(), n.data.capacity());
      if (n.data.capacity() > 0) {
        ASSERT_EQ(n.data.capacity() % 4096, 0u);
        ASSERT_LT(n.data.capacity() - n.data.size(), total == 0 ? 4096u : std::max<std::uint64_t>(4096, len + 4096));
      }
    }
    EXPECT_LE(n.data.reallocations(), (total + 4095) / 4096 + 1);
  }
}

TEST(PipeRing, MatchesDequeOracle) {
  std::mt19937_64 rng(6);
  Pipe p;
  std::deque<std::byte> oracle;
  for (int i = 0; i < 5000; ++i) {
    if (rng() % 2) {
      auto in = random_bytes(rng() % 30000, rng());
      const auto n = p.write(in);
      ASSERT_EQ(n, std::min(in.size(), Pipe::kCapacity - oracle.size()));
      oracle.insert(oracle.end(), in.begin(), in.begin() + static_cast<std::ptrdiff_t>(n));
    } else {
      std::vector<std::byte> out(rng() % 30000);
      const auto n = p.read(out);
      ASSERT_EQ(n, std::min(out.size(), oracle.size()));
      for (std::size_t j = 0; j < n; ++j) {
        ASSERT_EQ(out[j], oracle.front());
        oracle.pop_front();
      }
    }
    ASSERT_EQ(p.available(), oracle.size());
  }
}

// Guest-backed behaviour through the threaded kernel.

namespace {

using procwasm::testing::boot_with_fixtures;
using procwasm::testing::Code;
using procwasm::testing::guest_with_body;
using procwasm::testing::vfs_file;

}  // namespace

TEST(Spawn, FixtureGetsPositivePid) {
  auto b = boot_with_fixtures({});
  const Pid pid = b.kernel->spawn("/bin/cat", {"cat"}, {});
  EXPECT_GT(pid, 0);
  EXPECT_EQ(b.kernel->wait(pid).code, 0);
}

TEST(Spawn, MissingProgramIsEnoent) {
  auto b = boot_with_fixtures({});
  try {
    b.kernel->spawn("/bin/nope", {}, {});
    FAIL() << "spawn succeeded";
  } catch (const SpawnError& e) {
    EXPECT_EQ(e.error, pabi::err::kENOENT);
  }
}

TEST(Spawn, InvalidModuleIsRejected) {
  FsImage img;
  img.add_file("/bin/junk", "definitely not wasm");
  auto b = boot_with_fixtures(img);
  try {
    b.kernel->spawn("/bin/junk", {}, {});
    FAIL() << "spawn succeeded";
  } catch (const SpawnError& e) {
    EXPECT_EQ(e.error, pabi::err::kEINVAL);
  }
}

TEST(Spawn, WaitpidReturnsExitCode) {
  FsImage img;
  img.add_file("/bin/seven", guest_with_body(Code{}.syscall(pabi::sys::kExit, {7}).drop()));
  auto b = boot_with_fixtures(img);
  auto aux = std::make_shared<transport::AuxBuffer>(8192);
  const Pid parent = b.kernel->attach({"parent"}, {}, aux);
  const Pid child = b.kernel->with_core([&](KernelCore& k) { return k.spawn(parent, "/bin/seven", {}, {}); });
  auto resp = transport::post_and_wait(*aux, {pabi::sys::kWaitpid, {child}, {}});
  EXPECT_EQ(resp.return_value, 7);
  resp = transport::post_and_wait(*aux, {pabi::sys::kWaitpid, {child}, {}});
  EXPECT_EQ(resp.return_value, neg(pabi::err::kEINVAL));
}

TEST(Spawn, TrapReportsCode134) {
  FsImage img;
  img.add_file("/bin/boom", guest_with_body(Code{}.unreachable()));
  auto b = boot_with_fixtures(img);
  const Pid pid = b.kernel->spawn("/bin/boom", {}, {});
  auto info = b.kernel->wait(pid);
  EXPECT_EQ(info.code, pabi::kTrapExitCode);
  EXPECT_TRUE(info.trapped);
  EXPECT_EQ(b.runtime->report(pid).status.kind, guest::ExitStatus::Kind::Trapped);
}

TEST(Spawn, BadGuestPointerIsEfaultWithoutKernelTrip) {
  // exit(write(1, 65535, 5)) with one page of memory.
  Code body;
  body.i32(static_cast<std::int32_t>(pabi::sys::kExit));
  body.syscall(pabi::sys::kWrite, {1, 65535, 5});
  for (int i = 0; i < 5; ++i) body.i64(0);
  body.call(0).drop();
  FsImage img;
  img.add_file("/bin/efault", guest_with_body(body));
  auto b = boot_with_fixtures(img);
  const Pid pid = b.kernel->spawn("/bin/efault", {}, {});
  EXPECT_EQ(b.kernel->wait(pid).code, -pabi::err::kEFAULT);
  EXPECT_EQ(b.runtime->report(pid).shim.count(pabi::sys::kWrite), 0u);
}

TEST(Spawn, ShutdownKillsBlockedGuest) {
  auto b = boot_with_fixtures({});
  auto aux = std::make_shared<transport::AuxBuffer>(8192);
  const Pid parent = b.kernel->attach({"parent"}, {}, aux);
  auto resp = transport::post_and_wait(*aux, {pabi::sys::kPipe, {kData}, {}});
  ASSERT_EQ(resp.return_value, 0);
  std::int32_t fds[2];
  std::memcpy(fds, aux->data_at(kData, 8).data(), 8);
  StdioSpec io;
  io.fds[0] = StdioBinding::inherit(fds[0]);
  const Pid cat = b.kernel->with_core([&](KernelCore& k) { return k.spawn(parent, "/bin/cat", {"cat"}, io); });
  // cat blocks reading the empty pipe while the parent holds the write end.
  EXPECT_FALSE(b.kernel->wait_for(cat, std::chrono::milliseconds(100)).has_value());
  b.kernel->shutdown();
  auto rep = b.runtime->report(cat);
  EXPECT_EQ(rep.status.kind, guest::ExitStatus::Kind::Trapped);
  EXPECT_THROW(b.kernel->spawn("/bin/cat", {}, {}), KernelStopped);
}

// Writing a file of length L through a shim with data capacity c and reading
// it back gives the original bytes.
TEST(Chunked, FileRoundTripAtCapacityBoundaries) {
  constexpr std::size_t c = 8192;
  for (std::size_t len : {std::size_t{0}, c - 1, c, c + 1, 3 * c + 7}) {
    FsImage img;
    const auto data = random_bytes(len, len + 1);
    img.add_file("/in", data);
    auto b = boot_with_fixtures(img, c + 4096);
    const Pid w = b.kernel->spawn("/bin/cat", {"cat", "/in"}, procwasm::testing::stdio("", "/mid"));
    ASSERT_EQ(b.kernel->wait(w).code, 0);
    const Pid r = b.kernel->spawn("/bin/cat", {"cat", "/mid"}, procwasm::testing::stdio("", "/out"));
    ASSERT_EQ(b.kernel->wait(r).code, 0);
    EXPECT_EQ(vfs_file(*b.kernel, "/out"), data) << "L=" << len;
    const auto rep = b.runtime->report(w);
    EXPECT_EQ(rep.shim.count(pabi::sys::kWrite), (len + c - 1) / c) << "L=" << len;
  }
}
