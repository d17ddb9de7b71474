#include <benchmark/benchmark.h>

#include <cstring>

#include "procwasm/abi.hpp"
#include "procwasm/kernel/fs.hpp"
#include "procwasm/kernel/kernel_core.hpp"
#include "procwasm/kernel/pipe.hpp"
#include "procwasm/transport/message.hpp"

using namespace procwasm;
using namespace procwasm::kernel;

static void BM_FsAppend(benchmark::State& state) {
  const std::vector<std::byte> chunk(static_cast<std::size_t>(state.range(0)), std::byte{7});
  for (auto _ : state) {
    FsNode n(FsNode::Kind::File);
    for (int i = 0; i < 256; ++i) fs_append(n, chunk);
    benchmark::DoNotOptimize(n.data.size());
  }
  state.SetBytesProcessed(state.iterations() * 256 * state.range(0));
}
BENCHMARK(BM_FsAppend)->Arg(1)->Arg(100)->Arg(4096);

static void BM_PipeRing(benchmark::State& state) {
  Pipe p;
  std::vector<std::byte> in(static_cast<std::size_t>(state.range(0))), out(in.size());
  for (auto _ : state) {
    p.write(in);
    benchmark::DoNotOptimize(p.read(out));
  }
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PipeRing)->Arg(64)->Arg(4096)->Arg(65536);

// One write plus one read through the syscall layer, serviced inline.
static void BM_PipeSyscallRoundTrip(benchmark::State& state) {
  KernelCore k;
  auto aux = std::make_shared<transport::AuxBuffer>(1 << 20);
  const Pid pid = k.attach(std::nullopt, {"bench"}, {}, aux);
  auto call = [&](transport::SyscallRequest req) {
    transport::encode_request(*aux, req);
    k.service(pid);
    auto r = transport::decode_response(*aux);
    aux->set_status(transport::Status::Idle);
    return r;
  };
  call({abi::sys::kPipe, {4096}, {}});
  std::int32_t fds[2];
  std::memcpy(fds, aux->data_at(4096, 8).data(), 8);
  const auto len = static_cast<std::uint32_t>(state.range(0));
  for (auto _ : state) {
    call({abi::sys::kWrite, {fds[1], 8192, len}, {{8192, len}}});
    benchmark::DoNotOptimize(call({abi::sys::kRead, {fds[0], 8192, len, 0}, {}}));
  }
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PipeSyscallRoundTrip)->Arg(16)->Arg(4096)->Arg(65536);
