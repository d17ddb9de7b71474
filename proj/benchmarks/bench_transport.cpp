#include <benchmark/benchmark.h>

#include "procwasm/transport/chunking.hpp"
#include "procwasm/transport/message.hpp"

using namespace procwasm::transport;

static void BM_EncodeDecodeRequest(benchmark::State& state) {
  AuxBuffer aux(1 << 20);
  const auto payloads = static_cast<std::uint32_t>(state.range(0));
  SyscallRequest req{4, {3, 4096, 5, 0, 0, 0}, {}};
  for (std::uint32_t i = 0; i < payloads; ++i) req.payloads.push_back({4096 + i * 64, 64});
  for (auto _ : state) {
    encode_request(aux, req);
    auto back = decode_request(aux);
    encode_response(aux, SyscallResponse::ok(static_cast<std::int64_t>(back.payloads.size())));
    benchmark::DoNotOptimize(decode_response(aux));
    aux.set_status(Status::Idle);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_EncodeDecodeRequest)->Arg(0)->Arg(1)->Arg(64)->Arg(499);

static void BM_PlanChunks(benchmark::State& state) {
  const auto total = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(plan_chunks(total, 65536));
}
BENCHMARK(BM_PlanChunks)->Arg(100)->Arg(1 << 20)->Arg(1 << 28);
BENCHMARK_MAIN();
