#include <benchmark/benchmark.h>

#include <cmath>

#include "kernel_env.hpp"

using namespace procwasm;

static void BM_MatmulFixture(benchmark::State& state) {
  const auto n = std::to_string(state.range(0));
  auto b = testing::boot_with_fixtures({}, 1 << 20);
  for (auto _ : state) {
    const auto pid = b.kernel->spawn("/bin/matmul", {"matmul", n, n, n, "/c.bin"}, {});
    benchmark::DoNotOptimize(b.kernel->wait(pid).code);
  }
  const double ops = std::pow(static_cast<double>(state.range(0)), 3);
  state.counters["mac/s"] = benchmark::Counter(ops * state.iterations(), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_MatmulFixture)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond)->UseRealTime();

static void BM_CatFixture(benchmark::State& state) {
  kernel::FsImage img;
  img.add_file("/in", std::vector<std::byte>(static_cast<std::size_t>(state.range(0)), std::byte{'a'}));
  auto b = testing::boot_with_fixtures(img, 65536 + 4096);
  for (auto _ : state) {
    const auto pid = b.kernel->spawn("/bin/cat", {"cat", "/in"}, testing::stdio("", "/out"));
    benchmark::DoNotOptimize(b.kernel->wait(pid).code);
  }
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CatFixture)->Arg(4096)->Arg(1 << 20)->Unit(benchmark::kMillisecond)->UseRealTime();
