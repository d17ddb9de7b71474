#include <gtest/gtest.h>

#include <chrono>
#include <random>
#include <thread>

#include "procwasm/abi.hpp"
#include "procwasm/guest/instance.hpp"
#include "procwasm/guest/module.hpp"
#include "test_env.hpp"
#include "wasm_builder.hpp"

using namespace procwasm::guest;
using procwasm::testing::Code;
using procwasm::testing::fixture_wasm;
using procwasm::testing::guest_with_body;
using procwasm::testing::kI32;
using procwasm::testing::random_bytes;
using procwasm::testing::WasmBuilder;
namespace pabi = procwasm::abi;

namespace {

// Stands in for the shim: records calls and ends the run on exit.
class RecordingHandler : public SyscallHandler {
 public:
  std::int64_t syscall(std::uint32_t no, const std::array<std::int64_t, 6>& args) override {
    calls.push_back({no, args});
    if (no == pabi::sys::kExit) throw GuestExit{static_cast<std::int32_t>(args[0])};
    return reply;
  }
  void on_trap(const std::string& reason) override { trap = reason; }

  std::vector<std::pair<std::uint32_t, std::array<std::int64_t, 6>>> calls;
  std::int64_t reply = 0;
  std::string trap;
};

GuestInstance make(const std::vector<std::byte>& bytes, std::chrono::nanoseconds delay = {}) {
  ShimConfig cfg;
  cfg.aux_capacity = 8192;
  return instantiate_guest(GuestModule::load(bytes), cfg, delay);
}

}  // namespace

TEST(GuestModule, FixturesLoad) {
  for (const char* name : {"cat", "pipeline", "append_stress", "matmul"}) {
    auto m = GuestModule::load(fixture_wasm(name));
    EXPECT_EQ(m.entry(), "_start");
    EXPECT_EQ(m.memory_export(), "memory");
    EXPECT_EQ(m.memory_size() % 65536, 0u) << name;
  }
}

TEST(GuestModule, ImportOutsideAbiIsRejected) {
  WasmBuilder w;
  w.import_func("env", "foo", w.type({}, {}));
  auto start = w.func(w.type({}, {}), Code{});
  w.memory(1);
  w.export_func("_start", start);
  EXPECT_THROW(GuestModule::load(w.build()), UnsupportedImport);
}

TEST(GuestModule, SyscallWithWrongSignatureIsRejected) {
  WasmBuilder w;
  w.import_func("kernel", "syscall", w.type({kI32}, {kI32}));
  auto start = w.func(w.type({}, {}), Code{});
  w.memory(1);
  w.export_func("_start", start);
  EXPECT_THROW(GuestModule::load(w.build()), UnsupportedImport);
}

TEST(GuestModule, MissingMemoryExportIsInvalid) {
  WasmBuilder w;
  w.import_syscall();
  auto start = w.func(w.type({}, {}), Code{});
  w.memory(1, false);
  w.export_func("_start", start);
  EXPECT_THROW(GuestModule::load(w.build()), InvalidModule);
}

TEST(GuestModule, MissingEntryIsInvalid) {
  WasmBuilder w;
  w.import_syscall();
  w.func(w.type({}, {}), Code{});
  w.memory(1);
  EXPECT_THROW(GuestModule::load(w.build()), InvalidModule);
}

TEST(GuestModule, GarbageIsInvalid) {
  EXPECT_THROW(GuestModule::load(random_bytes(64, 1)), InvalidModule);
  auto truncated = fixture_wasm("cat");
  truncated.resize(truncated.size() / 2);
  EXPECT_THROW(GuestModule::load(truncated), InvalidModule);
}

TEST(GuestModule, IllTypedBodyIsInvalid) {
  // i32.const leaves a value on the stack of a [] -> [] function.
  EXPECT_THROW(GuestModule::load(guest_with_body(Code{}.i32(1))), InvalidModule);
}

TEST(Instantiate, CreatedWithZeroedAux) {
  auto inst = make(fixture_wasm("cat"));
  EXPECT_EQ(inst.state(), InstanceState::Created);
  EXPECT_EQ(inst.memory_size() % 65536, 0u);
  EXPECT_EQ(inst.aux()->capacity(), 8192u);
  for (auto b : inst.aux()->bytes()) ASSERT_EQ(b, std::byte{0});
  EXPECT_EQ(inst.counters(), ExecCounters{});
}

TEST(Instantiate, RejectsBadShimConfig) {
  auto m = GuestModule::load(fixture_wasm("cat"));
  ShimConfig small;
  small.aux_capacity = 4096;
  EXPECT_THROW(instantiate_guest(m, small), std::invalid_argument);
  ShimConfig unaligned;
  unaligned.aux_capacity = 10000;
  EXPECT_THROW(instantiate_guest(m, unaligned), std::invalid_argument);
  ShimConfig ns;
  ns.abi_namespace = "env";
  EXPECT_THROW(instantiate_guest(m, ns), std::invalid_argument);
}

TEST(RunGuest, ExitCodeSeven) {
  auto inst = make(guest_with_body(Code{}.syscall(pabi::sys::kExit, {7}).drop()));
  RecordingHandler h;
  auto out = run_guest(inst, h);
  EXPECT_EQ(out.status, ExitStatus::exited(7));
  EXPECT_EQ(inst.state(), InstanceState::Exited);
  ASSERT_EQ(h.calls.size(), 1u);
  EXPECT_EQ(h.calls[0].first, pabi::sys::kExit);
}

TEST(RunGuest, ReturningEntryExitsZero) {
  auto inst = make(guest_with_body(Code{}));
  RecordingHandler h;
  EXPECT_EQ(run_guest(inst, h).status, ExitStatus::exited(0));
  ASSERT_EQ(h.calls.size(), 1u);
  EXPECT_EQ(h.calls[0].first, pabi::sys::kExit);
}

TEST(RunGuest, SyscallArgumentsReachHandler) {
  auto inst = make(guest_with_body(Code{}.syscall(999, {1, -2, 3, 4, 5, 6}).drop()));
  RecordingHandler h;
  run_guest(inst, h);
  ASSERT_GE(h.calls.size(), 1u);
  EXPECT_EQ(h.calls[0].first, 999u);
  EXPECT_EQ(h.calls[0].second, (std::array<std::int64_t, 6>{1, -2, 3, 4, 5, 6}));
}

TEST(RunGuest, UnreachableTraps) {
  auto inst = make(guest_with_body(Code{}.unreachable()));
  RecordingHandler h;
  auto out = run_guest(inst, h);
  EXPECT_EQ(out.status.kind, ExitStatus::Kind::Trapped);
  EXPECT_EQ(inst.state(), InstanceState::Trapped);
  EXPECT_FALSE(h.trap.empty());
}

TEST(RunGuest, OutOfBoundsLoadTraps) {
  auto inst = make(guest_with_body(Code{}.i32(65536 - 2).i32_load().drop()));
  RecordingHandler h;
  auto out = run_guest(inst, h);
  EXPECT_EQ(out.status.kind, ExitStatus::Kind::Trapped);
  EXPECT_NE(out.status.trap_reason.find("bounds"), std::string::npos) << out.status.trap_reason;
}

TEST(RunGuest, RunsOnlyOnce) {
  auto inst = make(guest_with_body(Code{}));
  RecordingHandler h;
  run_guest(inst, h);
  EXPECT_THROW(run_guest(inst, h), std::logic_error);
}

TEST(RunGuest, DataSegmentsInitializeMemory) {
  WasmBuilder w;
  w.import_syscall();
  // exit(load32(16))
  auto start = w.func(w.type({}, {}), Code{}
                                          .i32(static_cast<std::int32_t>(pabi::sys::kExit))
                                          .i32(16)
                                          .i32_load()
                                          .op(0xAC)  // i64.extend_i32_s
                                          .i64(0).i64(0).i64(0).i64(0).i64(0)
                                          .call(0)
                                          .drop());
  w.memory(1);
  w.export_func("_start", start);
  w.data(16, {42, 0, 0, 0});
  auto inst = make(w.build());
  RecordingHandler h;
  EXPECT_EQ(run_guest(inst, h).status, ExitStatus::exited(42));
}

// Counting oracle: `_start` is m copies of (i32.const; drop) and returns, so
// the interpreter executes exactly 2m instructions, no loads or branches.
TEST(RunGuest, InstructionCountMatchesTrace) {
  for (int m : {0, 1, 17, 1000}) {
    Code body;
    for (int i = 0; i < m; ++i) body.i32(i).drop();
    auto inst = make(guest_with_body(body));
    RecordingHandler h;
    run_guest(inst, h);
    EXPECT_EQ(inst.counters().instructions, 2u * m);
    EXPECT_EQ(inst.counters().loads, 0u);
    EXPECT_EQ(inst.counters().branches, 0u);
  }
  // Each i32.load adds 3 instructions (const, load, drop) and one load.
  Code loads;
  for (int i = 0; i < 10; ++i) loads.i32(4 * i).i32_load().drop();
  auto inst = make(guest_with_body(loads));
  RecordingHandler h;
  run_guest(inst, h);
  EXPECT_EQ(inst.counters().instructions, 30u);
  EXPECT_EQ(inst.counters().loads, 10u);
  EXPECT_EQ(inst.counters().stores, 0u);
}

namespace {

class Sleeper : public EntryHooks {
 public:
  void before_entry(GuestInstance& inst) override {
    state_at_entry = inst.state();
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
  }
  void after_exit(GuestInstance& inst, const ExitStatus& s) override {
    state_at_exit = inst.state();
    status = s;
  }
  InstanceState state_at_entry{}, state_at_exit{};
  ExitStatus status;
};

}  // namespace

TEST(RunGuest, HooksBracketTheTimedWindow) {
  auto inst = make(guest_with_body(Code{}.syscall(pabi::sys::kExit, {3}).drop()));
  RecordingHandler h;
  Sleeper hooks;
  auto out = run_guest(inst, h, &hooks);
  EXPECT_EQ(hooks.state_at_entry, InstanceState::Created);
  EXPECT_EQ(hooks.state_at_exit, InstanceState::Exited);
  EXPECT_EQ(hooks.status, ExitStatus::exited(3));
  EXPECT_LT(out.wall_time, std::chrono::milliseconds(30));
}

TEST(RunGuest, InstantiationDelayIsNotTimed) {
  using namespace std::chrono;
  const auto bytes = fixture_wasm("matmul");
  const auto t0 = steady_clock::now();
  auto inst = make(bytes, milliseconds(100));
  EXPECT_GE(steady_clock::now() - t0, milliseconds(100));
  auto fast = guest_with_body(Code{});
  auto delayed = make(fast, milliseconds(100));
  RecordingHandler h;
  EXPECT_LT(run_guest(delayed, h).wall_time, milliseconds(10));
}

TEST(GuestMemory, Examples) {
  auto inst = make(fixture_wasm("cat"));
  EXPECT_TRUE(guest_read(inst, 0, 0).empty());
  const auto data = random_bytes(16, 9);
  guest_write(inst, 4096, data);
  EXPECT_EQ(guest_read(inst, 4096, 16), data);
  EXPECT_THROW(guest_read(inst, inst.memory_size() - 1, 2), OutOfBounds);
  EXPECT_NO_THROW(guest_read(inst, inst.memory_size() - 1, 1));
  EXPECT_NO_THROW(guest_read(inst, inst.memory_size(), 0));
}

TEST(GuestMemory, RoundTripAndNoPartialAccess) {
  auto inst = make(guest_with_body(Code{}, 2));
  const auto size = inst.memory_size();
  ASSERT_EQ(size, 2u * 65536);
  std::mt19937_64 rng(21);
  for (int i = 0; i < 2000; ++i) {
    const std::uint64_t len = rng() % 300;
    const std::uint64_t off = rng() % (size + 200);
    auto data = random_bytes(len, rng());
    if (off + len <= size) {
      guest_write(inst, off, data);
      ASSERT_EQ(guest_read(inst, off, len), data);
    } else {
      const auto before = guest_read(inst, 0, size);
      ASSERT_THROW(guest_write(inst, off, data), OutOfBounds);
      ASSERT_THROW(guest_read(inst, off, len), OutOfBounds);
      ASSERT_EQ(guest_read(inst, 0, size), before);
    }
  }
  EXPECT_THROW(guest_read(inst, ~0ull, 2), OutOfBounds);
}
