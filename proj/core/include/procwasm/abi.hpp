#pragma once

// Numbers shared by the guest runtime (shim), the kernel and the guest C
// library in fixtures/libc. Changing any value here is an ABI break; the
// golden tests in tests/unit/abi_test.cpp pin them.

#include <cstdint>
#include <string_view>

namespace procwasm::abi {

inline constexpr std::string_view kNamespace = "kernel";
inline constexpr std::string_view kSyscallImport = "syscall";
inline constexpr std::string_view kEntryExport = "_start";
inline constexpr std::string_view kMemoryExport = "memory";

inline constexpr std::uint32_t kWasmPageSize = 65536;

namespace sys {
inline constexpr std::uint32_t kExit = 1;
inline constexpr std::uint32_t kRead = 3;
inline constexpr std::uint32_t kWrite = 4;
inline constexpr std::uint32_t kOpen = 5;
inline constexpr std::uint32_t kClose = 6;
inline constexpr std::uint32_t kWaitpid = 7;
inline constexpr std::uint32_t kSeek = 19;
inline constexpr std::uint32_t kPipe = 42;
inline constexpr std::uint32_t kStat = 106;
inline constexpr std::uint32_t kWritev = 146;
inline constexpr std::uint32_t kSpawn = 400;
inline constexpr std::uint32_t kArgsSizesGet = 401;
inline constexpr std::uint32_t kArgsGet = 402;
}  // namespace sys

namespace err {
inline constexpr std::int32_t kENOENT = 2;
inline constexpr std::int32_t kEBADF = 8;
inline constexpr std::int32_t kEFAULT = 14;
inline constexpr std::int32_t kEINVAL = 22;
inline constexpr std::int32_t kEPIPE = 32;
inline constexpr std::int32_t kENOSYS = 38;
}  // namespace err

namespace open_flags {
inline constexpr std::int64_t kRdOnly = 0;
inline constexpr std::int64_t kWrOnly = 1;
inline constexpr std::int64_t kRdWr = 2;
inline constexpr std::int64_t kAccMode = 3;
inline constexpr std::int64_t kCreat = 0x40;
inline constexpr std::int64_t kTrunc = 0x200;
inline constexpr std::int64_t kAppend = 0x400;
inline constexpr std::int64_t kKnown = kAccMode | kCreat | kTrunc | kAppend;
}  // namespace open_flags

namespace whence {
inline constexpr std::int64_t kSet = 0;
inline constexpr std::int64_t kCur = 1;
inline constexpr std::int64_t kEnd = 2;
}  // namespace whence

// Flag bit in the 4th wire argument of a read request: the request continues
// a chunked guest read, so the kernel returns 0 rather than parking.
inline constexpr std::int64_t kReadContinuation = 1;

// stat result record written to guest memory: kind:u32, reserved:u32, size:u64.
inline constexpr std::uint32_t kStatRecordSize = 16;
inline constexpr std::uint32_t kStatKindFile = 1;
inline constexpr std::uint32_t kStatKindDirectory = 2;

// Exit code reported to waiters for a guest that trapped instead of exiting.
inline constexpr std::int32_t kTrapExitCode = 134;

}  // namespace procwasm::abi
