#include <gtest/gtest.h>

#include <array>
#include <cstring>

#include "procwasm/abi.hpp"
#include "procwasm/transport/message.hpp"

using namespace procwasm::transport;
namespace pabi = procwasm::abi;

namespace {

std::vector<std::uint8_t> header_prefix(const AuxBuffer& aux, std::size_t n) {
  std::vector<std::uint8_t> out(n);
  std::memcpy(out.data(), aux.bytes().data(), n);
  return out;
}

}  // namespace

// Byte images written out by hand from docs/abi.md.
TEST(WireGolden, WriteRequestHeader) {
  AuxBuffer aux(8192);
  encode_request(aux, {4, {3, 4096, 5}, {{4096, 5}}});
  std::vector<std::uint8_t> want(108, 0);
  want[0] = 0x01;                      // status REQUEST
  want[4] = 0x04;                      // syscall_no
  want[8] = 0x03;                      // arg_count
  want[32] = 0x03;                     // args[0] = 3
  want[40] = 0x00, want[41] = 0x10;    // args[1] = 4096
  want[48] = 0x05;                     // args[2] = 5
  want[96] = 0x01;                     // payload count
  want[100] = 0x00, want[101] = 0x10;  // descriptor offset 4096
  want[104] = 0x05;                    // descriptor length 5
  EXPECT_EQ(header_prefix(aux, 108), want);
}

TEST(WireGolden, ErrorResponseHeader) {
  AuxBuffer aux(8192);
  encode_request(aux, {3, {9}, {}});
  encode_response(aux, SyscallResponse::fail(pabi::err::kEBADF));
  auto got = header_prefix(aux, 104);
  EXPECT_EQ(got[0], 0x02);  // DONE
  EXPECT_EQ(got[12], 0x08);
  const std::array<std::uint8_t, 8> minus8 = {0xF8, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF};
  EXPECT_TRUE(std::equal(minus8.begin(), minus8.end(), got.begin() + 16));
  EXPECT_EQ(got[96], 0x00);
}

TEST(WireGolden, NegativeArgumentIsTwosComplement) {
  AuxBuffer aux(8192);
  encode_request(aux, {7, {-1, 0x0102030405060708}, {}});
  auto got = header_prefix(aux, 48);
  for (int i = 0; i < 8; ++i) EXPECT_EQ(got[32 + i], 0xFF);
  const std::array<std::uint8_t, 8> le = {0x08, 0x07, 0x06, 0x05, 0x04, 0x03, 0x02, 0x01};
  EXPECT_TRUE(std::equal(le.begin(), le.end(), got.begin() + 40));
}

TEST(WireGolden, LayoutOffsets) {
  EXPECT_EQ(layout::kStatus, 0u);
  EXPECT_EQ(layout::kSyscallNo, 4u);
  EXPECT_EQ(layout::kArgCount, 8u);
  EXPECT_EQ(layout::kErrno, 12u);
  EXPECT_EQ(layout::kReturnValue, 16u);
  EXPECT_EQ(layout::kArgs, 32u);
  EXPECT_EQ(layout::kPayloadCount, 96u);
  EXPECT_EQ(layout::kDescriptors, 100u);
  EXPECT_EQ(layout::kMaxDescriptors, 499u);
  EXPECT_EQ(kHeaderSize, 4096u);
  EXPECT_EQ(static_cast<std::uint32_t>(Status::Idle), 0u);
  EXPECT_EQ(static_cast<std::uint32_t>(Status::Request), 1u);
  EXPECT_EQ(static_cast<std::uint32_t>(Status::Done), 2u);
}

TEST(AbiNumbers, Pinned) {
  EXPECT_EQ(pabi::kNamespace, "kernel");
  EXPECT_EQ(pabi::kSyscallImport, "syscall");
  EXPECT_EQ(pabi::sys::kExit, 1u);
  EXPECT_EQ(pabi::sys::kRead, 3u);
  EXPECT_EQ(pabi::sys::kWrite, 4u);
  EXPECT_EQ(pabi::sys::kOpen, 5u);
  EXPECT_EQ(pabi::sys::kClose, 6u);
  EXPECT_EQ(pabi::sys::kWaitpid, 7u);
  EXPECT_EQ(pabi::sys::kSeek, 19u);
  EXPECT_EQ(pabi::sys::kPipe, 42u);
  EXPECT_EQ(pabi::sys::kStat, 106u);
  EXPECT_EQ(pabi::sys::kWritev, 146u);
  EXPECT_EQ(pabi::sys::kSpawn, 400u);
  EXPECT_EQ(pabi::sys::kArgsSizesGet, 401u);
  EXPECT_EQ(pabi::sys::kArgsGet, 402u);

  EXPECT_EQ(pabi::err::kENOENT, 2);
  EXPECT_EQ(pabi::err::kEBADF, 8);
  EXPECT_EQ(pabi::err::kEFAULT, 14);
  EXPECT_EQ(pabi::err::kEINVAL, 22);
  EXPECT_EQ(pabi::err::kEPIPE, 32);
  EXPECT_EQ(pabi::err::kENOSYS, 38);

  EXPECT_EQ(pabi::open_flags::kWrOnly, 1);
  EXPECT_EQ(pabi::open_flags::kRdWr, 2);
  EXPECT_EQ(pabi::open_flags::kCreat, 0x40);
  EXPECT_EQ(pabi::open_flags::kTrunc, 0x200);
  EXPECT_EQ(pabi::open_flags::kAppend, 0x400);
  EXPECT_EQ(pabi::whence::kEnd, 2);
  EXPECT_EQ(pabi::kReadContinuation, 1);
  EXPECT_EQ(pabi::kStatRecordSize, 16u);
  EXPECT_EQ(pabi::kTrapExitCode, 134);
}
