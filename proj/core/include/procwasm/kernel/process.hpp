#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "procwasm/kernel/fs.hpp"
#include "procwasm/kernel/pipe.hpp"
#include "procwasm/transport/aux_buffer.hpp"

namespace procwasm::kernel {

using Pid = std::int32_t;

/// An open file description, shared by every descriptor that refers to it.
struct OpenFile {
  enum class Kind { File, PipeRead, PipeWrite, Null };

  Kind kind = Kind::Null;
  std::shared_ptr<FsNode> node;  // File
  std::shared_ptr<Pipe> pipe;    // PipeRead / PipeWrite
  std::uint64_t offset = 0;
  bool readable = false;
  bool writable = false;
  bool append = false;
  int refs = 0;

  static std::shared_ptr<OpenFile> null_device();
  static std::shared_ptr<OpenFile> file(std::shared_ptr<FsNode> node, bool readable, bool writable, bool append);
  /// Creates both ends and registers one reader and one writer on the pipe.
  static std::pair<std::shared_ptr<OpenFile>, std::shared_ptr<OpenFile>> pipe_pair();
};

/// Descriptor table. Every slot carries a generation that changes on close,
/// so a request parked on fd N can tell whether N still names the same
/// description when it is retried.
class FdTable {
 public:
  static constexpr int kMaxFds = 1024;

  /// Installs at the lowest free descriptor >= 0; -1 if the table is full.
  int install(std::shared_ptr<OpenFile> file);
  /// Installs at `fd`, closing whatever was there. Returns the displaced
  /// description (if any) so the caller can release it.
  std::shared_ptr<OpenFile> install_at(int fd, std::shared_ptr<OpenFile> file);
  OpenFile* get(int fd) const noexcept;
  std::shared_ptr<OpenFile> get_shared(int fd) const noexcept;
  std::uint32_t generation(int fd) const noexcept;
  bool is_current(int fd, std::uint32_t generation) const noexcept;
  /// Empties the slot and returns the description; nullptr if `fd` was not open.
  std::shared_ptr<OpenFile> remove(int fd) noexcept;
  std::vector<int> open_fds() const;

 private:
  struct Slot {
    std::shared_ptr<OpenFile> file;
    std::uint32_t generation = 0;
  };
  std::vector<Slot> slots_;
};

struct Process {
  Pid pid = 0;
  std::optional<Pid> parent;
  std::vector<std::string> argv;
  std::string cwd = "/";
  FdTable fds;
  std::shared_ptr<transport::AuxBuffer> aux;
  std::optional<std::int32_t> exit_code;
  bool trapped = false;
  bool reaped = false;
  std::chrono::nanoseconds kernel_time{0};

  bool alive() const noexcept { return !exit_code.has_value(); }
};

}  // namespace procwasm::kernel
