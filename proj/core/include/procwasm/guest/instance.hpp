#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "procwasm/guest/linear_memory.hpp"
#include "procwasm/guest/module.hpp"
#include "procwasm/transport/aux_buffer.hpp"

namespace procwasm::guest {

struct ShimConfig {
  std::size_t aux_capacity = transport::kDefaultCapacity;
  std::string abi_namespace = "kernel";

  /// Throws std::invalid_argument on a capacity below 8192 or not 4096-aligned,
  /// or a namespace other than "kernel".
  void validate() const;
};

/// Guest fault: unreachable, out-of-bounds access, bad indirect call, ...
class Trap : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown by a SyscallHandler once the exit syscall has been delivered.
struct GuestExit {
  std::int32_t code = 0;
};

struct ExitStatus {
  enum class Kind { Exited, Trapped };
  Kind kind = Kind::Exited;
  std::int32_t code = 0;
  std::string trap_reason;

  static ExitStatus exited(std::int32_t code) { return {Kind::Exited, code, {}}; }
  static ExitStatus trapped(std::string reason);
  bool ok() const noexcept { return kind == Kind::Exited && code == 0; }
  friend bool operator==(const ExitStatus&, const ExitStatus&) = default;
};

/// Deterministic execution counts kept by the interpreter. Structural markers
/// (`block`, `loop`, `else`, `end`) are not instructions; everything else is.
struct ExecCounters {
  std::uint64_t instructions = 0;
  std::uint64_t loads = 0;
  std::uint64_t stores = 0;
  std::uint64_t branches = 0;              // br, br_if, br_table, if, return, call*
  std::uint64_t conditional_branches = 0;  // br_if, if

  friend ExecCounters operator-(const ExecCounters& a, const ExecCounters& b) {
    return {a.instructions - b.instructions, a.loads - b.loads, a.stores - b.stores,
            a.branches - b.branches, a.conditional_branches - b.conditional_branches};
  }
  friend bool operator==(const ExecCounters&, const ExecCounters&) = default;
};

/// Receives `kernel.syscall` imports. Implementations may throw GuestExit or Trap.
class SyscallHandler {
 public:
  virtual ~SyscallHandler() = default;
  virtual std::int64_t syscall(std::uint32_t no, const std::array<std::int64_t, 6>& args) = 0;
  /// The guest trapped; the handler should tell the kernel the process is gone.
  virtual void on_trap(const std::string& /*reason*/) {}
};

enum class InstanceState { Created, Running, Exited, Trapped };

class Interpreter;
class EntryHooks;
struct RunOutcome;

class GuestInstance {
 public:
  GuestInstance(GuestInstance&&) noexcept;
  GuestInstance& operator=(GuestInstance&&) noexcept;
  ~GuestInstance();

  std::int32_t pid() const noexcept { return pid_; }
  void set_pid(std::int32_t pid) noexcept { pid_ = pid; }

  InstanceState state() const noexcept { return state_; }
  const std::optional<ExitStatus>& exit_status() const noexcept { return exit_; }

  std::uint64_t memory_size() const noexcept { return memory_->size(); }
  LinearMemory& memory() noexcept { return *memory_; }
  const LinearMemory& memory() const noexcept { return *memory_; }

  const std::shared_ptr<transport::AuxBuffer>& aux() const noexcept { return aux_; }
  const GuestModule& module() const noexcept { return module_; }
  const ExecCounters& counters() const noexcept;

 private:
  friend GuestInstance instantiate_guest(const GuestModule&, const ShimConfig&, std::chrono::nanoseconds);
  friend RunOutcome run_guest(GuestInstance&, SyscallHandler&, EntryHooks*);

  GuestInstance(GuestModule module, const ShimConfig& cfg);

  GuestModule module_;
  std::int32_t pid_ = 0;
  InstanceState state_ = InstanceState::Created;
  std::optional<ExitStatus> exit_;
  std::unique_ptr<LinearMemory> memory_;
  std::shared_ptr<transport::AuxBuffer> aux_;
  std::unique_ptr<Interpreter> interp_;
};

/// Allocates linear memory (initialized from data segments), globals, the
/// table and a zeroed aux buffer. Runs no guest code. `injected_delay` is a
/// test hook that stalls instantiation.
GuestInstance instantiate_guest(const GuestModule& module, const ShimConfig& cfg,
                                std::chrono::nanoseconds injected_delay = std::chrono::nanoseconds{0});

/// Called around the timed window of run_guest.
class EntryHooks {
 public:
  virtual ~EntryHooks() = default;
  /// After instantiation, before the first guest instruction.
  virtual void before_entry(GuestInstance&) {}
  /// After the guest exited or trapped, once the clock has stopped.
  virtual void after_exit(GuestInstance&, const ExitStatus&) {}
};

struct RunOutcome {
  ExitStatus status;
  std::chrono::nanoseconds wall_time{0};
};

/// Runs the start function (if any) and `_start` to completion. Wall time runs
/// from entry invocation to exit. A `_start` that returns is followed by an
/// exit(0) syscall on the guest's behalf. Requires state Created.
RunOutcome run_guest(GuestInstance& instance, SyscallHandler& handler, EntryHooks* hooks = nullptr);

std::vector<std::byte> guest_read(const GuestInstance& instance, std::uint64_t offset, std::uint64_t len);
void guest_write(GuestInstance& instance, std::uint64_t offset, std::span<const std::byte> data);

}  // namespace procwasm::guest
