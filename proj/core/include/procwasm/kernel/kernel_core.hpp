#pragma once

#include <array>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "procwasm/kernel/fs.hpp"
#include "procwasm/kernel/process.hpp"
#include "procwasm/transport/aux_buffer.hpp"
#include "procwasm/transport/message.hpp"

namespace procwasm::kernel {

/// A spawn that failed before any process existed. `error` is an errno value.
class SpawnError : public std::runtime_error {
 public:
  SpawnError(std::int32_t error, const std::string& what) : std::runtime_error(what), error(error) {}
  std::int32_t error;
};

/// How one of fds 0..2 of a new process is bound.
struct StdioBinding {
  enum class Kind { Null, ReadFile, WriteFile, AppendFile, Inherit };
  Kind kind = Kind::Null;
  std::string path;  // ReadFile / WriteFile / AppendFile
  int parent_fd = -1;  // Inherit

  static StdioBinding null() { return {}; }
  static StdioBinding read_file(std::string p) { return {Kind::ReadFile, std::move(p), -1}; }
  /// Created if missing, truncated otherwise.
  static StdioBinding write_file(std::string p) { return {Kind::WriteFile, std::move(p), -1}; }
  static StdioBinding append_file(std::string p) { return {Kind::AppendFile, std::move(p), -1}; }
  static StdioBinding inherit(int fd) { return {Kind::Inherit, {}, fd}; }
};

struct StdioSpec {
  std::array<StdioBinding, 3> fds{};
};

struct ExitInfo {
  Pid pid = 0;
  std::int32_t code = 0;
  bool trapped = false;
  std::chrono::nanoseconds kernel_time{0};  // dispatch time spent on this process's requests
};

/// Guest side of spawn, supplied by the execution backend. The kernel only
/// ever sees the returned aux buffer.
class PreparedProcess {
 public:
  virtual ~PreparedProcess() = default;
  virtual std::shared_ptr<transport::AuxBuffer> aux() const = 0;
  /// Begins running the guest asynchronously.
  virtual void start() = 0;
};

class ProcessLauncher {
 public:
  virtual ~ProcessLauncher() = default;
  /// Validates and instantiates the module for `pid`; runs no guest code.
  /// Throws (e.g. guest::InvalidModule) when the bytes are not runnable.
  virtual std::unique_ptr<PreparedProcess> prepare(Pid pid, std::span<const std::byte> module_bytes,
                                                   const std::vector<std::string>& argv) = 0;
};

struct Parked {};
using DispatchResult = std::variant<transport::SyscallResponse, Parked>;

/// Single-threaded kernel state machine: process table, descriptors, vfs,
/// pipes and syscall handlers. Everything here runs on one context; the
/// Kernel wrapper serializes calls through its event loop.
///
/// The syscall layer takes requests decoded from an AuxBuffer and reads or
/// writes payload bytes only inside that buffer's data region.
class KernelCore {
 public:
  explicit KernelCore(Vfs vfs = {}, ProcessLauncher* launcher = nullptr);
  ~KernelCore();
  KernelCore(const KernelCore&) = delete;
  KernelCore& operator=(const KernelCore&) = delete;

  /// Called for every new process before it can post a request.
  void set_attach_hook(std::function<void(Pid, transport::AuxBuffer&)> hook) { attach_hook_ = std::move(hook); }

  /// Starts `program` from the vfs. Throws SpawnError with ENOENT for a missing
  /// program or stdio input, EINVAL for an invalid module or no launcher.
  Pid spawn(std::optional<Pid> parent, std::string_view program, std::vector<std::string> argv,
            const StdioSpec& stdio);

  /// Registers a process driven by the caller through `aux` (no guest).
  Pid attach(std::optional<Pid> parent, std::vector<std::string> argv, const StdioSpec& stdio,
             std::shared_ptr<transport::AuxBuffer> aux);

  /// Handles one request for `pid`. Parked means the reply is deferred.
  DispatchResult dispatch(Pid pid, const transport::SyscallRequest& req);

  /// Decodes the pending request from pid's buffer, dispatches it, posts the
  /// response unless parked, then retries parked requests. No-op when the
  /// buffer holds no request.
  void service(Pid pid);

  /// Retries parked requests until none make progress.
  void progress();

  /// `cb` runs once the process has exited (immediately if it already has).
  void on_exit(Pid pid, std::function<void(const ExitInfo&)> cb);
  std::optional<ExitInfo> exit_info(Pid pid) const;
  /// Forgets an exited process. Returns false if it is unknown or alive.
  bool reap(Pid pid);

  /// Closes every aux buffer and marks live processes as killed.
  void shutdown();

  Vfs& vfs() noexcept { return vfs_; }
  const Process* process(Pid pid) const;
  std::size_t parked_count() const noexcept { return parked_.size(); }
  std::vector<Pid> live_pids() const;

 private:
  struct ParkedRequest {
    Pid pid;
    transport::SyscallRequest req;
    int fd = -1;
    std::uint32_t generation = 0;
    std::uint64_t progress = 0;  // bytes already moved (writes)
  };

  using Response = transport::SyscallResponse;

  using StdioFiles = std::array<std::shared_ptr<OpenFile>, 3>;

  Process& proc(Pid pid);
  StdioFiles bind_stdio(const StdioSpec& spec, std::optional<Pid> parent);
  Pid register_process(Pid pid, std::optional<Pid> parent, std::vector<std::string> argv, StdioFiles files,
                       std::shared_ptr<transport::AuxBuffer> aux);
  void close_fd(Process& p, int fd);
  void release(const std::shared_ptr<OpenFile>& f);
  void finish(Pid pid, std::int32_t code, bool trapped);
  void flush_exits();
  void complete(Pid pid, const Response& resp);

  std::optional<Response> try_read(ParkedRequest& pr, bool first);
  std::optional<Response> try_write(ParkedRequest& pr, bool first);
  std::optional<Response> try_waitpid(ParkedRequest& pr, bool first);
  std::optional<Response> retry(ParkedRequest& pr);

  Response sys_exit(Process& p, const transport::SyscallRequest& r);
  Response sys_open(Process& p, const transport::SyscallRequest& r);
  Response sys_close(Process& p, const transport::SyscallRequest& r);
  Response sys_seek(Process& p, const transport::SyscallRequest& r);
  Response sys_stat(Process& p, const transport::SyscallRequest& r);
  Response sys_pipe(Process& p, const transport::SyscallRequest& r);
  Response sys_spawn(Process& p, const transport::SyscallRequest& r);
  Response sys_args_sizes(Process& p, const transport::SyscallRequest& r);
  Response sys_args_get(Process& p, const transport::SyscallRequest& r);

  Vfs vfs_;
  ProcessLauncher* launcher_;
  std::function<void(Pid, transport::AuxBuffer&)> attach_hook_;
  std::map<Pid, Process> procs_;
  Pid next_pid_ = 1;
  std::vector<ParkedRequest> parked_;
  std::map<Pid, std::vector<std::function<void(const ExitInfo&)>>> exit_waiters_;
  std::vector<Pid> exited_;  // exits not yet announced to on_exit callbacks
};

}  // namespace procwasm::kernel
