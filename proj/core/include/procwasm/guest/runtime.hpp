#pragma once

#include <chrono>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "procwasm/guest/instance.hpp"
#include "procwasm/guest/shim.hpp"
#include "procwasm/kernel/kernel_core.hpp"

namespace procwasm::guest {

/// What one guest process did, collected when its context finishes.
struct ProcessReport {
  kernel::Pid pid = 0;
  std::vector<std::string> argv;
  ExitStatus status;
  std::chrono::nanoseconds wall_time{0};  // entry invocation to exit
  ShimStats shim;
  ExecCounters counters;  // whole run, including any start function
};

/// Execution backend for the kernel: decodes and instantiates modules on the
/// kernel context, then runs each guest on a thread of its own.
class GuestRuntime : public kernel::ProcessLauncher {
 public:
  struct Options {
    ShimConfig shim;
    std::chrono::nanoseconds instantiation_delay{0};
    /// Optional per-process hooks around the timed window (counter sessions).
    std::function<std::unique_ptr<EntryHooks>(kernel::Pid, const std::vector<std::string>& argv)> hooks;
  };

  GuestRuntime();
  explicit GuestRuntime(Options opts);
  ~GuestRuntime() override;

  std::unique_ptr<kernel::PreparedProcess> prepare(kernel::Pid pid, std::span<const std::byte> module_bytes,
                                                   const std::vector<std::string>& argv) override;

  /// Blocks until the process context has finished.
  ProcessReport report(kernel::Pid pid);
  /// Reports of every finished process, in pid order.
  std::vector<ProcessReport> reports();
  /// Joins all guest contexts.
  void join_all();

 private:
  class Prepared;
  struct Slot {
    std::thread thread;
    std::shared_future<ProcessReport> done;
  };

  GuestModule cached_module(std::span<const std::byte> bytes);
  void launch(kernel::Pid pid, std::unique_ptr<GuestInstance> instance, std::vector<std::string> argv);

  Options opts_;
  std::mutex mu_;
  std::map<kernel::Pid, Slot> slots_;
  std::vector<std::pair<std::vector<std::byte>, GuestModule>> cache_;
};

}  // namespace procwasm::guest
