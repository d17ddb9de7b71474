#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <type_traits>
#include <variant>

#include "procwasm/kernel/kernel_core.hpp"

namespace procwasm::kernel {

class KernelStopped : public std::runtime_error {
 public:
  KernelStopped() : std::runtime_error("kernel event loop has stopped") {}
};

/// Runs a KernelCore on its own event loop thread. Doorbells from process
/// shims and host calls are queued and handled one at a time in arrival order.
class Kernel {
 public:
  explicit Kernel(Vfs vfs, std::shared_ptr<ProcessLauncher> launcher = nullptr);
  static std::unique_ptr<Kernel> boot(const FsImage& image, std::shared_ptr<ProcessLauncher> launcher = nullptr);
  ~Kernel();

  Kernel(const Kernel&) = delete;
  Kernel& operator=(const Kernel&) = delete;

  /// Spawns from the host. Throws SpawnError.
  Pid spawn(std::string program, std::vector<std::string> argv, StdioSpec stdio);
  Pid attach(std::vector<std::string> argv, StdioSpec stdio, std::shared_ptr<transport::AuxBuffer> aux);

  /// Blocks until `pid` exits, then reaps it.
  ExitInfo wait(Pid pid);
  /// As wait(), giving up after `timeout`.
  std::optional<ExitInfo> wait_for(Pid pid, std::chrono::milliseconds timeout);

  /// Runs `fn(core)` on the loop thread and returns its result.
  template <typename F>
  auto with_core(F&& fn) -> std::invoke_result_t<F, KernelCore&> {
    using R = std::invoke_result_t<F, KernelCore&>;
    auto task = std::make_shared<std::packaged_task<R()>>([this, f = std::forward<F>(fn)]() mutable {
      return f(*core_);
    });
    auto fut = task->get_future();
    post_task([task] { (*task)(); });
    return fut.get();
  }

  /// Stops the loop: live processes are killed and all aux buffers closed.
  /// Idempotent.
  void shutdown();

 private:
  struct Doorbell {
    Pid pid;
  };
  using Event = std::variant<Doorbell, std::function<void()>>;

  struct Mailbox {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<Event> queue;
    bool stopping = false;
    bool accepting = true;
    bool post(Event e);
  };

  void post_task(std::function<void()> fn);
  void loop();

  std::shared_ptr<ProcessLauncher> launcher_;
  std::unique_ptr<KernelCore> core_;
  std::shared_ptr<Mailbox> mailbox_;
  std::thread thread_;
};

}  // namespace procwasm::kernel
