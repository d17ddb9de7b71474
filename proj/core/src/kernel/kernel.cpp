#include "procwasm/kernel/kernel.hpp"

#include <spdlog/spdlog.h>

namespace procwasm::kernel {

bool Kernel::Mailbox::post(Event e) {
  {
    std::lock_guard lock(mu);
    if (!accepting) return false;
    queue.push_back(std::move(e));
  }
  cv.notify_one();
  return true;
}

Kernel::Kernel(Vfs vfs, std::shared_ptr<ProcessLauncher> launcher)
    : launcher_(std::move(launcher)),
      core_(std::make_unique<KernelCore>(std::move(vfs), launcher_.get())),
      mailbox_(std::make_shared<Mailbox>()) {
  core_->set_attach_hook([mb = std::weak_ptr<Mailbox>(mailbox_)](Pid pid, transport::AuxBuffer& aux) {
    aux.set_doorbell([mb, pid] {
      if (auto m = mb.lock()) m->post(Doorbell{pid});
    });
  });
  thread_ = std::thread([this] { loop(); });
}

std::unique_ptr<Kernel> Kernel::boot(const FsImage& image, std::shared_ptr<ProcessLauncher> launcher) {
  return std::make_unique<Kernel>(Vfs::boot(image), std::move(launcher));
}

Kernel::~Kernel() {
  shutdown();
  // Guest contexts may still hold the launcher; it outlives this object via
  // its own references.
}

void Kernel::post_task(std::function<void()> fn) {
  if (!mailbox_->post(std::move(fn))) throw KernelStopped();
}

void Kernel::loop() {
  for (;;) {
    Event ev;
    {
      std::unique_lock lock(mailbox_->mu);
      mailbox_->cv.wait(lock, [&] { return mailbox_->stopping || !mailbox_->queue.empty(); });
      if (mailbox_->queue.empty()) break;
      ev = std::move(mailbox_->queue.front());
      mailbox_->queue.pop_front();
    }
    try {
      if (auto* d = std::get_if<Doorbell>(&ev)) {
        core_->service(d->pid);
      } else {
        std::get<std::function<void()>>(ev)();
      }
    } catch (const std::exception& e) {
      spdlog::error("kernel event failed: {}", e.what());
    }
  }
  core_->shutdown();
}

void Kernel::shutdown() {
  {
    std::lock_guard lock(mailbox_->mu);
    mailbox_->accepting = false;
    mailbox_->stopping = true;
  }
  mailbox_->cv.notify_all();
  if (thread_.joinable()) thread_.join();
}

Pid Kernel::spawn(std::string program, std::vector<std::string> argv, StdioSpec stdio) {
  return with_core([&](KernelCore& k) { return k.spawn(std::nullopt, program, std::move(argv), stdio); });
}

Pid Kernel::attach(std::vector<std::string> argv, StdioSpec stdio, std::shared_ptr<transport::AuxBuffer> aux) {
  return with_core([&](KernelCore& k) { return k.attach(std::nullopt, std::move(argv), stdio, std::move(aux)); });
}

std::optional<ExitInfo> Kernel::wait_for(Pid pid, std::chrono::milliseconds timeout) {
  auto promise = std::make_shared<std::promise<ExitInfo>>();
  auto fut = promise->get_future();
  with_core([&](KernelCore& k) {
    k.on_exit(pid, [promise](const ExitInfo& info) { promise->set_value(info); });
    return 0;
  });
  if (fut.wait_for(timeout) != std::future_status::ready) return std::nullopt;
  auto info = fut.get();
  try {
    with_core([pid](KernelCore& k) { return k.reap(pid); });
  } catch (const KernelStopped&) {
  }
  return info;
}

ExitInfo Kernel::wait(Pid pid) {
  auto promise = std::make_shared<std::promise<ExitInfo>>();
  auto fut = promise->get_future();
  with_core([&](KernelCore& k) {
    k.on_exit(pid, [promise](const ExitInfo& info) { promise->set_value(info); });
    return 0;
  });
  auto info = fut.get();
  try {
    with_core([pid](KernelCore& k) { return k.reap(pid); });
  } catch (const KernelStopped&) {
  }
  return info;
}

}  // namespace procwasm::kernel
