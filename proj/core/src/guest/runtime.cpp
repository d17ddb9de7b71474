#include "procwasm/guest/runtime.hpp"

#include <algorithm>

namespace procwasm::guest {

class GuestRuntime::Prepared : public kernel::PreparedProcess {
 public:
  Prepared(GuestRuntime& rt, kernel::Pid pid, GuestInstance instance, std::vector<std::string> argv)
      : rt_(rt), pid_(pid), instance_(std::make_unique<GuestInstance>(std::move(instance))), argv_(std::move(argv)) {}

  std::shared_ptr<transport::AuxBuffer> aux() const override { return instance_->aux(); }

  void start() override {
    if (!instance_) throw std::logic_error("process already started");
    rt_.launch(pid_, std::move(instance_), std::move(argv_));
  }

 private:
  GuestRuntime& rt_;
  kernel::Pid pid_;
  std::unique_ptr<GuestInstance> instance_;
  std::vector<std::string> argv_;
};

GuestRuntime::GuestRuntime() : GuestRuntime(Options{}) {}

GuestRuntime::GuestRuntime(Options opts) : opts_(std::move(opts)) { opts_.shim.validate(); }

GuestRuntime::~GuestRuntime() { join_all(); }

GuestModule GuestRuntime::cached_module(std::span<const std::byte> bytes) {
  std::lock_guard lock(mu_);
  for (const auto& [key, mod] : cache_) {
    if (key.size() == bytes.size() && std::equal(key.begin(), key.end(), bytes.begin())) return mod;
  }
  auto mod = GuestModule::load(bytes);
  cache_.emplace_back(std::vector<std::byte>(bytes.begin(), bytes.end()), std::move(mod));
  return cache_.back().second;
}

std::unique_ptr<kernel::PreparedProcess> GuestRuntime::prepare(kernel::Pid pid, std::span<const std::byte> bytes,
                                                               const std::vector<std::string>& argv) {
  GuestModule mod = cached_module(bytes);
  auto instance = instantiate_guest(mod, opts_.shim, opts_.instantiation_delay);
  instance.set_pid(pid);
  return std::make_unique<Prepared>(*this, pid, std::move(instance), argv);
}

void GuestRuntime::launch(kernel::Pid pid, std::unique_ptr<GuestInstance> instance, std::vector<std::string> argv) {
  auto promise = std::make_shared<std::promise<ProcessReport>>();
  std::unique_ptr<EntryHooks> hooks = opts_.hooks ? opts_.hooks(pid, argv) : nullptr;
  std::lock_guard lock(mu_);
  auto& slot = slots_[pid];
  slot.done = promise->get_future().share();
  slot.thread = std::thread([pid, promise, inst = std::move(instance), hooks = std::move(hooks),
                             argv = std::move(argv)]() mutable {
    ProcessReport rep;
    rep.pid = pid;
    rep.argv = std::move(argv);
    try {
      Shim shim(inst->memory(), *inst->aux());
      auto out = run_guest(*inst, shim, hooks.get());
      rep.status = out.status;
      rep.wall_time = out.wall_time;
      rep.shim = shim.stats();
      rep.counters = inst->counters();
    } catch (const std::exception& e) {
      rep.status = ExitStatus::trapped(std::string("runtime failure: ") + e.what());
    }
    hooks.reset();
    inst.reset();  // release linear memory before announcing completion
    promise->set_value(std::move(rep));
  });
}

ProcessReport GuestRuntime::report(kernel::Pid pid) {
  std::shared_future<ProcessReport> f;
  {
    std::lock_guard lock(mu_);
    auto it = slots_.find(pid);
    if (it == slots_.end()) throw std::out_of_range("no guest context for pid " + std::to_string(pid));
    f = it->second.done;
  }
  return f.get();
}

std::vector<ProcessReport> GuestRuntime::reports() {
  std::vector<std::shared_future<ProcessReport>> fs;
  {
    std::lock_guard lock(mu_);
    for (auto& [pid, s] : slots_) fs.push_back(s.done);
  }
  std::vector<ProcessReport> out;
  for (auto& f : fs) out.push_back(f.get());
  return out;
}

void GuestRuntime::join_all() {
  std::vector<std::thread> threads;
  {
    std::lock_guard lock(mu_);
    for (auto& [pid, s] : slots_) {
      if (s.thread.joinable()) threads.push_back(std::move(s.thread));
    }
  }
  for (auto& t : threads) t.join();
}

}  // namespace procwasm::guest
