#include "procwasm/harness/counters.hpp"

#include <linux/perf_event.h>
#include <sys/ioctl.h>
#include <sys/syscall.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace procwasm::harness {

const std::vector<CounterSpec>& default_counter_specs() {
  static const std::vector<CounterSpec> specs{
      {"all-loads-retired", "r81d0"},
      {"all-stores-retired", "r82d0"},
      {"branches-retired", "r00c4"},
      {"conditional-branches", "r01c4"},
      {"instructions-retired", "r1c0"},
      {"cpu-cycles", ""},
      {"L1-icache-load-misses", ""},
  };
  return specs;
}

CounterSet software_counter_set(const guest::ExecCounters& c) {
  CounterSet s;
  s.provider = "software";
  s.values = {
      {"all-loads-retired", c.loads},
      {"all-stores-retired", c.stores},
      {"branches-retired", c.branches},
      {"conditional-branches", c.conditional_branches},
      {"instructions-retired", c.instructions},
  };
  return s;
}

namespace {

class NullSession : public CounterSession {
 public:
  CounterSet end(const guest::GuestInstance&) override { return {}; }
};

class NullProvider : public CounterProvider {
 public:
  std::string id() const override { return "null"; }
  std::unique_ptr<CounterSession> begin(const guest::GuestInstance&) override {
    return std::make_unique<NullSession>();
  }
};

class SoftwareSession : public CounterSession {
 public:
  explicit SoftwareSession(guest::ExecCounters start) : start_(start) {}
  CounterSet end(const guest::GuestInstance& instance) override {
    return software_counter_set(instance.counters() - start_);
  }

 private:
  guest::ExecCounters start_;
};

class SoftwareProvider : public CounterProvider {
 public:
  std::string id() const override { return "software"; }
  std::unique_ptr<CounterSession> begin(const guest::GuestInstance& instance) override {
    return std::make_unique<SoftwareSession>(instance.counters());
  }
};

struct PerfEncoding {
  std::uint32_t type;
  std::uint64_t config;
};

PerfEncoding encode(const CounterSpec& spec) {
  if (!spec.raw.empty()) {
    if (spec.raw.front() != 'r') throw std::invalid_argument("raw event must look like r<hex>: " + spec.raw);
    return {PERF_TYPE_RAW, std::stoull(spec.raw.substr(1), nullptr, 16)};
  }
  if (spec.name == "cpu-cycles") return {PERF_TYPE_HARDWARE, PERF_COUNT_HW_CPU_CYCLES};
  if (spec.name == "instructions-retired") return {PERF_TYPE_HARDWARE, PERF_COUNT_HW_INSTRUCTIONS};
  if (spec.name == "L1-icache-load-misses") {
    return {PERF_TYPE_HW_CACHE, PERF_COUNT_HW_CACHE_L1I | (PERF_COUNT_HW_CACHE_OP_READ << 8) |
                                    (PERF_COUNT_HW_CACHE_RESULT_MISS << 16)};
  }
  throw std::invalid_argument("no encoding for event " + spec.name);
}

int open_counter(PerfEncoding enc) {
  perf_event_attr attr;
  std::memset(&attr, 0, sizeof attr);
  attr.size = sizeof attr;
  attr.type = enc.type;
  attr.config = enc.config;
  attr.disabled = 1;
  attr.exclude_kernel = 1;
  attr.exclude_hv = 1;
  return static_cast<int>(::syscall(SYS_perf_event_open, &attr, 0, -1, -1, 0));
}

class HardwareSession : public CounterSession {
 public:
  explicit HardwareSession(const std::vector<CounterSpec>& specs) {
    for (const auto& s : specs) {
      int fd = open_counter(encode(s));
      if (fd >= 0) fds_.emplace_back(s.name, fd);
    }
    for (auto& [_, fd] : fds_) {
      ioctl(fd, PERF_EVENT_IOC_RESET, 0);
      ioctl(fd, PERF_EVENT_IOC_ENABLE, 0);
    }
  }
  ~HardwareSession() override { close_all(); }

  CounterSet end(const guest::GuestInstance&) override {
    for (auto& [_, fd] : fds_) ioctl(fd, PERF_EVENT_IOC_DISABLE, 0);
    CounterSet s;
    s.provider = "hardware";
    for (auto& [name, fd] : fds_) {
      std::uint64_t v = 0;
      if (::read(fd, &v, sizeof v) == static_cast<ssize_t>(sizeof v)) s.values[name] = v;
    }
    close_all();
    return s;
  }

 private:
  void close_all() {
    for (auto& [_, fd] : fds_) ::close(fd);
    fds_.clear();
  }
  std::vector<std::pair<std::string, int>> fds_;
};

class HardwareProvider : public CounterProvider {
 public:
  explicit HardwareProvider(std::vector<CounterSpec> specs) : specs_(std::move(specs)) {
    for (const auto& s : specs_) encode(s);
    int fd = open_counter({PERF_TYPE_HARDWARE, PERF_COUNT_HW_INSTRUCTIONS});
    if (fd < 0) {
      throw ProviderUnavailable(std::string("hardware counters unavailable: perf_event_open: ") +
                                std::strerror(errno));
    }
    ::close(fd);
  }
  std::string id() const override { return "hardware"; }
  std::unique_ptr<CounterSession> begin(const guest::GuestInstance&) override {
    return std::make_unique<HardwareSession>(specs_);
  }

 private:
  std::vector<CounterSpec> specs_;
};

}  // namespace

std::unique_ptr<CounterProvider> make_null_provider() { return std::make_unique<NullProvider>(); }
std::unique_ptr<CounterProvider> make_software_provider() { return std::make_unique<SoftwareProvider>(); }
std::unique_ptr<CounterProvider> make_hardware_provider(std::vector<CounterSpec> specs) {
  return std::make_unique<HardwareProvider>(std::move(specs));
}

ProviderChoice select_provider(std::string_view kind) {
  if (kind == "null") return {make_null_provider(), std::nullopt};
  if (kind == "software") return {make_software_provider(), std::nullopt};
  if (kind == "hardware") {
    try {
      return {make_hardware_provider(), std::nullopt};
    } catch (const ProviderUnavailable& e) {
      return {make_null_provider(), std::string(e.what()) + "; falling back to the null provider"};
    }
  }
  throw std::invalid_argument("unknown counter provider '" + std::string(kind) + "'");
}

}  // namespace procwasm::harness
