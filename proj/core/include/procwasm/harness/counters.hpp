#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "procwasm/guest/instance.hpp"
#include "procwasm/stats/stats.hpp"

namespace procwasm::harness {

struct CounterSpec {
  std::string name;
  std::string raw;  // "r<hex>" for a raw PMU encoding, empty for a generic event
  friend bool operator==(const CounterSpec&, const CounterSpec&) = default;
};

/// The seven events collected by default.
const std::vector<CounterSpec>& default_counter_specs();

/// Event name -> count. Events a provider cannot measure are absent.
struct CounterSet {
  std::string provider = "null";
  stats::CounterValues values;

  bool has(const std::string& event) const { return values.contains(event); }
  friend bool operator==(const CounterSet&, const CounterSet&) = default;
};

class ProviderUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CounterSession {
 public:
  virtual ~CounterSession() = default;
  /// Stops counting and returns what the window saw.
  virtual CounterSet end(const guest::GuestInstance& instance) = 0;
};

class CounterProvider {
 public:
  virtual ~CounterProvider() = default;
  virtual std::string id() const = 0;
  /// Starts a session. Runs on the guest's own context, after instantiation
  /// and before the first guest instruction.
  virtual std::unique_ptr<CounterSession> begin(const guest::GuestInstance& instance) = 0;
};

std::unique_ptr<CounterProvider> make_null_provider();
/// Interpreter counts mapped onto the instruction, load, store, branch and
/// conditional-branch events. Deterministic.
std::unique_ptr<CounterProvider> make_software_provider();
/// perf_event_open on the guest's thread. Throws ProviderUnavailable when the
/// platform offers no hardware counters.
std::unique_ptr<CounterProvider> make_hardware_provider(std::vector<CounterSpec> specs = default_counter_specs());

/// Software-provider view of interpreter counts.
CounterSet software_counter_set(const guest::ExecCounters& c);

struct ProviderChoice {
  std::unique_ptr<CounterProvider> provider;
  std::optional<std::string> warning;  // set when falling back to null
};

/// "hardware", "software" or "null". An unavailable hardware provider falls
/// back to null with a warning. Throws std::invalid_argument for other names.
ProviderChoice select_provider(std::string_view kind);

}  // namespace procwasm::harness
