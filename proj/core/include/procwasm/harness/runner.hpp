#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "procwasm/harness/command_file.hpp"
#include "procwasm/harness/counters.hpp"
#include "procwasm/harness/records.hpp"
#include "procwasm/harness/validate.hpp"
#include "procwasm/kernel/fs.hpp"
#include "procwasm/transport/aux_buffer.hpp"

namespace procwasm::harness {

/// The kernel died or could not be booted; no further entries can run.
class HarnessAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kResultsDir = "/results";

struct HarnessOptions {
  std::optional<std::filesystem::path> fs_image;  // host tree mirrored at "/"
  std::optional<std::filesystem::path> fixture_dir;  // manifest dir; modules mounted at /bin/<name>
  kernel::FsImage extra_files;                    // added after the host tree
  std::size_t aux_capacity = transport::kDefaultCapacity;
  std::chrono::nanoseconds instantiation_delay{0};
  std::chrono::milliseconds entry_timeout{std::chrono::minutes(10)};
  std::optional<std::filesystem::path> expected;     // compared against /results
  std::optional<std::filesystem::path> results_out;  // /results exported to <results_out>/iter-<k>
  bool archive = false;                              // also write <results_out>/iter-<k>.tar
};

/// Record names: the program's basename, with ".2", ".3", ... for repeats.
std::vector<std::string> benchmark_names(const CommandFile& cf);

/// Boots a fresh kernel and runs the entries in order. Each entry's stdout
/// and stderr go to its vfs paths; parents are created as needed. A counter
/// session wraps each top-level process from just before guest entry to exit.
/// A failed spawn is recorded and the next entry still runs.
std::vector<RunRecord> run_command_file(const CommandFile& cf, CounterProvider& counters,
                                        const HarnessOptions& opts, int iteration = 0);

/// `n` iterations, each on a freshly booted kernel.
std::vector<RunRecord> repeat_benchmark(const CommandFile& cf, int n, CounterProvider& counters,
                                        const HarnessOptions& opts);

}  // namespace procwasm::harness
