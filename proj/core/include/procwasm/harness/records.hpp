#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "procwasm/harness/counters.hpp"
#include "procwasm/harness/validate.hpp"

namespace procwasm::harness {

enum class RunStatus { Exited, Trapped, SpawnFailure, Timeout };
enum class ValidationOutcome { NotChecked, Pass, Fail };

std::string to_string(RunStatus s);
std::string to_string(ValidationOutcome v);

/// One execution of one command-file entry.
struct RunRecord {
  std::string benchmark;
  int iteration = 0;
  double wall_ms = 0;    // guest entry to exit, instantiation excluded
  double kernel_ms = 0;  // kernel dispatch plus shim copies for this process
  RunStatus status = RunStatus::Exited;
  int exit_code = 0;
  std::string detail;  // trap reason or spawn error
  CounterSet counters;
  ValidationOutcome validation = ValidationOutcome::NotChecked;
  std::vector<FileResult> validation_failures;

  bool ok() const noexcept { return status == RunStatus::Exited && exit_code == 0; }
};

class ZeroDuration : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// 100 * sum(kernel_ms) / sum(wall_ms). Throws ZeroDuration when the wall
/// total is 0.
double overhead_percent(std::span<const RunRecord> records);

struct RunLog {
  std::string system;    // label used as a report column
  std::string provider;  // counter provider actually used
  int iterations = 0;
  std::size_t aux_capacity = 0;
  std::vector<std::string> warnings;
  std::vector<RunRecord> records;
};

std::string to_json(const RunLog& log);
RunLog run_log_from_json(std::string_view text);
void save_run_log(const RunLog& log, const std::filesystem::path& file);
RunLog load_run_log(const std::filesystem::path& file);

}  // namespace procwasm::harness
