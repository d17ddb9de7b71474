#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "procwasm/harness/records.hpp"
#include "procwasm/stats/stats.hpp"

namespace procwasm::cli {

/// Aggregates run logs into a report. The first log is the baseline.
/// Only records that exited 0 contribute times; counters are averaged per
/// benchmark over those records. A benchmark missing from any log is
/// dropped with a warning.
stats::Report build_report(const std::vector<harness::RunLog>& logs, std::vector<std::string>& warnings);

}  // namespace procwasm::cli
