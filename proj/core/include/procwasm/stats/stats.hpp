#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace procwasm::stats {

class EmptyInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NonPositive : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NoOverlap : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct MeanSE {
  double mean = 0;
  double se = 0;
};

/// Mean and standard error, using the sample (n-1) standard deviation.
/// SE is 0 for a single value.
MeanSE mean_stderr(std::span<const double> xs);
/// exp(mean(log x)). Throws NonPositive for any x <= 0, EmptyInput for none.
double geomean(std::span<const double> xs);
double median(std::span<const double> xs);

struct BenchmarkTimes {
  std::string name;
  std::vector<double> baseline;                            // ms
  std::map<std::string, std::vector<double>> candidates;   // system -> ms
};

struct SystemCell {
  MeanSE time;
  double ratio = 1;  // candidate mean / baseline mean
};

struct BenchmarkRow {
  std::string name;
  MeanSE baseline;
  std::map<std::string, SystemCell> candidates;
};

using CounterValues = std::map<std::string, std::uint64_t>;

struct CounterReport {
  std::vector<std::string> events;                              // rows, in first-seen order
  std::map<std::string, std::map<std::string, double>> geomean; // event -> system -> geomean ratio
  std::vector<std::string> footnotes;
};

struct Report {
  std::string baseline = "baseline";
  std::vector<std::string> systems;  // candidate systems, in column order
  std::vector<BenchmarkRow> rows;    // sorted by benchmark name
  std::map<std::string, double> geomean_slowdown;
  std::map<std::string, double> median_slowdown;
  CounterReport counters;
  std::map<std::string, double> overhead_percent;  // system (baseline included) -> percent
};

/// Ratios are candidate mean / baseline mean; geomean and median run over
/// the per-benchmark ratios of each candidate. Every benchmark must carry the
/// same candidate set.
Report build_slowdown_report(const std::vector<BenchmarkTimes>& times, std::string baseline_name = "baseline");

/// Per event and candidate system: ratio candidate/native for each benchmark
/// where both counts exist and are positive, then the geomean. Excluded
/// (benchmark, event) pairs are listed in footnotes. Throws NoOverlap when
/// no ratio can be formed at all.
CounterReport build_counter_report(const std::map<std::string, CounterValues>& native,
                                   const std::map<std::string, std::map<std::string, CounterValues>>& candidates);

}  // namespace procwasm::stats
