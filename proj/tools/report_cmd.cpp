#include "report_cmd.hpp"

#include <cmath>
#include <map>
#include <set>

namespace procwasm::cli {

namespace {

struct Collected {
  std::map<std::string, std::vector<double>> times;
  std::map<std::string, std::map<std::string, std::vector<std::uint64_t>>> counts;  // bench -> event -> values
};

Collected collect(const harness::RunLog& log) {
  Collected c;
  for (const auto& r : log.records) {
    if (!r.ok()) continue;
    c.times[r.benchmark].push_back(r.wall_ms);
    for (const auto& [e, v] : r.counters.values) c.counts[r.benchmark][e].push_back(v);
  }
  return c;
}

std::map<std::string, stats::CounterValues> mean_counts(const Collected& c) {
  std::map<std::string, stats::CounterValues> out;
  for (const auto& [bench, events] : c.counts) {
    for (const auto& [e, vs] : events) {
      long double sum = 0;
      for (auto v : vs) sum += v;
      out[bench][e] = static_cast<std::uint64_t>(std::llround(sum / vs.size()));
    }
  }
  return out;
}

std::string label(const harness::RunLog& log, std::size_t i, std::set<std::string>& used) {
  std::string base = log.system.empty() ? "system" + std::to_string(i) : log.system;
  std::string name = base;
  for (int n = 2; !used.insert(name).second; ++n) name = base + "." + std::to_string(n);
  return name;
}

}  // namespace

stats::Report build_report(const std::vector<harness::RunLog>& logs, std::vector<std::string>& warnings) {
  if (logs.empty()) throw std::invalid_argument("no run logs");
  std::set<std::string> used;
  std::vector<std::string> names;
  std::vector<Collected> data;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    names.push_back(label(logs[i], i, used));
    data.push_back(collect(logs[i]));
  }

  std::vector<stats::BenchmarkTimes> times;
  for (const auto& [bench, base] : data[0].times) {
    stats::BenchmarkTimes bt;
    bt.name = bench;
    bt.baseline = base;
    bool complete = true;
    for (std::size_t i = 1; i < data.size(); ++i) {
      auto it = data[i].times.find(bench);
      if (it == data[i].times.end()) {
        warnings.push_back(bench + ": no successful runs for " + names[i] + "; dropped");
        complete = false;
        break;
      }
      bt.candidates[names[i]] = it->second;
    }
    if (complete) times.push_back(std::move(bt));
  }
  for (std::size_t i = 1; i < data.size(); ++i) {
    for (const auto& [bench, _] : data[i].times) {
      if (!data[0].times.contains(bench)) warnings.push_back(bench + ": no successful baseline runs; dropped");
    }
  }
  if (times.empty()) throw stats::EmptyInput("no benchmark has successful runs on every system");

  auto report = stats::build_slowdown_report(times, names[0]);

  if (data.size() > 1) {
    std::map<std::string, std::map<std::string, stats::CounterValues>> cand;
    for (std::size_t i = 1; i < data.size(); ++i) cand[names[i]] = mean_counts(data[i]);
    try {
      report.counters = stats::build_counter_report(mean_counts(data[0]), cand);
    } catch (const stats::NoOverlap&) {
      warnings.push_back("no counter event was measured on both the baseline and a candidate; counter table omitted");
    }
  }
  for (std::size_t i = 0; i < logs.size(); ++i) {
    try {
      report.overhead_percent[names[i]] = harness::overhead_percent(logs[i].records);
    } catch (const harness::ZeroDuration&) {
      warnings.push_back(names[i] + ": total wall time is 0; overhead omitted");
    }
  }
  return report;
}

}  // namespace procwasm::cli
