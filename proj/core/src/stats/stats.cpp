#include "procwasm/stats/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace procwasm::stats {

MeanSE mean_stderr(std::span<const double> xs) {
  if (xs.empty()) throw EmptyInput("mean_stderr of an empty list");
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() == 1) return {mean, 0.0};
  double ss = 0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1)) / std::sqrt(n)};
}

double geomean(std::span<const double> xs) {
  if (xs.empty()) throw EmptyInput("geomean of an empty list");
  double sum = 0;
  for (double x : xs) {
    if (!(x > 0)) throw NonPositive("geomean requires positive values");
    sum += std::log(x);
  }
  return std::exp(sum / static_cast<double>(xs.size()));
}

double median(std::span<const double> xs) {
  if (xs.empty()) throw EmptyInput("median of an empty list");
  std::vector<double> v(xs.begin(), xs.end());
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

Report build_slowdown_report(const std::vector<BenchmarkTimes>& times, std::string baseline_name) {
  if (times.empty()) throw EmptyInput("no benchmarks");
  Report r;
  r.baseline = std::move(baseline_name);
  for (const auto& [sys, _] : times.front().candidates) r.systems.push_back(sys);

  std::map<std::string, std::vector<double>> ratios;
  for (const auto& bt : times) {
    if (bt.candidates.size() != r.systems.size()) {
      throw std::invalid_argument("benchmark " + bt.name + " has a different candidate set");
    }
    BenchmarkRow row;
    row.name = bt.name;
    row.baseline = mean_stderr(bt.baseline);
    if (!(row.baseline.mean > 0)) throw NonPositive("baseline mean of " + bt.name + " is not positive");
    for (const auto& sys : r.systems) {
      auto it = bt.candidates.find(sys);
      if (it == bt.candidates.end()) {
        throw std::invalid_argument("benchmark " + bt.name + " lacks system " + sys);
      }
      SystemCell cell;
      cell.time = mean_stderr(it->second);
      cell.ratio = cell.time.mean / row.baseline.mean;
      ratios[sys].push_back(cell.ratio);
      row.candidates.emplace(sys, cell);
    }
    r.rows.push_back(std::move(row));
  }
  std::sort(r.rows.begin(), r.rows.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  for (const auto& sys : r.systems) {
    r.geomean_slowdown[sys] = geomean(ratios[sys]);
    r.median_slowdown[sys] = median(ratios[sys]);
  }
  return r;
}

CounterReport build_counter_report(const std::map<std::string, CounterValues>& native,
                                   const std::map<std::string, std::map<std::string, CounterValues>>& candidates) {
  CounterReport out;
  std::set<std::string> seen;
  auto note_event = [&](const std::string& e) {
    if (seen.insert(e).second) out.events.push_back(e);
  };
  for (const auto& [bench, set] : native) {
    for (const auto& [e, _] : set) note_event(e);
  }

  bool any = false;
  for (const auto& [sys, per_bench] : candidates) {
    std::map<std::string, std::vector<double>> ratios;
    for (const auto& [bench, cand] : per_bench) {
      for (const auto& [e, _] : cand) note_event(e);
      auto nit = native.find(bench);
      if (nit == native.end()) {
        out.footnotes.push_back(sys + ": benchmark " + bench + " has no native counters; excluded");
        continue;
      }
      for (const auto& e : out.events) {
        auto a = nit->second.find(e);
        auto b = cand.find(e);
        const bool in_native = a != nit->second.end();
        const bool in_cand = b != cand.end();
        if (!in_native && !in_cand) continue;
        if (!in_native || !in_cand) {
          out.footnotes.push_back(sys + ": " + e + " absent for " + bench + " on " + (in_native ? sys : "native") +
                                  "; excluded");
          continue;
        }
        if (a->second == 0 || b->second == 0) {
          out.footnotes.push_back(sys + ": " + e + " is zero for " + bench + "; excluded");
          continue;
        }
        ratios[e].push_back(static_cast<double>(b->second) / static_cast<double>(a->second));
      }
    }
    for (const auto& [e, rs] : ratios) {
      out.geomean[e][sys] = geomean(rs);
      any = true;
    }
  }
  if (!any) throw NoOverlap("no event has counts for both native and a candidate on any benchmark");
  // Events that never produced a ratio stay out of the table.
  std::erase_if(out.events, [&](const std::string& e) { return !out.geomean.contains(e); });
  return out;
}

}  // namespace procwasm::stats
