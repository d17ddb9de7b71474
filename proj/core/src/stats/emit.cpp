#include "procwasm/stats/emit.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <sstream>

namespace procwasm::stats {

namespace {

std::string full(double v) { return fmt::format("{:.17g}", v); }
std::string sig6(double v) { return fmt::format("{:.6g}", v); }
std::string ratio2(double v) { return fmt::format("{:.2f}x", v); }

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t i = 0;
  for (;;) {
    auto j = s.find(sep, i);
    out.emplace_back(s.substr(i, j == std::string_view::npos ? std::string_view::npos : j - i));
    if (j == std::string_view::npos) break;
    i = j + 1;
  }
  return out;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double number(std::string_view raw) {
  auto s = trim(raw);
  if (!s.empty() && s.back() == 'x') s.pop_back();
  if (!s.empty() && s.back() == '%') s.pop_back();
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ParseError("not a number: '" + s + "'");
  return v;
}

std::vector<std::string> lines_of(std::string_view text) {
  auto ls = split(text, '\n');
  for (auto& l : ls) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
  }
  return ls;
}

BenchmarkRow& row_for(Report& r, const std::string& name) {
  for (auto& row : r.rows) {
    if (row.name == name) return row;
  }
  r.rows.push_back({});
  r.rows.back().name = name;
  return r.rows.back();
}

void note_system(Report& r, const std::string& sys) {
  if (std::find(r.systems.begin(), r.systems.end(), sys) == r.systems.end()) r.systems.push_back(sys);
}

}  // namespace

std::string emit_csv(const Report& r) {
  std::ostringstream o;
  o << "benchmark,system,mean_ms,stderr_ms,ratio\n";
  for (const auto& row : r.rows) {
    o << row.name << ',' << r.baseline << ',' << full(row.baseline.mean) << ',' << full(row.baseline.se) << ",1\n";
    for (const auto& sys : r.systems) {
      const auto& c = row.candidates.at(sys);
      o << row.name << ',' << sys << ',' << full(c.time.mean) << ',' << full(c.time.se) << ',' << full(c.ratio)
        << '\n';
    }
  }
  for (const auto& sys : r.systems) {
    o << kGeomeanRow << ',' << sys << ",,," << full(r.geomean_slowdown.at(sys)) << '\n';
    o << kMedianRow << ',' << sys << ",,," << full(r.median_slowdown.at(sys)) << '\n';
  }
  if (!r.counters.events.empty()) {
    o << "\nevent,system,geomean_ratio\n";
    for (const auto& e : r.counters.events) {
      for (const auto& [sys, g] : r.counters.geomean.at(e)) o << e << ',' << sys << ',' << full(g) << '\n';
    }
  }
  return o.str();
}

Report parse_csv(std::string_view text) {
  Report r;
  enum class Section { None, Times, Counters } section = Section::None;
  bool baseline_known = false;
  for (const auto& line : lines_of(text)) {
    if (line.empty()) continue;
    if (line == "benchmark,system,mean_ms,stderr_ms,ratio") {
      section = Section::Times;
      continue;
    }
    if (line == "event,system,geomean_ratio") {
      section = Section::Counters;
      continue;
    }
    auto f = split(line, ',');
    if (section == Section::Times) {
      if (f.size() != 5) throw ParseError("times row needs 5 fields: " + line);
      if (f[0] == kGeomeanRow) {
        r.geomean_slowdown[f[1]] = number(f[4]);
        continue;
      }
      if (f[0] == kMedianRow) {
        r.median_slowdown[f[1]] = number(f[4]);
        continue;
      }
      auto& row = row_for(r, f[0]);
      const MeanSE t{number(f[2]), number(f[3])};
      if (!baseline_known) {
        r.baseline = f[1];
        baseline_known = true;
      }
      if (f[1] == r.baseline) {
        row.baseline = t;
      } else {
        note_system(r, f[1]);
        row.candidates[f[1]] = {t, number(f[4])};
      }
    } else if (section == Section::Counters) {
      if (f.size() != 3) throw ParseError("counter row needs 3 fields: " + line);
      if (!r.counters.geomean.contains(f[0])) r.counters.events.push_back(f[0]);
      r.counters.geomean[f[0]][f[1]] = number(f[2]);
    } else {
      throw ParseError("data before a CSV header: " + line);
    }
  }
  return r;
}

std::string emit_markdown(const Report& r) {
  std::ostringstream o;
  o << "| Benchmark | " << r.baseline;
  for (const auto& sys : r.systems) o << " | " << sys;
  o << " |\n|---|---:";
  for (std::size_t i = 0; i < r.systems.size(); ++i) o << "|---:";
  o << "|\n";
  for (const auto& row : r.rows) {
    o << "| " << row.name << " | " << sig6(row.baseline.mean) << " ± " << sig6(row.baseline.se);
    for (const auto& sys : r.systems) {
      const auto& c = row.candidates.at(sys);
      o << " | " << sig6(c.time.mean) << " ± " << sig6(c.time.se) << " (" << ratio2(c.ratio) << ")";
    }
    o << " |\n";
  }
  if (!r.systems.empty()) {
    o << "| Slowdown: geomean | ";
    for (const auto& sys : r.systems) o << " | " << ratio2(r.geomean_slowdown.at(sys));
    o << " |\n| Slowdown: median | ";
    for (const auto& sys : r.systems) o << " | " << ratio2(r.median_slowdown.at(sys));
    o << " |\n";
  }

  if (!r.counters.events.empty()) {
    std::vector<std::string> cols;
    for (const auto& e : r.counters.events) {
      for (const auto& [sys, _] : r.counters.geomean.at(e)) {
        if (std::find(cols.begin(), cols.end(), sys) == cols.end()) cols.push_back(sys);
      }
    }
    o << "\n| Event";
    for (const auto& c : cols) o << " | " << c;
    o << " |\n|---";
    for (std::size_t i = 0; i < cols.size(); ++i) o << "|---:";
    o << "|\n";
    for (const auto& e : r.counters.events) {
      o << "| " << e;
      const auto& g = r.counters.geomean.at(e);
      for (const auto& c : cols) {
        auto it = g.find(c);
        o << " | " << (it == g.end() ? std::string("n/a") : ratio2(it->second));
      }
      o << " |\n";
    }
    if (!r.counters.footnotes.empty()) {
      o << '\n';
      for (std::size_t i = 0; i < r.counters.footnotes.size(); ++i) {
        o << "[" << i + 1 << "] " << r.counters.footnotes[i] << "\n";
      }
    }
  }

  if (!r.overhead_percent.empty()) {
    o << "\n| System | Kernel overhead |\n|---|---:|\n";
    for (const auto& [sys, pct] : r.overhead_percent) o << "| " << sys << " | " << sig6(pct) << "% |\n";
  }
  return o.str();
}

Report parse_markdown(std::string_view text) {
  Report r;
  enum class Table { None, Times, Counters, Overhead } table = Table::None;
  bool saw_times = false;
  std::vector<std::string> header;
  for (const auto& line : lines_of(text)) {
    if (line.empty() || line.front() != '|') {
      if (line.size() > 1 && line.front() == '[') {
        auto close = line.find("] ");
        if (close != std::string::npos) r.counters.footnotes.push_back(line.substr(close + 2));
      }
      table = line.empty() ? Table::None : table;
      continue;
    }
    auto cells = split(std::string_view(line).substr(1, line.size() - 2), '|');
    for (auto& c : cells) c = trim(c);
    if (table == Table::None) {
      header = cells;
      if (cells[0] == "Benchmark") {
        table = Table::Times;
        saw_times = true;
        r.baseline = cells.at(1);
        r.systems.assign(cells.begin() + 2, cells.end());
      } else if (cells[0] == "Event") {
        table = Table::Counters;
      } else if (cells[0] == "System") {
        table = Table::Overhead;
      } else {
        throw ParseError("unknown table header: " + line);
      }
      continue;
    }
    if (cells[0].starts_with("---")) continue;

    if (table == Table::Times) {
      if (cells.size() != r.systems.size() + 2) throw ParseError("times row width mismatch: " + line);
      if (cells[0] == "Slowdown: geomean" || cells[0] == "Slowdown: median") {
        auto& dst = cells[0] == "Slowdown: geomean" ? r.geomean_slowdown : r.median_slowdown;
        for (std::size_t i = 0; i < r.systems.size(); ++i) dst[r.systems[i]] = number(cells[i + 2]);
        continue;
      }
      auto parse_cell = [](const std::string& c, double* ratio) {
        auto pm = c.find("±");
        if (pm == std::string::npos) throw ParseError("expected 'mean ± se': " + c);
        MeanSE t;
        t.mean = number(c.substr(0, pm));
        auto rest = c.substr(pm + std::string("±").size());
        auto open = rest.find('(');
        t.se = number(rest.substr(0, open));
        if (ratio != nullptr) {
          if (open == std::string::npos) throw ParseError("expected ratio in cell: " + c);
          auto close = rest.find(')', open);
          *ratio = number(rest.substr(open + 1, close - open - 1));
        }
        return t;
      };
      auto& row = row_for(r, cells[0]);
      row.baseline = parse_cell(cells[1], nullptr);
      for (std::size_t i = 0; i < r.systems.size(); ++i) {
        SystemCell sc;
        sc.time = parse_cell(cells[i + 2], &sc.ratio);
        row.candidates[r.systems[i]] = sc;
      }
    } else if (table == Table::Counters) {
      r.counters.events.push_back(cells[0]);
      auto& g = r.counters.geomean[cells[0]];
      for (std::size_t i = 1; i < cells.size() && i < header.size(); ++i) {
        if (cells[i] != "n/a") g[header[i]] = number(cells[i]);
      }
    } else if (table == Table::Overhead) {
      r.overhead_percent[cells[0]] = number(cells.at(1));
    }
  }
  if (!saw_times) throw ParseError("no times table found");
  return r;
}

}  // namespace procwasm::stats
