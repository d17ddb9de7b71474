#include "procwasm/harness/records.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace procwasm::harness {

using nlohmann::json;

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Exited: return "exited";
    case RunStatus::Trapped: return "trapped";
    case RunStatus::SpawnFailure: return "spawn-failure";
    case RunStatus::Timeout: return "timeout";
  }
  return "?";
}

std::string to_string(ValidationOutcome v) {
  switch (v) {
    case ValidationOutcome::NotChecked: return "not-checked";
    case ValidationOutcome::Pass: return "pass";
    case ValidationOutcome::Fail: return "fail";
  }
  return "?";
}

double overhead_percent(std::span<const RunRecord> records) {
  double kernel = 0, wall = 0;
  for (const auto& r : records) {
    kernel += r.kernel_ms;
    wall += r.wall_ms;
  }
  if (wall <= 0) throw ZeroDuration("total wall time is zero");
  return 100.0 * kernel / wall;
}

namespace {

template <typename E>
E enum_from(const std::string& s, std::initializer_list<E> all) {
  for (E e : all) {
    if (to_string(e) == s) return e;
  }
  throw std::runtime_error("unknown value '" + s + "' in run log");
}

FileResult::Kind kind_from(const std::string& s) {
  for (auto k : {FileResult::Kind::Pass, FileResult::Kind::Differ, FileResult::Kind::Missing}) {
    if (to_string(k) == s) return k;
  }
  throw std::runtime_error("unknown validation kind '" + s + "'");
}

json record_json(const RunRecord& r) {
  json failures = json::array();
  for (const auto& f : r.validation_failures) {
    failures.push_back({{"path", f.path}, {"kind", to_string(f.kind)}, {"offset", f.offset}});
  }
  return {
      {"benchmark", r.benchmark},
      {"iteration", r.iteration},
      {"wall_ms", r.wall_ms},
      {"kernel_ms", r.kernel_ms},
      {"status", to_string(r.status)},
      {"exit_code", r.exit_code},
      {"detail", r.detail},
      {"counters", {{"provider", r.counters.provider}, {"values", r.counters.values}}},
      {"validation", to_string(r.validation)},
      {"validation_failures", failures},
  };
}

RunRecord record_from(const json& j) {
  RunRecord r;
  r.benchmark = j.at("benchmark").get<std::string>();
  r.iteration = j.at("iteration").get<int>();
  r.wall_ms = j.at("wall_ms").get<double>();
  r.kernel_ms = j.at("kernel_ms").get<double>();
  r.status = enum_from(j.at("status").get<std::string>(),
                       {RunStatus::Exited, RunStatus::Trapped, RunStatus::SpawnFailure, RunStatus::Timeout});
  r.exit_code = j.at("exit_code").get<int>();
  r.detail = j.value("detail", "");
  r.counters.provider = j.at("counters").at("provider").get<std::string>();
  r.counters.values = j.at("counters").at("values").get<stats::CounterValues>();
  r.validation = enum_from(j.at("validation").get<std::string>(),
                           {ValidationOutcome::NotChecked, ValidationOutcome::Pass, ValidationOutcome::Fail});
  for (const auto& f : j.value("validation_failures", json::array())) {
    r.validation_failures.push_back(
        {f.at("path").get<std::string>(), kind_from(f.at("kind").get<std::string>()), f.at("offset").get<std::uint64_t>()});
  }
  return r;
}

}  // namespace

std::string to_json(const RunLog& log) {
  json recs = json::array();
  for (const auto& r : log.records) recs.push_back(record_json(r));
  json j{{"system", log.system},
         {"provider", log.provider},
         {"iterations", log.iterations},
         {"aux_capacity", log.aux_capacity},
         {"warnings", log.warnings},
         {"records", recs}};
  return j.dump(2) + "\n";
}

RunLog run_log_from_json(std::string_view text) {
  try {
    auto j = json::parse(text);
    RunLog log;
    log.system = j.at("system").get<std::string>();
    log.provider = j.at("provider").get<std::string>();
    log.iterations = j.at("iterations").get<int>();
    log.aux_capacity = j.at("aux_capacity").get<std::size_t>();
    log.warnings = j.value("warnings", std::vector<std::string>{});
    for (const auto& r : j.at("records")) log.records.push_back(record_from(r));
    return log;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed run log: ") + e.what());
  }
}

void save_run_log(const RunLog& log, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::trunc);
  out << to_json(log);
  if (!out) throw std::runtime_error("cannot write " + file.string());
}

RunLog load_run_log(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return run_log_from_json(ss.str());
}

}  // namespace procwasm::harness
