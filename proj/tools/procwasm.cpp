#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "procwasm/harness/command_file.hpp"
#include "procwasm/harness/counters.hpp"
#include "procwasm/harness/manifest.hpp"
#include "procwasm/harness/records.hpp"
#include "procwasm/harness/runner.hpp"
#include "procwasm/harness/validate.hpp"
#include "procwasm/stats/emit.hpp"
#include "report_cmd.hpp"

namespace fs = std::filesystem;
using namespace procwasm;

namespace {

constexpr int kOk = 0;
constexpr int kValidationFailed = 1;
constexpr int kHarnessError = 2;

fs::path default_fixtures() {
  if (const char* env = std::getenv("PROCWASM_FIXTURES")) return env;
  return PROCWASM_DEFAULT_FIXTURES;
}

struct RunArgs {
  std::string cmdfile;
  std::string fsimage;
  int iterations = 5;
  std::string counters = "software";
  std::size_t aux_capacity = transport::kDefaultCapacity;
  std::string out;
  bool archive = false;
  std::string expected;
  std::string system = "procwasm";
  std::string fixtures;
  long timeout_s = 600;
};

int cmd_run(const RunArgs& a) {
  auto cf = harness::load_command_file(a.cmdfile);
  auto choice = harness::select_provider(a.counters);
  harness::RunLog log;
  log.system = a.system;
  log.provider = choice.provider->id();
  log.iterations = a.iterations;
  log.aux_capacity = a.aux_capacity;
  if (choice.warning) {
    spdlog::warn("{}", *choice.warning);
    log.warnings.push_back(*choice.warning);
  }

  harness::HarnessOptions opts;
  if (!a.fsimage.empty()) opts.fs_image = a.fsimage;
  opts.fixture_dir = a.fixtures.empty() ? default_fixtures() : fs::path(a.fixtures);
  opts.aux_capacity = a.aux_capacity;
  opts.entry_timeout = std::chrono::seconds(a.timeout_s);
  opts.results_out = a.out;
  opts.archive = a.archive;
  if (!a.expected.empty()) opts.expected = a.expected;

  fs::create_directories(a.out);
  log.records = harness::repeat_benchmark(cf, a.iterations, *choice.provider, opts);
  harness::save_run_log(log, fs::path(a.out) / "records.json");

  bool failed = false;
  for (const auto& r : log.records) {
    std::string line = fmt::format("{} #{} {} exit={} wall={:.3f}ms kernel={:.3f}ms", r.benchmark, r.iteration,
                                   harness::to_string(r.status), r.exit_code, r.wall_ms, r.kernel_ms);
    if (r.validation != harness::ValidationOutcome::NotChecked) line += " validation=" + harness::to_string(r.validation);
    if (!r.detail.empty()) line += " (" + r.detail + ")";
    std::cout << line << '\n';
    failed = failed || !r.ok() || r.validation == harness::ValidationOutcome::Fail;
  }
  try {
    std::cout << fmt::format("kernel overhead {:.4f}%\n", harness::overhead_percent(log.records));
  } catch (const harness::ZeroDuration&) {
  }
  return failed ? kValidationFailed : kOk;
}

int cmd_validate(const std::string& expected, const std::string& actual) {
  if (!fs::is_directory(expected)) {
    spdlog::error("{} is not a directory", expected);
    return kHarnessError;
  }
  auto rep = harness::validate_outputs(expected, actual);
  for (const auto& f : rep.files) {
    if (f.kind == harness::FileResult::Kind::Differ) {
      std::cout << fmt::format("DIFFER {} at byte {}\n", f.path, f.offset);
    } else {
      std::cout << harness::to_string(f.kind) << ' ' << f.path << '\n';
    }
  }
  return rep.pass() ? kOk : kValidationFailed;
}

int cmd_report(const std::vector<std::string>& dirs, const std::string& format, const std::string& output) {
  std::vector<harness::RunLog> logs;
  for (const auto& d : dirs) logs.push_back(harness::load_run_log(fs::path(d) / "records.json"));
  std::vector<std::string> warnings;
  auto report = cli::build_report(logs, warnings);
  for (const auto& w : warnings) spdlog::warn("{}", w);
  const auto text = format == "csv" ? stats::emit_csv(report) : stats::emit_markdown(report);
  if (output.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(output, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + output);
  }
  return kOk;
}

int cmd_fixtures_list(const std::string& dir) {
  const fs::path root = dir.empty() ? default_fixtures() : fs::path(dir);
  for (const auto& f : harness::load_fixtures(root)) {
    std::cout << fmt::format("{} {} {} bytes {}\n", f.entry.name, f.entry.wasm_path, f.bytes.size(), f.entry.sha256);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_pattern("%^%l%$: %v");
  CLI::App app{"WebAssembly process environment and benchmark harness"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "execute a command file through the kernel");
  run_cmd->add_option("--cmdfile", run.cmdfile, "command file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--fsimage", run.fsimage, "host directory mirrored at /")->check(CLI::ExistingDirectory);
  run_cmd->add_option("--iterations", run.iterations, "runs per entry")->capture_default_str()->check(CLI::PositiveNumber);
  run_cmd->add_option("--counters", run.counters, "counter provider")
      ->capture_default_str()
      ->check(CLI::IsMember({"hardware", "software", "null"}));
  run_cmd->add_option("--aux-capacity", run.aux_capacity, "aux buffer bytes per process")->capture_default_str();
  run_cmd->add_option("--out", run.out, "output directory")->required();
  run_cmd->add_flag("--archive", run.archive, "write a ustar archive of each iteration's /results");
  run_cmd->add_option("--expected", run.expected, "expected /results tree")->check(CLI::ExistingDirectory);
  run_cmd->add_option("--system", run.system, "system label used by report")->capture_default_str();
  run_cmd->add_option("--fixtures", run.fixtures, "fixture directory (manifest.txt)");
  run_cmd->add_option("--timeout", run.timeout_s, "seconds allowed per entry")->capture_default_str();

  std::string expected, actual;
  auto* val_cmd = app.add_subcommand("validate", "compare two trees with cmp semantics");
  val_cmd->add_option("expected", expected)->required();
  val_cmd->add_option("actual", actual)->required();

  std::vector<std::string> dirs;
  std::string format = "md", output;
  auto* rep_cmd = app.add_subcommand("report", "aggregate run directories; the first is the baseline");
  rep_cmd->add_option("out-dir", dirs)->required()->check(CLI::ExistingDirectory);
  rep_cmd->add_option("--format", format)->capture_default_str()->check(CLI::IsMember({"md", "csv"}));
  rep_cmd->add_option("-o,--output", output, "write to a file instead of stdout");

  std::string fixture_dir;
  auto* fx_cmd = app.add_subcommand("fixtures", "guest fixtures");
  fx_cmd->require_subcommand(1);
  auto* fx_list = fx_cmd->add_subcommand("list", "list fixtures and check their hashes");
  fx_list->add_option("--fixtures", fixture_dir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kHarnessError;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*val_cmd) return cmd_validate(expected, actual);
    if (*rep_cmd) return cmd_report(dirs, format, output);
    if (*fx_list) return cmd_fixtures_list(fixture_dir);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kHarnessError;
  }
  return kHarnessError;
}
