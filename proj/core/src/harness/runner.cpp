#include "procwasm/harness/runner.hpp"

#include <spdlog/spdlog.h>

#include <fstream>
#include <map>
#include <mutex>
#include <random>

#include "procwasm/guest/runtime.hpp"
#include "procwasm/harness/archive.hpp"
#include "procwasm/harness/manifest.hpp"
#include "procwasm/kernel/kernel.hpp"

namespace procwasm::harness {

namespace fs = std::filesystem;

std::vector<std::string> benchmark_names(const CommandFile& cf) {
  std::map<std::string, int> seen;
  std::vector<std::string> out;
  for (const auto& e : cf.entries) {
    auto base = e.program.substr(e.program.find_last_of('/') + 1);
    if (base.size() > 5 && base.ends_with(".wasm")) base.resize(base.size() - 5);
    const int n = ++seen[base];
    out.push_back(n == 1 ? base : base + "." + std::to_string(n));
  }
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double ms(std::chrono::nanoseconds ns) { return static_cast<double>(ns.count()) / 1e6; }

// Counter sessions keyed by pid, filled in on the guest contexts.
class SessionBook {
 public:
  explicit SessionBook(CounterProvider& provider) : provider_(provider) {}

  class Hooks : public guest::EntryHooks {
   public:
    Hooks(SessionBook& book, kernel::Pid pid) : book_(book), pid_(pid) {}
    void before_entry(guest::GuestInstance& inst) override { session_ = book_.provider_.begin(inst); }
    void after_exit(guest::GuestInstance& inst, const guest::ExitStatus&) override {
      if (!session_) return;
      auto set = session_->end(inst);
      session_.reset();
      std::lock_guard lock(book_.mu_);
      book_.sets_[pid_] = std::move(set);
    }

   private:
    SessionBook& book_;
    kernel::Pid pid_;
    std::unique_ptr<CounterSession> session_;
  };

  CounterSet take(kernel::Pid pid) {
    std::lock_guard lock(mu_);
    auto it = sets_.find(pid);
    if (it == sets_.end()) return CounterSet{provider_.id(), {}};
    return it->second;
  }

 private:
  CounterProvider& provider_;
  std::mutex mu_;
  std::map<kernel::Pid, CounterSet> sets_;
};

kernel::FsImage build_image(const HarnessOptions& opts) {
  kernel::FsImage image;
  if (opts.fs_image) image = kernel::FsImage::from_host(*opts.fs_image);
  for (auto& e : opts.extra_files.entries) image.entries.push_back(e);
  auto has = [&](const std::string& p) {
    return std::any_of(image.entries.begin(), image.entries.end(), [&](const auto& e) { return e.path == p; });
  };
  if (opts.fixture_dir) {
    for (auto& fx : load_fixtures(*opts.fixture_dir)) {
      const auto path = "/bin/" + fx.entry.name;
      if (!has(path)) image.add_file(path, std::move(fx.bytes));
    }
  }
  if (!has(kResultsDir)) image.add_dir(kResultsDir);
  return image;
}

std::string parent_of(const std::string& p) {
  auto slash = p.find_last_of('/');
  return slash == 0 || slash == std::string::npos ? "/" : p.substr(0, slash);
}

fs::path scratch_dir() {
  std::random_device rd;
  auto dir = fs::temp_directory_path() / ("procwasm-" + std::to_string(rd()) + std::to_string(rd()));
  fs::create_directories(dir);
  return dir;
}

}  // namespace

std::vector<RunRecord> run_command_file(const CommandFile& cf, CounterProvider& counters, const HarnessOptions& opts,
                                        int iteration) {
  kernel::FsImage image;
  try {
    image = build_image(opts);
  } catch (const std::exception& e) {
    throw HarnessAbort(std::string("cannot prepare file system image: ") + e.what());
  }

  SessionBook book(counters);
  guest::GuestRuntime::Options ro;
  ro.shim.aux_capacity = opts.aux_capacity;
  ro.instantiation_delay = opts.instantiation_delay;
  ro.hooks = [&book](kernel::Pid pid, const std::vector<std::string>&) -> std::unique_ptr<guest::EntryHooks> {
    return std::make_unique<SessionBook::Hooks>(book, pid);
  };
  auto runtime = std::make_shared<guest::GuestRuntime>(std::move(ro));

  std::unique_ptr<kernel::Kernel> k;
  try {
    k = kernel::Kernel::boot(image, runtime);
  } catch (const kernel::BadImage& e) {
    throw HarnessAbort(std::string("bad file system image: ") + e.what());
  }

  const auto names = benchmark_names(cf);
  std::vector<RunRecord> records;
  try {
    for (std::size_t i = 0; i < cf.entries.size(); ++i) {
      const auto& e = cf.entries[i];
      RunRecord rec;
      rec.benchmark = names[i];
      rec.iteration = iteration;
      rec.counters.provider = counters.id();

      kernel::StdioSpec stdio;
      stdio.fds[1] = kernel::StdioBinding::write_file(e.stdout_path);
      stdio.fds[2] = kernel::StdioBinding::write_file(e.stderr_path);
      k->with_core([&](kernel::KernelCore& c) {
        c.vfs().make_dirs(parent_of(e.stdout_path));
        c.vfs().make_dirs(parent_of(e.stderr_path));
        return 0;
      });

      kernel::Pid pid = 0;
      try {
        pid = k->spawn(e.program, e.argv(), stdio);
      } catch (const kernel::SpawnError& err) {
        rec.status = RunStatus::SpawnFailure;
        rec.exit_code = -err.error;
        rec.detail = err.what();
        records.push_back(std::move(rec));
        continue;
      }

      auto info = k->wait_for(pid, opts.entry_timeout);
      if (!info) {
        rec.status = RunStatus::Timeout;
        rec.detail = "no exit within " + std::to_string(opts.entry_timeout.count()) + " ms";
        spdlog::error("{}: {}; stopping this iteration", rec.benchmark, rec.detail);
        records.push_back(std::move(rec));
        break;
      }
      auto report = runtime->report(pid);
      rec.wall_ms = ms(report.wall_time);
      rec.kernel_ms = ms(info->kernel_time + report.shim.marshal_time);
      rec.exit_code = info->code;
      if (report.status.kind == guest::ExitStatus::Kind::Trapped) {
        rec.status = RunStatus::Trapped;
        rec.detail = report.status.trap_reason;
      }
      rec.counters = book.take(pid);
      records.push_back(std::move(rec));
    }
  } catch (const kernel::KernelStopped& e) {
    throw HarnessAbort(e.what());
  }

  const bool want_export = opts.results_out.has_value() || opts.expected.has_value();
  fs::path exported;
  std::optional<fs::path> scratch;
  if (want_export) {
    if (opts.results_out) {
      exported = *opts.results_out / ("iter-" + std::to_string(iteration));
    } else {
      scratch = scratch_dir();
      exported = *scratch / "results";
    }
    fs::remove_all(exported);
    try {
      k->with_core([&](kernel::KernelCore& c) {
        c.vfs().export_tree(kResultsDir, exported);
        return 0;
      });
    } catch (const kernel::KernelStopped& e) {
      throw HarnessAbort(e.what());
    }
  }
  k->shutdown();
  runtime->join_all();

  if (opts.expected) {
    auto rep = validate_outputs(*opts.expected, exported);
    std::vector<FileResult> failures;
    for (const auto& f : rep.files) {
      if (f.kind != FileResult::Kind::Pass) failures.push_back(f);
    }
    for (auto& r : records) {
      r.validation = rep.pass() ? ValidationOutcome::Pass : ValidationOutcome::Fail;
      r.validation_failures = failures;
    }
  }
  if (opts.archive && opts.results_out) {
    auto bytes = archive_results(exported);
    std::ofstream out(*opts.results_out / ("iter-" + std::to_string(iteration) + ".tar"), std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoFailure("cannot write results archive");
  }
  if (scratch) fs::remove_all(*scratch);
  return records;
}

std::vector<RunRecord> repeat_benchmark(const CommandFile& cf, int n, CounterProvider& counters,
                                        const HarnessOptions& opts) {
  if (n < 1) throw std::invalid_argument("iteration count must be at least 1");
  std::vector<RunRecord> all;
  for (int i = 0; i < n; ++i) {
    auto recs = run_command_file(cf, counters, opts, i);
    all.insert(all.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
  }
  return all;
}

}  // namespace procwasm::harness
