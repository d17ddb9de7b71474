// Prints one PASS/FAIL line per acceptance criterion; exits 1 if any fail.

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <mutex>
#include <random>
#include <thread>

#include "kernel_env.hpp"
#include "procwasm/abi.hpp"
#include "procwasm/harness/counters.hpp"
#include "procwasm/harness/records.hpp"
#include "procwasm/harness/runner.hpp"
#include "procwasm/harness/validate.hpp"
#include "procwasm/kernel/kernel_core.hpp"
#include "procwasm/stats/stats.hpp"
#include "procwasm/transport/chunking.hpp"
#include "procwasm/transport/message.hpp"

using namespace procwasm;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

Outcome check(bool cond, std::string detail) { return {cond, std::move(detail)}; }

// 1. Published slowdown aggregates.
Outcome stats_oracle() {
  struct Row {
    double native, chrome, firefox;
  };
  const Row rows[] = {{370, 864, 730}, {221, 180, 184}, {375, 369, 378}, {271, 369, 373}, {352, 537, 549},
                      {179, 265, 238}, {110, 275, 229}, {358, 602, 580}, {330, 444, 385}, {389, 807, 733},
                      {209, 248, 249}, {299, 474, 408}, {381, 834, 713}, {466, 825, 717}, {2476, 3639, 3829}};
  std::vector<stats::BenchmarkTimes> t;
  int i = 0;
  for (const auto& r : rows) {
    t.push_back({fmt::format("b{:02}", i++), {r.native}, {{"chrome", {r.chrome}}, {"firefox", {r.firefox}}}});
  }
  auto rep = stats::build_slowdown_report(t, "native");
  const double gc = rep.geomean_slowdown.at("chrome"), gf = rep.geomean_slowdown.at("firefox");
  const double mc = rep.median_slowdown.at("chrome"), mf = rep.median_slowdown.at("firefox");
  constexpr double tol = 0.005;
  const bool ok = std::fabs(gc - 1.55) <= tol && std::fabs(gf - 1.45) <= tol && std::fabs(mc - 1.53) <= tol &&
                  std::fabs(mf - 1.54) <= tol;
  return check(ok, fmt::format("geomean {:.6f}/{:.6f} (want 1.55/1.45), median {:.6f}/{:.6f} (want 1.53/1.54), tol "
                               "{}",
                               gc, gf, mc, mf, tol));
}

// 2. Chunk planning invariants.
Outcome chunking() {
  std::mt19937_64 rng(11);
  int cases = 0;
  auto ok_for = [&](std::uint64_t total, std::uint64_t cap) {
    ++cases;
    auto plan = transport::plan_chunks(total, cap).chunks;
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < plan.size(); ++i) {
      if (plan[i] == 0 || plan[i] > cap) return false;
      if (i + 1 < plan.size() && plan[i] != cap) return false;
      sum += plan[i];
    }
    return sum == total && plan.size() == total / cap + (total % cap != 0);
  };
  for (int i = 0; i < 10000; ++i) {
    const std::uint64_t cap = 1 + rng() % (1u << 20);
    if (!ok_for(rng() % (cap * 50), cap)) return check(false, fmt::format("random case {} violated", i));
  }
  for (std::uint64_t cap : {1ull, 4096ull, 65536ull, 67108864ull}) {
    for (std::uint64_t total : std::initializer_list<std::uint64_t>{0, cap - 1, cap, cap + 1, 2 * cap, 3 * cap + 7}) {
      if (!ok_for(total, cap)) return check(false, fmt::format("boundary total={} cap={}", total, cap));
    }
  }
  const auto ex = transport::plan_chunks(134217730, 67108864).chunks;
  const bool example = ex == std::vector<std::uint64_t>{67108864, 67108864, 2};
  return check(example, fmt::format("{} cases hold sum/count/bound; 134217730 over 64 MiB -> {} chunks", cases,
                                    ex.size()));
}

// 3. Codec identity and status-machine trace.
Outcome transport_codec() {
  using namespace procwasm::transport;
  std::mt19937_64 rng(7);
  AuxBuffer aux(64 * 1024);
  const std::uint64_t slice = aux.data_capacity() / 6;
  auto payloads = [&] {
    std::vector<PayloadRef> out;
    const int n = static_cast<int>(rng() % 7);
    for (int i = 0; i < n; ++i) {
      const auto len = rng() % (slice + 1);
      out.push_back({static_cast<std::uint32_t>(kHeaderSize + i * slice + rng() % (slice - len + 1)),
                     static_cast<std::uint32_t>(len)});
    }
    return out;
  };
  for (int i = 0; i < 10000; ++i) {
    SyscallRequest req{static_cast<std::uint32_t>(rng()), {}, payloads()};
    req.args.resize(rng() % 9);
    for (auto& a : req.args) a = static_cast<std::int64_t>(rng());
    encode_request(aux, req);
    if (!(decode_request(aux) == req)) return check(false, fmt::format("request {} not identity", i));
    SyscallResponse resp{static_cast<std::int64_t>(rng() >> 1), 0, payloads()};
    encode_response(aux, resp);
    if (!(decode_response(aux) == resp)) return check(false, fmt::format("response {} not identity", i));
    aux.set_status(Status::Idle);
  }

  constexpr int kCalls = 10000;
  AuxBuffer live(16384);
  std::mutex mu;
  std::vector<Status> trace;
  live.set_status_observer([&](Status s) {
    std::lock_guard lock(mu);
    trace.push_back(s);
  });
  std::thread kernel([&] {
    for (int i = 0; i < kCalls; ++i) {
      if (!live.wait_for(Status::Request)) return;
      auto req = decode_request(live);
      encode_response(live, SyscallResponse::ok(req.args.at(0)));
    }
  });
  bool replies_ok = true;
  for (int i = 0; i < kCalls; ++i) replies_ok &= post_and_wait(live, {4, {i}, {}}).return_value == i;
  kernel.join();
  Status prev = Status::Idle;
  bool legal = trace.size() == 3u * kCalls;
  for (Status s : trace) {
    legal &= (prev == Status::Idle && s == Status::Request) || (prev == Status::Request && s == Status::Done) ||
             (prev == Status::Done && s == Status::Idle);
    prev = s;
  }
  return check(replies_ok && legal, fmt::format("10000 round trips identical; {} transitions over {} syscalls, "
                                                "illegal={}",
                                                trace.size(), kCalls, !legal));
}

// 4. cat through a 64 KiB data region.
Outcome chunked_cat() {
  kernel::FsImage img;
  const auto data = testing::random_bytes(200007, 1);
  img.add_file("/in.bin", data);
  auto b = testing::boot_with_fixtures(img, 65536 + transport::kHeaderSize);
  const auto pid = b.kernel->spawn("/bin/cat", {"cat"}, testing::stdio("/in.bin", "/out.bin"));
  const auto info = b.kernel->wait(pid);
  const bool same = testing::vfs_file(*b.kernel, "/out.bin") == data;
  const auto rep = b.runtime->report(pid);
  const auto reads = rep.shim.count(abi::sys::kRead);
  const auto data_reads = reads - rep.shim.empty_reads;
  const auto writes = rep.shim.count(abi::sys::kWrite);
  return check(info.code == 0 && same && data_reads == 4 && writes == 4,
               fmt::format("identical={}, data reads={} (plus {} at EOF), writes={}, want 4/4", same, data_reads,
                           rep.shim.empty_reads, writes));
}

// 5. Growable file buffer.
Outcome fs_amortization() {
  kernel::FsNode n(kernel::FsNode::Kind::File);
  std::vector<std::byte> oracle;
  std::mt19937 rng(8);
  for (int i = 0; i < 100000; ++i) {
    const std::byte b{static_cast<unsigned char>(rng())};
    kernel::fs_append(n, std::span(&b, 1));
    oracle.push_back(b);
  }
  const auto c = n.data.contents();
  const bool same = std::equal(c.begin(), c.end(), oracle.begin(), oracle.end());
  return check(same && n.data.reallocations() <= 26,
               fmt::format("content equal={}, reallocations={} (limit 26)", same, n.data.reallocations()));
}

// 6. Pipe conservation: real guests, then a driven interleaving that parks.
Outcome pipe_conservation() {
  const auto data = testing::random_bytes(1 << 20, 2);
  kernel::FsImage img;
  img.add_file("/in.bin", data);
  auto b = testing::boot_with_fixtures(img);
  const auto pid = b.kernel->spawn("/bin/pipeline", {"pipeline", "/bin/cat", "/in.bin"}, testing::stdio("", "/out.bin"));
  const bool guests_ok = b.kernel->wait(pid).code == 0 && testing::vfs_file(*b.kernel, "/out.bin") == data;

  using transport::Status;
  int parked_reads = 0, parked_writes = 0;
  bool driven_ok = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    kernel::KernelCore k;
    auto waux = std::make_shared<transport::AuxBuffer>(256 * 1024);
    auto raux = std::make_shared<transport::AuxBuffer>(256 * 1024);
    const auto w = k.attach(std::nullopt, {"writer"}, {}, waux);
    auto post = [&](kernel::Pid p, transport::AuxBuffer& aux, transport::SyscallRequest req) {
      transport::encode_request(aux, req);
      k.service(p);
    };
    auto poll = [](transport::AuxBuffer& aux) -> std::optional<transport::SyscallResponse> {
      if (aux.status() != Status::Done) return std::nullopt;
      auto r = transport::decode_response(aux);
      aux.set_status(Status::Idle);
      return r;
    };
    post(w, *waux, {abi::sys::kPipe, {4096}, {}});
    poll(*waux);
    std::int32_t fds[2];
    std::memcpy(fds, waux->data_at(4096, 8).data(), 8);
    kernel::StdioSpec io;
    io.fds[0] = kernel::StdioBinding::inherit(fds[0]);
    const auto r = k.attach(w, {"reader"}, io, raux);
    post(w, *waux, {abi::sys::kClose, {fds[0]}, {}});
    poll(*waux);

    std::vector<std::byte> got;
    std::size_t sent = 0, in_flight = 0;
    bool wbusy = false, rbusy = false, closed = false, eof = false;
    auto take = [&](const transport::SyscallResponse& resp) {
      if (resp.return_value == 0) eof = true;
      if (resp.return_value > 0) {
        auto s = raux->data_at(resp.out_payloads.at(0).offset, resp.out_payloads[0].length);
        got.insert(got.end(), s.begin(), s.end());
      }
    };
    while (!eof) {
      if (!wbusy && !closed) {
        if (sent == data.size()) {
          post(w, *waux, {abi::sys::kClose, {fds[1]}, {}});
          poll(*waux);
          closed = true;
        } else if (rng() % 2) {
          in_flight = std::min<std::size_t>(data.size() - sent, 1 + rng() % (200 * 1024));
          std::memcpy(waux->data_at(4096, in_flight).data(), data.data() + sent, in_flight);
          const auto len = static_cast<std::uint32_t>(in_flight);
          post(w, *waux, {abi::sys::kWrite, {fds[1], 4096, len}, {{4096, len}}});
          wbusy = true;
          if (waux->status() != Status::Done) ++parked_writes;
        }
      }
      if (!rbusy && rng() % 2) {
        post(r, *raux, {abi::sys::kRead, {0, 4096, static_cast<std::int64_t>(1 + rng() % (100 * 1024)), 0}, {}});
        rbusy = true;
        if (raux->status() != Status::Done) ++parked_reads;
      }
      if (wbusy) {
        if (auto resp = poll(*waux)) {
          driven_ok &= resp->return_value == static_cast<std::int64_t>(in_flight);
          sent += in_flight;
          wbusy = false;
        }
      }
      if (rbusy) {
        if (auto resp = poll(*raux)) {
          take(*resp);
          rbusy = false;
        }
      }
    }
    driven_ok &= got == data;
  }
  return check(guests_ok && driven_ok && parked_reads > 0 && parked_writes > 0,
               fmt::format("guest pipeline identical={}, driven interleavings identical={} with {} parked reads and "
                           "{} parked writes over 5 seeds",
                           guests_ok, driven_ok, parked_reads, parked_writes));
}

harness::HarnessOptions fixture_opts() {
  harness::HarnessOptions o;
  o.fixture_dir = testing::fixture_dir();
  o.aux_capacity = 1 << 20;
  return o;
}

harness::CommandFile matmul_cmd(int n) {
  harness::CommandFile cf;
  cf.entries.push_back({"/results/o", "/results/e", "/bin/matmul",
                        {std::to_string(n), std::to_string(n), std::to_string(n), "/results/c.bin"}});
  return cf;
}

// 7. Overhead accounting.
Outcome overhead() {
  std::vector<harness::RunRecord> synth(1);
  synth[0].wall_ms = 1000;
  synth[0].kernel_ms = 2;
  const double s = harness::overhead_percent(synth);
  auto null = harness::make_null_provider();
  auto recs = harness::repeat_benchmark(matmul_cmd(128), 3, *null, fixture_opts());
  bool all_ok = true;
  for (const auto& r : recs) all_ok &= r.ok();
  const double m = harness::overhead_percent(recs);
  return check(std::fabs(s - 0.2) <= 1e-12 && all_ok && m < 5.0,
               fmt::format("synthetic 2/1000 ms -> {}%; matmul N=128 over {} runs -> {:.4f}% (limit 5%)", s,
                           recs.size(), m));
}

// 8. Counter pipeline.
Outcome counters() {
  auto sw = harness::make_software_provider();
  auto recs = harness::repeat_benchmark(matmul_cmd(32), 5, *sw, fixture_opts());
  bool identical = recs.size() == 5 && !recs[0].counters.values.empty();
  for (const auto& r : recs) identical &= r.ok() && r.counters == recs[0].counters;

  auto rep = stats::build_counter_report({{"A", {{"loads", 100}}}, {"B", {{"loads", 200}}}},
                                         {{"wasm", {{"A", {{"loads", 202}}}, {"B", {{"loads", 398}}}}}});
  const double g = rep.geomean.at("loads").at("wasm");
  const bool geo_ok = std::fabs(g - std::sqrt(2.02 * 1.99)) <= 1e-9 && std::fabs(g - 2.0049) <= 5e-5;

  std::string hw;
  bool hw_ok = true;
  try {
    auto provider = harness::make_hardware_provider();
    auto hrecs = harness::run_command_file(matmul_cmd(32), *provider, fixture_opts());
    const auto& c = hrecs.at(0).counters;
    hw_ok = c.values.size() == 7 && c.has("instructions-retired") && c.values.at("instructions-retired") > 0;
    hw = fmt::format("hardware: {} events collected", c.values.size());
  } catch (const harness::ProviderUnavailable& e) {
    hw = fmt::format("hardware provider not available here ({})", e.what());
  }
  return check(identical && geo_ok && hw_ok,
               fmt::format("software counters identical over 5 runs={}; geomean {:.10f} vs sqrt(2.02*1.99), tol 1e-9; "
                           "{}",
                           identical, g, hw));
}

// 9. cmp semantics.
Outcome validation() {
  const auto base = fs::temp_directory_path() / fmt::format("procwasm-accept-{}", ::getpid());
  fs::remove_all(base);
  auto write = [](const fs::path& p, const std::vector<std::byte>& b) {
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  };
  std::mt19937_64 rng(21);
  const auto a = testing::random_bytes(3000, 1), b2 = testing::random_bytes(100, 2);
  write(base / "exp/a.bin", a);
  write(base / "exp/sub/b.bin", b2);
  write(base / "act/a.bin", a);
  write(base / "act/sub/b.bin", b2);
  const bool identical = harness::validate_outputs(base / "exp", base / "act").pass();
  int exact = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto data = testing::random_bytes(1 + rng() % 4096, rng());
    write(base / "exp/f.bin", data);
    const std::size_t at = rng() % data.size();
    data[at] ^= std::byte{static_cast<unsigned char>(1 + rng() % 255)};
    write(base / "act/f.bin", data);
    const auto rep = harness::validate_outputs(base / "exp", base / "act");
    for (const auto& f : rep.files) {
      if (f.path == "f.bin" && f.kind == harness::FileResult::Kind::Differ && f.offset == at) ++exact;
    }
  }
  fs::remove_all(base);
  return check(identical && exact == 1000,
               fmt::format("identical trees pass={}; {}/1000 flipped bytes reported at their exact offset", identical,
                           exact));
}

// 10. Instantiation is outside the timed window. Delayed and undelayed runs
// alternate so machine drift hits both sides alike.
Outcome timing() {
  auto null = harness::make_null_provider();
  double sum[2] = {0, 0};
  constexpr int kRuns = 5;
  for (int i = 0; i < kRuns; ++i) {
    for (int delayed = 0; delayed < 2; ++delayed) {
      auto opts = fixture_opts();
      opts.instantiation_delay = std::chrono::milliseconds(delayed ? 100 : 0);
      sum[delayed] += harness::run_command_file(matmul_cmd(32), *null, opts, i).at(0).wall_ms;
    }
  }
  const double base = sum[0] / kRuns, delayed = sum[1] / kRuns;
  const double diff = std::fabs(delayed - base);
  return check(diff < 10.0, fmt::format("5-run mean wall {:.3f} ms without delay, {:.3f} ms with 100 ms delay; "
                                        "difference {:.3f} ms (limit 10)",
                                        base, delayed, diff));
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  // An optional argument selects a single criterion.
  const int only = argc > 1 ? std::atoi(argv[1]) : 0;
  const std::vector<Criterion> criteria = {
      {1, "stats oracle", 1, stats_oracle},
      {2, "chunking property", 5, chunking},
      {3, "transport codec", 30, transport_codec},
      {4, "end-to-end chunked I/O", 10, chunked_cat},
      {5, "filesystem amortization", 5, fs_amortization},
      {6, "pipe conservation", 10, pipe_conservation},
      {7, "overhead accounting", 60, overhead},
      {8, "counter pipeline", 60, counters},
      {9, "validation semantics", 60, validation},
      {10, "timing semantics", 60, timing},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    fmt::print("{} criterion {}: {}: {}; {:.3f} s (limit {} s){}\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail,
               secs, c.limit_s, in_time ? "" : " TOO SLOW");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
