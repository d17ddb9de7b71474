#include "procwasm/kernel/kernel_core.hpp"

#include <algorithm>
#include <cstring>

#include "common/le.hpp"
#include "procwasm/abi.hpp"

namespace procwasm::kernel {

using transport::PayloadRef;
using transport::SyscallRequest;
using Response = transport::SyscallResponse;
namespace err = abi::err;

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t arg(const SyscallRequest& r, std::size_t i) { return i < r.args.size() ? r.args[i] : 0; }

// A (offset, length) pair from the wire as a view into the data region.
// Returns an empty optional when it does not describe a valid region.
std::optional<std::span<std::byte>> region(transport::AuxBuffer& aux, std::int64_t off, std::int64_t len) {
  if (off < 0 || len < 0 || len > static_cast<std::int64_t>(aux.data_capacity())) return std::nullopt;
  try {
    return aux.data_at(static_cast<std::size_t>(off), static_cast<std::size_t>(len));
  } catch (const transport::Overflow&) {
    return std::nullopt;
  }
}

std::optional<std::string> string_arg(transport::AuxBuffer& aux, std::int64_t off, std::int64_t len) {
  auto r = region(aux, off, len);
  if (!r) return std::nullopt;
  return std::string(reinterpret_cast<const char*>(r->data()), r->size());
}

std::string resolve(const Process& p, const std::string& path) {
  if (!path.empty() && path.front() == '/') return path;
  return p.cwd + (p.cwd.back() == '/' ? "" : "/") + path;
}

std::string argv_blob(const std::vector<std::string>& argv) {
  std::string blob;
  for (const auto& a : argv) {
    blob += a;
    blob.push_back('\0');
  }
  return blob;
}

PayloadRef ref(std::int64_t off, std::uint64_t len) {
  return {static_cast<std::uint32_t>(off), static_cast<std::uint32_t>(len)};
}

}  // namespace

KernelCore::KernelCore(Vfs vfs, ProcessLauncher* launcher) : vfs_(std::move(vfs)), launcher_(launcher) {}

KernelCore::~KernelCore() {
  for (auto& [pid, p] : procs_) {
    if (p.aux) p.aux->close();
  }
}

Process& KernelCore::proc(Pid pid) {
  auto it = procs_.find(pid);
  if (it == procs_.end()) throw std::out_of_range("no such pid " + std::to_string(pid));
  return it->second;
}

const Process* KernelCore::process(Pid pid) const {
  auto it = procs_.find(pid);
  return it == procs_.end() ? nullptr : &it->second;
}

std::vector<Pid> KernelCore::live_pids() const {
  std::vector<Pid> out;
  for (const auto& [pid, p] : procs_) {
    if (p.alive()) out.push_back(pid);
  }
  return out;
}

KernelCore::StdioFiles KernelCore::bind_stdio(const StdioSpec& spec, std::optional<Pid> parent) {
  StdioFiles files;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& b = spec.fds[i];
    switch (b.kind) {
      case StdioBinding::Kind::Null:
        files[i] = OpenFile::null_device();
        break;
      case StdioBinding::Kind::ReadFile: {
        auto node = vfs_.lookup(b.path);
        if (!node || node->is_dir()) throw SpawnError(err::kENOENT, "stdio input not found: " + b.path);
        files[i] = OpenFile::file(node, true, false, false);
        break;
      }
      case StdioBinding::Kind::WriteFile:
      case StdioBinding::Kind::AppendFile: {
        auto node = vfs_.create_file(b.path);
        if (!node) throw SpawnError(err::kENOENT, "cannot create stdio output: " + b.path);
        const bool append = b.kind == StdioBinding::Kind::AppendFile;
        if (!append) node->data.truncate();
        files[i] = OpenFile::file(node, false, true, append);
        break;
      }
      case StdioBinding::Kind::Inherit: {
        const Process* pp = parent ? process(*parent) : nullptr;
        auto f = pp ? pp->fds.get_shared(b.parent_fd) : nullptr;
        if (!f) throw SpawnError(err::kEBADF, "cannot inherit descriptor " + std::to_string(b.parent_fd));
        files[i] = std::move(f);
        break;
      }
    }
  }
  return files;
}

Pid KernelCore::register_process(Pid pid, std::optional<Pid> parent, std::vector<std::string> argv,
                                 StdioFiles files, std::shared_ptr<transport::AuxBuffer> aux) {
  Process p;
  p.pid = pid;
  p.parent = parent;
  p.argv = std::move(argv);
  p.aux = std::move(aux);
  for (int i = 0; i < 3; ++i) p.fds.install_at(i, std::move(files[i]));
  auto& slot = procs_.emplace(pid, std::move(p)).first->second;
  if (attach_hook_) attach_hook_(pid, *slot.aux);
  return pid;
}

Pid KernelCore::attach(std::optional<Pid> parent, std::vector<std::string> argv, const StdioSpec& stdio,
                       std::shared_ptr<transport::AuxBuffer> aux) {
  if (!aux) throw std::invalid_argument("attach requires an aux buffer");
  auto files = bind_stdio(stdio, parent);
  return register_process(next_pid_++, parent, std::move(argv), std::move(files), std::move(aux));
}

Pid KernelCore::spawn(std::optional<Pid> parent, std::string_view program, std::vector<std::string> argv,
                      const StdioSpec& stdio) {
  std::string path(program);
  if (parent) path = resolve(proc(*parent), path);
  auto node = vfs_.lookup(path);
  if (!node || node->is_dir()) throw SpawnError(err::kENOENT, "no such program: " + path);
  if (!launcher_) throw SpawnError(err::kEINVAL, "kernel has no process launcher");
  auto files = bind_stdio(stdio, parent);
  if (argv.empty()) argv.push_back(path);

  const Pid pid = next_pid_;
  std::unique_ptr<PreparedProcess> prepared;
  try {
    prepared = launcher_->prepare(pid, node->data.contents(), argv);
  } catch (const std::exception& e) {
    throw SpawnError(err::kEINVAL, path + ": " + e.what());
  }
  ++next_pid_;
  register_process(pid, parent, std::move(argv), std::move(files), prepared->aux());
  prepared->start();
  return pid;
}

void KernelCore::release(const std::shared_ptr<OpenFile>& f) {
  if (!f || f->refs > 0) return;
  if (f->kind == OpenFile::Kind::PipeRead) --f->pipe->readers;
  if (f->kind == OpenFile::Kind::PipeWrite) --f->pipe->writers;
}

void KernelCore::close_fd(Process& p, int fd) { release(p.fds.remove(fd)); }

void KernelCore::finish(Pid pid, std::int32_t code, bool trapped) {
  auto& p = proc(pid);
  if (!p.alive()) return;
  p.exit_code = code;
  p.trapped = trapped;
  for (int fd : p.fds.open_fds()) close_fd(p, fd);
  exited_.push_back(pid);
}

void KernelCore::flush_exits() {
  while (!exited_.empty()) {
    const Pid pid = exited_.front();
    exited_.erase(exited_.begin());
    auto it = exit_waiters_.find(pid);
    if (it == exit_waiters_.end()) continue;
    auto waiters = std::move(it->second);
    exit_waiters_.erase(it);
    auto info = exit_info(pid);
    for (auto& cb : waiters) cb(*info);
  }
}

void KernelCore::on_exit(Pid pid, std::function<void(const ExitInfo&)> cb) {
  const auto& p = proc(pid);
  const bool pending = std::find(exited_.begin(), exited_.end(), pid) != exited_.end();
  if (!p.alive() && !pending) {
    cb(*exit_info(pid));
    return;
  }
  exit_waiters_[pid].push_back(std::move(cb));
}

std::optional<ExitInfo> KernelCore::exit_info(Pid pid) const {
  const auto* p = process(pid);
  if (!p || p->alive()) return std::nullopt;
  return ExitInfo{pid, *p->exit_code, p->trapped, p->kernel_time};
}

bool KernelCore::reap(Pid pid) {
  auto it = procs_.find(pid);
  if (it == procs_.end() || it->second.alive()) return false;
  procs_.erase(it);
  return true;
}

void KernelCore::shutdown() {
  parked_.clear();
  for (auto& [pid, p] : procs_) {
    if (p.alive()) finish(pid, abi::kTrapExitCode, true);
  }
  for (auto& [pid, p] : procs_) {
    if (p.aux) p.aux->close();
  }
  flush_exits();
}

void KernelCore::complete(Pid pid, const Response& resp) {
  auto it = procs_.find(pid);
  if (it == procs_.end() || !it->second.aux) return;
  auto& aux = *it->second.aux;
  if (aux.status() != transport::Status::Request) return;
  transport::encode_response(aux, resp);
}

void KernelCore::service(Pid pid) {
  auto it = procs_.find(pid);
  if (it == procs_.end()) return;
  auto& p = it->second;
  if (!p.aux || p.aux->status() != transport::Status::Request) return;

  const auto t0 = Clock::now();
  DispatchResult result;
  try {
    auto req = transport::decode_request(*p.aux);
    result = dispatch(pid, req);
  } catch (const transport::TransportError&) {
    result = Response::fail(err::kEFAULT);
  } catch (const std::exception&) {
    result = Response::fail(err::kEINVAL);
  }
  if (auto* resp = std::get_if<Response>(&result)) complete(pid, *resp);
  p.kernel_time += Clock::now() - t0;

  progress();
  flush_exits();
}

void KernelCore::progress() {
  bool moved = true;
  while (moved) {
    moved = false;
    for (std::size_t i = 0; i < parked_.size();) {
      const auto t0 = Clock::now();
      const Pid pid = parked_[i].pid;
      auto resp = retry(parked_[i]);
      if (resp) {
        parked_.erase(parked_.begin() + static_cast<std::ptrdiff_t>(i));
        complete(pid, *resp);
        moved = true;
      } else {
        ++i;
      }
      if (auto it = procs_.find(pid); it != procs_.end()) it->second.kernel_time += Clock::now() - t0;
    }
  }
}

DispatchResult KernelCore::dispatch(Pid pid, const SyscallRequest& req) {
  auto& p = proc(pid);
  if (!p.alive()) return Response::fail(err::kEINVAL);

  auto park_or = [&](std::optional<Response> (KernelCore::*attempt)(ParkedRequest&, bool)) -> DispatchResult {
    ParkedRequest pr{pid, req};
    auto r = (this->*attempt)(pr, true);
    if (r) return *r;
    parked_.push_back(std::move(pr));
    return Parked{};
  };

  switch (req.syscall_no) {
    case abi::sys::kExit: return sys_exit(p, req);
    case abi::sys::kRead: return park_or(&KernelCore::try_read);
    case abi::sys::kWrite:
    case abi::sys::kWritev: return park_or(&KernelCore::try_write);
    case abi::sys::kWaitpid: return park_or(&KernelCore::try_waitpid);
    case abi::sys::kOpen: return sys_open(p, req);
    case abi::sys::kClose: return sys_close(p, req);
    case abi::sys::kSeek: return sys_seek(p, req);
    case abi::sys::kStat: return sys_stat(p, req);
    case abi::sys::kPipe: return sys_pipe(p, req);
    case abi::sys::kSpawn: return sys_spawn(p, req);
    case abi::sys::kArgsSizesGet: return sys_args_sizes(p, req);
    case abi::sys::kArgsGet: return sys_args_get(p, req);
    default: return Response::fail(err::kENOSYS);
  }
}

std::optional<Response> KernelCore::retry(ParkedRequest& pr) {
  auto it = procs_.find(pr.pid);
  if (it == procs_.end() || !it->second.alive()) return Response::fail(err::kEINVAL);
  switch (pr.req.syscall_no) {
    case abi::sys::kRead: return try_read(pr, false);
    case abi::sys::kWrite:
    case abi::sys::kWritev: return try_write(pr, false);
    case abi::sys::kWaitpid: return try_waitpid(pr, false);
    default: return Response::fail(err::kEINVAL);
  }
}

std::optional<Response> KernelCore::try_read(ParkedRequest& pr, bool first) {
  auto& p = proc(pr.pid);
  const auto& r = pr.req;
  const int fd = static_cast<int>(arg(r, 0));
  if (first) {
    auto* f = p.fds.get(fd);
    if (!f || !f->readable) return Response::fail(err::kEBADF);
    pr.fd = fd;
    pr.generation = p.fds.generation(fd);
  } else if (!p.fds.is_current(pr.fd, pr.generation)) {
    return Response::fail(err::kEBADF);
  }
  auto* f = p.fds.get(fd);
  const auto off = arg(r, 1);
  auto dst = region(*p.aux, off, arg(r, 2));
  if (!dst) return Response::fail(err::kEFAULT);

  switch (f->kind) {
    case OpenFile::Kind::Null:
      return Response::ok(0, {ref(off, 0)});
    case OpenFile::Kind::File: {
      if (f->node->is_dir()) return Response::fail(err::kEINVAL);
      auto n = f->node->data.read_at(f->offset, *dst);
      f->offset += n;
      return Response::ok(static_cast<std::int64_t>(n), {ref(off, n)});
    }
    case OpenFile::Kind::PipeRead: {
      auto& pipe = *f->pipe;
      if (pipe.available() > 0 || dst->empty()) {
        auto n = pipe.read(*dst);
        return Response::ok(static_cast<std::int64_t>(n), {ref(off, n)});
      }
      if (pipe.writers == 0 || (arg(r, 3) & abi::kReadContinuation) != 0) return Response::ok(0, {ref(off, 0)});
      return std::nullopt;
    }
    case OpenFile::Kind::PipeWrite:
      break;
  }
  return Response::fail(err::kEBADF);
}

std::optional<Response> KernelCore::try_write(ParkedRequest& pr, bool first) {
  auto& p = proc(pr.pid);
  const auto& r = pr.req;
  const int fd = static_cast<int>(arg(r, 0));
  if (first) {
    auto* f = p.fds.get(fd);
    if (!f || !f->writable) return Response::fail(err::kEBADF);
    pr.fd = fd;
    pr.generation = p.fds.generation(fd);
  } else if (!p.fds.is_current(pr.fd, pr.generation)) {
    return pr.progress > 0 ? Response::ok(static_cast<std::int64_t>(pr.progress)) : Response::fail(err::kEBADF);
  }
  auto* f = p.fds.get(fd);

  std::vector<std::span<std::byte>> segs;
  if (r.syscall_no == abi::sys::kWrite) {
    auto s = region(*p.aux, arg(r, 1), arg(r, 2));
    if (!s) return Response::fail(err::kEFAULT);
    segs.push_back(*s);
  } else {
    if (arg(r, 1) != static_cast<std::int64_t>(r.payloads.size())) return Response::fail(err::kEINVAL);
    for (const auto& pl : r.payloads) {
      auto s = region(*p.aux, pl.offset, pl.length);
      if (!s) return Response::fail(err::kEFAULT);
      segs.push_back(*s);
    }
  }
  std::uint64_t total = 0;
  for (const auto& s : segs) total += s.size();

  switch (f->kind) {
    case OpenFile::Kind::Null:
      return Response::ok(static_cast<std::int64_t>(total));
    case OpenFile::Kind::File: {
      auto& node = *f->node;
      if (node.is_dir()) return Response::fail(err::kEINVAL);
      for (const auto& s : segs) {
        if (f->append || f->offset == node.data.size()) {
          fs_append(node, s);
          f->offset = node.data.size();
        } else {
          node.data.write_at(f->offset, s);
          f->offset += s.size();
        }
      }
      return Response::ok(static_cast<std::int64_t>(total));
    }
    case OpenFile::Kind::PipeWrite: {
      auto& pipe = *f->pipe;
      if (pipe.readers == 0) {
        return pr.progress > 0 ? Response::ok(static_cast<std::int64_t>(pr.progress)) : Response::fail(err::kEPIPE);
      }
      std::uint64_t skip = pr.progress;
      for (const auto& s : segs) {
        if (skip >= s.size()) {
          skip -= s.size();
          continue;
        }
        auto rest = s.subspan(skip);
        auto n = pipe.write(rest);
        pr.progress += n;
        skip = 0;
        if (n < rest.size()) break;
      }
      if (pr.progress == total) return Response::ok(static_cast<std::int64_t>(total));
      return std::nullopt;
    }
    case OpenFile::Kind::PipeRead:
      break;
  }
  return Response::fail(err::kEBADF);
}

std::optional<Response> KernelCore::try_waitpid(ParkedRequest& pr, bool first) {
  const Pid target = static_cast<Pid>(arg(pr.req, 0));
  auto it = procs_.find(target);
  if (target == pr.pid || it == procs_.end() || it->second.reaped) return Response::fail(err::kEINVAL);
  (void)first;
  auto& t = it->second;
  if (t.alive()) return std::nullopt;
  t.reaped = true;
  return Response::ok(*t.exit_code);
}

Response KernelCore::sys_exit(Process& p, const SyscallRequest& r) {
  finish(p.pid, static_cast<std::int32_t>(arg(r, 0)), arg(r, 1) != 0);
  return Response::ok(0);
}

Response KernelCore::sys_open(Process& p, const SyscallRequest& r) {
  namespace of = abi::open_flags;
  const auto flags = arg(r, 2);
  const auto acc = flags & of::kAccMode;
  if ((flags & ~of::kKnown) != 0 || acc == of::kAccMode) return Response::fail(err::kEINVAL);
  auto path = string_arg(*p.aux, arg(r, 0), arg(r, 1));
  if (!path) return Response::fail(err::kEFAULT);
  if (path->empty()) return Response::fail(err::kENOENT);
  const auto full = resolve(p, *path);
  const bool writable = acc != of::kRdOnly;

  auto node = vfs_.lookup(full);
  if (!node) {
    if ((flags & of::kCreat) == 0) return Response::fail(err::kENOENT);
    node = vfs_.create_file(full);
    if (!node) return Response::fail(err::kENOENT);
  }
  if (node->is_dir() && writable) return Response::fail(err::kEINVAL);
  if (!node->is_dir() && writable && (flags & of::kTrunc) != 0) node->data.truncate();

  auto f = OpenFile::file(node, acc != of::kWrOnly, writable, (flags & of::kAppend) != 0);
  const int fd = p.fds.install(std::move(f));
  if (fd < 0) return Response::fail(err::kEINVAL);
  return Response::ok(fd);
}

Response KernelCore::sys_close(Process& p, const SyscallRequest& r) {
  const int fd = static_cast<int>(arg(r, 0));
  if (!p.fds.get(fd)) return Response::fail(err::kEBADF);
  close_fd(p, fd);
  return Response::ok(0);
}

Response KernelCore::sys_seek(Process& p, const SyscallRequest& r) {
  auto* f = p.fds.get(static_cast<int>(arg(r, 0)));
  if (!f) return Response::fail(err::kEBADF);
  if (f->kind != OpenFile::Kind::File) return Response::fail(err::kEINVAL);
  const auto off = arg(r, 1);
  std::int64_t base = 0;
  switch (arg(r, 2)) {
    case abi::whence::kSet: base = 0; break;
    case abi::whence::kCur: base = static_cast<std::int64_t>(f->offset); break;
    case abi::whence::kEnd: base = static_cast<std::int64_t>(f->node->size()); break;
    default: return Response::fail(err::kEINVAL);
  }
  const auto pos = base + off;
  if (pos < 0) return Response::fail(err::kEINVAL);
  f->offset = static_cast<std::uint64_t>(pos);
  return Response::ok(pos);
}

Response KernelCore::sys_stat(Process& p, const SyscallRequest& r) {
  auto path = string_arg(*p.aux, arg(r, 0), arg(r, 1));
  if (!path) return Response::fail(err::kEFAULT);
  const auto out_off = arg(r, 2);
  auto out = region(*p.aux, out_off, abi::kStatRecordSize);
  if (!out) return Response::fail(err::kEFAULT);
  auto node = path->empty() ? nullptr : vfs_.lookup(resolve(p, *path));
  if (!node) return Response::fail(err::kENOENT);
  detail::store_le<std::uint32_t>(*out, 0, node->is_dir() ? abi::kStatKindDirectory : abi::kStatKindFile);
  detail::store_le<std::uint32_t>(*out, 4, 0);
  detail::store_le<std::uint64_t>(*out, 8, node->size());
  return Response::ok(0, {ref(out_off, abi::kStatRecordSize)});
}

Response KernelCore::sys_pipe(Process& p, const SyscallRequest& r) {
  const auto out_off = arg(r, 0);
  auto out = region(*p.aux, out_off, 8);
  if (!out) return Response::fail(err::kEFAULT);
  auto [rd, wr] = OpenFile::pipe_pair();
  const int rfd = p.fds.install(rd);
  const int wfd = rfd < 0 ? -1 : p.fds.install(wr);
  if (wfd < 0) {
    if (rfd >= 0) close_fd(p, rfd);
    return Response::fail(err::kEINVAL);
  }
  detail::store_le<std::int32_t>(*out, 0, rfd);
  detail::store_le<std::int32_t>(*out, 4, wfd);
  return Response::ok(0, {ref(out_off, 8)});
}

Response KernelCore::sys_spawn(Process& p, const SyscallRequest& r) {
  auto path = string_arg(*p.aux, arg(r, 0), arg(r, 1));
  auto blob = string_arg(*p.aux, arg(r, 2), arg(r, 3));
  if (!path || !blob) return Response::fail(err::kEFAULT);
  std::vector<std::string> argv;
  std::size_t start = 0;
  while (start < blob->size()) {
    auto end = blob->find('\0', start);
    if (end == std::string::npos) end = blob->size();
    argv.push_back(blob->substr(start, end - start));
    start = end + 1;
  }
  StdioSpec spec;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto fd = arg(r, 4 + i);
    if (fd == -1) {
      spec.fds[i] = StdioBinding::null();
    } else {
      if (!p.fds.get(static_cast<int>(fd))) return Response::fail(err::kEBADF);
      spec.fds[i] = StdioBinding::inherit(static_cast<int>(fd));
    }
  }
  try {
    return Response::ok(spawn(p.pid, *path, std::move(argv), spec));
  } catch (const SpawnError& e) {
    return Response::fail(e.error);
  }
}

Response KernelCore::sys_args_sizes(Process& p, const SyscallRequest& r) {
  const auto out_off = arg(r, 0);
  auto out = region(*p.aux, out_off, 8);
  if (!out) return Response::fail(err::kEFAULT);
  detail::store_le<std::uint32_t>(*out, 0, static_cast<std::uint32_t>(p.argv.size()));
  detail::store_le<std::uint32_t>(*out, 4, static_cast<std::uint32_t>(argv_blob(p.argv).size()));
  return Response::ok(0, {ref(out_off, 8)});
}

Response KernelCore::sys_args_get(Process& p, const SyscallRequest& r) {
  const auto out_off = arg(r, 0);
  const auto blob = argv_blob(p.argv);
  auto out = region(*p.aux, out_off, static_cast<std::int64_t>(blob.size()));
  if (!out) return Response::fail(err::kEFAULT);
  if (!blob.empty()) std::memcpy(out->data(), blob.data(), blob.size());
  return Response::ok(static_cast<std::int64_t>(p.argv.size()), {ref(out_off, blob.size())});
}

}  // namespace procwasm::kernel
