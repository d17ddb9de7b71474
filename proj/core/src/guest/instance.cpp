#include "procwasm/guest/instance.hpp"

#include <cstring>
#include <thread>

#include "guest/interpreter.hpp"
#include "guest/wasm_ir.hpp"
#include "procwasm/abi.hpp"

namespace procwasm::guest {

namespace {

const ir::FuncType& syscall_type() {
  using ir::ValType;
  static const ir::FuncType t{{ValType::I32, ValType::I64, ValType::I64, ValType::I64, ValType::I64, ValType::I64,
                               ValType::I64},
                              {ValType::I64}};
  return t;
}

const std::string& entry_name() {
  static const std::string s(abi::kEntryExport);
  return s;
}

const std::string& memory_name() {
  static const std::string s(abi::kMemoryExport);
  return s;
}

}  // namespace

GuestModule GuestModule::load(std::span<const std::byte> bytes) {
  auto ir = decode_wasm(bytes);
  for (const auto& imp : ir->imports) {
    if (imp.module != abi::kNamespace || imp.name != abi::kSyscallImport) {
      throw UnsupportedImport("import " + imp.module + "." + imp.name + " is outside the " +
                              std::string(abi::kNamespace) + " ABI");
    }
    if (ir->types[imp.type_index] != syscall_type()) {
      throw UnsupportedImport("kernel.syscall imported with a signature other than (i32, i64 x6) -> i64");
    }
  }
  const auto* mem = ir->find_export(abi::kMemoryExport, ir::ExternKind::Memory);
  if (mem == nullptr) throw InvalidModule("module does not export its linear memory as \"memory\"");
  const auto* entry = ir->find_export(abi::kEntryExport, ir::ExternKind::Func);
  if (entry == nullptr) throw InvalidModule("module does not export a \"_start\" function");
  const auto& et = ir->types[ir->func_types[entry->index]];
  if (!et.params.empty() || !et.results.empty()) throw InvalidModule("\"_start\" must have type [] -> []");

  GuestModule m;
  m.bytes_ = std::make_shared<const std::vector<std::byte>>(bytes.begin(), bytes.end());
  m.ir_ = std::move(ir);
  return m;
}

GuestModule GuestModule::load(std::span<const std::uint8_t> bytes) {
  return load(std::as_bytes(bytes));
}

const std::string& GuestModule::entry() const noexcept { return entry_name(); }
const std::string& GuestModule::memory_export() const noexcept { return memory_name(); }

std::uint64_t GuestModule::memory_size() const noexcept {
  return std::uint64_t{ir_->memory_pages.value_or(0)} * abi::kWasmPageSize;
}

void ShimConfig::validate() const {
  if (aux_capacity < transport::kMinCapacity || aux_capacity % transport::kCapacityGranule != 0) {
    throw std::invalid_argument("aux capacity must be >= 8192 and a multiple of 4096");
  }
  if (abi_namespace != abi::kNamespace) {
    throw std::invalid_argument("ABI namespace is fixed to \"kernel\"");
  }
}

ExitStatus ExitStatus::trapped(std::string reason) {
  return {Kind::Trapped, abi::kTrapExitCode, std::move(reason)};
}

GuestInstance::GuestInstance(GuestModule module, const ShimConfig& cfg)
    : module_(std::move(module)),
      memory_(std::make_unique<LinearMemory>(module_.ir().memory_pages.value_or(0))),
      aux_(std::make_shared<transport::AuxBuffer>(cfg.aux_capacity)) {
  for (const auto& seg : module_.ir().data) {
    memory_->write(seg.offset, std::as_bytes(std::span(seg.bytes)));
  }
  interp_ = std::make_unique<Interpreter>(module_.ir(), *memory_);
}

GuestInstance::GuestInstance(GuestInstance&&) noexcept = default;
GuestInstance& GuestInstance::operator=(GuestInstance&&) noexcept = default;
GuestInstance::~GuestInstance() = default;

const ExecCounters& GuestInstance::counters() const noexcept { return interp_->counters(); }

GuestInstance instantiate_guest(const GuestModule& module, const ShimConfig& cfg,
                                std::chrono::nanoseconds injected_delay) {
  cfg.validate();
  GuestInstance instance(module, cfg);
  if (injected_delay.count() > 0) std::this_thread::sleep_for(injected_delay);
  return instance;
}

RunOutcome run_guest(GuestInstance& instance, SyscallHandler& handler, EntryHooks* hooks) {
  if (instance.state_ != InstanceState::Created) {
    throw std::logic_error("run_guest requires an instance in state created");
  }
  auto& interp = *instance.interp_;
  interp.set_host([&handler](std::uint32_t, std::span<const std::uint64_t> args) -> std::uint64_t {
    std::array<std::int64_t, 6> a{};
    for (std::size_t i = 0; i < 6; ++i) a[i] = static_cast<std::int64_t>(args[i + 1]);
    auto no = static_cast<std::uint32_t>(args[0]);
    return static_cast<std::uint64_t>(handler.syscall(no, a));
  });

  const auto& ir = instance.module_.ir();
  const auto entry = ir.find_export(abi::kEntryExport, ir::ExternKind::Func)->index;

  if (hooks) hooks->before_entry(instance);
  instance.state_ = InstanceState::Running;
  RunOutcome out;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (ir.start) interp.invoke(*ir.start, {});
    interp.invoke(entry, {});
    handler.syscall(abi::sys::kExit, {0, 0, 0, 0, 0, 0});
    // A handler that does not unwind on exit still ends the run.
    out.status = ExitStatus::exited(0);
  } catch (const GuestExit& e) {
    out.status = ExitStatus::exited(e.code);
  } catch (const Trap& t) {
    out.status = ExitStatus::trapped(t.what());
  } catch (const transport::KernelGone& e) {
    out.status = ExitStatus::trapped(std::string("kernel gone: ") + e.what());
  }
  out.wall_time = std::chrono::steady_clock::now() - t0;

  if (out.status.kind == ExitStatus::Kind::Trapped) {
    instance.state_ = InstanceState::Trapped;
    handler.on_trap(out.status.trap_reason);
  } else {
    instance.state_ = InstanceState::Exited;
  }
  instance.exit_ = out.status;
  if (hooks) hooks->after_exit(instance, out.status);
  return out;
}

std::vector<std::byte> guest_read(const GuestInstance& instance, std::uint64_t offset, std::uint64_t len) {
  return instance.memory().read(offset, len);
}

void guest_write(GuestInstance& instance, std::uint64_t offset, std::span<const std::byte> data) {
  instance.memory().write(offset, data);
}

}  // namespace procwasm::guest
