#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "guest/wasm_ir.hpp"
#include "procwasm/guest/instance.hpp"
#include "procwasm/guest/linear_memory.hpp"

namespace procwasm::guest {

/// Executes lowered functions of one module instance. Not thread-safe; an
/// instance is confined to the context that runs it.
class Interpreter {
 public:
  using HostCall = std::function<std::uint64_t(std::uint32_t import_index, std::span<const std::uint64_t> args)>;

  static constexpr std::size_t kStackSlots = std::size_t{1} << 20;
  static constexpr std::size_t kMaxFrames = 16384;
  static constexpr std::uint32_t kNullElement = 0xFFFFFFFFu;

  Interpreter(const ir::Module& module, LinearMemory& memory);

  void set_host(HostCall host) { host_ = std::move(host); }

  /// Calls function `func_index` (import or defined) and returns its results.
  std::vector<std::uint64_t> invoke(std::uint32_t func_index, std::span<const std::uint64_t> args);

  const ExecCounters& counters() const noexcept { return counters_; }
  std::uint64_t global(std::uint32_t index) const { return globals_.at(index); }

 private:
  struct Frame {
    std::uint32_t func;
    std::uint32_t ret_pc;
    std::uint64_t* fp;
  };

  void execute(std::uint32_t defined_index, std::uint64_t* fp);

  const ir::Module& module_;
  LinearMemory& memory_;
  std::vector<std::uint64_t> globals_;
  std::vector<std::uint32_t> table_;
  std::unique_ptr<std::uint64_t[]> stack_;
  std::vector<Frame> frames_;
  ExecCounters counters_;
  HostCall host_;
};

}  // namespace procwasm::guest
