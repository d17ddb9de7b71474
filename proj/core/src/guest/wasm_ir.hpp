#pragma once

// Validated, pre-decoded form of a WebAssembly module as executed by the
// interpreter. Numeric instructions keep their binary opcode as the op code;
// control instructions are lowered to absolute jumps with precomputed stack
// heights. `block`, `loop` and `end` emit nothing.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace procwasm::guest::ir {

enum class ValType : std::uint8_t {
  Unknown = 0,  // polymorphic stack slot during validation only
  I32 = 0x7F,
  I64 = 0x7E,
  F32 = 0x7D,
  F64 = 0x7C,
};

struct FuncType {
  std::vector<ValType> params;
  std::vector<ValType> results;
  friend bool operator==(const FuncType&, const FuncType&) = default;
};

namespace op {
// Single-byte instructions use their binary opcode.
inline constexpr std::uint16_t kUnreachable = 0x00;
inline constexpr std::uint16_t kNop = 0x01;
inline constexpr std::uint16_t kIf = 0x04;        // a = else/end pc; jumps when condition is zero
inline constexpr std::uint16_t kBr = 0x0C;        // a = pc, b = height | arity << 32
inline constexpr std::uint16_t kBrIf = 0x0D;
inline constexpr std::uint16_t kBrTable = 0x0E;   // a = first target index, b = target count (incl. default)
inline constexpr std::uint16_t kReturn = 0x0F;
inline constexpr std::uint16_t kCall = 0x10;      // a = function index (defined functions only)
inline constexpr std::uint16_t kCallIndirect = 0x11;  // a = canonical type id
inline constexpr std::uint16_t kDrop = 0x1A;
inline constexpr std::uint16_t kSelect = 0x1B;
inline constexpr std::uint16_t kLocalGet = 0x20;
inline constexpr std::uint16_t kLocalSet = 0x21;
inline constexpr std::uint16_t kLocalTee = 0x22;
inline constexpr std::uint16_t kGlobalGet = 0x23;
inline constexpr std::uint16_t kGlobalSet = 0x24;
inline constexpr std::uint16_t kMemorySize = 0x3F;
inline constexpr std::uint16_t kMemoryGrow = 0x40;
inline constexpr std::uint16_t kI32Const = 0x41;  // b = value bits
inline constexpr std::uint16_t kI64Const = 0x42;
inline constexpr std::uint16_t kF32Const = 0x43;
inline constexpr std::uint16_t kF64Const = 0x44;

// Lowered forms with no single instruction counterpart; not counted.
inline constexpr std::uint16_t kJump = 0x100;     // end of a then-arm
inline constexpr std::uint16_t kFuncEnd = 0x101;  // implicit return at the closing `end`
inline constexpr std::uint16_t kCallHost = 0x102; // a = import index; counted as a call

// 0xFC-prefixed instructions: 0x200 + sub-opcode.
inline constexpr std::uint16_t kPrefixFC = 0x200;
inline constexpr std::uint16_t kMemoryCopy = kPrefixFC + 10;
inline constexpr std::uint16_t kMemoryFill = kPrefixFC + 11;
}  // namespace op

struct Op {
  std::uint16_t code = 0;
  std::uint32_t a = 0;
  std::uint64_t b = 0;
};

struct BrTarget {
  std::uint32_t pc = 0;
  std::uint32_t height = 0;  // slots above the frame pointer (locals included)
  std::uint32_t arity = 0;
};

struct Function {
  std::uint32_t type_index = 0;
  std::uint32_t num_params = 0;
  std::uint32_t num_results = 0;
  std::uint32_t num_locals = 0;  // params included
  std::uint32_t max_height = 0;  // operand stack high-water mark
  std::vector<Op> code;
  std::vector<BrTarget> br_targets;
};

struct Import {
  std::string module;
  std::string name;
  std::uint32_t type_index = 0;
};

struct Global {
  ValType type = ValType::I32;
  bool mutable_ = false;
  std::uint64_t init = 0;
};

struct DataSegment {
  std::uint32_t offset = 0;
  std::vector<std::uint8_t> bytes;
};

struct ElemSegment {
  std::uint32_t offset = 0;
  std::vector<std::uint32_t> functions;
};

enum class ExternKind : std::uint8_t { Func = 0, Table = 1, Memory = 2, Global = 3 };

struct Export {
  std::string name;
  ExternKind kind = ExternKind::Func;
  std::uint32_t index = 0;
};

struct Module {
  std::vector<FuncType> types;
  std::vector<std::uint32_t> canonical_type;  // type index -> smallest structurally equal index
  std::vector<Import> imports;                // function imports only
  std::vector<Function> functions;            // defined functions; index = func index - imports.size()
  std::vector<std::uint32_t> func_types;      // every function index -> type index
  std::optional<std::uint32_t> table_min;
  std::optional<std::uint32_t> memory_pages;
  std::vector<Global> globals;
  std::vector<Export> exports;
  std::optional<std::uint32_t> start;
  std::vector<DataSegment> data;
  std::vector<ElemSegment> elements;

  const Export* find_export(std::string_view name, ExternKind kind) const {
    for (const auto& e : exports) {
      if (e.name == name && e.kind == kind) return &e;
    }
    return nullptr;
  }
};

}  // namespace procwasm::guest::ir
