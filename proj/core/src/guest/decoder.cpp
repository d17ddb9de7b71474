// WebAssembly binary decoder, validator and lowering pass.
//
// Validation follows the operand-stack algorithm from the core specification
// (typed value stack plus control frames). The same walk lowers each body
// into ir::Op sequences with absolute branch targets.

#include <algorithm>
#include <bit>
#include <cstring>
#include <set>

#include "guest/wasm_ir.hpp"
#include "procwasm/guest/module.hpp"

namespace procwasm::guest {

namespace {

using ir::ValType;

constexpr std::uint32_t kMaxPages = 32768;  // 2 GiB
constexpr std::uint32_t kMaxLocals = 50000;
constexpr std::uint32_t kMaxTableSize = 1u << 20;

[[noreturn]] void fail(const std::string& what) { throw InvalidModule(what); }

class Reader {
 public:
  explicit Reader(std::span<const std::byte> data) : data_(data) {}

  std::size_t pos() const { return pos_; }
  std::size_t size() const { return data_.size(); }
  bool eof() const { return pos_ >= data_.size(); }

  std::uint8_t u8() {
    if (pos_ >= data_.size()) fail("unexpected end of module at offset " + std::to_string(pos_));
    return static_cast<std::uint8_t>(data_[pos_++]);
  }

  std::uint32_t u32() {
    std::uint64_t result = 0;
    for (int shift = 0;; shift += 7) {
      std::uint8_t b = u8();
      if (shift == 28 && (b & 0x70) != 0) fail("u32 LEB128 overflow");
      result |= std::uint64_t{b & 0x7fu} << shift;
      if ((b & 0x80) == 0) break;
      if (shift == 28) fail("u32 LEB128 too long");
    }
    return static_cast<std::uint32_t>(result);
  }

  std::int64_t sleb(int bits) {
    std::int64_t result = 0;
    int shift = 0;
    std::uint8_t b = 0;
    const int max_bytes = (bits + 6) / 7;
    for (int i = 0;; ++i) {
      if (i >= max_bytes) fail("signed LEB128 too long");
      b = u8();
      result |= static_cast<std::int64_t>(std::uint64_t{b & 0x7fu} << shift);
      shift += 7;
      if ((b & 0x80) == 0) break;
    }
    if (shift < 64 && (b & 0x40)) result |= static_cast<std::int64_t>(~std::uint64_t{0} << shift);
    // Unused high bits of the last byte must be a sign extension.
    if (bits < 64) {
      std::int64_t lo = -(std::int64_t{1} << (bits - 1));
      std::int64_t hi = (std::int64_t{1} << (bits - 1)) - 1;
      if (result < lo || result > hi) fail("signed LEB128 out of range");
    }
    return result;
  }

  std::span<const std::byte> bytes(std::size_t n) {
    if (n > data_.size() - pos_) fail("byte run exceeds module size");
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::string name() {
    auto n = u32();
    auto raw = bytes(n);
    return std::string(reinterpret_cast<const char*>(raw.data()), raw.size());
  }

  template <typename T>
  T fixed() {
    auto raw = bytes(sizeof(T));
    T v;
    std::memcpy(&v, raw.data(), sizeof(T));
    return v;
  }

 private:
  std::span<const std::byte> data_;
  std::size_t pos_ = 0;
};

ValType read_valtype(Reader& r) {
  auto b = r.u8();
  switch (b) {
    case 0x7F: return ValType::I32;
    case 0x7E: return ValType::I64;
    case 0x7D: return ValType::F32;
    case 0x7C: return ValType::F64;
    case 0x70:
    case 0x6F: fail("reference-typed values are not supported");
    case 0x7B: fail("v128 values are not supported");
    default: fail("invalid value type 0x" + std::to_string(b));
  }
}

struct Limits {
  std::uint32_t min = 0;
  std::optional<std::uint32_t> max;
};

Limits read_limits(Reader& r) {
  auto flag = r.u8();
  Limits l;
  if (flag == 0) {
    l.min = r.u32();
  } else if (flag == 1) {
    l.min = r.u32();
    l.max = r.u32();
    if (*l.max < l.min) fail("limits maximum below minimum");
  } else {
    fail("unsupported limits flag " + std::to_string(flag));
  }
  return l;
}

// Signature of a numeric instruction: in2 is Unknown for unary operators.
struct NumericSig {
  ValType in1 = ValType::Unknown;
  ValType in2 = ValType::Unknown;
  ValType out = ValType::Unknown;
};

std::optional<NumericSig> numeric_sig(std::uint8_t opc) {
  constexpr auto I32 = ValType::I32, I64 = ValType::I64, F32 = ValType::F32, F64 = ValType::F64,
                 N = ValType::Unknown;
  if (opc == 0x45) return NumericSig{I32, N, I32};
  if (opc >= 0x46 && opc <= 0x4F) return NumericSig{I32, I32, I32};
  if (opc == 0x50) return NumericSig{I64, N, I32};
  if (opc >= 0x51 && opc <= 0x5A) return NumericSig{I64, I64, I32};
  if (opc >= 0x5B && opc <= 0x60) return NumericSig{F32, F32, I32};
  if (opc >= 0x61 && opc <= 0x66) return NumericSig{F64, F64, I32};
  if (opc >= 0x67 && opc <= 0x69) return NumericSig{I32, N, I32};
  if (opc >= 0x6A && opc <= 0x78) return NumericSig{I32, I32, I32};
  if (opc >= 0x79 && opc <= 0x7B) return NumericSig{I64, N, I64};
  if (opc >= 0x7C && opc <= 0x8A) return NumericSig{I64, I64, I64};
  if (opc >= 0x8B && opc <= 0x91) return NumericSig{F32, N, F32};
  if (opc >= 0x92 && opc <= 0x98) return NumericSig{F32, F32, F32};
  if (opc >= 0x99 && opc <= 0x9F) return NumericSig{F64, N, F64};
  if (opc >= 0xA0 && opc <= 0xA6) return NumericSig{F64, F64, F64};
  switch (opc) {
    case 0xA7: return NumericSig{I64, N, I32};
    case 0xA8: case 0xA9: return NumericSig{F32, N, I32};
    case 0xAA: case 0xAB: return NumericSig{F64, N, I32};
    case 0xAC: case 0xAD: return NumericSig{I32, N, I64};
    case 0xAE: case 0xAF: return NumericSig{F32, N, I64};
    case 0xB0: case 0xB1: return NumericSig{F64, N, I64};
    case 0xB2: case 0xB3: return NumericSig{I32, N, F32};
    case 0xB4: case 0xB5: return NumericSig{I64, N, F32};
    case 0xB6: return NumericSig{F64, N, F32};
    case 0xB7: case 0xB8: return NumericSig{I32, N, F64};
    case 0xB9: case 0xBA: return NumericSig{I64, N, F64};
    case 0xBB: return NumericSig{F32, N, F64};
    case 0xBC: return NumericSig{F32, N, I32};
    case 0xBD: return NumericSig{F64, N, I64};
    case 0xBE: return NumericSig{I32, N, F32};
    case 0xBF: return NumericSig{I64, N, F64};
    case 0xC0: case 0xC1: return NumericSig{I32, N, I32};
    case 0xC2: case 0xC3: case 0xC4: return NumericSig{I64, N, I64};
    default: return std::nullopt;
  }
}

struct MemAccess {
  ValType type;
  std::uint32_t natural_align;  // log2 bytes
  bool store;
};

std::optional<MemAccess> memory_access(std::uint8_t opc) {
  constexpr auto I32 = ValType::I32, I64 = ValType::I64, F32 = ValType::F32, F64 = ValType::F64;
  switch (opc) {
    case 0x28: return MemAccess{I32, 2, false};
    case 0x29: return MemAccess{I64, 3, false};
    case 0x2A: return MemAccess{F32, 2, false};
    case 0x2B: return MemAccess{F64, 3, false};
    case 0x2C: case 0x2D: return MemAccess{I32, 0, false};
    case 0x2E: case 0x2F: return MemAccess{I32, 1, false};
    case 0x30: case 0x31: return MemAccess{I64, 0, false};
    case 0x32: case 0x33: return MemAccess{I64, 1, false};
    case 0x34: case 0x35: return MemAccess{I64, 2, false};
    case 0x36: return MemAccess{I32, 2, true};
    case 0x37: return MemAccess{I64, 3, true};
    case 0x38: return MemAccess{F32, 2, true};
    case 0x39: return MemAccess{F64, 3, true};
    case 0x3A: return MemAccess{I32, 0, true};
    case 0x3B: return MemAccess{I32, 1, true};
    case 0x3C: return MemAccess{I64, 0, true};
    case 0x3D: return MemAccess{I64, 1, true};
    case 0x3E: return MemAccess{I64, 2, true};
    default: return std::nullopt;
  }
}

class FunctionCompiler {
 public:
  FunctionCompiler(const ir::Module& module, ir::Function& fn, Reader& reader, std::size_t end)
      : module_(module), fn_(fn), r_(reader), end_(end) {}

  void compile() {
    const auto& type = module_.types[fn_.type_index];
    locals_ = type.params;
    auto groups = r_.u32();
    std::uint64_t total = locals_.size();
    for (std::uint32_t g = 0; g < groups; ++g) {
      auto count = r_.u32();
      auto t = read_valtype(r_);
      total += count;
      if (total > kMaxLocals) fail("too many locals");
      locals_.insert(locals_.end(), count, t);
    }
    fn_.num_params = static_cast<std::uint32_t>(type.params.size());
    fn_.num_results = static_cast<std::uint32_t>(type.results.size());
    fn_.num_locals = static_cast<std::uint32_t>(locals_.size());

    push_ctrl(Kind::Function, {}, type.results);
    while (!ctrls_.empty()) {
      if (r_.pos() >= end_) fail("function body ends without closing `end`");
      step();
    }
    if (r_.pos() != end_) fail("trailing bytes after function body");
  }

 private:
  enum class Kind { Function, Block, Loop, If, Else };

  struct Fixup {
    bool table_entry;
    std::uint32_t index;
  };

  struct Ctrl {
    Kind kind{};
    std::vector<ValType> params;
    std::vector<ValType> results;
    std::size_t height = 0;
    bool unreachable = false;
    std::uint32_t loop_pc = 0;
    std::vector<Fixup> fixups;
    std::int64_t if_op = -1;
  };

  void push(ValType t) {
    vals_.push_back(t);
    fn_.max_height = std::max<std::uint32_t>(fn_.max_height, static_cast<std::uint32_t>(vals_.size()));
  }

  ValType pop() {
    auto& c = ctrls_.back();
    if (vals_.size() == c.height) {
      if (c.unreachable) return ValType::Unknown;
      fail("operand stack underflow");
    }
    auto t = vals_.back();
    vals_.pop_back();
    return t;
  }

  ValType pop(ValType expected) {
    auto actual = pop();
    if (actual == ValType::Unknown) return expected;
    if (expected != ValType::Unknown && actual != expected) fail("operand type mismatch");
    return actual;
  }

  void pop_vals(const std::vector<ValType>& ts) {
    for (auto it = ts.rbegin(); it != ts.rend(); ++it) pop(*it);
  }

  void push_vals(const std::vector<ValType>& ts) {
    for (auto t : ts) push(t);
  }

  void push_ctrl(Kind kind, std::vector<ValType> params, std::vector<ValType> results) {
    Ctrl c;
    c.kind = kind;
    c.params = std::move(params);
    c.results = std::move(results);
    c.height = vals_.size();
    c.loop_pc = pc();
    ctrls_.push_back(std::move(c));
    push_vals(ctrls_.back().params);
  }

  Ctrl pop_ctrl() {
    if (ctrls_.empty()) fail("control stack underflow");
    auto& c = ctrls_.back();
    pop_vals(c.results);
    if (vals_.size() != c.height) fail("values remain on the stack at block end");
    Ctrl out = std::move(c);
    ctrls_.pop_back();
    return out;
  }

  void set_unreachable() {
    auto& c = ctrls_.back();
    vals_.resize(c.height);
    c.unreachable = true;
  }

  const std::vector<ValType>& label_types(const Ctrl& c) const {
    return c.kind == Kind::Loop ? c.params : c.results;
  }

  std::uint32_t pc() const { return static_cast<std::uint32_t>(fn_.code.size()); }

  std::uint32_t emit(std::uint16_t code, std::uint32_t a = 0, std::uint64_t b = 0) {
    fn_.code.push_back(ir::Op{code, a, b});
    return pc() - 1;
  }

  Ctrl& label(std::uint32_t depth) {
    if (depth >= ctrls_.size()) fail("branch depth out of range");
    return ctrls_[ctrls_.size() - 1 - depth];
  }

  // Resolves a branch target; forward targets get a fixup patched at `end`.
  ir::BrTarget resolve(std::uint32_t depth, Fixup site) {
    auto& c = label(depth);
    ir::BrTarget t;
    t.height = fn_.num_locals + static_cast<std::uint32_t>(c.height);
    t.arity = static_cast<std::uint32_t>(label_types(c).size());
    if (c.kind == Kind::Loop) {
      t.pc = c.loop_pc;
    } else {
      c.fixups.push_back(site);
    }
    return t;
  }

  static std::uint64_t pack(const ir::BrTarget& t) {
    return std::uint64_t{t.height} | (std::uint64_t{t.arity} << 32);
  }

  void patch(const Ctrl& c, std::uint32_t target) {
    for (const auto& f : c.fixups) {
      if (f.table_entry) {
        fn_.br_targets[f.index].pc = target;
      } else {
        fn_.code[f.index].a = target;
      }
    }
  }

  std::pair<std::vector<ValType>, std::vector<ValType>> block_type() {
    // 0x40 empty, a value type byte, or a non-negative s33 type index.
    auto first = r_.u8();
    if (first == 0x40) return {{}, {}};
    if (first == 0x7F || first == 0x7E || first == 0x7D || first == 0x7C) {
      return {{}, {static_cast<ValType>(first)}};
    }
    std::int64_t result = first & 0x7f;
    int shift = 7;
    std::uint8_t byte = first;
    while (byte & 0x80) {
      if (shift > 35) fail("block type index too long");
      byte = r_.u8();
      result |= static_cast<std::int64_t>(std::uint64_t{byte & 0x7fu} << shift);
      shift += 7;
    }
    if (byte & 0x40) fail("invalid block type");
    if (result < 0 || static_cast<std::uint64_t>(result) >= module_.types.size()) {
      fail("block type index out of range");
    }
    const auto& t = module_.types[static_cast<std::size_t>(result)];
    return {t.params, t.results};
  }

  void memarg(const MemAccess& acc, std::uint32_t& offset) {
    if (!module_.memory_pages) fail("memory instruction without a memory");
    auto align = r_.u32();
    if (align > acc.natural_align) fail("alignment exceeds natural alignment");
    offset = r_.u32();
  }

  void require_memory() {
    if (!module_.memory_pages) fail("memory instruction without a memory");
  }

  void step() {
    auto opc = r_.u8();

    if (auto sig = numeric_sig(opc)) {
      if (sig->in2 != ValType::Unknown) pop(sig->in2);
      pop(sig->in1);
      push(sig->out);
      emit(opc);
      return;
    }
    if (auto acc = memory_access(opc)) {
      std::uint32_t offset = 0;
      memarg(*acc, offset);
      if (acc->store) {
        pop(acc->type);
        pop(ValType::I32);
      } else {
        pop(ValType::I32);
        push(acc->type);
      }
      emit(opc, offset);
      return;
    }

    switch (opc) {
      case 0x00:  // unreachable
        emit(ir::op::kUnreachable);
        set_unreachable();
        return;
      case 0x01:
        emit(ir::op::kNop);
        return;
      case 0x02:
      case 0x03: {
        auto [params, results] = block_type();
        pop_vals(params);
        push_ctrl(opc == 0x02 ? Kind::Block : Kind::Loop, params, results);
        return;
      }
      case 0x04: {
        auto [params, results] = block_type();
        pop(ValType::I32);
        pop_vals(params);
        push_ctrl(Kind::If, params, results);
        ctrls_.back().if_op = emit(ir::op::kIf);
        return;
      }
      case 0x05: {
        auto& c = ctrls_.back();
        if (c.kind != Kind::If) fail("`else` without matching `if`");
        pop_vals(c.results);
        if (vals_.size() != c.height) fail("values remain on the stack at `else`");
        auto jump = emit(ir::op::kJump);
        c.fixups.push_back({false, jump});
        fn_.code[static_cast<std::size_t>(c.if_op)].a = pc();
        c.if_op = -1;
        c.kind = Kind::Else;
        c.unreachable = false;
        push_vals(c.params);
        return;
      }
      case 0x0B: {
        bool is_function = ctrls_.back().kind == Kind::Function;
        if (ctrls_.back().kind == Kind::If && ctrls_.back().params != ctrls_.back().results) {
          fail("`if` without `else` must have matching parameter and result types");
        }
        auto c = pop_ctrl();
        if (c.if_op >= 0) fn_.code[static_cast<std::size_t>(c.if_op)].a = pc();
        patch(c, pc());
        if (is_function) {
          emit(ir::op::kFuncEnd);
        } else {
          push_vals(c.results);
        }
        return;
      }
      case 0x0C: {
        auto depth = r_.u32();
        auto idx = pc();
        auto t = resolve(depth, {false, idx});
        emit(ir::op::kBr, t.pc, pack(t));
        pop_vals(label_types(label(depth)));
        set_unreachable();
        return;
      }
      case 0x0D: {
        auto depth = r_.u32();
        pop(ValType::I32);
        auto idx = pc();
        auto t = resolve(depth, {false, idx});
        emit(ir::op::kBrIf, t.pc, pack(t));
        const auto& types = label_types(label(depth));
        pop_vals(types);
        push_vals(types);
        return;
      }
      case 0x0E: {
        auto n = r_.u32();
        if (n > 1u << 20) fail("br_table too large");
        std::vector<std::uint32_t> depths(n + 1);
        for (auto& d : depths) d = r_.u32();
        pop(ValType::I32);
        auto first = static_cast<std::uint32_t>(fn_.br_targets.size());
        auto arity = label_types(label(depths.back())).size();
        for (auto d : depths) {
          const auto& types = label_types(label(d));
          if (types.size() != arity) fail("br_table targets differ in arity");
          // Every target must accept the operands; check without consuming.
          std::vector<ValType> popped;
          for (auto it = types.rbegin(); it != types.rend(); ++it) popped.push_back(pop(*it));
          for (auto it = popped.rbegin(); it != popped.rend(); ++it) push(*it);
          auto entry = static_cast<std::uint32_t>(fn_.br_targets.size());
          fn_.br_targets.push_back({});
          fn_.br_targets[entry] = resolve(d, {true, entry});
        }
        emit(ir::op::kBrTable, first, n + 1);
        pop_vals(label_types(label(depths.back())));
        set_unreachable();
        return;
      }
      case 0x0F: {
        auto& fc = ctrls_.front();
        emit(ir::op::kReturn);
        pop_vals(fc.results);
        set_unreachable();
        return;
      }
      case 0x10: {
        auto idx = r_.u32();
        if (idx >= module_.func_types.size()) fail("call to unknown function");
        const auto& t = module_.types[module_.func_types[idx]];
        pop_vals(t.params);
        push_vals(t.results);
        if (idx < module_.imports.size()) {
          emit(ir::op::kCallHost, idx);
        } else {
          emit(ir::op::kCall, static_cast<std::uint32_t>(idx - module_.imports.size()));
        }
        return;
      }
      case 0x11: {
        auto type_idx = r_.u32();
        auto table = r_.u32();
        if (table != 0 || !module_.table_min) fail("call_indirect without table 0");
        if (type_idx >= module_.types.size()) fail("call_indirect type out of range");
        pop(ValType::I32);
        const auto& t = module_.types[type_idx];
        pop_vals(t.params);
        push_vals(t.results);
        emit(ir::op::kCallIndirect, module_.canonical_type[type_idx], type_idx);
        return;
      }
      case 0x1A:
        pop();
        emit(ir::op::kDrop);
        return;
      case 0x1B:
      case 0x1C: {
        if (opc == 0x1C) {
          auto n = r_.u32();
          if (n != 1) fail("typed select must name exactly one type");
          auto t = read_valtype(r_);
          pop(ValType::I32);
          pop(t);
          pop(t);
          push(t);
        } else {
          pop(ValType::I32);
          auto t1 = pop();
          auto t2 = pop();
          if (t1 != ValType::Unknown && t2 != ValType::Unknown && t1 != t2) fail("select operand mismatch");
          push(t1 == ValType::Unknown ? t2 : t1);
        }
        emit(ir::op::kSelect);
        return;
      }
      case 0x20:
      case 0x21:
      case 0x22: {
        auto idx = r_.u32();
        if (idx >= locals_.size()) fail("local index out of range");
        auto t = locals_[idx];
        if (opc == 0x20) {
          push(t);
        } else if (opc == 0x21) {
          pop(t);
        } else {
          pop(t);
          push(t);
        }
        emit(opc, idx);
        return;
      }
      case 0x23:
      case 0x24: {
        auto idx = r_.u32();
        if (idx >= module_.globals.size()) fail("global index out of range");
        const auto& g = module_.globals[idx];
        if (opc == 0x23) {
          push(g.type);
        } else {
          if (!g.mutable_) fail("global.set on immutable global");
          pop(g.type);
        }
        emit(opc, idx);
        return;
      }
      case 0x3F:
        require_memory();
        if (r_.u8() != 0) fail("memory.size reserved byte must be zero");
        push(ValType::I32);
        emit(ir::op::kMemorySize);
        return;
      case 0x40:
        require_memory();
        if (r_.u8() != 0) fail("memory.grow reserved byte must be zero");
        pop(ValType::I32);
        push(ValType::I32);
        emit(ir::op::kMemoryGrow);
        return;
      case 0x41:
        push(ValType::I32);
        emit(ir::op::kI32Const, 0, static_cast<std::uint32_t>(static_cast<std::int32_t>(r_.sleb(32))));
        return;
      case 0x42:
        push(ValType::I64);
        emit(ir::op::kI64Const, 0, static_cast<std::uint64_t>(r_.sleb(64)));
        return;
      case 0x43:
        push(ValType::F32);
        emit(ir::op::kF32Const, 0, r_.fixed<std::uint32_t>());
        return;
      case 0x44:
        push(ValType::F64);
        emit(ir::op::kF64Const, 0, r_.fixed<std::uint64_t>());
        return;
      case 0xFC: {
        auto sub = r_.u32();
        if (sub <= 7) {
          static constexpr ValType in[8] = {ValType::F32, ValType::F32, ValType::F64, ValType::F64,
                                            ValType::F32, ValType::F32, ValType::F64, ValType::F64};
          pop(in[sub]);
          push(sub < 4 ? ValType::I32 : ValType::I64);
          emit(static_cast<std::uint16_t>(ir::op::kPrefixFC + sub));
          return;
        }
        if (sub == 10) {
          require_memory();
          if (r_.u8() != 0 || r_.u8() != 0) fail("memory.copy reserved bytes must be zero");
          pop(ValType::I32);
          pop(ValType::I32);
          pop(ValType::I32);
          emit(ir::op::kMemoryCopy);
          return;
        }
        if (sub == 11) {
          require_memory();
          if (r_.u8() != 0) fail("memory.fill reserved byte must be zero");
          pop(ValType::I32);
          pop(ValType::I32);
          pop(ValType::I32);
          emit(ir::op::kMemoryFill);
          return;
        }
        fail("unsupported 0xFC instruction " + std::to_string(sub));
      }
      default:
        fail("unsupported or invalid opcode 0x" + [&] {
          char buf[8];
          std::snprintf(buf, sizeof buf, "%02X", opc);
          return std::string(buf);
        }());
    }
  }

  const ir::Module& module_;
  ir::Function& fn_;
  Reader& r_;
  std::size_t end_;
  std::vector<ValType> locals_;
  std::vector<ValType> vals_;
  std::vector<Ctrl> ctrls_;
};

// Constant initializer: one constant or global.get, then `end`.
std::pair<ValType, std::uint64_t> const_expr(Reader& r, const ir::Module& m) {
  auto opc = r.u8();
  std::pair<ValType, std::uint64_t> v;
  switch (opc) {
    case 0x41: v = {ValType::I32, static_cast<std::uint32_t>(static_cast<std::int32_t>(r.sleb(32)))}; break;
    case 0x42: v = {ValType::I64, static_cast<std::uint64_t>(r.sleb(64))}; break;
    case 0x43: v = {ValType::F32, r.fixed<std::uint32_t>()}; break;
    case 0x44: v = {ValType::F64, r.fixed<std::uint64_t>()}; break;
    case 0x23: {
      auto idx = r.u32();
      if (idx >= m.globals.size()) fail("constant expression references unknown global");
      if (m.globals[idx].mutable_) fail("constant expression references mutable global");
      v = {m.globals[idx].type, m.globals[idx].init};
      break;
    }
    default: fail("unsupported constant expression opcode");
  }
  if (r.u8() != 0x0B) fail("constant expression must end with `end`");
  return v;
}

std::uint32_t i32_offset(Reader& r, const ir::Module& m) {
  auto [t, v] = const_expr(r, m);
  if (t != ValType::I32) fail("segment offset must be i32");
  return static_cast<std::uint32_t>(v);
}

int section_rank(std::uint8_t id) {
  // Data count (12) sits between element (9) and code (10).
  switch (id) {
    case 12: return 10;
    case 10: return 11;
    case 11: return 12;
    default: return id;
  }
}

}  // namespace

std::shared_ptr<const ir::Module> decode_wasm(std::span<const std::byte> bytes) {
  Reader r(bytes);
  static constexpr std::uint8_t kMagic[8] = {0x00, 0x61, 0x73, 0x6D, 0x01, 0x00, 0x00, 0x00};
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    fail("missing WebAssembly magic/version header");
  }
  r.bytes(8);

  auto m = std::make_shared<ir::Module>();
  std::vector<std::uint32_t> declared_funcs;
  std::optional<std::uint32_t> data_count;
  bool saw_code = false;
  int last_rank = 0;

  while (!r.eof()) {
    auto id = r.u8();
    auto size = r.u32();
    if (size > r.size() - r.pos()) fail("section size exceeds module");
    std::size_t end = r.pos() + size;
    if (id != 0) {
      if (id > 12) fail("unknown section id " + std::to_string(id));
      int rank = section_rank(id);
      if (rank <= last_rank) fail("section " + std::to_string(id) + " out of order or duplicated");
      last_rank = rank;
    }
    switch (id) {
      case 0:
        r.name();
        break;
      case 1: {
        auto n = r.u32();
        for (std::uint32_t i = 0; i < n; ++i) {
          if (r.u8() != 0x60) fail("function type must start with 0x60");
          ir::FuncType t;
          auto np = r.u32();
          for (std::uint32_t j = 0; j < np; ++j) t.params.push_back(read_valtype(r));
          auto nr = r.u32();
          for (std::uint32_t j = 0; j < nr; ++j) t.results.push_back(read_valtype(r));
          m->types.push_back(std::move(t));
        }
        m->canonical_type.resize(m->types.size());
        for (std::size_t i = 0; i < m->types.size(); ++i) {
          std::size_t c = i;
          for (std::size_t j = 0; j < i; ++j) {
            if (m->types[j] == m->types[i]) {
              c = j;
              break;
            }
          }
          m->canonical_type[i] = static_cast<std::uint32_t>(c);
        }
        break;
      }
      case 2: {
        auto n = r.u32();
        for (std::uint32_t i = 0; i < n; ++i) {
          ir::Import imp;
          imp.module = r.name();
          imp.name = r.name();
          auto kind = r.u8();
          if (kind != 0) {
            throw UnsupportedImport("import " + imp.module + "." + imp.name +
                                    " is not a function; only function imports are supported");
          }
          imp.type_index = r.u32();
          if (imp.type_index >= m->types.size()) fail("import type index out of range");
          m->func_types.push_back(imp.type_index);
          m->imports.push_back(std::move(imp));
        }
        break;
      }
      case 3: {
        auto n = r.u32();
        for (std::uint32_t i = 0; i < n; ++i) {
          auto t = r.u32();
          if (t >= m->types.size()) fail("function type index out of range");
          declared_funcs.push_back(t);
          m->func_types.push_back(t);
        }
        break;
      }
      case 4: {
        auto n = r.u32();
        if (n > 1) fail("at most one table is supported");
        if (n == 1) {
          auto elem = r.u8();
          if (elem != 0x70) fail("only funcref tables are supported");
          auto lim = read_limits(r);
          if (lim.min > kMaxTableSize) fail("table too large");
          m->table_min = lim.min;
        }
        break;
      }
      case 5: {
        auto n = r.u32();
        if (n > 1) fail("at most one memory is supported");
        if (n == 1) {
          auto lim = read_limits(r);
          if (lim.min > kMaxPages) fail("memory of " + std::to_string(lim.min) + " pages exceeds limit");
          m->memory_pages = lim.min;
        }
        break;
      }
      case 6: {
        auto n = r.u32();
        for (std::uint32_t i = 0; i < n; ++i) {
          ir::Global g;
          g.type = read_valtype(r);
          auto mut = r.u8();
          if (mut > 1) fail("invalid global mutability flag");
          g.mutable_ = mut == 1;
          auto [t, v] = const_expr(r, *m);
          if (t != g.type) fail("global initializer type mismatch");
          g.init = v;
          m->globals.push_back(g);
        }
        break;
      }
      case 7: {
        auto n = r.u32();
        std::set<std::string> names;
        for (std::uint32_t i = 0; i < n; ++i) {
          ir::Export e;
          e.name = r.name();
          auto kind = r.u8();
          if (kind > 3) fail("invalid export kind");
          e.kind = static_cast<ir::ExternKind>(kind);
          e.index = r.u32();
          if (!names.insert(e.name).second) fail("duplicate export name " + e.name);
          switch (e.kind) {
            case ir::ExternKind::Func:
              if (e.index >= m->func_types.size()) fail("export of unknown function");
              break;
            case ir::ExternKind::Table:
              if (e.index != 0 || !m->table_min) fail("export of unknown table");
              break;
            case ir::ExternKind::Memory:
              if (e.index != 0 || !m->memory_pages) fail("export of unknown memory");
              break;
            case ir::ExternKind::Global:
              if (e.index >= m->globals.size()) fail("export of unknown global");
              break;
          }
          m->exports.push_back(std::move(e));
        }
        break;
      }
      case 8: {
        auto idx = r.u32();
        if (idx >= m->func_types.size()) fail("start function out of range");
        const auto& t = m->types[m->func_types[idx]];
        if (!t.params.empty() || !t.results.empty()) fail("start function must have type [] -> []");
        m->start = idx;
        break;
      }
      case 9: {
        auto n = r.u32();
        for (std::uint32_t i = 0; i < n; ++i) {
          auto flag = r.u32();
          ir::ElemSegment seg;
          bool active = true;
          if (flag == 0) {
            seg.offset = i32_offset(r, *m);
          } else if (flag == 2) {
            if (r.u32() != 0) fail("element segment targets unknown table");
            seg.offset = i32_offset(r, *m);
            if (r.u8() != 0x00) fail("unsupported element kind");
          } else if (flag == 1 || flag == 3) {
            if (r.u8() != 0x00) fail("unsupported element kind");
            active = false;
          } else {
            fail("unsupported element segment encoding " + std::to_string(flag));
          }
          auto count = r.u32();
          for (std::uint32_t j = 0; j < count; ++j) {
            auto f = r.u32();
            if (f >= m->func_types.size()) fail("element references unknown function");
            seg.functions.push_back(f);
          }
          if (active) {
            if (!m->table_min) fail("active element segment without a table");
            if (std::uint64_t{seg.offset} + seg.functions.size() > *m->table_min) {
              fail("element segment does not fit the table");
            }
            m->elements.push_back(std::move(seg));
          }
        }
        break;
      }
      case 12:
        data_count = r.u32();
        break;
      case 10: {
        saw_code = true;
        auto n = r.u32();
        if (n != declared_funcs.size()) fail("function and code section counts differ");
        m->functions.resize(n);
        for (std::uint32_t i = 0; i < n; ++i) {
          auto body_size = r.u32();
          if (body_size > r.size() - r.pos()) fail("function body exceeds section");
          std::size_t body_end = r.pos() + body_size;
          auto& fn = m->functions[i];
          fn.type_index = declared_funcs[i];
          FunctionCompiler(*m, fn, r, body_end).compile();
        }
        break;
      }
      case 11: {
        auto n = r.u32();
        if (data_count && *data_count != n) fail("data count section disagrees with data section");
        for (std::uint32_t i = 0; i < n; ++i) {
          auto flag = r.u32();
          ir::DataSegment seg;
          if (flag == 0) {
            seg.offset = i32_offset(r, *m);
          } else if (flag == 2) {
            if (r.u32() != 0) fail("data segment targets unknown memory");
            seg.offset = i32_offset(r, *m);
          } else if (flag == 1) {
            fail("passive data segments are not supported");
          } else {
            fail("invalid data segment flag");
          }
          if (!m->memory_pages) fail("data segment without a memory");
          auto len = r.u32();
          auto raw = r.bytes(len);
          seg.bytes.resize(len);
          std::memcpy(seg.bytes.data(), raw.data(), len);
          if (std::uint64_t{seg.offset} + len > std::uint64_t{*m->memory_pages} * 65536) {
            fail("data segment does not fit the memory");
          }
          m->data.push_back(std::move(seg));
        }
        break;
      }
      default:
        break;
    }
    if (r.pos() != end) fail("section " + std::to_string(id) + " size mismatch");
  }
  if (!saw_code && !declared_funcs.empty()) fail("function section without code section");
  return m;
}

}  // namespace procwasm::guest
