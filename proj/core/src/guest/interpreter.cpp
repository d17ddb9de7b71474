#include "guest/interpreter.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

namespace procwasm::guest {

namespace {

[[noreturn]] void trap(const char* reason) { throw Trap(reason); }

inline std::uint32_t u32(std::uint64_t v) { return static_cast<std::uint32_t>(v); }
inline std::int32_t s32(std::uint64_t v) { return static_cast<std::int32_t>(static_cast<std::uint32_t>(v)); }
inline std::int64_t s64(std::uint64_t v) { return static_cast<std::int64_t>(v); }
inline float f32(std::uint64_t v) { return std::bit_cast<float>(static_cast<std::uint32_t>(v)); }
inline double f64(std::uint64_t v) { return std::bit_cast<double>(v); }
inline std::uint64_t of_u32(std::uint32_t v) { return v; }
inline std::uint64_t of_s32(std::int32_t v) { return static_cast<std::uint32_t>(v); }
inline std::uint64_t of_s64(std::int64_t v) { return static_cast<std::uint64_t>(v); }
inline std::uint64_t of_f32(float v) { return std::bit_cast<std::uint32_t>(v); }
inline std::uint64_t of_f64(double v) { return std::bit_cast<std::uint64_t>(v); }
inline std::uint64_t of_bool(bool b) { return b ? 1 : 0; }

template <typename F>
F wasm_min(F a, F b) {
  if (std::isnan(a) || std::isnan(b)) return std::numeric_limits<F>::quiet_NaN();
  if (a == b) return std::signbit(a) ? a : b;
  return a < b ? a : b;
}

template <typename F>
F wasm_max(F a, F b) {
  if (std::isnan(a) || std::isnan(b)) return std::numeric_limits<F>::quiet_NaN();
  if (a == b) return std::signbit(a) ? b : a;
  return a > b ? a : b;
}

// Float-to-int conversions. Sources are widened to double, which is exact
// for f32, so one bounds check per target serves both widths.
template <typename I>
I trunc_checked(double x, double lower_exclusive, double upper_exclusive) {
  if (std::isnan(x)) trap("invalid conversion to integer");
  if (!(x > lower_exclusive && x < upper_exclusive)) trap("integer overflow");
  return static_cast<I>(x);
}

inline std::int32_t trunc_i32_s(double x) { return trunc_checked<std::int32_t>(x, -2147483649.0, 2147483648.0); }
inline std::uint32_t trunc_i32_u(double x) { return trunc_checked<std::uint32_t>(x, -1.0, 4294967296.0); }
inline std::int64_t trunc_i64_s(double x) {
  if (std::isnan(x)) trap("invalid conversion to integer");
  if (!(x >= -9223372036854775808.0 && x < 9223372036854775808.0)) trap("integer overflow");
  return static_cast<std::int64_t>(x);
}
inline std::uint64_t trunc_i64_u(double x) { return trunc_checked<std::uint64_t>(x, -1.0, 18446744073709551616.0); }

template <typename I>
I trunc_sat(double x) {
  if (std::isnan(x)) return 0;
  constexpr double lo = static_cast<double>(std::numeric_limits<I>::min());
  // 2^bits (unsigned) or 2^(bits-1) (signed): exactly representable.
  constexpr double hi = static_cast<double>(std::numeric_limits<I>::max()) + 1.0;
  if (x <= lo) return std::numeric_limits<I>::min();
  if (x >= hi) return std::numeric_limits<I>::max();
  return static_cast<I>(x);
}

}  // namespace

Interpreter::Interpreter(const ir::Module& module, LinearMemory& memory)
    : module_(module), memory_(memory), stack_(new std::uint64_t[kStackSlots]) {
  globals_.reserve(module.globals.size());
  for (const auto& g : module.globals) globals_.push_back(g.init);
  if (module.table_min) {
    table_.assign(*module.table_min, kNullElement);
    for (const auto& seg : module.elements) {
      for (std::size_t i = 0; i < seg.functions.size(); ++i) table_[seg.offset + i] = seg.functions[i];
    }
  }
  frames_.reserve(256);
}

std::vector<std::uint64_t> Interpreter::invoke(std::uint32_t func_index, std::span<const std::uint64_t> args) {
  const auto& type = module_.types.at(module_.func_types.at(func_index));
  if (args.size() != type.params.size()) throw std::invalid_argument("invoke: argument count mismatch");
  const auto nimports = static_cast<std::uint32_t>(module_.imports.size());
  if (func_index < nimports) {
    if (!host_) trap("host function unavailable");
    auto r = host_(func_index, args);
    if (type.results.empty()) return {};
    return {r};
  }
  std::uint64_t* fp = stack_.get();
  std::copy(args.begin(), args.end(), fp);
  frames_.clear();
  execute(func_index - nimports, fp);
  return {fp, fp + type.results.size()};
}

void Interpreter::execute(std::uint32_t defined_index, std::uint64_t* fp) {
  const std::size_t base_depth = frames_.size();
  std::uint64_t* const stack_end = stack_.get() + kStackSlots;
  const auto nimports = static_cast<std::uint32_t>(module_.imports.size());

  std::uint32_t cur = defined_index;
  const ir::Function* fn = &module_.functions[cur];
  if (fp + fn->num_locals + fn->max_height > stack_end) trap("call stack exhausted");
  const ir::Op* code = fn->code.data();
  const ir::Op* pc = code;
  std::fill(fp + fn->num_params, fp + fn->num_locals, 0);
  std::uint64_t* sp = fp + fn->num_locals;

  std::uint8_t* const mem = memory_.data();
  const std::uint64_t msize = memory_.size();
  ExecCounters& c = counters_;

#define POP() (*--sp)
#define TOP() (sp[-1])
#define PUSH(v) (*sp++ = (v))
#define BRANCH(target, packed)                                           \
  do {                                                                   \
    std::uint64_t* dst_ = fp + static_cast<std::uint32_t>(packed);       \
    const auto arity_ = static_cast<std::uint32_t>((packed) >> 32);      \
    if (arity_ != 0) std::memmove(dst_, sp - arity_, arity_ * 8u);       \
    sp = dst_ + arity_;                                                  \
    pc = code + (target);                                                \
  } while (0)
#define ADDR(size)                                                        \
  (([&]() -> std::uint64_t {                                             \
    std::uint64_t ea_ = std::uint64_t{u32(POP())} + op.a;                \
    if (ea_ + (size) > msize) trap("out of bounds memory access");       \
    return ea_;                                                          \
  })())
#define LOAD(T, conv)                                                    \
  {                                                                      \
    ++c.loads;                                                           \
    std::uint64_t ea_ = ADDR(sizeof(T));                                 \
    T v_;                                                                \
    std::memcpy(&v_, mem + ea_, sizeof(T));                              \
    PUSH(conv(v_));                                                      \
    break;                                                               \
  }
#define STORE(T, conv)                                                   \
  {                                                                      \
    ++c.stores;                                                          \
    std::uint64_t val_ = POP();                                          \
    std::uint64_t ea_ = ADDR(sizeof(T));                                 \
    T v_ = conv(val_);                                                   \
    std::memcpy(mem + ea_, &v_, sizeof(T));                              \
    break;                                                               \
  }
#define UN(get, put, expr)                                               \
  {                                                                      \
    auto a = get(TOP());                                                 \
    TOP() = put(expr);                                                   \
    break;                                                               \
  }
#define BIN(get, put, expr)                                              \
  {                                                                      \
    auto b = get(POP());                                                 \
    auto a = get(TOP());                                                 \
    TOP() = put(expr);                                                   \
    break;                                                               \
  }

  for (;;) {
    const ir::Op& op = *pc++;
    ++c.instructions;
    switch (op.code) {
      case ir::op::kUnreachable: trap("unreachable executed");
      case ir::op::kNop: break;

      case ir::op::kIf:
        ++c.branches;
        ++c.conditional_branches;
        if (u32(POP()) == 0) pc = code + op.a;
        break;
      case ir::op::kJump:
        --c.instructions;
        pc = code + op.a;
        break;
      case ir::op::kBr:
        ++c.branches;
        BRANCH(op.a, op.b);
        break;
      case ir::op::kBrIf:
        ++c.branches;
        ++c.conditional_branches;
        if (u32(POP()) != 0) BRANCH(op.a, op.b);
        break;
      case ir::op::kBrTable: {
        ++c.branches;
        std::uint32_t idx = u32(POP());
        if (idx >= op.b - 1) idx = static_cast<std::uint32_t>(op.b - 1);
        const ir::BrTarget& t = fn->br_targets[op.a + idx];
        BRANCH(t.pc, std::uint64_t{t.height} | (std::uint64_t{t.arity} << 32));
        break;
      }
      case ir::op::kFuncEnd:
        --c.instructions;
        [[fallthrough]];
      case ir::op::kReturn: {
        if (op.code == ir::op::kReturn) ++c.branches;
        const std::uint32_t n = fn->num_results;
        if (n != 0) std::memmove(fp, sp - n, n * 8u);
        sp = fp + n;
        if (frames_.size() == base_depth) return;
        Frame f = frames_.back();
        frames_.pop_back();
        cur = f.func;
        fn = &module_.functions[cur];
        code = fn->code.data();
        pc = code + f.ret_pc;
        fp = f.fp;
        break;
      }
      case ir::op::kCallIndirect: {
        ++c.branches;
        std::uint32_t idx = u32(POP());
        if (idx >= table_.size()) trap("undefined element");
        std::uint32_t target = table_[idx];
        if (target == kNullElement) trap("uninitialized element");
        if (module_.canonical_type[module_.func_types[target]] != op.a) trap("indirect call type mismatch");
        if (target < nimports) {
          const auto& t = module_.types[module_.func_types[target]];
          const auto n = t.params.size();
          if (!host_) trap("host function unavailable");
          std::uint64_t r = host_(target, std::span<const std::uint64_t>(sp - n, n));
          sp -= n;
          if (!t.results.empty()) PUSH(r);
          break;
        }
        const ir::Function* callee = &module_.functions[target - nimports];
        std::uint64_t* nfp = sp - callee->num_params;
        if (nfp + callee->num_locals + callee->max_height > stack_end || frames_.size() >= kMaxFrames) {
          trap("call stack exhausted");
        }
        frames_.push_back({cur, static_cast<std::uint32_t>(pc - code), fp});
        cur = target - nimports;
        fn = callee;
        code = fn->code.data();
        pc = code;
        fp = nfp;
        std::fill(fp + fn->num_params, fp + fn->num_locals, 0);
        sp = fp + fn->num_locals;
        break;
      }
      case ir::op::kCall: {
        ++c.branches;
        const ir::Function* callee = &module_.functions[op.a];
        std::uint64_t* nfp = sp - callee->num_params;
        if (nfp + callee->num_locals + callee->max_height > stack_end || frames_.size() >= kMaxFrames) {
          trap("call stack exhausted");
        }
        frames_.push_back({cur, static_cast<std::uint32_t>(pc - code), fp});
        cur = op.a;
        fn = callee;
        code = fn->code.data();
        pc = code;
        fp = nfp;
        std::fill(fp + fn->num_params, fp + fn->num_locals, 0);
        sp = fp + fn->num_locals;
        break;
      }
      case ir::op::kCallHost: {
        ++c.branches;
        const auto& t = module_.types[module_.func_types[op.a]];
        const auto n = t.params.size();
        if (!host_) trap("host function unavailable");
        std::uint64_t r = host_(op.a, std::span<const std::uint64_t>(sp - n, n));
        sp -= n;
        if (!t.results.empty()) PUSH(r);
        break;
      }

      case ir::op::kDrop: --sp; break;
      case ir::op::kSelect: {
        std::uint32_t cond = u32(POP());
        std::uint64_t b = POP();
        if (cond == 0) TOP() = b;
        break;
      }
      case ir::op::kLocalGet: PUSH(fp[op.a]); break;
      case ir::op::kLocalSet: fp[op.a] = POP(); break;
      case ir::op::kLocalTee: fp[op.a] = TOP(); break;
      case ir::op::kGlobalGet: PUSH(globals_[op.a]); break;
      case ir::op::kGlobalSet: globals_[op.a] = POP(); break;

      case 0x28: LOAD(std::uint32_t, of_u32)
      case 0x29: LOAD(std::uint64_t, std::uint64_t)
      case 0x2A: LOAD(std::uint32_t, of_u32)
      case 0x2B: LOAD(std::uint64_t, std::uint64_t)
      case 0x2C: LOAD(std::int8_t, of_s32)
      case 0x2D: LOAD(std::uint8_t, of_u32)
      case 0x2E: LOAD(std::int16_t, of_s32)
      case 0x2F: LOAD(std::uint16_t, of_u32)
      case 0x30: LOAD(std::int8_t, of_s64)
      case 0x31: LOAD(std::uint8_t, std::uint64_t)
      case 0x32: LOAD(std::int16_t, of_s64)
      case 0x33: LOAD(std::uint16_t, std::uint64_t)
      case 0x34: LOAD(std::int32_t, of_s64)
      case 0x35: LOAD(std::uint32_t, std::uint64_t)
      case 0x36: STORE(std::uint32_t, static_cast<std::uint32_t>)
      case 0x37: STORE(std::uint64_t, static_cast<std::uint64_t>)
      case 0x38: STORE(std::uint32_t, static_cast<std::uint32_t>)
      case 0x39: STORE(std::uint64_t, static_cast<std::uint64_t>)
      case 0x3A: STORE(std::uint8_t, static_cast<std::uint8_t>)
      case 0x3B: STORE(std::uint16_t, static_cast<std::uint16_t>)
      case 0x3C: STORE(std::uint8_t, static_cast<std::uint8_t>)
      case 0x3D: STORE(std::uint16_t, static_cast<std::uint16_t>)
      case 0x3E: STORE(std::uint32_t, static_cast<std::uint32_t>)

      case ir::op::kMemorySize: PUSH(of_u32(static_cast<std::uint32_t>(msize / 65536))); break;
      case ir::op::kMemoryGrow:
        // Memory is fixed at instantiation; only a zero-page grow succeeds.
        TOP() = u32(TOP()) == 0 ? of_u32(static_cast<std::uint32_t>(msize / 65536)) : of_u32(0xFFFFFFFFu);
        break;

      case ir::op::kI32Const:
      case ir::op::kI64Const:
      case ir::op::kF32Const:
      case ir::op::kF64Const: PUSH(op.b); break;

      // i32 comparisons
      case 0x45: UN(u32, of_bool, a == 0)
      case 0x46: BIN(u32, of_bool, a == b)
      case 0x47: BIN(u32, of_bool, a != b)
      case 0x48: BIN(s32, of_bool, a < b)
      case 0x49: BIN(u32, of_bool, a < b)
      case 0x4A: BIN(s32, of_bool, a > b)
      case 0x4B: BIN(u32, of_bool, a > b)
      case 0x4C: BIN(s32, of_bool, a <= b)
      case 0x4D: BIN(u32, of_bool, a <= b)
      case 0x4E: BIN(s32, of_bool, a >= b)
      case 0x4F: BIN(u32, of_bool, a >= b)
      // i64 comparisons
      case 0x50: UN(std::uint64_t, of_bool, a == 0)
      case 0x51: BIN(std::uint64_t, of_bool, a == b)
      case 0x52: BIN(std::uint64_t, of_bool, a != b)
      case 0x53: BIN(s64, of_bool, a < b)
      case 0x54: BIN(std::uint64_t, of_bool, a < b)
      case 0x55: BIN(s64, of_bool, a > b)
      case 0x56: BIN(std::uint64_t, of_bool, a > b)
      case 0x57: BIN(s64, of_bool, a <= b)
      case 0x58: BIN(std::uint64_t, of_bool, a <= b)
      case 0x59: BIN(s64, of_bool, a >= b)
      case 0x5A: BIN(std::uint64_t, of_bool, a >= b)
      // f32 comparisons
      case 0x5B: BIN(f32, of_bool, a == b)
      case 0x5C: BIN(f32, of_bool, a != b)
      case 0x5D: BIN(f32, of_bool, a < b)
      case 0x5E: BIN(f32, of_bool, a > b)
      case 0x5F: BIN(f32, of_bool, a <= b)
      case 0x60: BIN(f32, of_bool, a >= b)
      // f64 comparisons
      case 0x61: BIN(f64, of_bool, a == b)
      case 0x62: BIN(f64, of_bool, a != b)
      case 0x63: BIN(f64, of_bool, a < b)
      case 0x64: BIN(f64, of_bool, a > b)
      case 0x65: BIN(f64, of_bool, a <= b)
      case 0x66: BIN(f64, of_bool, a >= b)

      // i32 arithmetic
      case 0x67: UN(u32, of_u32, static_cast<std::uint32_t>(std::countl_zero(a)))
      case 0x68: UN(u32, of_u32, static_cast<std::uint32_t>(std::countr_zero(a)))
      case 0x69: UN(u32, of_u32, static_cast<std::uint32_t>(std::popcount(a)))
      case 0x6A: BIN(u32, of_u32, a + b)
      case 0x6B: BIN(u32, of_u32, a - b)
      case 0x6C: BIN(u32, of_u32, a * b)
      case 0x6D: {
        auto b = s32(POP());
        auto a = s32(TOP());
        if (b == 0) trap("integer divide by zero");
        if (a == std::numeric_limits<std::int32_t>::min() && b == -1) trap("integer overflow");
        TOP() = of_s32(a / b);
        break;
      }
      case 0x6E: {
        auto b = u32(POP());
        auto a = u32(TOP());
        if (b == 0) trap("integer divide by zero");
        TOP() = of_u32(a / b);
        break;
      }
      case 0x6F: {
        auto b = s32(POP());
        auto a = s32(TOP());
        if (b == 0) trap("integer divide by zero");
        TOP() = (b == -1) ? 0 : of_s32(a % b);
        break;
      }
      case 0x70: {
        auto b = u32(POP());
        auto a = u32(TOP());
        if (b == 0) trap("integer divide by zero");
        TOP() = of_u32(a % b);
        break;
      }
      case 0x71: BIN(u32, of_u32, a & b)
      case 0x72: BIN(u32, of_u32, a | b)
      case 0x73: BIN(u32, of_u32, a ^ b)
      case 0x74: BIN(u32, of_u32, a << (b & 31))
      case 0x75: BIN(s32, of_s32, a >> (b & 31))
      case 0x76: BIN(u32, of_u32, a >> (b & 31))
      case 0x77: BIN(u32, of_u32, std::rotl(a, static_cast<int>(b & 31)))
      case 0x78: BIN(u32, of_u32, std::rotr(a, static_cast<int>(b & 31)))

      // i64 arithmetic
      case 0x79: UN(std::uint64_t, std::uint64_t, static_cast<std::uint64_t>(std::countl_zero(a)))
      case 0x7A: UN(std::uint64_t, std::uint64_t, static_cast<std::uint64_t>(std::countr_zero(a)))
      case 0x7B: UN(std::uint64_t, std::uint64_t, static_cast<std::uint64_t>(std::popcount(a)))
      case 0x7C: BIN(std::uint64_t, std::uint64_t, a + b)
      case 0x7D: BIN(std::uint64_t, std::uint64_t, a - b)
      case 0x7E: BIN(std::uint64_t, std::uint64_t, a * b)
      case 0x7F: {
        auto b = s64(POP());
        auto a = s64(TOP());
        if (b == 0) trap("integer divide by zero");
        if (a == std::numeric_limits<std::int64_t>::min() && b == -1) trap("integer overflow");
        TOP() = of_s64(a / b);
        break;
      }
      case 0x80: {
        auto b = POP();
        auto a = TOP();
        if (b == 0) trap("integer divide by zero");
        TOP() = a / b;
        break;
      }
      case 0x81: {
        auto b = s64(POP());
        auto a = s64(TOP());
        if (b == 0) trap("integer divide by zero");
        TOP() = (b == -1) ? 0 : of_s64(a % b);
        break;
      }
      case 0x82: {
        auto b = POP();
        auto a = TOP();
        if (b == 0) trap("integer divide by zero");
        TOP() = a % b;
        break;
      }
      case 0x83: BIN(std::uint64_t, std::uint64_t, a & b)
      case 0x84: BIN(std::uint64_t, std::uint64_t, a | b)
      case 0x85: BIN(std::uint64_t, std::uint64_t, a ^ b)
      case 0x86: BIN(std::uint64_t, std::uint64_t, a << (b & 63))
      case 0x87: BIN(s64, of_s64, a >> (b & 63))
      case 0x88: BIN(std::uint64_t, std::uint64_t, a >> (b & 63))
      case 0x89: BIN(std::uint64_t, std::uint64_t, std::rotl(a, static_cast<int>(b & 63)))
      case 0x8A: BIN(std::uint64_t, std::uint64_t, std::rotr(a, static_cast<int>(b & 63)))

      // f32 arithmetic
      case 0x8B: TOP() = TOP() & 0x7FFFFFFFu; break;
      case 0x8C: TOP() = (TOP() ^ 0x80000000u) & 0xFFFFFFFFu; break;
      case 0x8D: UN(f32, of_f32, std::ceil(a))
      case 0x8E: UN(f32, of_f32, std::floor(a))
      case 0x8F: UN(f32, of_f32, std::trunc(a))
      case 0x90: UN(f32, of_f32, std::nearbyint(a))
      case 0x91: UN(f32, of_f32, std::sqrt(a))
      case 0x92: BIN(f32, of_f32, a + b)
      case 0x93: BIN(f32, of_f32, a - b)
      case 0x94: BIN(f32, of_f32, a * b)
      case 0x95: BIN(f32, of_f32, a / b)
      case 0x96: BIN(f32, of_f32, wasm_min(a, b))
      case 0x97: BIN(f32, of_f32, wasm_max(a, b))
      case 0x98: BIN(f32, of_f32, std::copysign(a, b))

      // f64 arithmetic
      case 0x99: TOP() = TOP() & 0x7FFFFFFFFFFFFFFFull; break;
      case 0x9A: TOP() = TOP() ^ 0x8000000000000000ull; break;
      case 0x9B: UN(f64, of_f64, std::ceil(a))
      case 0x9C: UN(f64, of_f64, std::floor(a))
      case 0x9D: UN(f64, of_f64, std::trunc(a))
      case 0x9E: UN(f64, of_f64, std::nearbyint(a))
      case 0x9F: UN(f64, of_f64, std::sqrt(a))
      case 0xA0: BIN(f64, of_f64, a + b)
      case 0xA1: BIN(f64, of_f64, a - b)
      case 0xA2: BIN(f64, of_f64, a * b)
      case 0xA3: BIN(f64, of_f64, a / b)
      case 0xA4: BIN(f64, of_f64, wasm_min(a, b))
      case 0xA5: BIN(f64, of_f64, wasm_max(a, b))
      case 0xA6: BIN(f64, of_f64, std::copysign(a, b))

      // conversions
      case 0xA7: TOP() = of_u32(u32(TOP())); break;
      case 0xA8: UN(f32, of_s32, trunc_i32_s(a))
      case 0xA9: UN(f32, of_u32, trunc_i32_u(a))
      case 0xAA: UN(f64, of_s32, trunc_i32_s(a))
      case 0xAB: UN(f64, of_u32, trunc_i32_u(a))
      case 0xAC: UN(s32, of_s64, static_cast<std::int64_t>(a))
      case 0xAD: UN(u32, std::uint64_t, static_cast<std::uint64_t>(a))
      case 0xAE: UN(f32, of_s64, trunc_i64_s(a))
      case 0xAF: UN(f32, std::uint64_t, trunc_i64_u(a))
      case 0xB0: UN(f64, of_s64, trunc_i64_s(a))
      case 0xB1: UN(f64, std::uint64_t, trunc_i64_u(a))
      case 0xB2: UN(s32, of_f32, static_cast<float>(a))
      case 0xB3: UN(u32, of_f32, static_cast<float>(a))
      case 0xB4: UN(s64, of_f32, static_cast<float>(a))
      case 0xB5: UN(std::uint64_t, of_f32, static_cast<float>(a))
      case 0xB6: UN(f64, of_f32, static_cast<float>(a))
      case 0xB7: UN(s32, of_f64, static_cast<double>(a))
      case 0xB8: UN(u32, of_f64, static_cast<double>(a))
      case 0xB9: UN(s64, of_f64, static_cast<double>(a))
      case 0xBA: UN(std::uint64_t, of_f64, static_cast<double>(a))
      case 0xBB: UN(f32, of_f64, static_cast<double>(a))
      case 0xBC:  // reinterpretations keep the bit pattern
      case 0xBD:
      case 0xBE:
      case 0xBF: break;
      case 0xC0: UN(u32, of_s32, static_cast<std::int32_t>(static_cast<std::int8_t>(a)))
      case 0xC1: UN(u32, of_s32, static_cast<std::int32_t>(static_cast<std::int16_t>(a)))
      case 0xC2: UN(std::uint64_t, of_s64, static_cast<std::int64_t>(static_cast<std::int8_t>(a)))
      case 0xC3: UN(std::uint64_t, of_s64, static_cast<std::int64_t>(static_cast<std::int16_t>(a)))
      case 0xC4: UN(std::uint64_t, of_s64, static_cast<std::int64_t>(static_cast<std::int32_t>(a)))

      case ir::op::kPrefixFC + 0: UN(f32, of_s32, trunc_sat<std::int32_t>(a))
      case ir::op::kPrefixFC + 1: UN(f32, of_u32, trunc_sat<std::uint32_t>(a))
      case ir::op::kPrefixFC + 2: UN(f64, of_s32, trunc_sat<std::int32_t>(a))
      case ir::op::kPrefixFC + 3: UN(f64, of_u32, trunc_sat<std::uint32_t>(a))
      case ir::op::kPrefixFC + 4: UN(f32, of_s64, trunc_sat<std::int64_t>(a))
      case ir::op::kPrefixFC + 5: UN(f32, std::uint64_t, trunc_sat<std::uint64_t>(a))
      case ir::op::kPrefixFC + 6: UN(f64, of_s64, trunc_sat<std::int64_t>(a))
      case ir::op::kPrefixFC + 7: UN(f64, std::uint64_t, trunc_sat<std::uint64_t>(a))

      case ir::op::kMemoryCopy: {
        std::uint64_t n = u32(POP());
        std::uint64_t src = u32(POP());
        std::uint64_t dst = u32(POP());
        if (src + n > msize || dst + n > msize) trap("out of bounds memory access");
        if (n != 0) std::memmove(mem + dst, mem + src, n);
        break;
      }
      case ir::op::kMemoryFill: {
        std::uint64_t n = u32(POP());
        auto value = static_cast<std::uint8_t>(POP());
        std::uint64_t dst = u32(POP());
        if (dst + n > msize) trap("out of bounds memory access");
        if (n != 0) std::memset(mem + dst, value, n);
        break;
      }

      default:
        trap("internal error: unknown lowered opcode");
    }
  }

#undef POP
#undef TOP
#undef PUSH
#undef BRANCH
#undef ADDR
#undef LOAD
#undef STORE
#undef UN
#undef BIN
}

}  // namespace procwasm::guest
