#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace procwasm::guest {

namespace ir {
struct Module;
}

/// The binary failed decoding or validation, or lacks a required export.
class InvalidModule : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The module imports something outside the `kernel.syscall` ABI.
class UnsupportedImport : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A validated guest program. Cheap to copy; the decoded form is shared.
class GuestModule {
 public:
  /// Decodes and validates `bytes`. Throws InvalidModule or UnsupportedImport.
  static GuestModule load(std::span<const std::byte> bytes);
  static GuestModule load(std::span<const std::uint8_t> bytes);

  std::span<const std::byte> module_bytes() const noexcept { return *bytes_; }
  const std::string& entry() const noexcept;
  const std::string& memory_export() const noexcept;
  /// Initial (and fixed) linear memory size in bytes.
  std::uint64_t memory_size() const noexcept;

  const ir::Module& ir() const noexcept { return *ir_; }

 private:
  std::shared_ptr<const std::vector<std::byte>> bytes_;
  std::shared_ptr<const ir::Module> ir_;
};

/// Decoder entry point shared with tests; does not apply the guest ABI checks.
std::shared_ptr<const ir::Module> decode_wasm(std::span<const std::byte> bytes);

}  // namespace procwasm::guest
