#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>

namespace procwasm::transport {

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operation attempted while the status word is in the wrong state.
class ProtocolState : public TransportError {
 public:
  using TransportError::TransportError;
};

/// Payload extents exceed the data region.
class Overflow : public TransportError {
 public:
  using TransportError::TransportError;
};

/// Descriptor list or argument vector that can never be encoded.
class MalformedMessage : public TransportError {
 public:
  using TransportError::TransportError;
};

/// The kernel side closed the buffer while a request was outstanding.
class KernelGone : public TransportError {
 public:
  using TransportError::TransportError;
};

enum class Status : std::uint32_t { Idle = 0, Request = 1, Done = 2 };

std::string to_string(Status s);

inline constexpr std::size_t kHeaderSize = 4096;
inline constexpr std::size_t kMinCapacity = 8192;
inline constexpr std::size_t kCapacityGranule = 4096;
inline constexpr std::size_t kDefaultCapacity = std::size_t{64} << 20;

/// Per-process region shared between one shim and the kernel.
///
/// Bytes [0, 4096) hold the message header, the rest is the data region
/// that carries copied payloads. The status word at offset 0 is accessed
/// atomically; everything else is plain memory whose visibility is ordered
/// by release stores / acquire loads of the status word.
class AuxBuffer {
 public:
  /// Throws std::invalid_argument unless capacity >= 8192 and a multiple of 4096.
  explicit AuxBuffer(std::size_t capacity = kDefaultCapacity);

  AuxBuffer(const AuxBuffer&) = delete;
  AuxBuffer& operator=(const AuxBuffer&) = delete;

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t data_capacity() const noexcept { return capacity_ - kHeaderSize; }
  static constexpr std::size_t data_offset() noexcept { return kHeaderSize; }

  std::span<std::byte> bytes() noexcept { return {raw(), capacity_}; }
  std::span<const std::byte> bytes() const noexcept { return {raw(), capacity_}; }
  /// Absolute [offset, offset+len) view; throws Overflow when outside the data region.
  std::span<std::byte> data_at(std::size_t offset, std::size_t len);
  std::span<const std::byte> data_at(std::size_t offset, std::size_t len) const;

  Status status() const noexcept;
  /// Release-stores the status word and wakes any waiter.
  void set_status(Status s);

  /// Blocks until the status equals `target` or the buffer is closed.
  /// Returns false on close. Spins briefly before parking.
  bool wait_for(Status target);

  /// Marks the kernel side gone and wakes waiters. Idempotent.
  void close();
  bool closed() const noexcept { return closed_.load(std::memory_order_acquire); }

  /// Called by the shim after a request is posted. Installed by the kernel.
  void set_doorbell(std::function<void()> doorbell);
  void ring_doorbell();

  /// Invoked with each new status value immediately before it is stored.
  void set_status_observer(std::function<void(Status)> observer);

 private:
  std::byte* raw() noexcept { return reinterpret_cast<std::byte*>(words_.get()); }
  const std::byte* raw() const noexcept { return reinterpret_cast<const std::byte*>(words_.get()); }

  std::size_t capacity_;
  std::unique_ptr<std::uint32_t[]> words_;
  std::atomic<bool> closed_{false};

  std::mutex park_mutex_;
  std::condition_variable park_cv_;

  std::mutex hooks_mutex_;
  std::function<void()> doorbell_;
  std::function<void(Status)> observer_;
};

}  // namespace procwasm::transport
