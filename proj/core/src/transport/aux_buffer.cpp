#include "procwasm/transport/aux_buffer.hpp"

#include <thread>

namespace procwasm::transport {

namespace {

constexpr int kSpinIterations = 256;

}  // namespace

std::string to_string(Status s) {
  switch (s) {
    case Status::Idle: return "IDLE";
    case Status::Request: return "REQUEST";
    case Status::Done: return "DONE";
  }
  return "UNKNOWN(" + std::to_string(static_cast<std::uint32_t>(s)) + ")";
}

AuxBuffer::AuxBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity < kMinCapacity || capacity % kCapacityGranule != 0) {
    throw std::invalid_argument("aux buffer capacity must be >= 8192 and a multiple of 4096, got " +
                                std::to_string(capacity));
  }
  words_.reset(new std::uint32_t[capacity / sizeof(std::uint32_t)]());
}

std::span<std::byte> AuxBuffer::data_at(std::size_t offset, std::size_t len) {
  if (offset < kHeaderSize || offset > capacity_ || len > capacity_ - offset) {
    throw Overflow("data extent [" + std::to_string(offset) + ", +" + std::to_string(len) +
                   ") outside data region");
  }
  return bytes().subspan(offset, len);
}

std::span<const std::byte> AuxBuffer::data_at(std::size_t offset, std::size_t len) const {
  return const_cast<AuxBuffer*>(this)->data_at(offset, len);
}

Status AuxBuffer::status() const noexcept {
  std::atomic_ref<std::uint32_t> word(words_[0]);
  return static_cast<Status>(word.load(std::memory_order_acquire));
}

void AuxBuffer::set_status(Status s) {
  {
    std::lock_guard lock(hooks_mutex_);
    if (observer_) observer_(s);
  }
  std::atomic_ref<std::uint32_t> word(words_[0]);
  word.store(static_cast<std::uint32_t>(s), std::memory_order_release);
  std::lock_guard lock(park_mutex_);
  park_cv_.notify_all();
}

bool AuxBuffer::wait_for(Status target) {
  for (int i = 0; i < kSpinIterations; ++i) {
    if (status() == target) return true;
    if (closed()) return false;
    if (i % 32 == 31) std::this_thread::yield();
  }
  std::unique_lock lock(park_mutex_);
  park_cv_.wait(lock, [&] { return status() == target || closed(); });
  return status() == target;
}

void AuxBuffer::close() {
  closed_.store(true, std::memory_order_release);
  std::lock_guard lock(park_mutex_);
  park_cv_.notify_all();
}

void AuxBuffer::set_doorbell(std::function<void()> doorbell) {
  std::lock_guard lock(hooks_mutex_);
  doorbell_ = std::move(doorbell);
}

void AuxBuffer::ring_doorbell() {
  std::function<void()> bell;
  {
    std::lock_guard lock(hooks_mutex_);
    bell = doorbell_;
  }
  if (bell) bell();
}

void AuxBuffer::set_status_observer(std::function<void(Status)> observer) {
  std::lock_guard lock(hooks_mutex_);
  observer_ = std::move(observer);
}

}  // namespace procwasm::transport
