#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace procwasm::harness {

class IoFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Largest size an ustar header can record (11 octal digits).
inline constexpr std::uint64_t kUstarMaxFileSize = 077777777777ULL;

struct TarEntry {
  std::string path;  // relative, '/'-separated, no trailing slash
  bool directory = false;
  std::vector<std::byte> data;
  friend bool operator==(const TarEntry&, const TarEntry&) = default;
};

/// POSIX ustar archive of the tree under `dir` (paths relative to it, sorted,
/// mtime/uid/gid zeroed so equal trees give equal bytes). Throws IoFailure
/// when `dir` is unreadable, a file exceeds kUstarMaxFileSize, or a path does
/// not fit the name/prefix fields.
std::vector<std::byte> archive_results(const std::filesystem::path& dir);

/// Archive from in-memory entries, in the given order.
std::vector<std::byte> write_ustar(const std::vector<TarEntry>& entries);

/// Parses an ustar archive. Throws IoFailure on a bad checksum or truncation.
std::vector<TarEntry> read_ustar(std::span<const std::byte> archive);

/// Unpacks into `dest`, creating it if needed.
void extract_archive(std::span<const std::byte> archive, const std::filesystem::path& dest);

}  // namespace procwasm::harness
