#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace procwasm::harness {

struct FileResult {
  enum class Kind { Pass, Differ, Missing };
  std::string path;  // relative to the compared roots
  Kind kind = Kind::Pass;
  std::uint64_t offset = 0;  // Differ: first differing 0-based byte

  friend bool operator==(const FileResult&, const FileResult&) = default;
};

struct ValidationReport {
  std::vector<FileResult> files;  // sorted by path
  bool pass() const;
};

/// cmp semantics: the first offset where the contents differ. When one is a
/// proper prefix of the other, that is the shorter length.
std::optional<std::uint64_t> first_difference(std::span<const std::byte> a, std::span<const std::byte> b);

/// Compares every regular file under `expected` with its counterpart under
/// `actual`. Files present only in `actual` are ignored.
ValidationReport validate_outputs(const std::filesystem::path& expected, const std::filesystem::path& actual);

std::string to_string(FileResult::Kind k);

}  // namespace procwasm::harness
