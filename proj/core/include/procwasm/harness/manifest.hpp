#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace procwasm::harness {

class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FixtureEntry {
  std::string name;
  std::string wasm_path;  // relative to the manifest's directory unless absolute
  std::string sha256;     // lowercase hex
  friend bool operator==(const FixtureEntry&, const FixtureEntry&) = default;
};

/// Lines of `name <sp> wasm-path <sp> sha256`. Blank lines and '#' comments
/// are skipped.
std::vector<FixtureEntry> parse_manifest(std::string_view text);
std::string format_manifest(const std::vector<FixtureEntry>& entries);

std::string sha256_hex(std::span<const std::byte> data);

struct Fixture {
  FixtureEntry entry;
  std::vector<std::byte> bytes;
};

/// Reads `<dir>/manifest.txt` and every module it lists, checking hashes.
/// Throws ManifestError on a missing file or a hash mismatch.
std::vector<Fixture> load_fixtures(const std::filesystem::path& dir);

}  // namespace procwasm::harness
