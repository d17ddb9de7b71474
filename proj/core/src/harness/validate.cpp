#include "procwasm/harness/validate.hpp"

#include <algorithm>
#include <fstream>

namespace procwasm::harness {

namespace fs = std::filesystem;

bool ValidationReport::pass() const {
  return std::all_of(files.begin(), files.end(), [](const FileResult& f) { return f.kind == FileResult::Kind::Pass; });
}

std::string to_string(FileResult::Kind k) {
  switch (k) {
    case FileResult::Kind::Pass: return "pass";
    case FileResult::Kind::Differ: return "differ";
    case FileResult::Kind::Missing: return "missing";
  }
  return "?";
}

std::optional<std::uint64_t> first_difference(std::span<const std::byte> a, std::span<const std::byte> b) {
  const auto n = std::min(a.size(), b.size());
  auto [ia, ib] = std::mismatch(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(n), b.begin());
  if (ia != a.begin() + static_cast<std::ptrdiff_t>(n)) return static_cast<std::uint64_t>(ia - a.begin());
  if (a.size() != b.size()) return n;
  return std::nullopt;
}

namespace {

// Streams both files and reports the first difference, cmp-style.
std::optional<std::uint64_t> compare_files(const fs::path& a, const fs::path& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  constexpr std::size_t kBlock = 1 << 16;
  std::vector<char> ba(kBlock), bb(kBlock);
  std::uint64_t base = 0;
  for (;;) {
    fa.read(ba.data(), kBlock);
    fb.read(bb.data(), kBlock);
    const auto na = static_cast<std::size_t>(fa.gcount());
    const auto nb = static_cast<std::size_t>(fb.gcount());
    auto d = first_difference(std::as_bytes(std::span(ba.data(), na)), std::as_bytes(std::span(bb.data(), nb)));
    if (d) return base + *d;
    if (na < kBlock) return std::nullopt;
    base += na;
  }
}

}  // namespace

ValidationReport validate_outputs(const fs::path& expected, const fs::path& actual) {
  ValidationReport rep;
  std::error_code ec;
  if (!fs::is_directory(expected, ec)) {
    rep.files.push_back({expected.string(), FileResult::Kind::Missing, 0});
    return rep;
  }
  for (auto it = fs::recursive_directory_iterator(expected, ec); !ec && it != fs::recursive_directory_iterator();
       it.increment(ec)) {
    if (!it->is_regular_file()) continue;
    const auto rel = fs::relative(it->path(), expected).generic_string();
    const auto other = actual / rel;
    FileResult r{rel, FileResult::Kind::Pass, 0};
    if (!fs::is_regular_file(other)) {
      r.kind = FileResult::Kind::Missing;
    } else if (auto d = compare_files(it->path(), other)) {
      r.kind = FileResult::Kind::Differ;
      r.offset = *d;
    }
    rep.files.push_back(std::move(r));
  }
  if (ec) rep.files.push_back({expected.string(), FileResult::Kind::Missing, 0});
  std::sort(rep.files.begin(), rep.files.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
  return rep;
}

}  // namespace procwasm::harness
