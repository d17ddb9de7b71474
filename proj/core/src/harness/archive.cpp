#include "procwasm/harness/archive.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

namespace procwasm::harness {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kBlock = 512;

void put_octal(std::byte* field, std::size_t width, std::uint64_t v) {
  // width-1 digits, zero padded, NUL terminated.
  for (std::size_t i = width - 1; i-- > 0;) {
    field[i] = static_cast<std::byte>('0' + (v & 7));
    v >>= 3;
  }
  field[width - 1] = std::byte{0};
}

std::uint64_t get_octal(const std::byte* field, std::size_t width) {
  std::uint64_t v = 0;
  std::size_t i = 0;
  while (i < width && static_cast<char>(field[i]) == ' ') ++i;
  for (; i < width; ++i) {
    auto c = static_cast<char>(field[i]);
    if (c == 0 || c == ' ') break;
    if (c < '0' || c > '7') throw IoFailure("bad octal field in tar header");
    v = v * 8 + static_cast<std::uint64_t>(c - '0');
  }
  return v;
}

void put_str(std::byte* field, std::string_view s) { std::memcpy(field, s.data(), s.size()); }

std::string get_str(const std::byte* field, std::size_t width) {
  const char* p = reinterpret_cast<const char*>(field);
  return std::string(p, strnlen(p, width));
}

std::uint32_t checksum(const std::byte* h) {
  std::uint32_t sum = 0;
  for (std::size_t i = 0; i < kBlock; ++i) {
    sum += (i >= 148 && i < 156) ? static_cast<std::uint32_t>(' ') : static_cast<std::uint32_t>(h[i]);
  }
  return sum;
}

void header(std::vector<std::byte>& out, const std::string& path, bool dir, std::uint64_t size) {
  if (size > kUstarMaxFileSize) {
    throw IoFailure(path + ": " + std::to_string(size) + " bytes exceeds the ustar size limit of 8 GiB");
  }
  std::string name = dir ? path + "/" : path;
  std::string prefix;
  if (name.size() > 100) {
    // Split at a '/' so that prefix <= 155 and name <= 100.
    std::size_t cut = std::string::npos;
    for (std::size_t i = name.size() > 101 ? name.size() - 101 : 0; i < name.size() && i <= 155; ++i) {
      if (name[i] == '/') {
        cut = i;
        break;
      }
    }
    if (cut == std::string::npos) throw IoFailure(path + ": path too long for ustar");
    prefix = name.substr(0, cut);
    name = name.substr(cut + 1);
  }
  const auto at = out.size();
  out.resize(at + kBlock);
  std::byte* h = out.data() + at;
  put_str(h, name);
  put_octal(h + 100, 8, dir ? 0755 : 0644);
  put_octal(h + 108, 8, 0);
  put_octal(h + 116, 8, 0);
  put_octal(h + 124, 12, size);
  put_octal(h + 136, 12, 0);
  h[156] = static_cast<std::byte>(dir ? '5' : '0');
  put_str(h + 257, std::string_view("ustar\0", 6));
  put_str(h + 263, "00");
  put_str(h + 345, prefix);
  const auto sum = checksum(h);
  put_octal(h + 148, 7, sum);
  h[155] = static_cast<std::byte>(' ');
}

void pad(std::vector<std::byte>& out) { out.resize((out.size() + kBlock - 1) / kBlock * kBlock); }

}  // namespace

std::vector<std::byte> write_ustar(const std::vector<TarEntry>& entries) {
  std::vector<std::byte> out;
  for (const auto& e : entries) {
    header(out, e.path, e.directory, e.directory ? 0 : e.data.size());
    if (!e.directory) {
      out.insert(out.end(), e.data.begin(), e.data.end());
      pad(out);
    }
  }
  out.resize(out.size() + 2 * kBlock);
  return out;
}

std::vector<std::byte> archive_results(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoFailure("not a directory: " + dir.string());
  std::vector<fs::path> paths;
  for (auto it = fs::recursive_directory_iterator(dir, ec); !ec && it != fs::recursive_directory_iterator();
       it.increment(ec)) {
    paths.push_back(it->path());
  }
  if (ec) throw IoFailure("cannot enumerate " + dir.string() + ": " + ec.message());
  std::sort(paths.begin(), paths.end());

  std::vector<std::byte> out;
  for (const auto& p : paths) {
    const auto rel = fs::relative(p, dir).generic_string();
    if (fs::is_directory(p)) {
      header(out, rel, true, 0);
      continue;
    }
    if (!fs::is_regular_file(p)) continue;
    const auto size = fs::file_size(p, ec);
    if (ec) throw IoFailure("cannot stat " + p.string());
    header(out, rel, false, size);
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoFailure("cannot open " + p.string());
    const auto at = out.size();
    out.resize(at + size);
    in.read(reinterpret_cast<char*>(out.data() + at), static_cast<std::streamsize>(size));
    if (static_cast<std::uint64_t>(in.gcount()) != size) throw IoFailure("short read on " + p.string());
    pad(out);
  }
  out.resize(out.size() + 2 * kBlock);
  return out;
}

std::vector<TarEntry> read_ustar(std::span<const std::byte> a) {
  std::vector<TarEntry> out;
  std::size_t pos = 0;
  for (;;) {
    if (pos + kBlock > a.size()) throw IoFailure("truncated tar archive");
    const std::byte* h = a.data() + pos;
    if (std::all_of(h, h + kBlock, [](std::byte b) { return b == std::byte{0}; })) break;
    if (get_octal(h + 148, 8) != checksum(h)) throw IoFailure("tar header checksum mismatch");
    TarEntry e;
    auto name = get_str(h, 100);
    auto prefix = get_str(h + 345, 155);
    e.path = prefix.empty() ? name : prefix + "/" + name;
    const auto type = static_cast<char>(h[156]);
    e.directory = type == '5';
    if (e.directory && !e.path.empty() && e.path.back() == '/') e.path.pop_back();
    const auto size = get_octal(h + 124, 12);
    pos += kBlock;
    if (!e.directory) {
      if (pos + size > a.size()) throw IoFailure("truncated tar member " + e.path);
      e.data.assign(a.begin() + static_cast<std::ptrdiff_t>(pos), a.begin() + static_cast<std::ptrdiff_t>(pos + size));
      pos += (size + kBlock - 1) / kBlock * kBlock;
    }
    if (type == '0' || type == '\0' || type == '5') out.push_back(std::move(e));
  }
  return out;
}

void extract_archive(std::span<const std::byte> archive, const fs::path& dest) {
  fs::create_directories(dest);
  for (const auto& e : read_ustar(archive)) {
    fs::path rel(e.path);
    if (rel.is_absolute() || std::any_of(rel.begin(), rel.end(), [](const fs::path& c) { return c == ".."; })) {
      throw IoFailure("unsafe path in archive: " + e.path);
    }
    const auto target = dest / rel;
    if (e.directory) {
      fs::create_directories(target);
      continue;
    }
    fs::create_directories(target.parent_path());
    std::ofstream o(target, std::ios::binary | std::ios::trunc);
    o.write(reinterpret_cast<const char*>(e.data.data()), static_cast<std::streamsize>(e.data.size()));
    if (!o) throw IoFailure("cannot write " + target.string());
  }
}

}  // namespace procwasm::harness
