#include "procwasm/harness/manifest.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <memory>
#include <sstream>

namespace procwasm::harness {

namespace fs = std::filesystem;

std::vector<FixtureEntry> parse_manifest(std::string_view text) {
  std::vector<FixtureEntry> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::istringstream ls(line);
    FixtureEntry e;
    std::string extra;
    if (!(ls >> e.name >> e.wasm_path >> e.sha256) || (ls >> extra)) {
      throw ManifestError("manifest line " + std::to_string(n) + ": expected 'name wasm-path sha256'");
    }
    if (e.sha256.size() != 64 || e.sha256.find_first_not_of("0123456789abcdef") != std::string::npos) {
      throw ManifestError("manifest line " + std::to_string(n) + ": sha256 must be 64 lowercase hex digits");
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::string format_manifest(const std::vector<FixtureEntry>& entries) {
  std::string out;
  for (const auto& e : entries) out += e.name + " " + e.wasm_path + " " + e.sha256 + "\n";
  return out;
}

std::string sha256_hex(std::span<const std::byte> data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), md, &len) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[md[i] >> 4]);
    hex.push_back(kHex[md[i] & 15]);
  }
  return hex;
}

std::vector<Fixture> load_fixtures(const fs::path& dir) {
  const auto manifest = dir / "manifest.txt";
  std::ifstream in(manifest);
  if (!in) throw ManifestError("cannot open " + manifest.string());
  std::stringstream ss;
  ss << in.rdbuf();
  std::vector<Fixture> out;
  for (auto& e : parse_manifest(ss.str())) {
    fs::path p(e.wasm_path);
    if (p.is_relative()) p = dir / p;
    std::ifstream f(p, std::ios::binary);
    if (!f) throw ManifestError("fixture " + e.name + ": cannot open " + p.string());
    std::vector<char> raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    auto b = std::as_bytes(std::span(raw));
    Fixture fx{std::move(e), {b.begin(), b.end()}};
    const auto got = sha256_hex(fx.bytes);
    if (got != fx.entry.sha256) {
      throw ManifestError("fixture " + fx.entry.name + ": sha256 " + got + " does not match manifest");
    }
    out.push_back(std::move(fx));
  }
  return out;
}

}  // namespace procwasm::harness
