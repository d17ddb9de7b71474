#include "procwasm/kernel/fs.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

namespace procwasm::kernel {

namespace fs = std::filesystem;

void FileBuffer::reserve(std::size_t needed) {
  if (needed <= capacity_) return;
  const std::size_t cap = (needed + kGrowthGranule - 1) / kGrowthGranule * kGrowthGranule;
  auto fresh = std::make_unique_for_overwrite<std::byte[]>(cap);
  if (size_ > 0) std::memcpy(fresh.get(), data_.get(), size_);
  data_ = std::move(fresh);
  capacity_ = cap;
  ++reallocations_;
}

void FileBuffer::append(std::span<const std::byte> bytes) { write_at(size_, bytes); }

void FileBuffer::write_at(std::uint64_t offset, std::span<const std::byte> bytes) {
  const std::size_t end = static_cast<std::size_t>(offset) + bytes.size();
  if (bytes.empty() && offset <= size_) return;
  reserve(end);
  if (offset > size_) std::memset(data_.get() + size_, 0, static_cast<std::size_t>(offset) - size_);
  if (!bytes.empty()) std::memcpy(data_.get() + offset, bytes.data(), bytes.size());
  size_ = std::max(size_, end);
}

std::size_t FileBuffer::read_at(std::uint64_t offset, std::span<std::byte> out) const {
  if (offset >= size_) return 0;
  const std::size_t n = std::min<std::size_t>(out.size(), size_ - static_cast<std::size_t>(offset));
  if (n > 0) std::memcpy(out.data(), data_.get() + offset, n);
  return n;
}

void fs_append(FsNode& node, std::span<const std::byte> bytes) {
  if (node.kind != FsNode::Kind::File) throw std::invalid_argument("fs_append on a directory");
  node.data.append(bytes);
}

std::vector<std::string> split_path(std::string_view path) {
  if (path.empty() || path.front() != '/') {
    throw std::invalid_argument("path is not absolute: " + std::string(path));
  }
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    auto j = path.find('/', i);
    if (j == std::string_view::npos) j = path.size();
    auto part = path.substr(i, j - i);
    if (part == "..") {
      if (!parts.empty()) parts.pop_back();
    } else if (!part.empty() && part != ".") {
      parts.emplace_back(part);
    }
    i = j + 1;
  }
  return parts;
}

std::string join_path(const std::vector<std::string>& parts) {
  if (parts.empty()) return "/";
  std::string out;
  for (const auto& p : parts) out += "/" + p;
  return out;
}

void FsImage::add_dir(std::string path) { entries.push_back({std::move(path), true, {}}); }

void FsImage::add_file(std::string path, std::vector<std::byte> bytes) {
  entries.push_back({std::move(path), false, std::move(bytes)});
}

void FsImage::add_file(std::string path, std::string_view text) {
  auto b = std::as_bytes(std::span(text.data(), text.size()));
  add_file(std::move(path), std::vector<std::byte>(b.begin(), b.end()));
}

FsImage FsImage::from_host(const fs::path& root, std::string_view mount) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw BadImage("fs image is not a directory: " + root.string());
  auto base = split_path(mount);
  FsImage image;
  std::vector<fs::path> paths;
  for (auto it = fs::recursive_directory_iterator(root, ec); !ec && it != fs::recursive_directory_iterator();
       it.increment(ec)) {
    paths.push_back(it->path());
  }
  if (ec) throw BadImage("cannot enumerate " + root.string() + ": " + ec.message());
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) {
    auto parts = base;
    for (const auto& c : fs::relative(p, root)) parts.push_back(c.string());
    const auto vpath = join_path(parts);
    if (fs::is_directory(p)) {
      image.add_dir(vpath);
    } else if (fs::is_regular_file(p)) {
      std::ifstream in(p, std::ios::binary);
      std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      if (!in.good() && !in.eof()) throw BadImage("cannot read " + p.string());
      auto b = std::as_bytes(std::span(raw));
      image.add_file(vpath, std::vector<std::byte>(b.begin(), b.end()));
    }
  }
  return image;
}

Vfs::Vfs() : root_(std::make_shared<FsNode>(FsNode::Kind::Directory)) {}

Vfs Vfs::boot(const FsImage& image) {
  Vfs vfs;
  std::map<std::string, bool> seen;
  for (const auto& e : image.entries) {
    std::vector<std::string> parts;
    try {
      parts = split_path(e.path);
    } catch (const std::invalid_argument& ex) {
      throw BadImage(ex.what());
    }
    const auto norm = join_path(parts);
    if (!seen.emplace(norm, e.directory).second) throw BadImage("duplicate path in image: " + norm);
    if (e.directory) {
      if (!vfs.make_dirs(norm)) throw BadImage("directory conflicts with a file: " + norm);
      continue;
    }
    if (parts.empty()) throw BadImage("image file entry names the root");
    parts.pop_back();
    if (!vfs.make_dirs(join_path(parts))) throw BadImage("parent of " + norm + " is a file");
    if (vfs.lookup(norm)) throw BadImage("file conflicts with a directory: " + norm);
    auto node = vfs.create_file(norm);
    node->data.append(e.bytes);
  }
  return vfs;
}

std::shared_ptr<FsNode> Vfs::lookup(std::string_view path) const {
  std::vector<std::string> parts;
  try {
    parts = split_path(path);
  } catch (const std::invalid_argument&) {
    return nullptr;
  }
  auto node = root_;
  for (const auto& p : parts) {
    if (!node->is_dir()) return nullptr;
    auto it = node->children.find(p);
    if (it == node->children.end()) return nullptr;
    node = it->second;
  }
  return node;
}

std::shared_ptr<FsNode> Vfs::create_file(std::string_view path) {
  std::vector<std::string> parts;
  try {
    parts = split_path(path);
  } catch (const std::invalid_argument&) {
    return nullptr;
  }
  if (parts.empty()) return nullptr;
  auto name = parts.back();
  parts.pop_back();
  auto parent = lookup(join_path(parts));
  if (!parent || !parent->is_dir()) return nullptr;
  auto& slot = parent->children[name];
  if (!slot) slot = std::make_shared<FsNode>(FsNode::Kind::File);
  if (slot->is_dir()) return nullptr;
  return slot;
}

std::shared_ptr<FsNode> Vfs::make_dirs(std::string_view path) {
  std::vector<std::string> parts;
  try {
    parts = split_path(path);
  } catch (const std::invalid_argument&) {
    return nullptr;
  }
  auto node = root_;
  for (const auto& p : parts) {
    auto& slot = node->children[p];
    if (!slot) slot = std::make_shared<FsNode>(FsNode::Kind::Directory);
    if (!slot->is_dir()) return nullptr;
    node = slot;
  }
  return node;
}

bool Vfs::remove(std::string_view path) {
  std::vector<std::string> parts;
  try {
    parts = split_path(path);
  } catch (const std::invalid_argument&) {
    return false;
  }
  if (parts.empty()) return false;
  auto name = parts.back();
  parts.pop_back();
  auto parent = lookup(join_path(parts));
  if (!parent || !parent->is_dir()) return false;
  return parent->children.erase(name) > 0;
}

namespace {

void export_node(const FsNode& node, const fs::path& host) {
  if (node.is_dir()) {
    fs::create_directories(host);
    for (const auto& [name, child] : node.children) export_node(*child, host / name);
    return;
  }
  std::ofstream out(host, std::ios::binary | std::ios::trunc);
  auto c = node.data.contents();
  out.write(reinterpret_cast<const char*>(c.data()), static_cast<std::streamsize>(c.size()));
  if (!out) throw std::runtime_error("cannot write " + host.string());
}

}  // namespace

void Vfs::export_tree(std::string_view path, const fs::path& host_dir) const {
  auto node = lookup(path);
  if (!node) throw std::runtime_error("no such vfs path: " + std::string(path));
  export_node(*node, host_dir);
}

}  // namespace procwasm::kernel
