#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace procwasm::kernel {

/// Backing store of a file. Growth rounds capacity up to the smallest
/// multiple of kGrowthGranule that covers the new size, so a run of small
/// appends reallocates once per 4 KiB instead of once per call.
class FileBuffer {
 public:
  static constexpr std::size_t kGrowthGranule = 4096;

  FileBuffer() = default;
  FileBuffer(const FileBuffer&) = delete;
  FileBuffer& operator=(const FileBuffer&) = delete;

  std::size_t size() const noexcept { return size_; }
  std::size_t capacity() const noexcept { return capacity_; }
  std::uint64_t reallocations() const noexcept { return reallocations_; }
  std::span<const std::byte> contents() const noexcept { return {data_.get(), size_}; }

  void append(std::span<const std::byte> bytes);
  /// Writes at `offset`, zero-filling any gap past the current end.
  void write_at(std::uint64_t offset, std::span<const std::byte> bytes);
  /// Copies up to out.size() bytes from `offset`; returns the count.
  std::size_t read_at(std::uint64_t offset, std::span<std::byte> out) const;
  void truncate() noexcept { size_ = 0; }

 private:
  void reserve(std::size_t needed);

  std::unique_ptr<std::byte[]> data_;
  std::size_t size_ = 0;
  std::size_t capacity_ = 0;
  std::uint64_t reallocations_ = 0;
};

struct FsNode {
  enum class Kind { File, Directory };

  explicit FsNode(Kind k) : kind(k) {}

  Kind kind;
  FileBuffer data;                                            // files only
  std::map<std::string, std::shared_ptr<FsNode>> children;   // directories only

  bool is_dir() const noexcept { return kind == Kind::Directory; }
  std::uint64_t size() const noexcept { return kind == Kind::File ? data.size() : 0; }
};

/// Appends to a file node. At most one reallocation per call.
void fs_append(FsNode& node, std::span<const std::byte> bytes);

class BadImage : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Splits an absolute path into components. "." is dropped and ".." pops.
/// Throws std::invalid_argument on a relative path.
std::vector<std::string> split_path(std::string_view path);
std::string join_path(const std::vector<std::string>& parts);

/// Directory tree used to populate a fresh kernel.
struct FsImage {
  struct Entry {
    std::string path;
    bool directory = false;
    std::vector<std::byte> bytes;
  };
  std::vector<Entry> entries;

  void add_dir(std::string path);
  void add_file(std::string path, std::vector<std::byte> bytes);
  void add_file(std::string path, std::string_view text);

  /// Mirrors a host directory. Throws BadImage if `root` is not a directory.
  static FsImage from_host(const std::filesystem::path& root, std::string_view mount = "/");
};

/// In-memory tree rooted at "/". Paths are absolute, '/'-separated, case-sensitive.
class Vfs {
 public:
  Vfs();

  /// Throws BadImage on a duplicate path or a file/directory conflict.
  static Vfs boot(const FsImage& image);

  std::shared_ptr<FsNode> lookup(std::string_view path) const;
  /// Returns the existing file or creates an empty one; nullptr if the parent
  /// is missing or not a directory, or the path names a directory.
  std::shared_ptr<FsNode> create_file(std::string_view path);
  /// Creates the directory and its missing ancestors; nullptr on a file in the way.
  std::shared_ptr<FsNode> make_dirs(std::string_view path);
  bool remove(std::string_view path);
  bool exists(std::string_view path) const { return lookup(path) != nullptr; }

  /// Writes the subtree at `path` to a host directory.
  void export_tree(std::string_view path, const std::filesystem::path& host_dir) const;

  const std::shared_ptr<FsNode>& root() const noexcept { return root_; }

 private:
  std::shared_ptr<FsNode> root_;
};

}  // namespace procwasm::kernel
