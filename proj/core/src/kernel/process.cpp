#include "procwasm/kernel/process.hpp"

#include <stdexcept>

namespace procwasm::kernel {

std::shared_ptr<OpenFile> OpenFile::null_device() {
  auto f = std::make_shared<OpenFile>();
  f->kind = Kind::Null;
  f->readable = f->writable = true;
  return f;
}

std::shared_ptr<OpenFile> OpenFile::file(std::shared_ptr<FsNode> node, bool readable, bool writable, bool append) {
  auto f = std::make_shared<OpenFile>();
  f->kind = Kind::File;
  f->node = std::move(node);
  f->readable = readable;
  f->writable = writable;
  f->append = append;
  return f;
}

std::pair<std::shared_ptr<OpenFile>, std::shared_ptr<OpenFile>> OpenFile::pipe_pair() {
  auto p = std::make_shared<Pipe>();
  auto r = std::make_shared<OpenFile>();
  r->kind = Kind::PipeRead;
  r->pipe = p;
  r->readable = true;
  auto w = std::make_shared<OpenFile>();
  w->kind = Kind::PipeWrite;
  w->pipe = p;
  w->writable = true;
  p->readers = 1;
  p->writers = 1;
  return {r, w};
}

int FdTable::install(std::shared_ptr<OpenFile> file) {
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (!slots_[i].file) {
      ++file->refs;
      slots_[i].file = std::move(file);
      return static_cast<int>(i);
    }
  }
  if (slots_.size() >= kMaxFds) return -1;
  ++file->refs;
  slots_.push_back({std::move(file), 0});
  return static_cast<int>(slots_.size() - 1);
}

std::shared_ptr<OpenFile> FdTable::install_at(int fd, std::shared_ptr<OpenFile> file) {
  if (fd < 0 || fd >= kMaxFds) throw std::out_of_range("descriptor out of range");
  if (slots_.size() <= static_cast<std::size_t>(fd)) slots_.resize(fd + 1);
  auto old = remove(fd);
  ++file->refs;
  slots_[fd].file = std::move(file);
  return old;
}

OpenFile* FdTable::get(int fd) const noexcept {
  if (fd < 0 || static_cast<std::size_t>(fd) >= slots_.size()) return nullptr;
  return slots_[fd].file.get();
}

std::shared_ptr<OpenFile> FdTable::get_shared(int fd) const noexcept {
  if (fd < 0 || static_cast<std::size_t>(fd) >= slots_.size()) return nullptr;
  return slots_[fd].file;
}

std::uint32_t FdTable::generation(int fd) const noexcept {
  if (fd < 0 || static_cast<std::size_t>(fd) >= slots_.size()) return 0;
  return slots_[fd].generation;
}

bool FdTable::is_current(int fd, std::uint32_t generation) const noexcept {
  return get(fd) != nullptr && slots_[fd].generation == generation;
}

std::shared_ptr<OpenFile> FdTable::remove(int fd) noexcept {
  if (fd < 0 || static_cast<std::size_t>(fd) >= slots_.size() || !slots_[fd].file) return nullptr;
  auto f = std::move(slots_[fd].file);
  slots_[fd].file.reset();
  ++slots_[fd].generation;
  --f->refs;
  return f;
}

std::vector<int> FdTable::open_fds() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (slots_[i].file) out.push_back(static_cast<int>(i));
  }
  return out;
}

}  // namespace procwasm::kernel
