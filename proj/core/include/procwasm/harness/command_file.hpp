#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace procwasm::harness {

class CommandFileError : public std::runtime_error {
 public:
  CommandFileError(std::size_t line, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg), line(line) {}
  std::size_t line;
};

struct CommandEntry {
  std::string stdout_path;
  std::string stderr_path;
  std::string program;
  std::vector<std::string> args;  // after the program

  /// argv as the guest sees it: program followed by args.
  std::vector<std::string> argv() const;
  friend bool operator==(const CommandEntry&, const CommandEntry&) = default;
};

struct CommandFile {
  std::vector<CommandEntry> entries;
  friend bool operator==(const CommandFile&, const CommandFile&) = default;
};

/// Grammar, one entry per line:
///   out=<vfs-path> err=<vfs-path> <program> <arg>*
/// Tokens are separated by single spaces, no quoting. '#' starts a comment
/// (anywhere on the line); blank lines are ignored.
CommandFile parse_command_file(std::string_view text);
CommandFile load_command_file(const std::string& host_path);
std::string format_command_file(const CommandFile& cf);

}  // namespace procwasm::harness
