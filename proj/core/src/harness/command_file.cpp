#include "procwasm/harness/command_file.hpp"

#include <fstream>
#include <sstream>

namespace procwasm::harness {

std::vector<std::string> CommandEntry::argv() const {
  std::vector<std::string> v{program};
  v.insert(v.end(), args.begin(), args.end());
  return v;
}

namespace {

void check_path(std::size_t line, const std::string& what, const std::string& p) {
  if (p.empty() || p.front() != '/') throw CommandFileError(line, what + " must be an absolute vfs path");
}

}  // namespace

CommandFile parse_command_file(std::string_view text) {
  CommandFile cf;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    while (!line.empty() && line.back() == ' ') line.remove_suffix(1);
    if (line.empty()) continue;

    std::vector<std::string> tokens;
    std::size_t i = 0;
    for (;;) {
      auto j = line.find(' ', i);
      auto tok = line.substr(i, j == std::string_view::npos ? std::string_view::npos : j - i);
      if (tok.empty()) throw CommandFileError(line_no, "tokens must be separated by single spaces");
      tokens.emplace_back(tok);
      if (j == std::string_view::npos) break;
      i = j + 1;
    }
    if (tokens.size() < 3) throw CommandFileError(line_no, "expected out=<path> err=<path> <program> [args]");
    if (!tokens[0].starts_with("out=")) throw CommandFileError(line_no, "first token must be out=<path>");
    if (!tokens[1].starts_with("err=")) throw CommandFileError(line_no, "second token must be err=<path>");
    CommandEntry e;
    e.stdout_path = tokens[0].substr(4);
    e.stderr_path = tokens[1].substr(4);
    e.program = tokens[2];
    e.args.assign(tokens.begin() + 3, tokens.end());
    check_path(line_no, "out", e.stdout_path);
    check_path(line_no, "err", e.stderr_path);
    check_path(line_no, "program", e.program);
    cf.entries.push_back(std::move(e));
  }
  return cf;
}

CommandFile load_command_file(const std::string& host_path) {
  std::ifstream in(host_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open command file " + host_path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_command_file(ss.str());
}

std::string format_command_file(const CommandFile& cf) {
  std::string out;
  for (const auto& e : cf.entries) {
    out += "out=" + e.stdout_path + " err=" + e.stderr_path + " " + e.program;
    for (const auto& a : e.args) out += " " + a;
    out += "\n";
  }
  return out;
}

}  // namespace procwasm::harness
