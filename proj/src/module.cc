#include "wasmleak/module.h"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "wasmleak/error.h"

namespace wasmleak {
namespace {

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> Tokens(std::string_view line) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

[[noreturn]] void Fail(size_t line, const std::string& msg) {
  throw FormatError("line " + std::to_string(line) + ": " + msg);
}

int64_t ParseInteger(std::string_view token, size_t line) {
  int64_t value = 0;
  std::string_view digits = token;
  bool negative = false;
  if (!digits.empty() && (digits.front() == '-' || digits.front() == '+')) {
    negative = digits.front() == '-';
    digits.remove_prefix(1);
  }
  int base = 10;
  if (digits.size() > 2 && digits[0] == '0' &&
      (digits[1] == 'x' || digits[1] == 'X')) {
    base = 16;
    digits.remove_prefix(2);
  }
  uint64_t magnitude = 0;
  auto [ptr, ec] =
      std::from_chars(digits.data(), digits.data() + digits.size(), magnitude,
                      base);
  if (digits.empty() || ec != std::errc() ||
      ptr != digits.data() + digits.size()) {
    Fail(line, "invalid integer '" + std::string(token) + "'");
  }
  value = static_cast<int64_t>(magnitude);
  return negative ? -value : value;
}

bool IsIdentifier(std::string_view name) {
  if (name.empty()) return false;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '.' || c == '$';
    if (!ok) return false;
  }
  return true;
}

// `lines` maps instruction index to source line for error messages; it may be
// empty when validating a module built in memory.
ControlMap Analyze(const FlatModule& module, const std::vector<size_t>& lines) {
  const size_t n = module.instructions.size();
  auto where = [&](size_t index) -> size_t {
    return index < lines.size() ? lines[index] : index + 1;
  };
  auto fail = [&](size_t index, const std::string& msg) {
    if (lines.empty()) {
      throw FormatError("instruction " + std::to_string(index) + ": " + msg);
    }
    Fail(where(index), msg);
  };

  ControlMap map;
  map.end_of.assign(n, ControlMap::kNone);
  map.else_of.assign(n, ControlMap::kNone);
  map.region_end.assign(n, n);

  std::vector<size_t> region_starts = {0};
  for (size_t i = 0; i < module.labels.size(); ++i) {
    const auto& label = module.labels[i];
    if (label.start > n) {
      throw FormatError("label @" + label.name + " starts past the end");
    }
    if (label.start < region_starts.back()) {
      throw FormatError("label @" + label.name + " is out of order");
    }
    region_starts.push_back(label.start);
  }
  region_starts.push_back(n);

  for (size_t r = 0; r + 1 < region_starts.size(); ++r) {
    const size_t begin = region_starts[r];
    const size_t end = region_starts[r + 1];
    std::vector<size_t> open;
    for (size_t i = begin; i < end; ++i) {
      map.region_end[i] = end;
      const Instruction& ins = module.instructions[i];
      if (static_cast<int>(ins.immediates.size()) != ImmediateCount(ins.op)) {
        fail(i, std::string(Mnemonic(ins.op)) + " expects " +
                    std::to_string(ImmediateCount(ins.op)) + " immediate(s)");
      }
      switch (ins.op) {
        case Opcode::kBlock:
        case Opcode::kLoop:
        case Opcode::kIf:
          open.push_back(i);
          break;
        case Opcode::kElse: {
          if (open.empty() ||
              module.instructions[open.back()].op != Opcode::kIf ||
              map.else_of[open.back()] != ControlMap::kNone) {
            fail(i, "else without a matching if");
          }
          map.else_of[open.back()] = i;
          break;
        }
        case Opcode::kEnd: {
          if (open.empty()) fail(i, "end without an open block");
          const size_t opener = open.back();
          open.pop_back();
          map.end_of[opener] = i;
          if (map.else_of[opener] != ControlMap::kNone) {
            map.end_of[map.else_of[opener]] = i;
          }
          break;
        }
        case Opcode::kBr:
        case Opcode::kBrIf: {
          const int64_t depth = ins.immediates[0];
          if (depth < 0 || static_cast<size_t>(depth) >= open.size()) {
            fail(i, "branch depth " + std::to_string(depth) +
                        " exceeds nesting depth " +
                        std::to_string(open.size()));
          }
          break;
        }
        case Opcode::kLocalGet:
        case Opcode::kLocalSet:
        case Opcode::kLocalTee:
          if (ins.immediates[0] < 0 ||
              ins.immediates[0] >= static_cast<int64_t>(module.locals_count)) {
            fail(i, "local index out of range");
          }
          break;
        case Opcode::kGlobalGet:
        case Opcode::kGlobalSet:
          if (ins.immediates[0] < 0 ||
              ins.immediates[0] >= static_cast<int64_t>(module.globals_count)) {
            fail(i, "global index out of range");
          }
          break;
        case Opcode::kCall: {
          bool found = false;
          for (const auto& label : module.labels) {
            if (label.name == ins.target &&
                static_cast<int64_t>(label.start) == ins.immediates[0]) {
              found = true;
            }
          }
          if (!found) fail(i, "call to unknown label @" + ins.target);
          break;
        }
        case Opcode::kI32Load:
        case Opcode::kI64Load:
        case Opcode::kI32Store:
        case Opcode::kI64Store:
          if (ins.immediates[0] < 0) fail(i, "negative memory offset");
          break;
        default:
          break;
      }
    }
    if (!open.empty()) fail(open.back(), "unterminated block");
  }
  return map;
}

size_t SignedLebSize(int64_t value) {
  size_t size = 0;
  bool more = true;
  while (more) {
    const uint8_t byte = value & 0x7f;
    value >>= 7;
    more = !((value == 0 && !(byte & 0x40)) || (value == -1 && (byte & 0x40)));
    ++size;
  }
  return size;
}

}  // namespace

FlatModule ParseFlatModule(std::string_view text) {
  FlatModule module;
  std::vector<size_t> lines;
  struct PendingCall {
    size_t index;
    size_t line;
  };
  std::vector<PendingCall> calls;
  std::map<std::string, size_t, std::less<>> label_index;

  size_t line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;

    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (line.empty()) {
      if (eol == text.size()) break;
      continue;
    }

    if (line.front() == '@') {
      if (line.back() != ':' || line.size() < 3) {
        Fail(line_no, "malformed label '" + std::string(line) + "'");
      }
      std::string name(line.substr(1, line.size() - 2));
      if (!IsIdentifier(name)) Fail(line_no, "invalid label name '" + name + "'");
      if (label_index.count(name)) Fail(line_no, "duplicate label @" + name);
      label_index.emplace(name, module.instructions.size());
      module.labels.push_back({name, module.instructions.size()});
      if (eol == text.size()) break;
      continue;
    }

    const auto tokens = Tokens(line);
    if (tokens.front().front() == '.') {
      if (tokens.size() != 2) Fail(line_no, "directive expects one value");
      const int64_t value = ParseInteger(tokens[1], line_no);
      if (value < 0 || value > 1 << 20) {
        Fail(line_no, "directive value out of range");
      }
      if (tokens[0] == ".locals") {
        module.locals_count = static_cast<uint32_t>(value);
      } else if (tokens[0] == ".globals") {
        module.globals_count = static_cast<uint32_t>(value);
      } else if (tokens[0] == ".memory") {
        module.initial_memory_pages = static_cast<uint32_t>(value);
      } else {
        Fail(line_no, "unknown directive '" + std::string(tokens[0]) + "'");
      }
      if (eol == text.size()) break;
      continue;
    }

    auto op = OpcodeFromMnemonic(tokens[0]);
    if (!op) Fail(line_no, "unknown mnemonic '" + std::string(tokens[0]) + "'");
    const size_t given = tokens.size() - 1;
    if (static_cast<int>(given) != ImmediateCount(*op)) {
      Fail(line_no, std::string(tokens[0]) + " expects " +
                        std::to_string(ImmediateCount(*op)) +
                        " immediate(s), got " + std::to_string(given));
    }
    Instruction ins;
    ins.op = *op;
    if (*op == Opcode::kCall) {
      std::string_view target = tokens[1];
      if (target.size() < 2 || target.front() != '@') {
        Fail(line_no, "call expects an @label immediate");
      }
      ins.target = std::string(target.substr(1));
      ins.immediates.push_back(0);
      calls.push_back({module.instructions.size(), line_no});
    } else {
      for (size_t t = 1; t < tokens.size(); ++t) {
        ins.immediates.push_back(ParseInteger(tokens[t], line_no));
      }
    }
    module.instructions.push_back(std::move(ins));
    lines.push_back(line_no);
    if (eol == text.size()) break;
  }

  for (const auto& call : calls) {
    auto& ins = module.instructions[call.index];
    auto it = label_index.find(ins.target);
    if (it == label_index.end()) {
      Fail(call.line, "call to unknown label @" + ins.target);
    }
    ins.immediates[0] = static_cast<int64_t>(it->second);
  }

  Analyze(module, lines);
  return module;
}

FlatModule LoadFlatModule(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open module file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return ParseFlatModule(buffer.str());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string SerializeFlatModule(const FlatModule& module) {
  std::ostringstream out;
  out << ".locals " << module.locals_count << '\n';
  out << ".globals " << module.globals_count << '\n';
  out << ".memory " << module.initial_memory_pages << '\n';
  size_t next_label = 0;
  for (size_t i = 0; i <= module.instructions.size(); ++i) {
    while (next_label < module.labels.size() &&
           module.labels[next_label].start == i) {
      out << '@' << module.labels[next_label].name << ":\n";
      ++next_label;
    }
    if (i == module.instructions.size()) break;
    const Instruction& ins = module.instructions[i];
    out << Mnemonic(ins.op);
    if (ins.op == Opcode::kCall) {
      out << " @" << ins.target;
    } else {
      for (int64_t imm : ins.immediates) out << ' ' << imm;
    }
    out << '\n';
  }
  return out.str();
}

ControlMap AnalyzeControl(const FlatModule& module) {
  return Analyze(module, {});
}

std::vector<uint32_t> BytecodeOffsets(const FlatModule& module) {
  std::vector<uint32_t> offsets;
  offsets.reserve(module.instructions.size() + 1);
  uint32_t offset = 0;
  for (const auto& ins : module.instructions) {
    offsets.push_back(offset);
    offset += 1;
    for (int64_t imm : ins.immediates) {
      offset += static_cast<uint32_t>(SignedLebSize(imm));
    }
  }
  offsets.push_back(offset);
  return offsets;
}

}  // namespace wasmleak
