#ifndef WASMLEAK_MODULE_H_
#define WASMLEAK_MODULE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "wasmleak/opcode.h"

namespace wasmleak {

struct Instruction {
  Opcode op = Opcode::kNop;
  // For call the single immediate is the instruction index of the callee's
  // first instruction; `target` keeps the label name.
  std::vector<int64_t> immediates;
  std::string target;

  bool operator==(const Instruction&) const = default;
};

struct FunctionLabel {
  std::string name;
  size_t start = 0;  // index of the first instruction of the region

  bool operator==(const FunctionLabel&) const = default;
};

// A single flat instruction stream. Instructions before the first label form
// the entry region; every `@name:` label opens a function region that runs up
// to the next label or the end of the stream.
struct FlatModule {
  std::vector<Instruction> instructions;
  std::vector<FunctionLabel> labels;
  uint32_t locals_count = 0;
  uint32_t globals_count = 0;
  uint32_t initial_memory_pages = 0;

  bool operator==(const FlatModule&) const = default;
};

// Static control structure, derived once and shared by the interpreter.
struct ControlMap {
  static constexpr size_t kNone = static_cast<size_t>(-1);

  // For block/loop/if/else: index of the matching end. kNone elsewhere.
  std::vector<size_t> end_of;
  // For if: index of its else, or kNone.
  std::vector<size_t> else_of;
  // One past the last instruction of the region containing each instruction.
  std::vector<size_t> region_end;
};

// Parses the line-oriented module text. Throws FormatError with the line
// number on syntax errors, unknown mnemonics, immediate arity mismatches,
// unbalanced control structure and out-of-range branch depths.
FlatModule ParseFlatModule(std::string_view text);
FlatModule LoadFlatModule(const std::filesystem::path& path);

std::string SerializeFlatModule(const FlatModule& module);

// Validates structure and returns the control map. Throws FormatError.
ControlMap AnalyzeControl(const FlatModule& module);

// Byte offset of every instruction in a compact encoding (one opcode byte plus
// signed LEB128 immediates). One extra trailing entry holds the total size.
std::vector<uint32_t> BytecodeOffsets(const FlatModule& module);

}  // namespace wasmleak

#endif  // WASMLEAK_MODULE_H_
