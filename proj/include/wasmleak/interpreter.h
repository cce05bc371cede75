#ifndef WASMLEAK_INTERPRETER_H_
#define WASMLEAK_INTERPRETER_H_

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "wasmleak/module.h"
#include "wasmleak/opcode.h"

namespace wasmleak {

enum class Trap : uint8_t {
  kNone,
  kStackUnderflow,
  kOutOfBounds,
  kDivideByZero,
  kIntegerOverflow,
  kCallStackExhausted,
};

std::string_view TrapName(Trap trap);

// Interpreter state observed while an opcode retires. Addresses are byte
// offsets inside the interpreter's own stack area (operand slots, locals,
// frame headers), the bytecode image, or linear memory. The machine model
// maps them onto page frames.
struct StepContext {
  uint32_t ip = 0;           // bytecode offset of the instruction
  uint32_t stack_ptr = 0;    // first free operand slot before the opcode ran
  uint32_t frame_addr = 0;   // header of the active call frame
  uint32_t local_addr = 0;   // addressed local (local.* only)
  uint32_t memory_addr = 0;  // effective linear-memory address (load/store)
  // Control left the fall-through path: br, br_if taken, or if skipping to
  // its else / end.
  bool taken = false;

  bool operator==(const StepContext&) const = default;
};

struct OpcodeTrace {
  std::vector<Opcode> executed;
  std::vector<StepContext> contexts;  // parallel to `executed`
  bool step_limit_hit = false;
  Trap trap = Trap::kNone;
  size_t final_stack_depth = 0;

  bool operator==(const OpcodeTrace&) const = default;
};

inline constexpr uint32_t kWasmPageSize = 65536;
inline constexpr uint32_t kMaxMemoryPages = 64;
inline constexpr uint32_t kFrameHeaderBytes = 32;
inline constexpr size_t kMaxCallDepth = 512;

// Runs the module from instruction 0 until the entry region ends, a return
// executes in the entry region, a trap fires, or `step_limit` opcodes have
// retired. A trapping opcode is not recorded as retired.
OpcodeTrace Execute(const FlatModule& module, size_t step_limit);

}  // namespace wasmleak

#endif  // WASMLEAK_INTERPRETER_H_
