#ifndef WASMLEAK_MACHINE_MODEL_H_
#define WASMLEAK_MACHINE_MODEL_H_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wasmleak/interpreter.h"
#include "wasmleak/opcode.h"

namespace wasmleak {

using PageFrame = uint64_t;

enum class PageClass : uint8_t {
  kOptable,
  kStack,
  kHandlerCode,
  kBytecode,
  kMarker,
  kLinearMem,
  kOther,
};

std::string_view PageClassName(PageClass c);

// ---------------------------------------------------------------------------
// Memory layout
// ---------------------------------------------------------------------------

struct LayoutConfig {
  uint64_t page_size = 4096;
  uint32_t handler_pages = 6;
  uint32_t stack_pages = 2;
  uint32_t bytecode_pages = 2;
  uint32_t linear_mem_pages = 4;
  // Pool of frames used by code outside the interpreter (kernel, other
  // processes) during context switches.
  uint32_t other_pages = 512;
  // Offset of the interpreter stack area inside the first stack page. The
  // default places frame headers and locals at the end of one page and the
  // operand stack on the next.
  uint32_t stack_base_offset = 4032;
  // Frames are drawn from [base_frame, base_frame + frame_span).
  uint64_t base_frame = 0x7f000;
  uint64_t frame_span = 1 << 16;

  bool operator==(const LayoutConfig&) const = default;
};

// Page frames of the loaded interpreter image. Fixed for the lifetime of the
// process, so a pure function of (seed, config).
struct MemoryLayout {
  uint64_t seed = 0;
  LayoutConfig config;
  PageFrame optable_page = 0;
  PageFrame marker_page = 0;
  // Page holding the interpreter loop entry that performs the first dispatch.
  PageFrame entry_page = 0;
  std::vector<PageFrame> handler_code_pages;
  std::map<Opcode, PageFrame> handler_pages;
  std::vector<PageFrame> stack_pages;
  std::vector<PageFrame> bytecode_pages;
  std::vector<PageFrame> linear_mem_pages;
  std::vector<PageFrame> other_pages;

  PageClass ClassOf(PageFrame frame) const;

  PageFrame StackPage(uint32_t stack_addr) const;
  PageFrame BytecodePage(uint32_t offset) const;
  PageFrame LinearPage(uint32_t addr) const;
  // Module instance data (globals) lives on the last bytecode page.
  PageFrame GlobalsPage() const { return bytecode_pages.back(); }

  bool operator==(const MemoryLayout&) const = default;
};

// Throws ConfigError when the configuration requests more distinct frames
// than the span provides or has zero-sized required classes.
MemoryLayout BuildLayout(uint64_t seed, const LayoutConfig& config = {});

// Re-draws the opcode -> handler page assignment.
MemoryLayout ShuffleHandlerPages(const MemoryLayout& layout, uint64_t seed);

// ---------------------------------------------------------------------------
// Handler templates
// ---------------------------------------------------------------------------

enum class StepKind : uint8_t { kRegOp, kLoad, kStore, kExecBranch };

std::string_view StepKindName(StepKind kind);

// Which address a data access touches; resolved against the StepContext of
// the retiring opcode.
enum class AddressRef : uint8_t {
  kNone,     // fixed by the target class (optable, linear memory, bytecode)
  kOperand,  // operand slot `slot` relative to the first free slot
  kLocal,    // the local addressed by local.get/set/tee
  kFrame,    // the active frame header (control labels, return info)
  kGlobals,  // module instance data
};

struct NativeStep {
  StepKind kind = StepKind::kRegOp;
  PageClass target_class = PageClass::kHandlerCode;
  uint32_t base_latency = 0;
  uint8_t pf_count = 1;
  AddressRef ref = AddressRef::kNone;
  int8_t slot = 0;

  bool operator==(const NativeStep&) const = default;
};

struct LatencyDefaults {
  uint32_t reg_op = 5280;
  uint32_t load = 5540;
  uint32_t store = 5400;
  uint32_t exec_branch = 5309;
};

struct PageFaultDefaults {
  uint8_t exec = 5;
  uint8_t read_stack = 7;
  uint8_t read_other = 8;
  uint8_t write = 9;
};

// Native instruction template of one opcode handler. `steps` is the
// fall-through path; `branch_steps`, when present, is used whenever the
// opcode transfers control (br_if taken, if skipping to else/end).
struct HandlerSpec {
  Opcode opcode = Opcode::kNop;
  std::vector<NativeStep> steps;
  std::vector<NativeStep> branch_steps;
  uint32_t extra_optable_accesses = 0;

  const std::vector<NativeStep>& PathFor(bool taken) const {
    return taken && !branch_steps.empty() ? branch_steps : steps;
  }
  bool operator==(const HandlerSpec&) const = default;
};

// One or more semantically equivalent variants per opcode. Synthesis draws a
// variant uniformly per retired opcode; unmitigated tables hold exactly one.
using HandlerTable = std::map<Opcode, std::vector<HandlerSpec>>;

// Number of steps in the shared dispatch tail (bytecode fetch, optable
// lookup, indirect jump).
inline constexpr size_t kDispatchTailSteps = 3;

// Templates for every supported opcode, modelled on the classic interpreter's
// computed-goto handlers.
HandlerTable DefaultHandlerSpecs(const LatencyDefaults& latency = {},
                                 const PageFaultDefaults& pf = {});

// Checks the dispatch-tail invariant and optable-access bookkeeping.
// Returns an empty string when the spec is well formed.
std::string ValidateHandlerSpec(const HandlerSpec& spec);

// ---------------------------------------------------------------------------
// Noise, mitigations and synthesis
// ---------------------------------------------------------------------------

struct NoiseModel {
  double latency_jitter_sigma = 60.0;
  uint32_t apic_quantum = 35;
  double ctx_switch_rate = 1953.0 / 1e7;
  double ctx_switch_extra_steps_mean = 4409447.0 / 1953.0;
  double multistep_prob = 10.0 / 2810963156.0;
  uint64_t rng_seed = 0;

  static NoiseModel Zero() {
    NoiseModel n;
    n.latency_jitter_sigma = 0;
    n.apic_quantum = 0;
    n.ctx_switch_rate = 0;
    n.ctx_switch_extra_steps_mean = 0;
    n.multistep_prob = 0;
    return n;
  }
  // Throws ConfigError when a rate leaves [0,1] or sigma is negative.
  void Validate() const;
  std::string Canonical() const;
  bool operator==(const NoiseModel&) const = default;
};

struct MitigationConfig {
  double nop_insertion_prob = 0.0;
  bool shuffle_handlers = false;
  uint32_t variant_count = 1;
  uint64_t seed = 0;

  bool IsIdentity() const {
    return nop_insertion_prob == 0.0 && !shuffle_handlers && variant_count == 1;
  }
  void Validate() const;
  std::string Canonical() const;
  bool operator==(const MitigationConfig&) const = default;
};

// Inserts REG_OP nops into the gaps of each handler body (never inside the
// dispatch tail) and, for variant_count > 1, produces that many independently
// drawn variants per opcode. Handler page shuffling is a layout-level change,
// see ShuffleHandlerPages.
HandlerTable ApplyMitigation(const HandlerTable& table,
                             const MitigationConfig& mitigation,
                             uint64_t seed);

enum class AccessMode : uint8_t { kRead, kWrite, kExec };

char ModeChar(AccessMode mode);
std::optional<AccessMode> ModeFromChar(char c);

struct StepEvent {
  PageFrame page = 0;
  AccessMode mode = AccessMode::kExec;
  uint32_t pf_count = 1;
  uint64_t latency = 1;

  bool operator==(const StepEvent&) const = default;
};

struct TruthBoundary {
  size_t index = 0;  // event index of the optable read
  Label label;       // opcode dispatched into, or NULL for extra accesses

  bool operator==(const TruthBoundary&) const = default;
};

struct SideChannelTrace {
  std::vector<StepEvent> events;
  std::vector<TruthBoundary> truth;
  uint64_t layout_seed = 0;

  bool operator==(const SideChannelTrace&) const = default;
};

struct SynthesisOptions {
  bool profiling_markers = false;
};

// Emits the page-fault / latency channel of the interpreter executing
// `opcodes`. Throws PreconditionError when an opcode has no handler.
SideChannelTrace SynthesizeTrace(const OpcodeTrace& opcodes,
                                 const MemoryLayout& layout,
                                 const HandlerTable& handlers,
                                 const NoiseModel& noise,
                                 const SynthesisOptions& options = {});

// Sum of base latencies over a handler path.
uint64_t HandlerLatency(const HandlerSpec& spec, bool taken = false);

}  // namespace wasmleak

#endif  // WASMLEAK_MACHINE_MODEL_H_
