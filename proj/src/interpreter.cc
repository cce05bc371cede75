#include "wasmleak/interpreter.h"

#include <cstring>
#include <limits>

#include "wasmleak/error.h"

namespace wasmleak {

std::string_view TrapName(Trap trap) {
  switch (trap) {
    case Trap::kNone:
      return "none";
    case Trap::kStackUnderflow:
      return "stack_underflow";
    case Trap::kOutOfBounds:
      return "out_of_bounds";
    case Trap::kDivideByZero:
      return "divide_by_zero";
    case Trap::kIntegerOverflow:
      return "integer_overflow";
    case Trap::kCallStackExhausted:
      return "call_stack_exhausted";
  }
  return "unknown";
}

namespace {

struct ControlLabel {
  size_t opener;
  size_t height;
};

struct Frame {
  size_t return_pc;
  size_t label_base;
  size_t locals_base;
  uint32_t addr;
};

struct TrapSignal {
  Trap trap;
};

int64_t Wrap32(int64_t v) { return static_cast<int32_t>(static_cast<uint32_t>(v)); }

class Machine {
 public:
  Machine(const FlatModule& module, const ControlMap& control)
      : module_(module),
        control_(control),
        offsets_(BytecodeOffsets(module)),
        globals_(module.globals_count, 0),
        memory_(static_cast<size_t>(std::min(module.initial_memory_pages,
                                             kMaxMemoryPages)) *
                    kWasmPageSize,
                0) {
    frame_bytes_ = kFrameHeaderBytes + 8u * module.locals_count;
    locals_.assign(module.locals_count, 0);
    frames_.push_back({0, 0, 0, 0});
  }

  OpcodeTrace Run(size_t step_limit) {
    OpcodeTrace trace;
    size_t pc = 0;
    const size_t n = module_.instructions.size();
    while (true) {
      if (pc >= n || pc == RegionEnd()) {
        if (frames_.size() == 1) break;
        pc = Return();
        continue;
      }
      if (trace.executed.size() >= step_limit) {
        trace.step_limit_hit = true;
        break;
      }
      const Instruction& ins = module_.instructions[pc];
      StepContext ctx;
      ctx.ip = offsets_[pc];
      ctx.stack_ptr = StackPtr();
      ctx.frame_addr = frames_.back().addr;
      bool finished = false;
      try {
        pc = Step(pc, ins, ctx, finished);
      } catch (const TrapSignal& signal) {
        trace.trap = signal.trap;
        break;
      }
      trace.executed.push_back(ins.op);
      trace.contexts.push_back(ctx);
      if (finished) break;
    }
    trace.final_stack_depth = stack_.size();
    return trace;
  }

 private:
  size_t RegionEnd() const {
    if (frames_.size() == 1) {
      return module_.labels.empty() ? module_.instructions.size()
                                    : module_.labels.front().start;
    }
    return function_end_.back();
  }

  uint32_t StackPtr() const {
    return static_cast<uint32_t>(frames_.size() * frame_bytes_ +
                                 8 * stack_.size());
  }

  int64_t Pop() {
    if (stack_.empty()) throw TrapSignal{Trap::kStackUnderflow};
    const int64_t v = stack_.back();
    stack_.pop_back();
    return v;
  }

  void Push(int64_t v) { stack_.push_back(v); }

  size_t Return() {
    const Frame f = frames_.back();
    frames_.pop_back();
    function_end_.pop_back();
    labels_.resize(f.label_base);
    locals_.resize(f.locals_base);
    return f.return_pc;
  }

  size_t Branch(size_t depth) {
    const size_t target = labels_.size() - 1 - depth;
    const ControlLabel label = labels_[target];
    if (stack_.size() < label.height) throw TrapSignal{Trap::kStackUnderflow};
    stack_.resize(label.height);
    if (module_.instructions[label.opener].op == Opcode::kLoop) {
      labels_.resize(target + 1);
      return label.opener + 1;
    }
    labels_.resize(target);
    return control_.end_of[label.opener] + 1;
  }

  uint32_t EffectiveAddress(const Instruction& ins, uint32_t size) {
    const uint64_t base = static_cast<uint32_t>(Pop());
    const uint64_t addr = base + static_cast<uint64_t>(ins.immediates[0]);
    if (addr + size > memory_.size()) throw TrapSignal{Trap::kOutOfBounds};
    return static_cast<uint32_t>(addr);
  }

  size_t Step(size_t pc, const Instruction& ins, StepContext& ctx,
              bool& finished) {
    const size_t next = pc + 1;
    const size_t locals_base = frames_.back().locals_base;
    switch (ins.op) {
      case Opcode::kNop:
        return next;
      case Opcode::kBlock:
      case Opcode::kLoop:
        labels_.push_back({pc, stack_.size()});
        return next;
      case Opcode::kIf: {
        const bool cond = Pop() != 0;
        ctx.taken = !cond;
        if (cond) {
          labels_.push_back({pc, stack_.size()});
          return next;
        }
        if (control_.else_of[pc] != ControlMap::kNone) {
          labels_.push_back({pc, stack_.size()});
          return control_.else_of[pc] + 1;
        }
        return control_.end_of[pc] + 1;
      }
      case Opcode::kElse:
        labels_.pop_back();
        return control_.end_of[pc] + 1;
      case Opcode::kEnd:
        labels_.pop_back();
        return next;
      case Opcode::kBr:
        ctx.taken = true;
        return Branch(static_cast<size_t>(ins.immediates[0]));
      case Opcode::kBrIf:
        if (Pop() != 0) {
          ctx.taken = true;
          return Branch(static_cast<size_t>(ins.immediates[0]));
        }
        return next;
      case Opcode::kReturn:
        if (frames_.size() == 1) {
          finished = true;
          return next;
        }
        return Return();
      case Opcode::kCall: {
        if (frames_.size() >= kMaxCallDepth) {
          throw TrapSignal{Trap::kCallStackExhausted};
        }
        const size_t target = static_cast<size_t>(ins.immediates[0]);
        frames_.push_back({next, labels_.size(), locals_.size(),
                           static_cast<uint32_t>(frames_.size() *
                                                 frame_bytes_)});
        function_end_.push_back(target < control_.region_end.size()
                                    ? control_.region_end[target]
                                    : module_.instructions.size());
        locals_.resize(locals_.size() + module_.locals_count, 0);
        return target;
      }
      case Opcode::kDrop:
        Pop();
        return next;
      case Opcode::kSelect: {
        const int64_t c = Pop();
        const int64_t b = Pop();
        const int64_t a = Pop();
        Push(c != 0 ? a : b);
        return next;
      }
      case Opcode::kLocalGet: {
        const size_t idx = static_cast<size_t>(ins.immediates[0]);
        ctx.local_addr = frames_.back().addr + kFrameHeaderBytes + 8 * idx;
        Push(locals_[locals_base + idx]);
        return next;
      }
      case Opcode::kLocalSet:
      case Opcode::kLocalTee: {
        const size_t idx = static_cast<size_t>(ins.immediates[0]);
        ctx.local_addr = frames_.back().addr + kFrameHeaderBytes + 8 * idx;
        const int64_t v = Pop();
        locals_[locals_base + idx] = v;
        if (ins.op == Opcode::kLocalTee) Push(v);
        return next;
      }
      case Opcode::kGlobalGet:
        Push(globals_[static_cast<size_t>(ins.immediates[0])]);
        return next;
      case Opcode::kGlobalSet:
        globals_[static_cast<size_t>(ins.immediates[0])] = Pop();
        return next;
      case Opcode::kI32Load: {
        const uint32_t addr = EffectiveAddress(ins, 4);
        ctx.memory_addr = addr;
        int32_t v;
        std::memcpy(&v, memory_.data() + addr, 4);
        Push(v);
        return next;
      }
      case Opcode::kI64Load: {
        const uint32_t addr = EffectiveAddress(ins, 8);
        ctx.memory_addr = addr;
        int64_t v;
        std::memcpy(&v, memory_.data() + addr, 8);
        Push(v);
        return next;
      }
      case Opcode::kI32Store: {
        const int32_t v = static_cast<int32_t>(Pop());
        const uint32_t addr = EffectiveAddress(ins, 4);
        ctx.memory_addr = addr;
        std::memcpy(memory_.data() + addr, &v, 4);
        return next;
      }
      case Opcode::kI64Store: {
        const int64_t v = Pop();
        const uint32_t addr = EffectiveAddress(ins, 8);
        ctx.memory_addr = addr;
        std::memcpy(memory_.data() + addr, &v, 8);
        return next;
      }
      case Opcode::kMemoryGrow: {
        const uint64_t delta = static_cast<uint32_t>(Pop());
        const uint64_t pages = memory_.size() / kWasmPageSize;
        if (pages + delta > kMaxMemoryPages) {
          Push(-1);
        } else {
          memory_.resize((pages + delta) * kWasmPageSize, 0);
          Push(static_cast<int64_t>(pages));
        }
        return next;
      }
      case Opcode::kI32Const:
        Push(Wrap32(ins.immediates[0]));
        return next;
      case Opcode::kI64Const:
        Push(ins.immediates[0]);
        return next;
      case Opcode::kI32Eqz:
        Push(Wrap32(Pop()) == 0);
        return next;
      case Opcode::kI64Eqz:
        Push(Pop() == 0);
        return next;
      default:
        break;
    }
    Binary(ins.op);
    return next;
  }

  void Binary(Opcode op) {
    const int64_t rhs = Pop();
    const int64_t lhs = Pop();
    const bool narrow = Info(op).width == ValueWidth::k32;
    const int64_t a = narrow ? Wrap32(lhs) : lhs;
    const int64_t b = narrow ? Wrap32(rhs) : rhs;
    const uint64_t ua = static_cast<uint64_t>(a);
    const uint64_t ub = static_cast<uint64_t>(b);
    const int64_t min = narrow ? std::numeric_limits<int32_t>::min()
                               : std::numeric_limits<int64_t>::min();
    const unsigned bits = narrow ? 32 : 64;
    int64_t r = 0;
    switch (op) {
      case Opcode::kI32Add:
      case Opcode::kI64Add:
        r = static_cast<int64_t>(ua + ub);
        break;
      case Opcode::kI32Sub:
      case Opcode::kI64Sub:
        r = static_cast<int64_t>(ua - ub);
        break;
      case Opcode::kI32Mul:
      case Opcode::kI64Mul:
        r = static_cast<int64_t>(ua * ub);
        break;
      case Opcode::kI32DivS:
      case Opcode::kI64DivS:
        if (b == 0) throw TrapSignal{Trap::kDivideByZero};
        if (a == min && b == -1) throw TrapSignal{Trap::kIntegerOverflow};
        r = a / b;
        break;
      case Opcode::kI32RemS:
      case Opcode::kI64RemS:
        if (b == 0) throw TrapSignal{Trap::kDivideByZero};
        r = (a == min && b == -1) ? 0 : a % b;
        break;
      case Opcode::kI32And:
      case Opcode::kI64And:
        r = a & b;
        break;
      case Opcode::kI32Or:
      case Opcode::kI64Or:
        r = a | b;
        break;
      case Opcode::kI32Xor:
      case Opcode::kI64Xor:
        r = a ^ b;
        break;
      case Opcode::kI32Shl:
      case Opcode::kI64Shl:
        r = static_cast<int64_t>(ua << (ub % bits));
        break;
      case Opcode::kI32ShrS:
      case Opcode::kI64ShrS:
        r = a >> (ub % bits);
        break;
      case Opcode::kI32Eq:
      case Opcode::kI64Eq:
        r = a == b;
        break;
      case Opcode::kI32Ne:
      case Opcode::kI64Ne:
        r = a != b;
        break;
      case Opcode::kI32LtS:
      case Opcode::kI64LtS:
        r = a < b;
        break;
      case Opcode::kI32GtS:
      case Opcode::kI64GtS:
        r = a > b;
        break;
      case Opcode::kI32LeS:
      case Opcode::kI64LeS:
        r = a <= b;
        break;
      case Opcode::kI32GeS:
      case Opcode::kI64GeS:
        r = a >= b;
        break;
      default:
        break;
    }
    Push(narrow ? Wrap32(r) : r);
  }

  const FlatModule& module_;
  const ControlMap& control_;
  std::vector<uint32_t> offsets_;
  std::vector<int64_t> stack_;
  std::vector<int64_t> locals_;
  std::vector<int64_t> globals_;
  std::vector<uint8_t> memory_;
  std::vector<ControlLabel> labels_;
  std::vector<Frame> frames_;
  std::vector<size_t> function_end_;
  size_t frame_bytes_ = 0;
};

}  // namespace

OpcodeTrace Execute(const FlatModule& module, size_t step_limit) {
  if (step_limit == 0) throw PreconditionError("step limit must be positive");
  const ControlMap control = AnalyzeControl(module);
  Machine machine(module, control);
  return machine.Run(step_limit);
}

}  // namespace wasmleak
