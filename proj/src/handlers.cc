#include <algorithm>

#include "wasmleak/machine_model.h"

namespace wasmleak {

std::string_view StepKindName(StepKind kind) {
  switch (kind) {
    case StepKind::kRegOp:
      return "REG_OP";
    case StepKind::kLoad:
      return "LOAD";
    case StepKind::kStore:
      return "STORE";
    case StepKind::kExecBranch:
      return "EXEC_BRANCH";
  }
  return "REG_OP";
}

namespace {

// Builds handler step lists. Latency adjustments model the cost differences
// of the concrete x86 instruction behind each step (memory operands,
// read-modify-write, division) on top of the per-kind base.
class Builder {
 public:
  Builder(const LatencyDefaults& lat, const PageFaultDefaults& pf)
      : lat_(lat), pf_(pf) {}

  Builder& Reg(int adjust = 0) {
    steps_.push_back({StepKind::kRegOp, PageClass::kHandlerCode,
                      Cost(lat_.reg_op, adjust), pf_.exec, AddressRef::kNone, 0});
    return *this;
  }
  Builder& Jump(int adjust = 0) {
    steps_.push_back({StepKind::kExecBranch, PageClass::kHandlerCode,
                      Cost(lat_.exec_branch, adjust), pf_.exec, AddressRef::kNone,
                      0});
    return *this;
  }
  Builder& LoadOperand(int8_t slot, int adjust = 0) {
    return Stack(StepKind::kLoad, AddressRef::kOperand, slot, adjust);
  }
  Builder& StoreOperand(int8_t slot, int adjust = 0) {
    return Stack(StepKind::kStore, AddressRef::kOperand, slot, adjust);
  }
  Builder& LoadLocal(int adjust = 0) {
    return Stack(StepKind::kLoad, AddressRef::kLocal, 0, adjust);
  }
  Builder& StoreLocal(int adjust = 0) {
    return Stack(StepKind::kStore, AddressRef::kLocal, 0, adjust);
  }
  Builder& LoadFrame(int adjust = 0) {
    return Stack(StepKind::kLoad, AddressRef::kFrame, 0, adjust);
  }
  Builder& StoreFrame(int adjust = 0) {
    return Stack(StepKind::kStore, AddressRef::kFrame, 0, adjust);
  }
  Builder& LoadBytecode(int adjust = 0) {
    return Data(StepKind::kLoad, PageClass::kBytecode, adjust);
  }
  // Module instance data (globals) sits next to the bytecode image.
  Builder& LoadGlobal(int adjust = 0) {
    Data(StepKind::kLoad, PageClass::kBytecode, adjust);
    steps_.back().ref = AddressRef::kGlobals;
    return *this;
  }
  Builder& StoreGlobal(int adjust = 0) {
    Data(StepKind::kStore, PageClass::kBytecode, adjust);
    steps_.back().ref = AddressRef::kGlobals;
    return *this;
  }
  Builder& LoadLinear(int adjust = 0) {
    return Data(StepKind::kLoad, PageClass::kLinearMem, adjust);
  }
  Builder& StoreLinear(int adjust = 0) {
    return Data(StepKind::kStore, PageClass::kLinearMem, adjust);
  }
  Builder& LoadOptable(int adjust = 0) {
    return Data(StepKind::kLoad, PageClass::kOptable, adjust);
  }

  // movzbl eax,[rbp-1]; mov rax,[r10+rax*8]; jmp rax
  std::vector<NativeStep> Dispatch() {
    LoadBytecode(160);
    LoadOptable(180);
    Jump();
    return std::move(steps_);
  }

 private:
  static uint32_t Cost(uint32_t base, int adjust) {
    return static_cast<uint32_t>(std::max<int64_t>(1, int64_t{base} + adjust));
  }

  Builder& Stack(StepKind kind, AddressRef ref, int8_t slot, int adjust) {
    const bool load = kind == StepKind::kLoad;
    steps_.push_back({kind, PageClass::kStack,
                      Cost(load ? lat_.load : lat_.store, adjust),
                      load ? pf_.read_stack : pf_.write, ref, slot});
    return *this;
  }

  Builder& Data(StepKind kind, PageClass target, int adjust) {
    const bool load = kind == StepKind::kLoad;
    steps_.push_back({kind, target, Cost(load ? lat_.load : lat_.store, adjust),
                      load ? pf_.read_other : pf_.write, AddressRef::kNone, 0});
    return *this;
  }

  const LatencyDefaults& lat_;
  const PageFaultDefaults& pf_;
  std::vector<NativeStep> steps_;
};

// Extra cycles of the ALU step, per family; width adds a little on top. The
// differences are small against the jitter, so same-shaped handlers are only
// separable by latency when the channel is quiet.
int AluCost(Opcode op) {
  const std::string_view f = OpcodeFamily(op).name();
  const int wide = Info(op).width == ValueWidth::k64 ? 8 : 0;
  int base = 0;
  if (f == "add") base = 0;
  if (f == "sub") base = 16;
  if (f == "and") base = 32;
  if (f == "or") base = 48;
  if (f == "xor") base = 64;
  if (f == "shl") base = 88;
  if (f == "shr_s") base = 112;
  if (f == "eq") base = 0;
  if (f == "ne") base = 16;
  if (f == "lt_s") base = 32;
  if (f == "gt_s") base = 48;
  if (f == "le_s") base = 64;
  if (f == "ge_s") base = 80;
  if (f == "mul") base = 180;
  if (f == "div_s") base = 900;
  if (f == "rem_s") base = 940;
  return base + wide;
}

uint32_t CountOptableLoads(const std::vector<NativeStep>& steps) {
  return static_cast<uint32_t>(
      std::count_if(steps.begin(), steps.end(), [](const NativeStep& s) {
        return s.kind == StepKind::kLoad &&
               s.target_class == PageClass::kOptable;
      }));
}

HandlerSpec MakeSpec(Opcode op, const LatencyDefaults& lat,
                     const PageFaultDefaults& pf) {
  HandlerSpec spec;
  spec.opcode = op;
  Builder b(lat, pf);
  Builder alt(lat, pf);
  const int alu = AluCost(op);
  const int wide = Info(op).width == ValueWidth::k64 ? 10 : 0;

  switch (op) {
    case Opcode::kNop:
      b.Reg();
      break;
    case Opcode::kBlock:
      b.Reg().LoadBytecode().Reg().Reg(20).StoreFrame().Reg();
      break;
    case Opcode::kLoop:
      b.Reg().LoadBytecode().Reg().StoreFrame();
      break;
    case Opcode::kIf:
      b.Reg().LoadBytecode().Reg().Reg().LoadOperand(-1).Reg().Reg()
          .StoreFrame().Reg();
      alt.Reg().LoadBytecode().Reg().Reg().LoadOperand(-1).Reg().Jump(60)
          .LoadBytecode(40).Reg();
      break;
    case Opcode::kElse:
      b.Reg().LoadFrame().Reg().Reg(30);
      break;
    case Opcode::kEnd:
      b.Reg().LoadFrame().Reg().Reg();
      break;
    case Opcode::kBr:
      b.Reg().LoadBytecode().Reg().LoadFrame().Reg().Reg(30);
      break;
    case Opcode::kBrIf:
      b.Reg().Reg().LoadOperand(-1).LoadBytecode().Reg().Reg().Reg();
      alt.Reg().Reg().LoadOperand(-1).LoadBytecode().Reg().Reg().Jump(60)
          .LoadFrame().Reg().Reg(30);
      break;
    case Opcode::kReturn:
      b.Reg().LoadFrame().LoadFrame().Reg().Reg(30);
      break;
    case Opcode::kCall:
      // The function-instance lookup shares the optable's page.
      b.Reg().LoadBytecode().Reg().LoadOptable(120).Reg().Reg()
          .StoreOperand(0).StoreOperand(1).Reg(30);
      break;
    case Opcode::kDrop:
      b.Reg().Reg();
      break;
    case Opcode::kSelect:
      b.Reg().Reg().LoadOperand(-1).Reg().LoadOperand(-2).Reg(20)
          .StoreOperand(-3);
      break;
    case Opcode::kLocalGet:
      b.Reg().LoadBytecode().Reg().LoadLocal().StoreOperand(0).Reg();
      break;
    case Opcode::kLocalSet:
      b.Reg().LoadBytecode().Reg().Reg().LoadOperand(-1).StoreLocal();
      break;
    case Opcode::kLocalTee:
      b.Reg().LoadBytecode().Reg().LoadOperand(-1).StoreLocal();
      break;
    case Opcode::kGlobalGet:
      b.Reg().LoadBytecode().Reg().LoadGlobal().StoreOperand(0).Reg();
      break;
    case Opcode::kGlobalSet:
      b.Reg().LoadBytecode().Reg().Reg().LoadOperand(-1).StoreGlobal();
      break;
    case Opcode::kI32Load:
    case Opcode::kI64Load:
      b.Reg().LoadBytecode().Reg().LoadOperand(-1).Reg().Reg()
          .LoadLinear(wide).StoreOperand(-1);
      break;
    case Opcode::kI32Store:
    case Opcode::kI64Store:
      b.Reg().LoadBytecode().Reg().Reg().LoadOperand(-1).LoadOperand(-2)
          .Reg().Reg().StoreLinear(wide);
      break;
    case Opcode::kMemoryGrow:
      // Reaches the memory instance through the page holding the optable.
      b.Reg().LoadOperand(-1).Reg().LoadOptable(120).Reg(400).Reg()
          .StoreOperand(-1);
      break;
    case Opcode::kI32Const:
    case Opcode::kI64Const:
      b.Reg().LoadBytecode(wide).Reg().StoreOperand(0).Reg();
      break;
    case Opcode::kI32Eqz:
    case Opcode::kI64Eqz:
      b.Reg().LoadOperand(-1, wide).Reg().Reg().StoreOperand(-1);
      break;
    case Opcode::kI32Mul:
    case Opcode::kI64Mul:
      b.Reg().Reg().LoadOperand(-1).LoadOperand(-2, alu).StoreOperand(-2);
      break;
    case Opcode::kI32DivS:
    case Opcode::kI64DivS:
      b.Reg().Reg().LoadOperand(-1).Reg().Reg().LoadOperand(-2).Reg().Reg()
          .Reg().Reg(alu).StoreOperand(-2);
      break;
    case Opcode::kI32RemS:
    case Opcode::kI64RemS:
      b.Reg().Reg().LoadOperand(-1).Reg().Reg().LoadOperand(-2).Reg().Reg()
          .Reg().Reg(alu).Reg().StoreOperand(-2);
      break;
    case Opcode::kI32Eq:
    case Opcode::kI32Ne:
    case Opcode::kI32LtS:
    case Opcode::kI32GtS:
    case Opcode::kI32LeS:
    case Opcode::kI32GeS:
    case Opcode::kI64Eq:
    case Opcode::kI64Ne:
    case Opcode::kI64LtS:
    case Opcode::kI64GtS:
    case Opcode::kI64LeS:
    case Opcode::kI64GeS:
      // mov eax,[rbx]; cmp [rbx-4],eax; setcc al; movzx; mov [rbx-4],eax
      b.Reg().Reg().LoadOperand(-1).LoadOperand(-2).Reg(alu).Reg()
          .StoreOperand(-2);
      break;
    default:
      // Two-operand ALU handlers share the i32.add shape:
      // endbr64; sub rbx,4; mov eax,[rbx]; add rbp,1; op [rbx-4],eax
      b.Reg().Reg().LoadOperand(-1).Reg().StoreOperand(-2, 520 + alu);
      break;
  }

  spec.steps = b.Dispatch();
  if (op == Opcode::kIf || op == Opcode::kBrIf) spec.branch_steps = alt.Dispatch();
  spec.extra_optable_accesses = CountOptableLoads(spec.steps) - 1;
  return spec;
}

}  // namespace

HandlerTable DefaultHandlerSpecs(const LatencyDefaults& latency,
                                 const PageFaultDefaults& pf) {
  HandlerTable table;
  for (const auto& info : SupportedOpcodes()) {
    table[info.opcode] = {MakeSpec(info.opcode, latency, pf)};
  }
  return table;
}

std::string ValidateHandlerSpec(const HandlerSpec& spec) {
  auto check_path = [&](const std::vector<NativeStep>& steps) -> std::string {
    if (steps.size() < kDispatchTailSteps + 1) return "handler body is empty";
    const size_t n = steps.size();
    const NativeStep& fetch = steps[n - 3];
    const NativeStep& lookup = steps[n - 2];
    const NativeStep& jump = steps[n - 1];
    if (fetch.kind != StepKind::kLoad ||
        fetch.target_class != PageClass::kBytecode) {
      return "dispatch tail must start with a bytecode load";
    }
    if (lookup.kind != StepKind::kLoad ||
        lookup.target_class != PageClass::kOptable) {
      return "dispatch tail must load from the optable";
    }
    if (jump.kind != StepKind::kExecBranch) {
      return "dispatch tail must end with an indirect jump";
    }
    for (const auto& s : steps) {
      const bool data = s.kind == StepKind::kLoad || s.kind == StepKind::kStore;
      if (data && s.target_class == PageClass::kHandlerCode) {
        return "data access must not target handler code";
      }
      if (!data && s.target_class != PageClass::kHandlerCode) {
        return "register and branch steps execute on the handler page";
      }
      if (s.target_class == PageClass::kStack && s.ref == AddressRef::kNone) {
        return "stack access without a stack reference";
      }
    }
    if (CountOptableLoads(steps) != spec.extra_optable_accesses + 1) {
      return "extra_optable_accesses does not match the template";
    }
    return {};
  };
  if (auto err = check_path(spec.steps); !err.empty()) return err;
  if (!spec.branch_steps.empty()) return check_path(spec.branch_steps);
  return {};
}

uint64_t HandlerLatency(const HandlerSpec& spec, bool taken) {
  uint64_t total = 0;
  for (const auto& s : spec.PathFor(taken)) total += s.base_latency;
  return total;
}

}  // namespace wasmleak
