#include "wasmleak/opcode.h"

#include <algorithm>
#include <array>

namespace wasmleak {
namespace {

using W = ValueWidth;

constexpr std::array<OpcodeInfo, 58> kOpcodes = {{
    {Opcode::kNop, "nop", "nop", W::kNone, 0},
    {Opcode::kBlock, "block", "block", W::kNone, 0},
    {Opcode::kLoop, "loop", "loop", W::kNone, 0},
    {Opcode::kIf, "if", "if", W::kNone, 0},
    {Opcode::kElse, "else", "else", W::kNone, 0},
    {Opcode::kEnd, "end", "end", W::kNone, 0},
    {Opcode::kBr, "br", "br", W::kNone, 1},
    {Opcode::kBrIf, "br_if", "br_if", W::kNone, 1},
    {Opcode::kReturn, "return", "return", W::kNone, 0},
    {Opcode::kCall, "call", "call", W::kNone, 1},
    {Opcode::kDrop, "drop", "drop", W::kNone, 0},
    {Opcode::kSelect, "select", "select", W::kNone, 0},
    {Opcode::kLocalGet, "local.get", "local.get", W::kNone, 1},
    {Opcode::kLocalSet, "local.set", "local.set", W::kNone, 1},
    {Opcode::kLocalTee, "local.tee", "local.tee", W::kNone, 1},
    {Opcode::kGlobalGet, "global.get", "global.get", W::kNone, 1},
    {Opcode::kGlobalSet, "global.set", "global.set", W::kNone, 1},
    {Opcode::kI32Load, "i32.load", "load", W::k32, 1},
    {Opcode::kI64Load, "i64.load", "load", W::k64, 1},
    {Opcode::kI32Store, "i32.store", "store", W::k32, 1},
    {Opcode::kI64Store, "i64.store", "store", W::k64, 1},
    {Opcode::kMemoryGrow, "memory.grow", "memory.grow", W::kNone, 0},
    {Opcode::kI32Const, "i32.const", "const", W::k32, 1},
    {Opcode::kI64Const, "i64.const", "const", W::k64, 1},
    {Opcode::kI32Eqz, "i32.eqz", "eqz", W::k32, 0},
    {Opcode::kI32Eq, "i32.eq", "eq", W::k32, 0},
    {Opcode::kI32Ne, "i32.ne", "ne", W::k32, 0},
    {Opcode::kI32LtS, "i32.lt_s", "lt_s", W::k32, 0},
    {Opcode::kI32GtS, "i32.gt_s", "gt_s", W::k32, 0},
    {Opcode::kI32LeS, "i32.le_s", "le_s", W::k32, 0},
    {Opcode::kI32GeS, "i32.ge_s", "ge_s", W::k32, 0},
    {Opcode::kI64Eqz, "i64.eqz", "eqz", W::k64, 0},
    {Opcode::kI64Eq, "i64.eq", "eq", W::k64, 0},
    {Opcode::kI64Ne, "i64.ne", "ne", W::k64, 0},
    {Opcode::kI64LtS, "i64.lt_s", "lt_s", W::k64, 0},
    {Opcode::kI64GtS, "i64.gt_s", "gt_s", W::k64, 0},
    {Opcode::kI64LeS, "i64.le_s", "le_s", W::k64, 0},
    {Opcode::kI64GeS, "i64.ge_s", "ge_s", W::k64, 0},
    {Opcode::kI32Add, "i32.add", "add", W::k32, 0},
    {Opcode::kI32Sub, "i32.sub", "sub", W::k32, 0},
    {Opcode::kI32Mul, "i32.mul", "mul", W::k32, 0},
    {Opcode::kI32DivS, "i32.div_s", "div_s", W::k32, 0},
    {Opcode::kI32RemS, "i32.rem_s", "rem_s", W::k32, 0},
    {Opcode::kI32And, "i32.and", "and", W::k32, 0},
    {Opcode::kI32Or, "i32.or", "or", W::k32, 0},
    {Opcode::kI32Xor, "i32.xor", "xor", W::k32, 0},
    {Opcode::kI32Shl, "i32.shl", "shl", W::k32, 0},
    {Opcode::kI32ShrS, "i32.shr_s", "shr_s", W::k32, 0},
    {Opcode::kI64Add, "i64.add", "add", W::k64, 0},
    {Opcode::kI64Sub, "i64.sub", "sub", W::k64, 0},
    {Opcode::kI64Mul, "i64.mul", "mul", W::k64, 0},
    {Opcode::kI64DivS, "i64.div_s", "div_s", W::k64, 0},
    {Opcode::kI64RemS, "i64.rem_s", "rem_s", W::k64, 0},
    {Opcode::kI64And, "i64.and", "and", W::k64, 0},
    {Opcode::kI64Or, "i64.or", "or", W::k64, 0},
    {Opcode::kI64Xor, "i64.xor", "xor", W::k64, 0},
    {Opcode::kI64Shl, "i64.shl", "shl", W::k64, 0},
    {Opcode::kI64ShrS, "i64.shr_s", "shr_s", W::k64, 0},
}};

// Direct byte -> table index lookup; -1 marks unsupported bytes.
constexpr std::array<int16_t, 256> BuildByteIndex() {
  std::array<int16_t, 256> index{};
  for (auto& slot : index) slot = -1;
  for (size_t i = 0; i < kOpcodes.size(); ++i) {
    index[static_cast<uint8_t>(kOpcodes[i].opcode)] = static_cast<int16_t>(i);
  }
  return index;
}

constexpr std::array<int16_t, 256> kByteIndex = BuildByteIndex();

}  // namespace

std::span<const OpcodeInfo> SupportedOpcodes() { return kOpcodes; }

const OpcodeInfo& Info(Opcode op) {
  return kOpcodes[kByteIndex[static_cast<uint8_t>(op)]];
}

std::string_view Mnemonic(Opcode op) { return Info(op).mnemonic; }

Family OpcodeFamily(Opcode op) { return Family(Info(op).family); }

int ImmediateCount(Opcode op) { return Info(op).immediates; }

std::optional<Opcode> OpcodeFromMnemonic(std::string_view mnemonic) {
  auto it = std::find_if(kOpcodes.begin(), kOpcodes.end(),
                         [&](const OpcodeInfo& info) {
                           return info.mnemonic == mnemonic;
                         });
  if (it == kOpcodes.end()) return std::nullopt;
  return it->opcode;
}

std::optional<Opcode> OpcodeFromByte(uint8_t code) {
  if (kByteIndex[code] < 0) return std::nullopt;
  return kOpcodes[kByteIndex[code]].opcode;
}

std::string_view LabelName(const Label& label) {
  return label ? Mnemonic(*label) : kNullLabel;
}

std::optional<Label> ParseLabel(std::string_view text) {
  if (text == kNullLabel) return Label{};
  auto op = OpcodeFromMnemonic(text);
  if (!op) return std::nullopt;
  return Label{*op};
}

Family LabelFamily(const Label& label) {
  return label ? OpcodeFamily(*label) : Family(kNullLabel);
}

}  // namespace wasmleak
