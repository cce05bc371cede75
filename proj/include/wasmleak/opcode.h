#ifndef WASMLEAK_OPCODE_H_
#define WASMLEAK_OPCODE_H_

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace wasmleak {

// The supported Wasm MVP subset. Enumerator values are the canonical opcode
// bytes.
enum class Opcode : uint8_t {
  kNop = 0x01,
  kBlock = 0x02,
  kLoop = 0x03,
  kIf = 0x04,
  kElse = 0x05,
  kEnd = 0x0b,
  kBr = 0x0c,
  kBrIf = 0x0d,
  kReturn = 0x0f,
  kCall = 0x10,
  kDrop = 0x1a,
  kSelect = 0x1b,
  kLocalGet = 0x20,
  kLocalSet = 0x21,
  kLocalTee = 0x22,
  kGlobalGet = 0x23,
  kGlobalSet = 0x24,
  kI32Load = 0x28,
  kI64Load = 0x29,
  kI32Store = 0x36,
  kI64Store = 0x37,
  kMemoryGrow = 0x40,
  kI32Const = 0x41,
  kI64Const = 0x42,
  kI32Eqz = 0x45,
  kI32Eq = 0x46,
  kI32Ne = 0x47,
  kI32LtS = 0x48,
  kI32GtS = 0x4a,
  kI32LeS = 0x4c,
  kI32GeS = 0x4e,
  kI64Eqz = 0x50,
  kI64Eq = 0x51,
  kI64Ne = 0x52,
  kI64LtS = 0x53,
  kI64GtS = 0x55,
  kI64LeS = 0x57,
  kI64GeS = 0x59,
  kI32Add = 0x6a,
  kI32Sub = 0x6b,
  kI32Mul = 0x6c,
  kI32DivS = 0x6d,
  kI32RemS = 0x6f,
  kI32And = 0x71,
  kI32Or = 0x72,
  kI32Xor = 0x73,
  kI32Shl = 0x74,
  kI32ShrS = 0x75,
  kI64Add = 0x7c,
  kI64Sub = 0x7d,
  kI64Mul = 0x7e,
  kI64DivS = 0x7f,
  kI64RemS = 0x81,
  kI64And = 0x83,
  kI64Or = 0x84,
  kI64Xor = 0x85,
  kI64Shl = 0x86,
  kI64ShrS = 0x87,
};

enum class ValueWidth : uint8_t { kNone, k32, k64 };

// Width-insensitive opcode group. i32.add and i64.add share the family "add";
// opcodes without width variants form singleton families named after their
// mnemonic.
class Family {
 public:
  constexpr Family() = default;
  constexpr explicit Family(std::string_view name) : name_(name) {}

  constexpr std::string_view name() const { return name_; }

  friend constexpr bool operator==(Family a, Family b) {
    return a.name_ == b.name_;
  }
  friend constexpr auto operator<=>(Family a, Family b) {
    return a.name_ <=> b.name_;
  }

 private:
  std::string_view name_;
};

struct OpcodeInfo {
  Opcode opcode;
  std::string_view mnemonic;
  std::string_view family;
  ValueWidth width;
  int immediates;
};

// All supported opcodes in ascending byte order.
std::span<const OpcodeInfo> SupportedOpcodes();

const OpcodeInfo& Info(Opcode op);
std::string_view Mnemonic(Opcode op);
Family OpcodeFamily(Opcode op);
int ImmediateCount(Opcode op);

std::optional<Opcode> OpcodeFromMnemonic(std::string_view mnemonic);
std::optional<Opcode> OpcodeFromByte(uint8_t code);

// A segment label: an opcode, or the NULL region marker (std::nullopt) used
// for continuation regions inside call / memory.grow.
using Label = std::optional<Opcode>;

inline constexpr std::string_view kNullLabel = "NULL";

std::string_view LabelName(const Label& label);
// Parses a mnemonic or "NULL". Returns std::nullopt for unknown text.
std::optional<Label> ParseLabel(std::string_view text);

// Family of a label; NULL labels belong to the "NULL" family.
Family LabelFamily(const Label& label);

}  // namespace wasmleak

#endif  // WASMLEAK_OPCODE_H_
