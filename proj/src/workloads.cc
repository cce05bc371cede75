#include "wasmleak/workloads.h"

#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "wasmleak/error.h"
#include "wasmleak/hash.h"

namespace wasmleak {

namespace {

using Rng = std::mt19937_64;

struct Snippet {
  std::string name;
  std::function<std::string(Rng&)> text;
};

int64_t Pick(Rng& rng, int64_t lo, int64_t hi) {
  return std::uniform_int_distribution<int64_t>(lo, hi)(rng);
}

std::string N(int64_t v) { return std::to_string(v); }

const std::vector<Snippet>& Library() {
  static const std::vector<Snippet> lib = [] {
    std::vector<Snippet> s;
    s.push_back({"nop", [](Rng&) { return std::string("nop\n"); }});
    for (const char* w : {"i32", "i64"}) {
      const std::string t = w;
      for (const char* op : {"add", "sub", "mul", "and", "or", "xor", "shl",
                             "shr_s", "eq", "ne", "lt_s", "gt_s", "le_s",
                             "ge_s", "div_s", "rem_s"}) {
        const std::string o = op;
        const bool divides = o == "div_s" || o == "rem_s";
        s.push_back({t + "." + o, [t, o, divides](Rng& r) {
                       const int64_t b = divides ? Pick(r, 1, 9) : Pick(r, 0, 31);
                       return t + ".const " + N(Pick(r, -500, 500)) + "\n" + t +
                              ".const " + N(b) + "\n" + t + "." + o + "\ndrop\n";
                     }});
      }
      s.push_back({t + ".eqz", [t](Rng& r) {
                     return t + ".const " + N(Pick(r, 0, 1)) + "\n" + t +
                            ".eqz\ndrop\n";
                   }});
      s.push_back({t + ".load", [t](Rng& r) {
                     return "i32.const " + N(8 * Pick(r, 0, 1023)) + "\n" + t +
                            ".load " + N(8 * Pick(r, 0, 3)) + "\ndrop\n";
                   }});
      s.push_back({t + ".store", [t](Rng& r) {
                     return "i32.const " + N(8 * Pick(r, 0, 1023)) + "\n" + t +
                            ".const " + N(Pick(r, -1000, 1000)) + "\n" + t +
                            ".store " + N(8 * Pick(r, 0, 3)) + "\n";
                   }});
    }
    s.push_back({"local.set", [](Rng& r) {
                   return "i32.const " + N(Pick(r, 0, 99)) + "\nlocal.set " +
                          N(Pick(r, 1, 3)) + "\n";
                 }});
    s.push_back({"local.get", [](Rng& r) {
                   return "local.get " + N(Pick(r, 0, 3)) + "\ndrop\n";
                 }});
    s.push_back({"local.tee", [](Rng& r) {
                   return "local.get " + N(Pick(r, 1, 3)) + "\nlocal.tee " +
                          N(Pick(r, 1, 3)) + "\ndrop\n";
                 }});
    s.push_back({"global.get", [](Rng& r) {
                   return "global.get " + N(Pick(r, 0, 1)) + "\nglobal.set " +
                          N(Pick(r, 0, 1)) + "\n";
                 }});
    s.push_back({"global.set", [](Rng& r) {
                   return "i32.const " + N(Pick(r, 0, 99)) + "\nglobal.set " +
                          N(Pick(r, 0, 1)) + "\n";
                 }});
    s.push_back({"memory.grow", [](Rng&) {
                   return std::string("i32.const 0\nmemory.grow\ndrop\n");
                 }});
    s.push_back({"select", [](Rng& r) {
                   return "i32.const " + N(Pick(r, 0, 9)) + "\ni32.const " +
                          N(Pick(r, 0, 9)) + "\ni32.const " + N(Pick(r, 0, 1)) +
                          "\nselect\ndrop\n";
                 }});
    s.push_back({"block", [](Rng&) { return std::string("block\nnop\nend\n"); }});
    s.push_back({"br", [](Rng&) { return std::string("block\nbr 0\nend\n"); }});
    s.push_back({"br.nested", [](Rng&) {
                   return std::string("block\nblock\nbr 1\nend\nend\n");
                 }});
    for (int taken : {0, 1}) {
      s.push_back({"br_if." + N(taken), [taken](Rng&) {
                     return "block\ni32.const " + N(taken) + "\nbr_if 0\nend\n";
                   }});
      s.push_back({"if_else." + N(taken), [taken](Rng&) {
                     return "i32.const " + N(taken) +
                            "\nif\nnop\nelse\nnop\nend\n";
                   }});
      s.push_back({"if." + N(taken), [taken](Rng&) {
                     return "i32.const " + N(taken) + "\nif\nnop\nend\n";
                   }});
    }
    s.push_back({"loop", [](Rng& r) {
                   return "i32.const " + N(Pick(r, 1, 3)) +
                          "\nlocal.set 1\nloop\nlocal.get 1\ni32.const 1\n"
                          "i32.sub\nlocal.tee 1\nbr_if 0\nend\n";
                 }});
    s.push_back({"call", [](Rng&) { return std::string("call @leaf\n"); }});
    s.push_back({"call.return", [](Rng&) { return std::string("call @early\n"); }});
    return s;
  }();
  return lib;
}

constexpr std::string_view kHeader = ".locals 4\n.globals 2\n.memory 1\n";

// Functions called by the call snippets.
constexpr std::string_view kFunctions =
    "@leaf:\n"
    "i32.const 3\ni32.const 4\ni32.add\ndrop\n"
    "@early:\n"
    "i32.const 1\nif\nreturn\nend\nnop\n";

std::string DriverLoop(uint32_t iterations, const std::string& body) {
  std::ostringstream out;
  out << kHeader;
  out << "i32.const " << iterations << "\nlocal.set 0\nloop\n";
  out << body;
  out << "local.get 0\ni32.const 1\ni32.sub\nlocal.tee 0\nbr_if 0\nend\n";
  out << kFunctions;
  return out.str();
}

}  // namespace

std::vector<std::string> SnippetNames() {
  std::vector<std::string> names;
  for (const auto& s : Library()) names.push_back(s.name);
  return names;
}

std::string ReferenceModuleText(uint32_t repeats) {
  Rng rng(Fnv1a("reference-module"));
  std::string body;
  for (const auto& s : Library()) body += s.text(rng);
  return "# reference profiling module\n" + DriverLoop(repeats, body);
}

std::string RandomModuleText(uint64_t seed, uint32_t snippets,
                             uint32_t iterations) {
  Rng rng(Fnv1a("random-module", seed));
  const auto& lib = Library();
  std::uniform_int_distribution<size_t> pick(0, lib.size() - 1);
  std::string body;
  for (uint32_t k = 0; k < snippets; ++k) body += lib[pick(rng)].text(rng);
  return "# random module seed=" + std::to_string(seed) + "\n" +
         DriverLoop(iterations, body);
}

std::string AesLikeModuleText(uint32_t blocks, uint32_t rounds) {
  // Memory map: state 0..63 (16 x i32), scratch 128..191, round keys from
  // 256 (16 bytes per round as i64 pairs), substitution table from 1024.
  // Global 0 holds the current round-key offset, global 1 the rounds left.
  const std::string key_end = std::to_string(256 + 16 * (rounds + 1));
  std::string m = "# block-cipher-shaped benchmark\n" + std::string(kHeader);
  m += R"(i32.const 0
memory.grow
drop
i32.const 0
local.set 1
loop
local.get 1
i32.const 2
i32.shl
local.get 1
i32.const 7
i32.mul
i32.const 99
i32.add
i32.const 255
i32.and
i32.store 1024
local.get 1
i32.const 1
i32.add
local.tee 1
i32.const 256
i32.lt_s
br_if 0
end
call @expand_key
)";
  m += "i32.const " + std::to_string(blocks) + "\nlocal.set 0\n";
  m += R"(loop
call @load_block
i32.const 0
global.set 0
call @add_round_key
)";
  m += "i32.const " + std::to_string(rounds) + "\nglobal.set 1\n";
  m += R"(loop
global.get 0
i32.const 16
i32.add
global.set 0
call @sub_bytes
call @shift_rows
global.get 1
i32.const 1
i32.ne
if
call @mix_columns
end
call @add_round_key
global.get 1
i32.const 1
i32.sub
global.set 1
global.get 1
br_if 0
end
local.get 0
i32.const 1
i32.sub
local.tee 0
br_if 0
end
@expand_key:
i32.const 256
local.set 1
block
loop
local.get 1
)";
  m += "i32.const " + key_end + "\n";
  // k[w] = (k[w-1] * 31) ^ (k[w-1] << 13) + c, seeded by a constant.
  m += R"(i32.ge_s
br_if 1
i64.const 6510615555426900570
local.get 1
i32.const 8
i32.sub
i64.load 0
local.get 1
i32.const 256
i32.eq
select
local.set 3
local.get 1
local.get 3
i64.const 31
i64.mul
local.get 3
i64.const 13
i64.shl
i64.xor
i64.const 40503
i64.add
i64.store 0
local.get 1
i32.const 8
i32.add
local.set 1
br 0
end
end
@load_block:
i32.const 0
local.set 1
loop
local.get 1
local.get 1
i32.load 0
local.get 1
i32.add
i32.const 255
i32.and
i32.store 0
local.get 1
i32.const 4
i32.add
local.tee 1
i32.const 64
i32.ne
br_if 0
end
@sub_bytes:
i32.const 0
local.set 1
loop
local.get 1
i32.const 2
i32.shl
local.tee 2
local.get 2
i32.load 0
i32.const 255
i32.and
i32.const 2
i32.shl
i32.load 1024
i32.store 0
local.get 1
i32.const 1
i32.add
local.tee 1
i32.const 16
i32.lt_s
br_if 0
end
@shift_rows:
i32.const 0
local.set 1
loop
local.get 1
i32.const 2
i32.shl
local.get 1
local.get 1
i32.const 4
i32.rem_s
i32.const 4
i32.mul
i32.add
i32.const 16
i32.rem_s
i32.const 2
i32.shl
i32.load 0
i32.store 128
local.get 1
i32.const 1
i32.add
local.tee 1
i32.const 16
i32.lt_s
br_if 0
end
i32.const 0
local.set 1
loop
local.get 1
local.get 1
i32.load 128
i32.store 0
local.get 1
i32.const 4
i32.add
local.tee 1
i32.const 64
i32.ne
br_if 0
end
@mix_columns:
i32.const 0
local.set 1
loop
local.get 1
i32.const 2
i32.shl
local.tee 2
local.get 2
i32.load 0
local.tee 3
i32.const 1
i32.shl
local.get 3
i32.const 7
i32.shr_s
i32.const 1
i32.and
if
i32.const 27
i32.xor
end
local.get 1
i32.const 1
i32.add
i32.const 16
i32.rem_s
i32.const 2
i32.shl
i32.load 0
i32.xor
i32.const 255
i32.and
i32.store 0
local.get 1
i32.const 1
i32.add
local.tee 1
i32.const 16
i32.ge_s
i32.eqz
br_if 0
end
@add_round_key:
i32.const 0
local.set 1
loop
local.get 1
i32.const 3
i32.shl
local.tee 2
local.get 2
i64.load 0
local.get 2
global.get 0
i32.add
i64.load 256
i64.xor
i64.store 0
local.get 1
i32.const 1
i32.add
local.tee 1
i32.const 2
i32.ne
br_if 0
end
return
)";
  return m;
}

std::string PrimesModuleText(uint32_t limit) {
  return "# trial-division prime counting\n.locals 4\n.globals 0\n.memory 0\n"
         "i32.const 2\nlocal.set 0\ni32.const 0\nlocal.set 3\n"
         "loop\n"
         "i32.const 2\nlocal.set 1\ni32.const 1\nlocal.set 2\n"
         "block\nloop\n"
         "local.get 1\nlocal.get 1\ni32.mul\nlocal.get 0\ni32.gt_s\nbr_if 1\n"
         "local.get 0\nlocal.get 1\ni32.rem_s\ni32.eqz\n"
         "if\ni32.const 0\nlocal.set 2\nbr 2\nend\n"
         "local.get 1\ni32.const 1\ni32.add\nlocal.set 1\nbr 0\n"
         "end\nend\n"
         "local.get 3\nlocal.get 2\ni32.add\nlocal.set 3\n"
         "local.get 0\ni32.const 1\ni32.add\nlocal.tee 0\n"
         "i32.const " +
         std::to_string(limit) +
         "\ni32.lt_s\nbr_if 0\nend\n"
         "local.get 3\ndrop\n";
}

bool IsBuiltinModule(std::string_view name) {
  return name == "reference" || name == "random" || name == "aes" ||
         name == "primes";
}

std::string BuiltinModuleText(std::string_view name, uint64_t seed) {
  if (name == "reference") return ReferenceModuleText(8);
  if (name == "random") return RandomModuleText(seed, 400, 100);
  if (name == "aes") return AesLikeModuleText(4, 10);
  if (name == "primes") return PrimesModuleText(400);
  throw ConfigError("unknown built-in module '" + std::string(name) + "'");
}

}  // namespace wasmleak
