#ifndef WASMLEAK_WORKLOADS_H_
#define WASMLEAK_WORKLOADS_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "wasmleak/module.h"

namespace wasmleak {

// Every generated module uses 4 locals (local 0 is reserved for the driver
// loop), 2 globals and one page of linear memory.

// Runs every snippet of the built-in library `repeats` times, so each
// supported opcode retires in several stack contexts, both branch outcomes
// included. Used to build the fingerprint database.
std::string ReferenceModuleText(uint32_t repeats);

// Random sequence of `snippets` library snippets with random constants,
// executed `iterations` times. Only opcodes that the reference module also
// exercises can appear.
std::string RandomModuleText(uint64_t seed, uint32_t snippets,
                             uint32_t iterations);

// Block-cipher-shaped kernel: byte substitution through a table in linear
// memory, row rotation, column mixing with conditional reduction and a
// 64-bit round-key addition, over `blocks` blocks of `rounds` rounds.
std::string AesLikeModuleText(uint32_t blocks, uint32_t rounds);

// Trial-division prime counting below `limit`.
std::string PrimesModuleText(uint32_t limit);

// Resolves "reference", "random", "aes" or "primes" with generator defaults
// (`seed` only affects "random"). Throws ConfigError for other names.
std::string BuiltinModuleText(std::string_view name, uint64_t seed);
bool IsBuiltinModule(std::string_view name);

// Names of the snippets in library order.
std::vector<std::string> SnippetNames();

}  // namespace wasmleak

#endif  // WASMLEAK_WORKLOADS_H_
