#ifndef WASMLEAK_HASH_H_
#define WASMLEAK_HASH_H_

#include <cstdint>
#include <string>
#include <string_view>

namespace wasmleak {

// 64-bit FNV-1a. Stable across platforms, used to tag artifacts with the
// configuration that produced them.
constexpr uint64_t Fnv1a(std::string_view data,
                         uint64_t seed = 0xcbf29ce484222325ull) {
  uint64_t h = seed;
  for (char c : data) {
    h ^= static_cast<uint8_t>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string HexDigest(uint64_t value);

}  // namespace wasmleak

#endif  // WASMLEAK_HASH_H_
