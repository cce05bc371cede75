#ifndef WASMLEAK_CONFIG_H_
#define WASMLEAK_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "wasmleak/machine_model.h"
#include "wasmleak/matcher.h"
#include "wasmleak/preprocess.h"

namespace wasmleak {

// Every knob of a pipeline run. The text form is one `key = value` per line
// with `#` comments; see docs/config.md for the key list.
struct RunConfig {
  // Victim module: built-in name (aes, primes, random, reference) or a path
  // to a module file.
  std::string victim = "aes";
  uint64_t victim_seed = 1;  // generator seed for the random built-in
  uint64_t victim_steps = 200000;
  // Profiling module, same naming. "reference" uses profile_repeats.
  std::string profile = "reference";
  uint32_t profile_repeats = 8;
  uint64_t profile_steps = 2000000;

  uint64_t layout_seed = 1;
  LayoutConfig layout;
  NoiseModel noise;  // noise.rng_seed is the `noise.seed` key
  MitigationConfig mitigation;
  PreprocessConfig preprocess;
  ChannelSet channels = ChannelSet::All();
  bool strict = false;
  std::string ablate_subsets = "all;all,-latency";

  // Throws ConfigError on unknown keys or unparsable values.
  void Set(std::string_view key, std::string_view value);
  // Applies a whole file body on top of the current values.
  void Apply(std::string_view text);
  static RunConfig Load(const std::filesystem::path& path);

  // Every key in a fixed order; Parse(Serialize()) reproduces the config.
  std::string Serialize() const;
  // 16 hex digits identifying Serialize().
  std::string Hash() const;
  // Sets the layout, noise and mitigation seeds at once.
  void SetSeed(uint64_t seed);
  void Validate() const;
};

// Parses one subset spec: comma separated tokens, "all" adds every channel,
// "-name" removes one, "name" adds one.
ChannelSet ParseChannelSubset(std::string_view spec);

// Splits a `;` separated list of subset specs and drops duplicate channel
// sets. `duplicates`, when given, receives the dropped specs.
std::vector<std::pair<std::string, ChannelSet>> ParseChannelSubsets(
    std::string_view specs, std::vector<std::string>* duplicates = nullptr);

}  // namespace wasmleak

#endif  // WASMLEAK_CONFIG_H_
