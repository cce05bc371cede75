#include "wasmleak/config.h"

#include <charconv>
#include <cstdio>
#include <functional>
#include <set>

#include "wasmleak/error.h"
#include "wasmleak/hash.h"
#include "wasmleak/trace_io.h"

namespace wasmleak {

namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

[[noreturn]] void Bad(std::string_view key, std::string_view value,
                      std::string_view expected) {
  throw ConfigError(std::string(key) + ": expected " + std::string(expected) +
                    ", got '" + std::string(value) + "'");
}

uint64_t U64(std::string_view key, std::string_view v) {
  uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size()) {
    Bad(key, v, "a non-negative integer");
  }
  return out;
}

uint32_t U32(std::string_view key, std::string_view v) {
  const uint64_t x = U64(key, v);
  if (x > UINT32_MAX) Bad(key, v, "a 32-bit integer");
  return static_cast<uint32_t>(x);
}

double Real(std::string_view key, std::string_view v) {
  const std::string s(v);
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) Bad(key, v, "a number");
  return x;
}

bool Bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  Bad(key, v, "true or false");
}

std::string Fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string Fmt(uint64_t v) { return std::to_string(v); }
std::string Fmt(bool v) { return v ? "true" : "false"; }

struct Key {
  std::string_view name;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

#define WL_U64(NAME, FIELD)                                                 \
  Key {                                                                     \
    NAME, [](const RunConfig& c) { return Fmt(uint64_t{c.FIELD}); },        \
        [](RunConfig& c, std::string_view v) { c.FIELD = U64(NAME, v); }    \
  }
#define WL_U32(NAME, FIELD)                                                 \
  Key {                                                                     \
    NAME, [](const RunConfig& c) { return Fmt(uint64_t{c.FIELD}); },        \
        [](RunConfig& c, std::string_view v) { c.FIELD = U32(NAME, v); }    \
  }
#define WL_REAL(NAME, FIELD)                                                \
  Key {                                                                     \
    NAME, [](const RunConfig& c) { return Fmt(double{c.FIELD}); },          \
        [](RunConfig& c, std::string_view v) { c.FIELD = Real(NAME, v); }   \
  }
#define WL_BOOL(NAME, FIELD)                                                \
  Key {                                                                     \
    NAME, [](const RunConfig& c) { return Fmt(bool{c.FIELD}); },            \
        [](RunConfig& c, std::string_view v) { c.FIELD = Bool(NAME, v); }   \
  }
#define WL_TEXT(NAME, FIELD)                                                \
  Key {                                                                     \
    NAME, [](const RunConfig& c) { return c.FIELD; },                       \
        [](RunConfig& c, std::string_view v) { c.FIELD = std::string(v); }  \
  }

const std::vector<Key>& Keys() {
  static const std::vector<Key> keys = {
      WL_TEXT("run.victim", victim),
      WL_U64("run.victim_seed", victim_seed),
      WL_U64("run.victim_steps", victim_steps),
      WL_TEXT("run.profile", profile),
      WL_U32("run.profile_repeats", profile_repeats),
      WL_U64("run.profile_steps", profile_steps),
      WL_U64("layout.seed", layout_seed),
      WL_U32("layout.handler_pages", layout.handler_pages),
      WL_U32("layout.stack_pages", layout.stack_pages),
      WL_U32("layout.bytecode_pages", layout.bytecode_pages),
      WL_U32("layout.linear_mem_pages", layout.linear_mem_pages),
      WL_U32("layout.other_pages", layout.other_pages),
      WL_U32("layout.stack_base_offset", layout.stack_base_offset),
      WL_U64("noise.seed", noise.rng_seed),
      WL_REAL("noise.latency_jitter_sigma", noise.latency_jitter_sigma),
      WL_U32("noise.apic_quantum", noise.apic_quantum),
      WL_REAL("noise.ctx_switch_rate", noise.ctx_switch_rate),
      WL_REAL("noise.ctx_switch_extra_steps_mean",
              noise.ctx_switch_extra_steps_mean),
      WL_REAL("noise.multistep_prob", noise.multistep_prob),
      WL_REAL("mitigation.nop_insertion_prob", mitigation.nop_insertion_prob),
      WL_BOOL("mitigation.shuffle_handlers", mitigation.shuffle_handlers),
      WL_U32("mitigation.variant_count", mitigation.variant_count),
      WL_U64("mitigation.seed", mitigation.seed),
      WL_REAL("preprocess.coverage_target", preprocess.coverage_target),
      WL_REAL("preprocess.stack_min_gain", preprocess.stack_min_gain),
      WL_U64("preprocess.window", preprocess.window),
      WL_REAL("preprocess.keep_threshold", preprocess.keep_threshold),
      Key{"match.channels",
          [](const RunConfig& c) { return c.channels.ToString(); },
          [](RunConfig& c, std::string_view v) {
            c.channels = ParseChannelSubset(v);
          }},
      WL_BOOL("eval.strict", strict),
      WL_TEXT("ablate.subsets", ablate_subsets),
  };
  return keys;
}

#undef WL_U64
#undef WL_U32
#undef WL_REAL
#undef WL_BOOL
#undef WL_TEXT

}  // namespace

void RunConfig::Set(std::string_view key, std::string_view value) {
  key = Trim(key);
  value = Trim(value);
  for (const auto& k : Keys()) {
    if (k.name == key) {
      k.set(*this, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void RunConfig::Apply(std::string_view text) {
  size_t line_no = 0;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (const size_t hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    Set(line.substr(0, eq), line.substr(eq + 1));
  }
}

RunConfig RunConfig::Load(const std::filesystem::path& path) {
  RunConfig c;
  c.Apply(ReadFile(path));
  c.Validate();
  return c;
}

std::string RunConfig::Serialize() const {
  std::string out;
  for (const auto& k : Keys()) {
    out += std::string(k.name) + " = " + k.get(*this) + "\n";
  }
  return out;
}

std::string RunConfig::Hash() const { return HexDigest(Fnv1a(Serialize())); }

void RunConfig::SetSeed(uint64_t seed) {
  layout_seed = seed;
  noise.rng_seed = seed;
  mitigation.seed = seed;
}

void RunConfig::Validate() const {
  noise.Validate();
  mitigation.Validate();
  if (victim.empty()) throw ConfigError("run.victim must not be empty");
  if (profile.empty()) throw ConfigError("run.profile must not be empty");
  if (victim_steps == 0 || profile_steps == 0) {
    throw ConfigError("step limits must be positive");
  }
  if (profile_repeats == 0) throw ConfigError("run.profile_repeats must be >= 1");
  if (!(preprocess.coverage_target >= 0.0 && preprocess.coverage_target <= 1.0)) {
    throw ConfigError("preprocess.coverage_target must be in [0,1]");
  }
  if (!(preprocess.keep_threshold >= 0.0 && preprocess.keep_threshold <= 1.0)) {
    throw ConfigError("preprocess.keep_threshold must be in [0,1]");
  }
  if (!(preprocess.stack_min_gain >= 0.0)) {
    throw ConfigError("preprocess.stack_min_gain must be >= 0");
  }
  if (channels.empty()) throw ConfigError("match.channels must not be empty");
}

ChannelSet ParseChannelSubset(std::string_view spec) {
  ChannelSet s;
  size_t start = 0;
  while (start <= spec.size()) {
    size_t comma = spec.find(',', start);
    if (comma == std::string_view::npos) comma = spec.size();
    const std::string_view token = Trim(spec.substr(start, comma - start));
    start = comma + 1;
    if (token.empty()) continue;
    if (token == "all") {
      s = ChannelSet::All();
      continue;
    }
    const bool remove = token.front() == '-';
    const std::string_view name = remove ? token.substr(1) : token;
    bool found = false;
    for (Channel c : kAllChannels) {
      if (ChannelName(c) == name) {
        remove ? s.Remove(c) : s.Add(c);
        found = true;
      }
    }
    if (!found) throw ConfigError("unknown channel '" + std::string(name) + "'");
  }
  return s;
}

std::vector<std::pair<std::string, ChannelSet>> ParseChannelSubsets(
    std::string_view specs, std::vector<std::string>* duplicates) {
  std::vector<std::pair<std::string, ChannelSet>> out;
  size_t start = 0;
  while (start <= specs.size()) {
    size_t semi = specs.find(';', start);
    if (semi == std::string_view::npos) semi = specs.size();
    const std::string spec(Trim(specs.substr(start, semi - start)));
    start = semi + 1;
    if (spec.empty()) continue;
    const ChannelSet set = ParseChannelSubset(spec);
    bool dup = false;
    for (const auto& [name, other] : out) dup = dup || other == set;
    if (dup) {
      if (duplicates != nullptr) duplicates->push_back(spec);
      continue;
    }
    out.push_back({spec, set});
  }
  return out;
}

}  // namespace wasmleak
