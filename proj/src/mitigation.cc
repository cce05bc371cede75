#include <cstdio>
#include <random>

#include "wasmleak/error.h"
#include "wasmleak/hash.h"
#include "wasmleak/machine_model.h"

namespace wasmleak {

void MitigationConfig::Validate() const {
  if (!(nop_insertion_prob >= 0.0 && nop_insertion_prob <= 1.0)) {
    throw ConfigError("mitigation.nop_insertion_prob must be in [0,1]");
  }
  if (variant_count < 1) {
    throw ConfigError("mitigation.variant_count must be >= 1");
  }
}

std::string MitigationConfig::Canonical() const {
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "nop_insertion_prob=%.17g;shuffle_handlers=%d;variant_count=%u;"
                "seed=%llu",
                nop_insertion_prob, shuffle_handlers ? 1 : 0, variant_count,
                static_cast<unsigned long long>(seed));
  return buf;
}

namespace {

// One insertion slot after every body step; the dispatch tail is left intact.
std::vector<NativeStep> InsertNops(const std::vector<NativeStep>& steps,
                                   double prob, uint32_t latency,
                                   std::mt19937_64& rng) {
  if (steps.empty() || prob <= 0.0) return steps;
  const size_t body = steps.size() - kDispatchTailSteps;
  std::bernoulli_distribution insert(prob);
  std::vector<NativeStep> out;
  out.reserve(steps.size() * 2);
  for (size_t i = 0; i < steps.size(); ++i) {
    out.push_back(steps[i]);
    if (i < body && insert(rng)) {
      out.push_back({StepKind::kRegOp, PageClass::kHandlerCode, latency,
                     steps[0].pf_count, AddressRef::kNone, 0});
    }
  }
  return out;
}

}  // namespace

HandlerTable ApplyMitigation(const HandlerTable& table,
                             const MitigationConfig& mitigation,
                             uint64_t seed) {
  mitigation.Validate();
  if (mitigation.nop_insertion_prob == 0.0 && mitigation.variant_count == 1) {
    return table;
  }
  std::mt19937_64 rng(Fnv1a("mitigation", seed));
  HandlerTable out;
  for (const auto& [op, variants] : table) {
    if (variants.empty()) continue;
    const HandlerSpec& base = variants.front();
    // A nop executes as a plain register instruction.
    const uint32_t nop_latency =
        base.steps.empty() ? 5280 : base.steps.front().base_latency;
    auto& dest = out[op];
    for (uint32_t v = 0; v < mitigation.variant_count; ++v) {
      HandlerSpec spec = variants[v % variants.size()];
      spec.steps = InsertNops(spec.steps, mitigation.nop_insertion_prob,
                              nop_latency, rng);
      if (!spec.branch_steps.empty()) {
        spec.branch_steps = InsertNops(
            spec.branch_steps, mitigation.nop_insertion_prob, nop_latency, rng);
      }
      dest.push_back(std::move(spec));
    }
  }
  return out;
}

}  // namespace wasmleak
