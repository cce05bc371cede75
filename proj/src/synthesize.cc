#include <cmath>
#include <cstdio>
#include <random>

#include "wasmleak/error.h"
#include "wasmleak/hash.h"
#include "wasmleak/machine_model.h"

namespace wasmleak {

char ModeChar(AccessMode mode) {
  switch (mode) {
    case AccessMode::kRead:
      return 'R';
    case AccessMode::kWrite:
      return 'W';
    case AccessMode::kExec:
      return 'E';
  }
  return 'E';
}

std::optional<AccessMode> ModeFromChar(char c) {
  switch (c) {
    case 'R':
      return AccessMode::kRead;
    case 'W':
      return AccessMode::kWrite;
    case 'E':
      return AccessMode::kExec;
    default:
      return std::nullopt;
  }
}

namespace {

bool IsProbability(double p) { return p >= 0.0 && p <= 1.0; }

std::string FormatDouble(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void NoiseModel::Validate() const {
  if (!(latency_jitter_sigma >= 0.0)) {
    throw ConfigError("noise.latency_jitter_sigma must be >= 0");
  }
  if (!IsProbability(ctx_switch_rate)) {
    throw ConfigError("noise.ctx_switch_rate must be in [0,1]");
  }
  if (!IsProbability(multistep_prob)) {
    throw ConfigError("noise.multistep_prob must be in [0,1]");
  }
  if (!(ctx_switch_extra_steps_mean >= 0.0)) {
    throw ConfigError("noise.ctx_switch_extra_steps_mean must be >= 0");
  }
}

std::string NoiseModel::Canonical() const {
  return "latency_jitter_sigma=" + FormatDouble(latency_jitter_sigma) +
         ";apic_quantum=" + std::to_string(apic_quantum) +
         ";ctx_switch_rate=" + FormatDouble(ctx_switch_rate) +
         ";ctx_switch_extra_steps_mean=" +
         FormatDouble(ctx_switch_extra_steps_mean) +
         ";multistep_prob=" + FormatDouble(multistep_prob) +
         ";rng_seed=" + std::to_string(rng_seed);
}

namespace {

// Chance that foreign code moves to another code page after an event. Code
// tends to run for a while within one page, so this stays small.
constexpr double kBurstCodeSwitchProb = 0.02;

// Streams events for one synthesis run and owns all noise randomness.
class Emitter {
 public:
  Emitter(const MemoryLayout& layout, const NoiseModel& noise)
      : layout_(layout),
        noise_(noise),
        rng_(Fnv1a("noise", noise.rng_seed)),
        burst_rng_(Fnv1a("bursts", noise.rng_seed)) {}

  size_t size() const { return events_.size(); }

  void Emit(PageFrame page, AccessMode mode, uint32_t pf, uint32_t base,
            bool marker = false) {
    events_.push_back({page, mode, pf, Latency(base)});
    is_marker_.push_back(marker);
    if (noise_.ctx_switch_rate > 0.0 &&
        Uniform(burst_rng_) < noise_.ctx_switch_rate) {
      Burst();
    }
  }

  // Merges randomly chosen adjacent event pairs; returns old -> new index.
  std::vector<size_t> MergeMultiSteps() {
    std::vector<size_t> remap(events_.size());
    if (noise_.multistep_prob <= 0.0) {
      for (size_t i = 0; i < remap.size(); ++i) remap[i] = i;
      return remap;
    }
    std::vector<StepEvent> merged;
    merged.reserve(events_.size());
    std::mt19937_64 rng(Fnv1a("multistep", noise_.rng_seed));
    for (size_t i = 0; i < events_.size(); ++i) {
      remap[i] = merged.size();
      merged.push_back(events_[i]);
      const bool can_merge = i + 1 < events_.size() && !is_marker_[i] &&
                             !is_marker_[i + 1];
      if (can_merge && Uniform(rng) < noise_.multistep_prob) {
        StepEvent& e = merged.back();
        e.latency += events_[i + 1].latency;
        e.pf_count += events_[i + 1].pf_count;
        remap[i + 1] = merged.size() - 1;
        ++i;
      }
    }
    events_ = std::move(merged);
    return remap;
  }

  std::vector<StepEvent> Take() { return std::move(events_); }

 private:
  static double Uniform(std::mt19937_64& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  }

  uint64_t Latency(uint32_t base) {
    double x = base;
    if (noise_.latency_jitter_sigma > 0.0) {
      x += std::normal_distribution<double>(0.0,
                                            noise_.latency_jitter_sigma)(rng_);
    }
    const double q = noise_.apic_quantum;
    if (q > 0.0) {
      const double steps = std::max(1.0, std::round(x / q));
      return static_cast<uint64_t>(steps) * noise_.apic_quantum;
    }
    return static_cast<uint64_t>(std::max(1.0, std::round(x)));
  }

  // Foreign code running between two interpreter steps: mostly instruction
  // fetches on a handful of code pages with interleaved data accesses.
  void Burst() {
    const auto& pool = layout_.other_pages;
    if (pool.size() < 2) return;
    const double mean = std::max(1.0, noise_.ctx_switch_extra_steps_mean);
    std::geometric_distribution<uint64_t> extra(1.0 / mean);
    const uint64_t length = 1 + extra(burst_rng_);
    std::uniform_int_distribution<size_t> pick(0, pool.size() / 2 - 1);
    PageFrame code = pool[2 * pick(burst_rng_)];
    for (uint64_t i = 0; i < length; ++i) {
      const double u = Uniform(burst_rng_);
      if (u < 0.7) {
        events_.push_back({code, AccessMode::kExec, 5, Latency(5280)});
      } else if (u < 0.9) {
        events_.push_back({pool[2 * pick(burst_rng_) + 1], AccessMode::kRead, 8,
                           Latency(5540)});
      } else {
        events_.push_back({pool[2 * pick(burst_rng_) + 1], AccessMode::kWrite,
                           9, Latency(5400)});
      }
      is_marker_.push_back(false);
      if (Uniform(burst_rng_) < kBurstCodeSwitchProb) {
        code = pool[2 * pick(burst_rng_)];
      }
    }
  }

  const MemoryLayout& layout_;
  const NoiseModel& noise_;
  std::mt19937_64 rng_;
  std::mt19937_64 burst_rng_;
  std::vector<StepEvent> events_;
  std::vector<bool> is_marker_;
};

AccessMode ModeOf(StepKind kind) {
  switch (kind) {
    case StepKind::kLoad:
      return AccessMode::kRead;
    case StepKind::kStore:
      return AccessMode::kWrite;
    default:
      return AccessMode::kExec;
  }
}

PageFrame DataPage(const NativeStep& step, const StepContext& ctx,
                   uint32_t next_ip, bool dispatch_fetch,
                   const MemoryLayout& layout) {
  switch (step.target_class) {
    case PageClass::kOptable:
      return layout.optable_page;
    case PageClass::kLinearMem:
      return layout.LinearPage(ctx.memory_addr);
    case PageClass::kMarker:
      return layout.marker_page;
    case PageClass::kBytecode:
      if (step.ref == AddressRef::kGlobals) return layout.GlobalsPage();
      return layout.BytecodePage(dispatch_fetch ? next_ip : ctx.ip + 1);
    case PageClass::kStack: {
      int64_t addr = 0;
      switch (step.ref) {
        case AddressRef::kOperand:
          addr = int64_t{ctx.stack_ptr} + 8 * int64_t{step.slot};
          break;
        case AddressRef::kLocal:
          addr = ctx.local_addr;
          break;
        default:
          addr = ctx.frame_addr;
          break;
      }
      return layout.StackPage(static_cast<uint32_t>(std::max<int64_t>(0, addr)));
    }
    default:
      return layout.other_pages.empty() ? layout.optable_page
                                        : layout.other_pages.front();
  }
}

}  // namespace

SideChannelTrace SynthesizeTrace(const OpcodeTrace& opcodes,
                                 const MemoryLayout& layout,
                                 const HandlerTable& handlers,
                                 const NoiseModel& noise,
                                 const SynthesisOptions& options) {
  noise.Validate();
  const size_t n = opcodes.executed.size();
  if (opcodes.contexts.size() != n) {
    throw PreconditionError("opcode trace is missing step contexts");
  }
  std::vector<const std::vector<HandlerSpec>*> variants(n);
  for (size_t i = 0; i < n; ++i) {
    auto it = handlers.find(opcodes.executed[i]);
    if (it == handlers.end() || it->second.empty()) {
      throw PreconditionError("no handler spec for opcode " +
                              std::string(Mnemonic(opcodes.executed[i])));
    }
    variants[i] = &it->second;
  }

  SideChannelTrace trace;
  trace.layout_seed = layout.seed;
  if (n == 0) return trace;

  Emitter out(layout, noise);
  std::mt19937_64 variant_rng(Fnv1a("variants", noise.rng_seed));
  std::vector<TruthBoundary> truth;

  auto marker = [&]() {
    if (options.profiling_markers) {
      out.Emit(layout.marker_page, AccessMode::kWrite, 9, 5400, true);
    }
  };
  auto handler_page = [&](size_t i) {
    auto it = layout.handler_pages.find(opcodes.executed[i]);
    return it == layout.handler_pages.end() ? layout.entry_page : it->second;
  };

  // The interpreter entry dispatches the first opcode through the same
  // lookup-and-jump sequence as every handler tail.
  {
    const auto& first = variants[0]->front().PathFor(false);
    const NativeStep& lookup = first[first.size() - 2];
    const NativeStep& jump = first.back();
    marker();
    truth.push_back({out.size(), opcodes.executed[0]});
    out.Emit(layout.optable_page, AccessMode::kRead, lookup.pf_count,
             lookup.base_latency);
    out.Emit(handler_page(0), AccessMode::kExec, jump.pf_count,
             jump.base_latency);
  }

  for (size_t i = 0; i < n; ++i) {
    const auto& options_for_op = *variants[i];
    size_t v = 0;
    if (options_for_op.size() > 1) {
      v = std::uniform_int_distribution<size_t>(0, options_for_op.size() - 1)(
          variant_rng);
    }
    const StepContext& ctx = opcodes.contexts[i];
    const auto& path = options_for_op[v].PathFor(ctx.taken);
    const bool last = i + 1 == n;
    const size_t limit = last ? path.size() - 2 : path.size();
    const PageFrame here = handler_page(i);
    const PageFrame next = last ? here : handler_page(i + 1);
    const uint32_t next_ip = last ? ctx.ip : opcodes.contexts[i + 1].ip;

    for (size_t j = 0; j < limit; ++j) {
      const NativeStep& step = path[j];
      const bool tail_lookup = j + 2 == path.size();
      const bool tail_fetch = j + 3 == path.size();
      const AccessMode mode = ModeOf(step.kind);
      PageFrame page = here;
      if (step.kind == StepKind::kLoad || step.kind == StepKind::kStore) {
        page = DataPage(step, ctx, next_ip, tail_fetch, layout);
      } else if (step.kind == StepKind::kExecBranch && j + 1 == path.size()) {
        page = next;
      }
      if (step.kind == StepKind::kLoad &&
          step.target_class == PageClass::kOptable) {
        if (tail_lookup) {
          marker();
          truth.push_back({out.size(), opcodes.executed[i + 1]});
        } else {
          truth.push_back({out.size(), std::nullopt});
        }
      }
      out.Emit(page, mode, step.pf_count, step.base_latency);
    }
  }

  const std::vector<size_t> remap = out.MergeMultiSteps();
  for (const auto& b : truth) {
    const size_t idx = remap[b.index];
    if (!trace.truth.empty() && trace.truth.back().index >= idx) continue;
    trace.truth.push_back({idx, b.label});
  }
  trace.events = out.Take();
  return trace;
}

}  // namespace wasmleak
