#include <algorithm>
#include <random>
#include <unordered_set>

#include "wasmleak/error.h"
#include "wasmleak/hash.h"
#include "wasmleak/machine_model.h"

namespace wasmleak {

std::string_view PageClassName(PageClass c) {
  switch (c) {
    case PageClass::kOptable:
      return "OPTABLE";
    case PageClass::kStack:
      return "STACK";
    case PageClass::kHandlerCode:
      return "HANDLER_CODE";
    case PageClass::kBytecode:
      return "BYTECODE";
    case PageClass::kMarker:
      return "MARKER";
    case PageClass::kLinearMem:
      return "LINEAR_MEM";
    case PageClass::kOther:
      return "OTHER";
  }
  return "OTHER";
}

namespace {

void AssignHandlers(MemoryLayout& layout, std::mt19937_64& rng) {
  std::vector<Opcode> ops;
  for (const auto& info : SupportedOpcodes()) ops.push_back(info.opcode);
  std::shuffle(ops.begin(), ops.end(), rng);
  layout.handler_pages.clear();
  const size_t pages = layout.handler_code_pages.size();
  for (size_t i = 0; i < ops.size(); ++i) {
    // Contiguous runs, as a compiler lays out consecutive handlers.
    layout.handler_pages[ops[i]] =
        layout.handler_code_pages[i * pages / ops.size()];
  }
}

}  // namespace

PageClass MemoryLayout::ClassOf(PageFrame frame) const {
  auto in = [frame](const std::vector<PageFrame>& v) {
    return std::find(v.begin(), v.end(), frame) != v.end();
  };
  if (frame == optable_page) return PageClass::kOptable;
  if (frame == marker_page) return PageClass::kMarker;
  if (frame == entry_page || in(handler_code_pages)) {
    return PageClass::kHandlerCode;
  }
  if (in(stack_pages)) return PageClass::kStack;
  if (in(bytecode_pages)) return PageClass::kBytecode;
  if (in(linear_mem_pages)) return PageClass::kLinearMem;
  return PageClass::kOther;
}

PageFrame MemoryLayout::StackPage(uint32_t stack_addr) const {
  const uint64_t offset = config.stack_base_offset + uint64_t{stack_addr};
  return stack_pages[(offset / config.page_size) % stack_pages.size()];
}

PageFrame MemoryLayout::BytecodePage(uint32_t offset) const {
  return bytecode_pages[(offset / config.page_size) % bytecode_pages.size()];
}

PageFrame MemoryLayout::LinearPage(uint32_t addr) const {
  return linear_mem_pages[(addr / config.page_size) % linear_mem_pages.size()];
}

MemoryLayout BuildLayout(uint64_t seed, const LayoutConfig& config) {
  if (config.page_size == 0) throw ConfigError("layout.page_size must be > 0");
  if (config.handler_pages == 0 || config.stack_pages == 0 ||
      config.bytecode_pages == 0 || config.linear_mem_pages == 0) {
    throw ConfigError(
        "layout needs at least one handler, stack, bytecode and linear page");
  }
  const uint64_t needed = 3ull + config.handler_pages + config.stack_pages +
                          config.bytecode_pages + config.linear_mem_pages +
                          config.other_pages;
  if (needed > config.frame_span) {
    throw ConfigError("layout requests " + std::to_string(needed) +
                      " pages but the frame span holds " +
                      std::to_string(config.frame_span));
  }

  MemoryLayout layout;
  layout.seed = seed;
  layout.config = config;
  std::mt19937_64 rng(Fnv1a("layout", seed));
  std::uniform_int_distribution<uint64_t> pick(0, config.frame_span - 1);
  std::unordered_set<PageFrame> used;
  auto draw = [&]() {
    while (true) {
      const PageFrame f = config.base_frame + pick(rng);
      if (used.insert(f).second) return f;
    }
  };
  auto draw_n = [&](uint32_t n) {
    std::vector<PageFrame> out(n);
    for (auto& f : out) f = draw();
    return out;
  };

  layout.optable_page = draw();
  layout.marker_page = draw();
  layout.entry_page = draw();
  layout.handler_code_pages = draw_n(config.handler_pages);
  layout.stack_pages = draw_n(config.stack_pages);
  layout.bytecode_pages = draw_n(config.bytecode_pages);
  layout.linear_mem_pages = draw_n(config.linear_mem_pages);
  layout.other_pages = draw_n(config.other_pages);
  AssignHandlers(layout, rng);
  return layout;
}

MemoryLayout ShuffleHandlerPages(const MemoryLayout& layout, uint64_t seed) {
  MemoryLayout out = layout;
  std::mt19937_64 rng(Fnv1a("shuffle", seed));
  AssignHandlers(out, rng);
  return out;
}

}  // namespace wasmleak
