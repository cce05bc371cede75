#include "wasmleak/preprocess.h"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "wasmleak/error.h"

namespace wasmleak {

char SegmentClassChar(SegmentClass c) {
  switch (c) {
    case SegmentClass::kOptable:
      return 'O';
    case SegmentClass::kStack:
      return 'S';
    case SegmentClass::kOther:
      return 'X';
  }
  return 'X';
}

OptableDetection DetectOptablePage(const SideChannelTrace& trace) {
  const auto& ev = trace.events;
  if (ev.empty()) throw PreconditionError("trace is empty");
  std::unordered_map<PageFrame, size_t> counts;
  size_t total = 0;
  bool have_exec = false;
  PageFrame last_exec = 0;
  for (size_t i = 0; i + 1 < ev.size(); ++i) {
    if (ev[i].mode == AccessMode::kRead &&
        ev[i + 1].mode == AccessMode::kExec &&
        (!have_exec || ev[i + 1].page != last_exec)) {
      ++counts[ev[i].page];
      ++total;
    }
    if (ev[i].mode == AccessMode::kExec) {
      have_exec = true;
      last_exec = ev[i].page;
    }
  }
  if (total == 0) {
    throw PreconditionError("no read-then-execute pattern found in trace");
  }
  OptableDetection best;
  for (const auto& [page, count] : counts) {
    if (count > best.winner_pairs ||
        (count == best.winner_pairs && page < best.page)) {
      best.tie = count == best.winner_pairs;
      best.page = page;
      best.winner_pairs = count;
    } else if (count == best.winner_pairs) {
      best.tie = true;
    }
  }
  best.pattern_pairs = total;
  best.confidence =
      static_cast<double>(best.winner_pairs) / static_cast<double>(total);
  return best;
}

namespace {

std::vector<size_t> OptableBoundaries(const std::vector<StepEvent>& ev,
                                      PageFrame optable_page) {
  std::vector<size_t> out;
  for (size_t i = 0; i < ev.size(); ++i) {
    if (ev[i].mode == AccessMode::kRead && ev[i].page == optable_page) {
      out.push_back(i);
    }
  }
  return out;
}

}  // namespace

std::vector<PageFrame> DetectStackPages(const SideChannelTrace& trace,
                                        PageFrame optable_page,
                                        const PreprocessConfig& config) {
  const auto& ev = trace.events;
  const auto bounds = OptableBoundaries(ev, optable_page);
  if (config.coverage_target <= 0.0 || bounds.size() < 2) return {};

  struct Counts {
    size_t reads = 0;
    size_t writes = 0;
  };
  std::unordered_map<PageFrame, Counts> counts;
  for (const auto& e : ev) {
    if (e.page == optable_page) continue;
    if (e.mode == AccessMode::kRead) ++counts[e.page].reads;
    if (e.mode == AccessMode::kWrite) ++counts[e.page].writes;
  }
  std::vector<std::pair<size_t, PageFrame>> ranked;
  for (const auto& [page, c] : counts) {
    const size_t score = std::min(c.reads, c.writes);
    if (score > 0) ranked.push_back({score, page});
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });

  // Pages read or written in each region between consecutive optable reads.
  const size_t regions = bounds.size() - 1;
  std::unordered_map<PageFrame, std::vector<size_t>> touched;
  for (size_t r = 0; r < regions; ++r) {
    for (size_t i = bounds[r] + 1; i < bounds[r + 1]; ++i) {
      if (ev[i].mode == AccessMode::kExec) continue;
      auto& list = touched[ev[i].page];
      if (list.empty() || list.back() != r) list.push_back(r);
    }
  }

  std::vector<bool> covered(regions, false);
  size_t covered_count = 0;
  const double min_gain =
      std::max(1.0, config.stack_min_gain * static_cast<double>(regions));
  std::vector<PageFrame> chosen;
  for (const auto& [score, page] : ranked) {
    if (static_cast<double>(covered_count) >=
        config.coverage_target * static_cast<double>(regions)) {
      break;
    }
    const auto it = touched.find(page);
    if (it == touched.end()) continue;
    size_t gain = 0;
    for (size_t r : it->second) gain += covered[r] ? 0 : 1;
    if (static_cast<double>(gain) < min_gain) continue;
    for (size_t r : it->second) {
      if (!covered[r]) {
        covered[r] = true;
        ++covered_count;
      }
    }
    chosen.push_back(page);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

FilterResult FilterRedundant(const SideChannelTrace& trace,
                             PageFrame optable_page,
                             const std::vector<PageFrame>& stack_pages,
                             const PreprocessConfig& config) {
  FilterResult result;
  result.trace.layout_seed = trace.layout_seed;
  const auto& ev = trace.events;
  if (ev.empty()) {
    result.trace.truth = trace.truth;
    return result;
  }

  // Mark events within +-window of an optable read.
  const auto bounds = OptableBoundaries(ev, optable_page);
  std::vector<int> diff(ev.size() + 1, 0);
  for (size_t b : bounds) {
    const size_t lo = b >= config.window ? b - config.window : 0;
    const size_t hi = std::min(ev.size(), b + config.window + 1);
    ++diff[lo];
    --diff[hi];
  }
  std::unordered_map<PageFrame, std::pair<size_t, size_t>> near_total;
  int running = 0;
  for (size_t i = 0; i < ev.size(); ++i) {
    running += diff[i];
    auto& [near, total] = near_total[ev[i].page];
    near += running > 0 ? 1 : 0;
    ++total;
  }

  std::unordered_set<PageFrame> keep(stack_pages.begin(), stack_pages.end());
  keep.insert(optable_page);
  for (const auto& [page, nt] : near_total) {
    if (static_cast<double>(nt.first) >=
        config.keep_threshold * static_cast<double>(nt.second)) {
      keep.insert(page);
    }
  }

  std::vector<size_t> new_index(ev.size(), static_cast<size_t>(-1));
  for (size_t i = 0; i < ev.size(); ++i) {
    if (keep.count(ev[i].page)) {
      new_index[i] = result.trace.events.size();
      result.trace.events.push_back(ev[i]);
      result.source_index.push_back(i);
    }
  }
  result.events_removed = ev.size() - result.trace.events.size();
  for (const auto& b : trace.truth) {
    if (b.index < ev.size() && new_index[b.index] != static_cast<size_t>(-1)) {
      result.trace.truth.push_back({new_index[b.index], b.label});
    }
  }
  return result;
}

Segment MakeSegment(std::vector<StepEvent> events, size_t start_index,
                    size_t id, PageFrame optable_page,
                    const std::vector<PageFrame>& stack_pages) {
  Segment seg;
  seg.id = id;
  seg.start_index = start_index;
  seg.events = std::move(events);
  const size_t n = seg.events.size();
  seg.modes.reserve(n);
  seg.classes.reserve(n);
  seg.pf.reserve(n);
  seg.latency.reserve(n);
  for (const auto& e : seg.events) {
    seg.modes.push_back(ModeChar(e.mode));
    SegmentClass c = SegmentClass::kOther;
    if (e.page == optable_page) {
      c = SegmentClass::kOptable;
    } else if (std::binary_search(stack_pages.begin(), stack_pages.end(),
                                  e.page)) {
      c = SegmentClass::kStack;
    }
    seg.classes.push_back(SegmentClassChar(c));
    seg.pf.push_back(static_cast<double>(e.pf_count));
    seg.latency.push_back(static_cast<double>(e.latency));
  }
  return seg;
}

std::vector<Segment> SegmentTrace(const SideChannelTrace& trace,
                                  PageFrame optable_page,
                                  const std::vector<PageFrame>& stack_pages,
                                  const std::vector<size_t>& source_index) {
  const auto& ev = trace.events;
  const auto bounds = OptableBoundaries(ev, optable_page);
  if (bounds.size() < 2) {
    throw PreconditionError("trace has fewer than two optable boundaries");
  }
  std::vector<PageFrame> stack_sorted = stack_pages;
  std::sort(stack_sorted.begin(), stack_sorted.end());
  std::vector<Segment> segments;
  segments.reserve(bounds.size());
  for (size_t k = 0; k < bounds.size(); ++k) {
    const size_t begin = bounds[k];
    const size_t end = k + 1 < bounds.size() ? bounds[k + 1] : ev.size();
    const size_t id =
        begin < source_index.size() ? source_index[begin] : begin;
    segments.push_back(MakeSegment(
        std::vector<StepEvent>(ev.begin() + static_cast<ptrdiff_t>(begin),
                               ev.begin() + static_cast<ptrdiff_t>(end)),
        begin, id, optable_page, stack_sorted));
  }
  return segments;
}

PreprocessResult Preprocess(const SideChannelTrace& trace,
                            const PreprocessConfig& config) {
  PreprocessResult result;
  const OptableDetection optable = DetectOptablePage(trace);
  result.report.optable_page = optable.page;
  result.report.confidence = optable.confidence;
  result.report.stack_pages = DetectStackPages(trace, optable.page, config);
  result.filtered = FilterRedundant(trace, optable.page,
                                    result.report.stack_pages, config);
  result.report.events_removed = result.filtered.events_removed;
  result.segments =
      SegmentTrace(result.filtered.trace, optable.page,
                   result.report.stack_pages, result.filtered.source_index);
  return result;
}

}  // namespace wasmleak
