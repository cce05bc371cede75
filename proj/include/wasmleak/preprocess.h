#ifndef WASMLEAK_PREPROCESS_H_
#define WASMLEAK_PREPROCESS_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "wasmleak/machine_model.h"

namespace wasmleak {

// Page classes an attacker can recover from the trace alone.
enum class SegmentClass : uint8_t { kOptable, kStack, kOther };

char SegmentClassChar(SegmentClass c);  // 'O', 'S', 'X'

struct PreprocessConfig {
  // Stack-page selection stops once this share of inter-optable regions
  // touches a chosen page.
  double coverage_target = 0.95;
  // A candidate must raise coverage by at least this share of regions.
  double stack_min_gain = 0.001;
  // Events within +-window of an optable boundary count as dispatch-adjacent.
  size_t window = 16;
  // A page survives filtering when at least this share of its events is
  // dispatch-adjacent.
  double keep_threshold = 0.5;

  bool operator==(const PreprocessConfig&) const = default;
};

struct OptableDetection {
  PageFrame page = 0;
  double confidence = 0.0;
  size_t pattern_pairs = 0;  // read-then-execute pairs over all pages
  size_t winner_pairs = 0;
  bool tie = false;  // several pages shared the top count
};

// Finds the page whose reads are most often followed by an execute fault on
// a newly entered code page. Throws PreconditionError when no such pair
// exists.
OptableDetection DetectOptablePage(const SideChannelTrace& trace);

// Greedy selection of pages that are both read and written, in order of
// min(reads, writes), until enough inter-optable regions are covered.
// Returned frames are sorted ascending.
std::vector<PageFrame> DetectStackPages(const SideChannelTrace& trace,
                                        PageFrame optable_page,
                                        const PreprocessConfig& config = {});

struct FilterResult {
  SideChannelTrace trace;
  // Raw-trace index of every kept event.
  std::vector<size_t> source_index;
  size_t events_removed = 0;
};

// Drops events on pages that rarely appear near dispatch boundaries (code
// that ran outside the interpreter). Truth boundaries on removed events are
// dropped; the rest are re-indexed.
FilterResult FilterRedundant(const SideChannelTrace& trace,
                             PageFrame optable_page,
                             const std::vector<PageFrame>& stack_pages,
                             const PreprocessConfig& config = {});

struct Segment {
  // Stable identifier: raw-trace index of the optable read that opens the
  // segment.
  size_t id = 0;
  // Position of the first event in the trace that was segmented.
  size_t start_index = 0;
  std::vector<StepEvent> events;
  std::string modes;    // 'R', 'W', 'E' per event
  std::string classes;  // SegmentClassChar per event
  std::vector<double> pf;
  std::vector<double> latency;

  size_t size() const { return events.size(); }
};

// Splits at every read of the optable page. Events before the first boundary
// are discarded. `source_index` (optional) maps positions to raw-trace
// indices for segment ids. Throws PreconditionError on fewer than two
// boundaries.
std::vector<Segment> SegmentTrace(const SideChannelTrace& trace,
                                  PageFrame optable_page,
                                  const std::vector<PageFrame>& stack_pages,
                                  const std::vector<size_t>& source_index = {});

// Builds a segment from an arbitrary event slice.
Segment MakeSegment(std::vector<StepEvent> events, size_t start_index,
                    size_t id, PageFrame optable_page,
                    const std::vector<PageFrame>& stack_pages);

struct PreprocessReport {
  PageFrame optable_page = 0;
  std::vector<PageFrame> stack_pages;
  size_t events_removed = 0;
  double confidence = 0.0;
};

struct PreprocessResult {
  PreprocessReport report;
  FilterResult filtered;
  std::vector<Segment> segments;
};

// Optable detection, stack detection, filtering and segmentation in order.
PreprocessResult Preprocess(const SideChannelTrace& trace,
                            const PreprocessConfig& config = {});

}  // namespace wasmleak

#endif  // WASMLEAK_PREPROCESS_H_
