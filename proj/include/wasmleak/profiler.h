#ifndef WASMLEAK_PROFILER_H_
#define WASMLEAK_PROFILER_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "wasmleak/machine_model.h"
#include "wasmleak/opcode.h"
#include "wasmleak/preprocess.h"

namespace wasmleak {

struct Fingerprint {
  Label label;
  std::string mode_seq;   // R/W/E per event
  std::string class_seq;  // O/S/X per event
  std::vector<uint32_t> pf_seq;
  std::vector<double> latency_mean;
  uint64_t support = 1;

  size_t size() const { return mode_seq.size(); }
  bool operator==(const Fingerprint&) const = default;
};

struct DbMeta {
  uint64_t layout_seed = 0;
  std::string noise_hash;
  std::string config_hash;
  PageFrame optable_page = 0;
  std::vector<PageFrame> stack_pages;
  size_t observations = 0;

  bool operator==(const DbMeta&) const = default;
};

struct FingerprintDb {
  std::vector<Fingerprint> entries;
  DbMeta meta;

  bool operator==(const FingerprintDb&) const = default;
};

struct LabeledSegment {
  Segment segment;
  Label label;
};

// Splits at marker writes. Inside a marker region every further truth
// boundary opens a NULL-labelled continuation segment. Marker events are not
// part of any segment. Throws PreconditionError without markers and
// FormatError when the truth does not line up with the markers.
std::vector<LabeledSegment> SplitByMarker(
    const SideChannelTrace& trace, PageFrame marker_page,
    PageFrame optable_page, const std::vector<PageFrame>& stack_pages);

// One fingerprint per observation, support 1. Throws PreconditionError on
// empty input.
FingerprintDb BuildFingerprints(const std::vector<LabeledSegment>& labeled,
                                const DbMeta& meta = {});

// Groups entries with equal (label, mode_seq, class_seq, pf_seq), averaging
// latencies weighted by support. Output is sorted by label then structure.
FingerprintDb DedupDb(const FingerprintDb& db);

struct ProfileResult {
  PreprocessReport report;
  FingerprintDb db;
};

// Preprocessing, marker split, fingerprinting and dedup of one profiling
// trace.
ProfileResult ProfileTrace(const SideChannelTrace& trace,
                           PageFrame marker_page,
                           const PreprocessConfig& config = {});

// JSON lines: a header object followed by one object per fingerprint.
// Latencies are stored with three decimals; DedupDb already rounds to that
// precision so a write/read round trip is exact.
inline constexpr int kDbFormatVersion = 1;
void WriteDb(std::ostream& out, const FingerprintDb& db);
FingerprintDb ReadDb(std::istream& in);

}  // namespace wasmleak

#endif  // WASMLEAK_PROFILER_H_
