#ifndef WASMLEAK_METRICS_H_
#define WASMLEAK_METRICS_H_

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wasmleak/opcode.h"

namespace wasmleak {

// r = 1 - (E + M + I) / N as a fraction. Throws PreconditionError when
// N == 0 or E + M + I > N.
double Recall(size_t n, size_t e, size_t m, size_t i);

struct RecallReport {
  size_t n = 0;
  size_t correct = 0;
  size_t e = 0;  // both non-NULL, different family (or opcode when strict)
  size_t m = 0;  // predicted NULL, truth an opcode
  size_t i = 0;  // predicted an opcode, truth NULL
  double recall = 0.0;
  // (truth, predicted) -> count, keyed by family name, or mnemonic in strict
  // mode.
  std::map<std::pair<std::string, std::string>, size_t> confusion;
};

// Region-by-region classification over a shared segmentation. Throws
// PreconditionError on length mismatch or empty input.
RecallReport ClassifyOutcomes(const std::vector<Label>& predicted,
                              const std::vector<Label>& truth,
                              bool strict = false);

struct RegionLabel {
  size_t id = 0;
  Label label;
};

// Joins predictions and truth on region id. A truth region without a
// prediction counts as predicted NULL; a predicted region without truth
// counts as truth NULL. Both inputs must be sorted by id.
std::pair<std::vector<Label>, std::vector<Label>> JoinRegions(
    const std::vector<RegionLabel>& predicted,
    const std::vector<RegionLabel>& truth);

struct AlignmentCounts {
  size_t e = 0;
  size_t m = 0;
  size_t i = 0;
  size_t n = 0;

  double recall() const { return Recall(n, e, m, i); }
  bool operator==(const AlignmentCounts&) const = default;
};

// Unit-cost edit alignment of `predicted` against `truth`: substitutions are
// errors, truth symbols without a partner are misses, extra predicted symbols
// insertions. Among optimal alignments the backtrace prefers substitution,
// then miss, then insertion. Throws PreconditionError when either input is
// empty.
AlignmentCounts AlignFree(std::string_view predicted, std::string_view truth);
AlignmentCounts AlignFree(const std::vector<Label>& predicted,
                          const std::vector<Label>& truth);

// Share of positions i < len(truth) where predicted[i] == truth[i].
double NaivePositionalRecall(std::string_view predicted, std::string_view truth);

}  // namespace wasmleak

#endif  // WASMLEAK_METRICS_H_
