#ifndef WASMLEAK_TRACE_IO_H_
#define WASMLEAK_TRACE_IO_H_

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wasmleak/machine_model.h"
#include "wasmleak/preprocess.h"

namespace wasmleak {

// Provenance line written as the first line of every artifact:
//   # wasmleak config=<16 hex> layout_seed=<n> [key=value ...]
struct ArtifactMeta {
  std::string config_hash;
  std::optional<uint64_t> layout_seed;
  std::map<std::string, std::string> extra;

  std::string Line() const;
  // Parses a provenance line; returns nullopt when `line` is not one.
  static std::optional<ArtifactMeta> Parse(const std::string& line);
};

// Lowercase 0x-prefixed hex, the address notation of every artifact.
std::string FormatPageFrame(PageFrame frame);
// Throws FormatError on anything but 0x-prefixed hex.
PageFrame ParsePageFrame(std::string_view text);

// Trace CSV: `address,mode,pf_count,latency` where address is a lowercase
// 0x-prefixed page frame number and mode one of R/W/E.
void WriteTraceCsv(std::ostream& out, const SideChannelTrace& trace,
                   const ArtifactMeta& meta);
SideChannelTrace ReadTraceCsv(std::istream& in, ArtifactMeta* meta = nullptr);

// Truth CSV: `boundary_index,label`, one row per optable read of the raw
// trace, label is a mnemonic or NULL.
void WriteTruthCsv(std::ostream& out, const std::vector<TruthBoundary>& truth,
                   const ArtifactMeta& meta);
std::vector<TruthBoundary> ReadTruthCsv(std::istream& in,
                                        ArtifactMeta* meta = nullptr);

// Segmented trace: the trace CSV columns plus `segment_id`.
void WriteSegmentsCsv(std::ostream& out, const std::vector<Segment>& segments,
                      const ArtifactMeta& meta);

struct Prediction {
  size_t segment_id = 0;
  Label label;
  double score = 0.0;
  double margin = 0.0;

  bool operator==(const Prediction&) const = default;
};

// Predictions CSV: `segment_id,label,score,margin`, scores with 6 decimals.
void WritePredictionsCsv(std::ostream& out,
                         const std::vector<Prediction>& predictions,
                         const ArtifactMeta& meta);
std::vector<Prediction> ReadPredictionsCsv(std::istream& in,
                                           ArtifactMeta* meta = nullptr);

// File helpers. Opening failures raise ConfigError naming the path.
std::string ReadFile(const std::filesystem::path& path);
void WriteFile(const std::filesystem::path& path, const std::string& content);

}  // namespace wasmleak

#endif  // WASMLEAK_TRACE_IO_H_
