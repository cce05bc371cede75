#ifndef WASMLEAK_MATCHER_H_
#define WASMLEAK_MATCHER_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wasmleak/error.h"
#include "wasmleak/preprocess.h"
#include "wasmleak/profiler.h"

namespace wasmleak {

enum class Channel : uint8_t { kLatency, kPfCount, kMode, kClass };
inline constexpr std::array<Channel, 4> kAllChannels = {
    Channel::kLatency, Channel::kPfCount, Channel::kMode, Channel::kClass};

std::string_view ChannelName(Channel c);  // latency, pf_count, mode, class

class ChannelSet {
 public:
  ChannelSet() = default;
  static ChannelSet All();
  // Comma separated channel names, or "all". Throws ConfigError.
  static ChannelSet Parse(std::string_view text);

  ChannelSet& Add(Channel c) {
    bits_ |= Bit(c);
    return *this;
  }
  ChannelSet& Remove(Channel c) {
    bits_ &= static_cast<uint8_t>(~Bit(c));
    return *this;
  }
  bool Has(Channel c) const { return (bits_ & Bit(c)) != 0; }
  bool empty() const { return bits_ == 0; }
  // Names in canonical order joined by commas.
  std::string ToString() const;
  bool operator==(const ChannelSet&) const = default;

 private:
  static uint8_t Bit(Channel c) { return uint8_t{1} << static_cast<int>(c); }
  uint8_t bits_ = 0;
};

// Raised when both inputs to Pearson are constant, so the coefficient is
// undefined.
class UndefinedCorrelation : public PreconditionError {
 public:
  UndefinedCorrelation() : PreconditionError("correlation undefined: both inputs constant") {}
};

// Sample Pearson correlation. Throws PreconditionError on unequal lengths
// or fewer than two samples, UndefinedCorrelation when both inputs are
// constant. A single constant input yields 0.
double Pearson(std::span<const double> x, std::span<const double> y);

// Numeric channel score in [0,1]: clamped correlation over the common prefix
// times min(len)/max(len). Constant inputs fall back to exact-match counting.
double ScoreNumeric(std::span<const double> x, std::span<const double> y);

// 1 / (1 + H), H = positional mismatches over the common prefix plus the
// length difference.
double ScoreDiscrete(std::string_view x, std::string_view y);

struct ChannelScore {
  Channel channel;
  double value;
};

std::vector<ChannelScore> ScoreChannels(const Segment& seg,
                                        const Fingerprint& fp,
                                        const ChannelSet& channels);

// Product of the enabled channel scores. Throws PreconditionError when no
// channel is enabled.
double ScoreSegment(const Segment& seg, const Fingerprint& fp,
                    const ChannelSet& channels);

struct MatchOutcome {
  size_t segment_index = 0;
  size_t segment_id = 0;
  Label predicted;
  double score = 0.0;
  // Best score minus the best score of any entry with a different label.
  double runner_up_margin = 0.0;
};

// Argmax over the whole database. Ties go to the higher support, then to the
// lexicographically smaller label name. Throws PreconditionError on an
// empty database or channel set.
std::vector<MatchOutcome> MatchTrace(const std::vector<Segment>& segments,
                                     const FingerprintDb& db,
                                     const ChannelSet& channels);

}  // namespace wasmleak

#endif  // WASMLEAK_MATCHER_H_
