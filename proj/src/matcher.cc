#include "wasmleak/matcher.h"

#include <algorithm>
#include <cmath>

namespace wasmleak {

std::string_view ChannelName(Channel c) {
  switch (c) {
    case Channel::kLatency:
      return "latency";
    case Channel::kPfCount:
      return "pf_count";
    case Channel::kMode:
      return "mode";
    case Channel::kClass:
      return "class";
  }
  return "latency";
}

ChannelSet ChannelSet::All() {
  ChannelSet s;
  for (Channel c : kAllChannels) s.Add(c);
  return s;
}

ChannelSet ChannelSet::Parse(std::string_view text) {
  ChannelSet s;
  size_t start = 0;
  while (start <= text.size()) {
    size_t comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    std::string_view name = text.substr(start, comma - start);
    while (!name.empty() && name.front() == ' ') name.remove_prefix(1);
    while (!name.empty() && name.back() == ' ') name.remove_suffix(1);
    if (name == "all") {
      s = All();
    } else if (!name.empty()) {
      bool found = false;
      for (Channel c : kAllChannels) {
        if (ChannelName(c) == name) {
          s.Add(c);
          found = true;
        }
      }
      if (!found) throw ConfigError("unknown channel '" + std::string(name) + "'");
    }
    start = comma + 1;
  }
  return s;
}

std::string ChannelSet::ToString() const {
  std::string out;
  for (Channel c : kAllChannels) {
    if (!Has(c)) continue;
    if (!out.empty()) out += ',';
    out += ChannelName(c);
  }
  return out;
}

namespace {

bool IsConstant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; });
}

double LengthRatio(size_t a, size_t b) {
  return static_cast<double>(std::min(a, b)) /
         static_cast<double>(std::max(a, b));
}

}  // namespace

double Pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw PreconditionError("pearson: length mismatch " +
                            std::to_string(x.size()) + " vs " +
                            std::to_string(y.size()));
  }
  const size_t n = x.size();
  if (n < 2) throw PreconditionError("pearson: need at least two samples");
  if (std::equal(x.begin(), x.end(), y.begin())) {
    if (IsConstant(x)) throw UndefinedCorrelation();
    return 1.0;
  }
  double mx = 0.0;
  double my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 && syy == 0.0) throw UndefinedCorrelation();
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double ScoreNumeric(std::span<const double> x, std::span<const double> y) {
  const size_t n = std::min(x.size(), y.size());
  if (n == 0) return 0.0;
  const double ratio = LengthRatio(x.size(), y.size());
  const auto xs = x.first(n);
  const auto ys = y.first(n);
  const bool cx = IsConstant(xs);
  const bool cy = IsConstant(ys);
  if (cx && cy) return xs[0] == ys[0] ? ratio : 0.0;
  if (cx || cy) {
    size_t mismatches = 0;
    for (size_t i = 0; i < n; ++i) mismatches += xs[i] != ys[i] ? 1 : 0;
    return ratio / (1.0 + static_cast<double>(mismatches));
  }
  return std::max(Pearson(xs, ys), 0.0) * ratio;
}

double ScoreDiscrete(std::string_view x, std::string_view y) {
  const size_t n = std::min(x.size(), y.size());
  size_t h = std::max(x.size(), y.size()) - n;
  for (size_t i = 0; i < n; ++i) h += x[i] != y[i] ? 1 : 0;
  return 1.0 / (1.0 + static_cast<double>(h));
}

namespace {

std::vector<double> PfAsDouble(const std::vector<uint32_t>& pf) {
  return std::vector<double>(pf.begin(), pf.end());
}

// Discrete channels first: they are cheap and bound the final product.
double DiscretePart(const Segment& seg, const Fingerprint& fp,
                    const ChannelSet& channels) {
  double s = 1.0;
  if (channels.Has(Channel::kMode)) s *= ScoreDiscrete(seg.modes, fp.mode_seq);
  if (channels.Has(Channel::kClass)) {
    s *= ScoreDiscrete(seg.classes, fp.class_seq);
  }
  return s;
}

double NumericPart(const Segment& seg, const Fingerprint& fp,
                   const std::vector<double>& fp_pf, const ChannelSet& channels) {
  double s = 1.0;
  if (channels.Has(Channel::kLatency)) {
    s *= ScoreNumeric(seg.latency, fp.latency_mean);
  }
  if (channels.Has(Channel::kPfCount)) s *= ScoreNumeric(seg.pf, fp_pf);
  return s;
}

}  // namespace

std::vector<ChannelScore> ScoreChannels(const Segment& seg,
                                        const Fingerprint& fp,
                                        const ChannelSet& channels) {
  std::vector<ChannelScore> out;
  for (Channel c : kAllChannels) {
    if (!channels.Has(c)) continue;
    double v = 0.0;
    switch (c) {
      case Channel::kLatency:
        v = ScoreNumeric(seg.latency, fp.latency_mean);
        break;
      case Channel::kPfCount:
        v = ScoreNumeric(seg.pf, PfAsDouble(fp.pf_seq));
        break;
      case Channel::kMode:
        v = ScoreDiscrete(seg.modes, fp.mode_seq);
        break;
      case Channel::kClass:
        v = ScoreDiscrete(seg.classes, fp.class_seq);
        break;
    }
    out.push_back({c, v});
  }
  return out;
}

double ScoreSegment(const Segment& seg, const Fingerprint& fp,
                    const ChannelSet& channels) {
  if (channels.empty()) throw PreconditionError("no matching channel enabled");
  return DiscretePart(seg, fp, channels) *
         NumericPart(seg, fp, PfAsDouble(fp.pf_seq), channels);
}

std::vector<MatchOutcome> MatchTrace(const std::vector<Segment>& segments,
                                     const FingerprintDb& db,
                                     const ChannelSet& channels) {
  if (channels.empty()) throw PreconditionError("no matching channel enabled");
  if (db.entries.empty()) throw PreconditionError("fingerprint database is empty");
  std::vector<std::vector<double>> pf(db.entries.size());
  for (size_t k = 0; k < db.entries.size(); ++k) {
    pf[k] = PfAsDouble(db.entries[k].pf_seq);
  }

  // Strict preference order between two scored entries.
  auto better = [&](double sa, size_t a, double sb, size_t b) {
    if (sa != sb) return sa > sb;
    const auto& fa = db.entries[a];
    const auto& fb = db.entries[b];
    if (fa.support != fb.support) return fa.support > fb.support;
    const auto na = LabelName(fa.label);
    const auto nb = LabelName(fb.label);
    if (na != nb) return na < nb;
    return a < b;
  };

  std::vector<MatchOutcome> out;
  out.reserve(segments.size());
  for (size_t s = 0; s < segments.size(); ++s) {
    const Segment& seg = segments[s];
    size_t best = 0;
    double best_score = -1.0;
    double runner = -1.0;  // best score among labels other than the best's
    for (size_t k = 0; k < db.entries.size(); ++k) {
      const Fingerprint& fp = db.entries[k];
      const double bound = DiscretePart(seg, fp, channels);
      if (bound < runner) continue;
      const double score = bound * NumericPart(seg, fp, pf[k], channels);
      if (best_score < 0.0) {
        best = k;
        best_score = score;
        continue;
      }
      const bool same_label = fp.label == db.entries[best].label;
      if (better(score, k, best_score, best)) {
        if (!same_label) runner = best_score;
        best = k;
        best_score = score;
      } else if (!same_label) {
        runner = std::max(runner, score);
      }
    }
    MatchOutcome o;
    o.segment_index = s;
    o.segment_id = seg.id;
    o.predicted = db.entries[best].label;
    o.score = best_score;
    o.runner_up_margin = best_score - std::max(runner, 0.0);
    out.push_back(o);
  }
  return out;
}

}  // namespace wasmleak
