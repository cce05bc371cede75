#include "wasmleak/profiler.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <tuple>

#include "json.hpp"
#include "wasmleak/error.h"
#include "wasmleak/trace_io.h"

namespace wasmleak {

namespace {

using Json = nlohmann::json;

constexpr std::string_view kDbFormat = "wasmleak-fingerprint-db";

double RoundMilli(double v) { return std::round(v * 1000.0) / 1000.0; }

using StructuralKey = std::tuple<std::string_view, std::string_view,
                                 std::string_view, const std::vector<uint32_t>&>;

StructuralKey KeyOf(const Fingerprint& fp) {
  return {LabelName(fp.label), fp.mode_seq, fp.class_seq, fp.pf_seq};
}

}  // namespace

std::vector<LabeledSegment> SplitByMarker(
    const SideChannelTrace& trace, PageFrame marker_page,
    PageFrame optable_page, const std::vector<PageFrame>& stack_pages) {
  const auto& ev = trace.events;
  std::vector<size_t> markers;
  for (size_t i = 0; i < ev.size(); ++i) {
    if (ev[i].mode == AccessMode::kWrite && ev[i].page == marker_page) {
      markers.push_back(i);
    }
  }
  if (markers.empty()) {
    throw PreconditionError("no marker writes found on page " +
                            FormatPageFrame(marker_page));
  }
  std::vector<PageFrame> stack_sorted = stack_pages;
  std::sort(stack_sorted.begin(), stack_sorted.end());

  std::vector<LabeledSegment> out;
  size_t t = 0;
  const auto& truth = trace.truth;
  while (t < truth.size() && truth[t].index < markers.front()) ++t;
  for (size_t k = 0; k < markers.size(); ++k) {
    const size_t region_end = k + 1 < markers.size() ? markers[k + 1] : ev.size();
    std::vector<size_t> bounds;
    std::vector<Label> labels;
    while (t < truth.size() && truth[t].index < region_end) {
      bounds.push_back(truth[t].index);
      labels.push_back(truth[t].label);
      ++t;
    }
    if (bounds.empty() || !labels.front().has_value()) {
      throw FormatError("truth does not line up with marker region " +
                        std::to_string(k));
    }
    for (size_t j = 0; j < bounds.size(); ++j) {
      const size_t begin = bounds[j];
      const size_t end = j + 1 < bounds.size() ? bounds[j + 1] : region_end;
      std::vector<StepEvent> events;
      events.reserve(end - begin);
      for (size_t i = begin; i < end; ++i) {
        if (ev[i].page == marker_page && ev[i].mode == AccessMode::kWrite) continue;
        events.push_back(ev[i]);
      }
      out.push_back({MakeSegment(std::move(events), begin, begin, optable_page,
                                 stack_sorted),
                     j == 0 ? labels[j] : Label{}});
    }
  }
  if (t != truth.size()) {
    throw FormatError("truth has boundaries past the last marker region");
  }
  return out;
}

FingerprintDb BuildFingerprints(const std::vector<LabeledSegment>& labeled,
                                const DbMeta& meta) {
  if (labeled.empty()) throw PreconditionError("no labelled segments to profile");
  FingerprintDb db;
  db.meta = meta;
  db.meta.observations = labeled.size();
  db.entries.reserve(labeled.size());
  for (const auto& [seg, label] : labeled) {
    Fingerprint fp;
    fp.label = label;
    fp.mode_seq = seg.modes;
    fp.class_seq = seg.classes;
    fp.pf_seq.reserve(seg.size());
    for (const auto& e : seg.events) fp.pf_seq.push_back(e.pf_count);
    fp.latency_mean = seg.latency;
    db.entries.push_back(std::move(fp));
  }
  return db;
}

FingerprintDb DedupDb(const FingerprintDb& db) {
  std::vector<const Fingerprint*> order;
  order.reserve(db.entries.size());
  for (const auto& fp : db.entries) order.push_back(&fp);
  std::stable_sort(order.begin(), order.end(),
                   [](const Fingerprint* a, const Fingerprint* b) {
                     return KeyOf(*a) < KeyOf(*b);
                   });

  FingerprintDb out;
  out.meta = db.meta;
  for (size_t i = 0; i < order.size();) {
    size_t j = i + 1;
    while (j < order.size() && KeyOf(*order[j]) == KeyOf(*order[i])) ++j;
    Fingerprint merged = *order[i];
    if (j - i > 1) {
      std::vector<double> sum(merged.size(), 0.0);
      uint64_t support = 0;
      for (size_t k = i; k < j; ++k) {
        const auto& fp = *order[k];
        for (size_t p = 0; p < sum.size(); ++p) {
          sum[p] += static_cast<double>(fp.support) * fp.latency_mean[p];
        }
        support += fp.support;
      }
      for (size_t p = 0; p < sum.size(); ++p) {
        merged.latency_mean[p] = sum[p] / static_cast<double>(support);
      }
      merged.support = support;
    }
    for (double& v : merged.latency_mean) v = RoundMilli(v);
    out.entries.push_back(std::move(merged));
    i = j;
  }
  return out;
}

ProfileResult ProfileTrace(const SideChannelTrace& trace,
                           PageFrame marker_page,
                           const PreprocessConfig& config) {
  ProfileResult result;
  const OptableDetection optable = DetectOptablePage(trace);
  result.report.optable_page = optable.page;
  result.report.confidence = optable.confidence;
  result.report.stack_pages = DetectStackPages(trace, optable.page, config);
  const FilterResult filtered =
      FilterRedundant(trace, optable.page, result.report.stack_pages, config);
  result.report.events_removed = filtered.events_removed;
  const auto labeled = SplitByMarker(filtered.trace, marker_page, optable.page,
                                     result.report.stack_pages);
  DbMeta meta;
  meta.layout_seed = trace.layout_seed;
  meta.optable_page = optable.page;
  meta.stack_pages = result.report.stack_pages;
  result.db = DedupDb(BuildFingerprints(labeled, meta));
  return result;
}

void WriteDb(std::ostream& out, const FingerprintDb& db) {
  Json header;
  header["format"] = kDbFormat;
  header["version"] = kDbFormatVersion;
  header["layout_seed"] = db.meta.layout_seed;
  header["noise"] = db.meta.noise_hash;
  header["config"] = db.meta.config_hash;
  header["optable_page"] = FormatPageFrame(db.meta.optable_page);
  Json stack = Json::array();
  for (PageFrame f : db.meta.stack_pages) stack.push_back(FormatPageFrame(f));
  header["stack_pages"] = stack;
  header["observations"] = db.meta.observations;
  header["entries"] = db.entries.size();
  out << header.dump() << '\n';
  for (const auto& fp : db.entries) {
    Json rec;
    rec["label"] = LabelName(fp.label);
    rec["modes"] = fp.mode_seq;
    rec["classes"] = fp.class_seq;
    rec["pf"] = fp.pf_seq;
    Json lat = Json::array();
    for (double v : fp.latency_mean) lat.push_back(RoundMilli(v));
    rec["latency"] = lat;
    rec["support"] = fp.support;
    out << rec.dump() << '\n';
  }
}

FingerprintDb ReadDb(std::istream& in) {
  FingerprintDb db;
  std::string line;
  size_t line_no = 0;
  size_t expected = 0;
  bool have_header = false;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line == "\r") continue;
      const Json j = Json::parse(line);
      if (!have_header) {
        if (j.value("format", "") != kDbFormat) {
          throw FormatError("database: not a fingerprint database");
        }
        if (j.at("version").get<int>() != kDbFormatVersion) {
          throw FormatError("database: unsupported version " +
                            j.at("version").dump());
        }
        db.meta.layout_seed = j.at("layout_seed").get<uint64_t>();
        db.meta.noise_hash = j.at("noise").get<std::string>();
        db.meta.config_hash = j.at("config").get<std::string>();
        db.meta.optable_page = ParsePageFrame(j.at("optable_page").get<std::string>());
        for (const auto& f : j.at("stack_pages")) {
          db.meta.stack_pages.push_back(ParsePageFrame(f.get<std::string>()));
        }
        db.meta.observations = j.at("observations").get<size_t>();
        expected = j.at("entries").get<size_t>();
        have_header = true;
        continue;
      }
      Fingerprint fp;
      const auto label = ParseLabel(j.at("label").get<std::string>());
      if (!label) throw FormatError("unknown label " + j.at("label").dump());
      fp.label = *label;
      fp.mode_seq = j.at("modes").get<std::string>();
      fp.class_seq = j.at("classes").get<std::string>();
      fp.pf_seq = j.at("pf").get<std::vector<uint32_t>>();
      fp.latency_mean = j.at("latency").get<std::vector<double>>();
      fp.support = j.at("support").get<uint64_t>();
      const size_t n = fp.mode_seq.size();
      if (n == 0 || fp.class_seq.size() != n || fp.pf_seq.size() != n ||
          fp.latency_mean.size() != n || fp.support == 0) {
        throw FormatError("inconsistent fingerprint record");
      }
      for (char c : fp.mode_seq) {
        if (!ModeFromChar(c)) throw FormatError("bad mode character");
      }
      for (char c : fp.class_seq) {
        if (c != 'O' && c != 'S' && c != 'X') {
          throw FormatError("bad page class character");
        }
      }
      db.entries.push_back(std::move(fp));
    }
  } catch (const Json::exception& e) {
    throw FormatError("database line " + std::to_string(line_no) + ": " +
                      e.what());
  } catch (const FormatError& e) {
    throw FormatError("database line " + std::to_string(line_no) + ": " +
                      e.what());
  }
  if (!have_header) throw FormatError("database: empty file");
  if (db.entries.size() != expected) {
    throw FormatError("database: header announces " + std::to_string(expected) +
                      " entries, found " + std::to_string(db.entries.size()));
  }
  return db;
}

}  // namespace wasmleak
