#include "wasmleak/trace_io.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

#include "wasmleak/error.h"

namespace wasmleak {

namespace {

constexpr std::string_view kMetaPrefix = "# wasmleak";

std::vector<std::string_view> SplitCsv(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

template <typename T>
T ParseUnsigned(std::string_view text, int base, size_t line,
                std::string_view what) {
  T value{};
  if (base == 16) {
    if (text.size() < 3 || text[0] != '0' || (text[1] != 'x' && text[1] != 'X')) {
      throw FormatError("line " + std::to_string(line) + ": " +
                        std::string(what) + " must be 0x-prefixed hex");
    }
    text.remove_prefix(2);
  }
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value, base);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw FormatError("line " + std::to_string(line) + ": bad " +
                      std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

double ParseDouble(std::string_view text, size_t line, std::string_view what) {
  const std::string s(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw FormatError("line " + std::to_string(line) + ": bad " +
                      std::string(what) + " '" + s + "'");
  }
  return v;
}

// Iterates data rows: handles provenance/comment lines and checks the header.
class CsvReader {
 public:
  CsvReader(std::istream& in, std::string_view header, ArtifactMeta* meta)
      : in_(in), header_(header), meta_(meta) {}

  // Returns false at end of input.
  bool Next(std::vector<std::string_view>* fields) {
    while (std::getline(in_, line_)) {
      ++line_no_;
      const std::string_view view = Trim(line_);
      if (view.empty()) continue;
      if (view.front() == '#') {
        if (meta_ != nullptr) {
          if (auto m = ArtifactMeta::Parse(std::string(view))) *meta_ = *m;
        }
        continue;
      }
      if (!seen_header_) {
        if (view != header_) {
          throw FormatError("line " + std::to_string(line_no_) +
                            ": expected header '" + std::string(header_) +
                            "'");
        }
        seen_header_ = true;
        continue;
      }
      *fields = SplitCsv(view);
      const size_t expected =
          static_cast<size_t>(std::count(header_.begin(), header_.end(), ',')) +
          1;
      if (fields->size() != expected) {
        throw FormatError("line " + std::to_string(line_no_) + ": expected " +
                          std::to_string(expected) + " fields");
      }
      return true;
    }
    if (!seen_header_) throw FormatError("missing header '" + std::string(header_) + "'");
    return false;
  }

  size_t line() const { return line_no_; }

 private:
  std::istream& in_;
  std::string_view header_;
  ArtifactMeta* meta_;
  std::string line_;
  size_t line_no_ = 0;
  bool seen_header_ = false;
};

void WriteEventRow(std::ostream& out, const StepEvent& e) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), ",%c,%u,%llu", ModeChar(e.mode), e.pf_count,
                static_cast<unsigned long long>(e.latency));
  out << FormatPageFrame(e.page) << buf;
}

StepEvent ParseEventRow(const std::vector<std::string_view>& f, size_t line) {
  StepEvent e;
  e.page = ParseUnsigned<uint64_t>(Trim(f[0]), 16, line, "address");
  const std::string_view mode = Trim(f[1]);
  const auto m = mode.size() == 1 ? ModeFromChar(mode[0]) : std::nullopt;
  if (!m) {
    throw FormatError("line " + std::to_string(line) + ": bad mode '" +
                      std::string(mode) + "'");
  }
  e.mode = *m;
  e.pf_count = ParseUnsigned<uint32_t>(Trim(f[2]), 10, line, "pf_count");
  e.latency = ParseUnsigned<uint64_t>(Trim(f[3]), 10, line, "latency");
  return e;
}

Label ParseLabelField(std::string_view text, size_t line) {
  const auto label = ParseLabel(Trim(text));
  if (!label) {
    throw FormatError("line " + std::to_string(line) + ": unknown label '" +
                      std::string(text) + "'");
  }
  return *label;
}

}  // namespace

std::string FormatPageFrame(PageFrame frame) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "0x%llx",
                static_cast<unsigned long long>(frame));
  return buf;
}

PageFrame ParsePageFrame(std::string_view text) {
  return ParseUnsigned<uint64_t>(Trim(text), 16, 0, "page frame");
}

std::string ArtifactMeta::Line() const {
  std::string out = std::string(kMetaPrefix) + " config=" + config_hash;
  if (layout_seed) out += " layout_seed=" + std::to_string(*layout_seed);
  for (const auto& [k, v] : extra) out += " " + k + "=" + v;
  return out;
}

std::optional<ArtifactMeta> ArtifactMeta::Parse(const std::string& line) {
  if (line.rfind(kMetaPrefix, 0) != 0) return std::nullopt;
  ArtifactMeta meta;
  std::istringstream words(line.substr(kMetaPrefix.size()));
  std::string word;
  while (words >> word) {
    const size_t eq = word.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = word.substr(0, eq);
    const std::string value = word.substr(eq + 1);
    if (key == "config") {
      meta.config_hash = value;
    } else if (key == "layout_seed") {
      meta.layout_seed = ParseUnsigned<uint64_t>(value, 10, 1, "layout_seed");
    } else {
      meta.extra[key] = value;
    }
  }
  return meta;
}

void WriteTraceCsv(std::ostream& out, const SideChannelTrace& trace,
                   const ArtifactMeta& meta) {
  out << meta.Line() << "\naddress,mode,pf_count,latency\n";
  for (const auto& e : trace.events) {
    WriteEventRow(out, e);
    out << '\n';
  }
}

SideChannelTrace ReadTraceCsv(std::istream& in, ArtifactMeta* meta) {
  ArtifactMeta local;
  CsvReader reader(in, "address,mode,pf_count,latency", &local);
  SideChannelTrace trace;
  std::vector<std::string_view> fields;
  while (reader.Next(&fields)) {
    trace.events.push_back(ParseEventRow(fields, reader.line()));
  }
  trace.layout_seed = local.layout_seed.value_or(0);
  if (meta != nullptr) *meta = local;
  return trace;
}

void WriteTruthCsv(std::ostream& out, const std::vector<TruthBoundary>& truth,
                   const ArtifactMeta& meta) {
  out << meta.Line() << "\nboundary_index,label\n";
  for (const auto& b : truth) {
    out << b.index << ',' << LabelName(b.label) << '\n';
  }
}

std::vector<TruthBoundary> ReadTruthCsv(std::istream& in, ArtifactMeta* meta) {
  CsvReader reader(in, "boundary_index,label", meta);
  std::vector<TruthBoundary> truth;
  std::vector<std::string_view> fields;
  while (reader.Next(&fields)) {
    TruthBoundary b;
    b.index = ParseUnsigned<size_t>(Trim(fields[0]), 10, reader.line(),
                                    "boundary_index");
    b.label = ParseLabelField(fields[1], reader.line());
    if (!truth.empty() && truth.back().index >= b.index) {
      throw FormatError("line " + std::to_string(reader.line()) +
                        ": boundary indices must increase");
    }
    truth.push_back(b);
  }
  return truth;
}

void WriteSegmentsCsv(std::ostream& out, const std::vector<Segment>& segments,
                      const ArtifactMeta& meta) {
  out << meta.Line() << "\naddress,mode,pf_count,latency,segment_id\n";
  for (const auto& seg : segments) {
    for (const auto& e : seg.events) {
      WriteEventRow(out, e);
      out << ',' << seg.id << '\n';
    }
  }
}

void WritePredictionsCsv(std::ostream& out,
                         const std::vector<Prediction>& predictions,
                         const ArtifactMeta& meta) {
  out << meta.Line() << "\nsegment_id,label,score,margin\n";
  char buf[64];
  for (const auto& p : predictions) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f", p.score, p.margin);
    out << p.segment_id << ',' << LabelName(p.label) << ',' << buf << '\n';
  }
}

std::vector<Prediction> ReadPredictionsCsv(std::istream& in,
                                           ArtifactMeta* meta) {
  CsvReader reader(in, "segment_id,label,score,margin", meta);
  std::vector<Prediction> out;
  std::vector<std::string_view> fields;
  while (reader.Next(&fields)) {
    Prediction p;
    p.segment_id = ParseUnsigned<size_t>(Trim(fields[0]), 10, reader.line(),
                                         "segment_id");
    p.label = ParseLabelField(fields[1], reader.line());
    p.score = ParseDouble(Trim(fields[2]), reader.line(), "score");
    p.margin = ParseDouble(Trim(fields[3]), reader.line(), "margin");
    out.push_back(p);
  }
  return out;
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << content;
  if (!out) throw ConfigError("write failed for " + path.string());
}

}  // namespace wasmleak
