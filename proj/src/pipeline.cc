#include "wasmleak/pipeline.h"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "wasmleak/error.h"
#include "wasmleak/hash.h"
#include "wasmleak/interpreter.h"
#include "wasmleak/workloads.h"

namespace wasmleak {

namespace fs = std::filesystem;

namespace {

NoiseModel DerivedNoise(const NoiseModel& noise, std::string_view stream) {
  NoiseModel n = noise;
  n.rng_seed = Fnv1a(stream, noise.rng_seed);
  return n;
}

SynthOutput Synthesize(const RunConfig& config, const std::string& module_spec,
                       uint64_t module_seed, uint64_t steps,
                       const HandlerTable& handlers, const MemoryLayout& layout,
                       std::string_view stream, bool markers) {
  SynthOutput out;
  out.layout = layout;
  const FlatModule module =
      ResolveModule(module_spec, module_seed, config.profile_repeats);
  out.opcodes = Execute(module, steps);
  SynthesisOptions options;
  options.profiling_markers = markers;
  out.trace = SynthesizeTrace(out.opcodes, layout, handlers,
                              DerivedNoise(config.noise, stream), options);
  return out;
}

std::ostringstream Stream() {
  std::ostringstream s;
  s.imbue(std::locale::classic());
  return s;
}

std::vector<TruthBoundary> LoadTruth(const fs::path& path, ArtifactMeta* meta) {
  std::istringstream in(ReadFile(path));
  return ReadTruthCsv(in, meta);
}

SideChannelTrace LoadTrace(const fs::path& path, ArtifactMeta* meta) {
  std::istringstream in(ReadFile(path));
  return ReadTraceCsv(in, meta);
}

FingerprintDb LoadDb(const fs::path& path) {
  std::istringstream in(ReadFile(path));
  return ReadDb(in);
}

fs::path Write(const fs::path& dir, const std::string& name,
               const std::string& content) {
  const fs::path p = dir / name;
  WriteFile(p, content);
  return p;
}

std::string TraceText(const SideChannelTrace& trace, const ArtifactMeta& meta) {
  auto s = Stream();
  WriteTraceCsv(s, trace, meta);
  return s.str();
}

std::string TruthText(const std::vector<TruthBoundary>& truth,
                      const ArtifactMeta& meta) {
  auto s = Stream();
  WriteTruthCsv(s, truth, meta);
  return s.str();
}

std::string DbText(const FingerprintDb& db) {
  auto s = Stream();
  WriteDb(s, db);
  return s.str();
}

std::string PredictionsText(const std::vector<Prediction>& p,
                            const ArtifactMeta& meta) {
  auto s = Stream();
  WritePredictionsCsv(s, p, meta);
  return s.str();
}

}  // namespace

FlatModule ResolveModule(const std::string& spec, uint64_t seed,
                         uint32_t reference_repeats) {
  if (spec == "reference") {
    return ParseFlatModule(ReferenceModuleText(reference_repeats));
  }
  if (IsBuiltinModule(spec)) return ParseFlatModule(BuiltinModuleText(spec, seed));
  return LoadFlatModule(spec);
}

SynthOutput SynthesizeProfiling(const RunConfig& config) {
  config.Validate();
  return Synthesize(config, config.profile, config.victim_seed,
                    config.profile_steps, DefaultHandlerSpecs(),
                    BuildLayout(config.layout_seed, config.layout),
                    "profiling-trace", true);
}

SynthOutput SynthesizeVictim(const RunConfig& config) {
  config.Validate();
  MemoryLayout layout = BuildLayout(config.layout_seed, config.layout);
  if (config.mitigation.shuffle_handlers) {
    layout = ShuffleHandlerPages(layout, config.mitigation.seed);
  }
  const HandlerTable handlers = ApplyMitigation(
      DefaultHandlerSpecs(), config.mitigation, config.mitigation.seed);
  return Synthesize(config, config.victim, config.victim_seed,
                    config.victim_steps, handlers, layout, "victim-trace",
                    false);
}

FingerprintDb BuildDatabase(const RunConfig& config,
                            const SideChannelTrace& profiling,
                            PageFrame marker_page, PreprocessReport* report) {
  ProfileResult r = ProfileTrace(profiling, marker_page, config.preprocess);
  r.db.meta.noise_hash = HexDigest(Fnv1a(config.noise.Canonical()));
  r.db.meta.config_hash = config.Hash();
  if (report != nullptr) *report = r.report;
  return r.db;
}

AttackOutput Attack(const SideChannelTrace& trace, const FingerprintDb& db,
                    const ChannelSet& channels, const PreprocessConfig& config) {
  if (channels.empty()) throw PreconditionError("no matching channel enabled");
  if (db.entries.empty()) throw PreconditionError("fingerprint database is empty");
  AttackOutput out;
  out.preprocess = Preprocess(trace, config);
  out.outcomes = MatchTrace(out.preprocess.segments, db, channels);
  out.predictions.reserve(out.outcomes.size());
  for (const auto& o : out.outcomes) {
    out.predictions.push_back(
        {o.segment_id, o.predicted, o.score, o.runner_up_margin});
  }
  return out;
}

RecallReport Evaluate(const std::vector<Prediction>& predictions,
                      const std::vector<TruthBoundary>& truth, bool strict) {
  std::vector<RegionLabel> p;
  p.reserve(predictions.size());
  for (const auto& x : predictions) p.push_back({x.segment_id, x.label});
  std::vector<RegionLabel> t;
  t.reserve(truth.size());
  for (const auto& b : truth) t.push_back({b.index, b.label});
  auto by_id = [](const RegionLabel& a, const RegionLabel& b) { return a.id < b.id; };
  std::stable_sort(p.begin(), p.end(), by_id);
  std::stable_sort(t.begin(), t.end(), by_id);
  const bool overlap = std::any_of(p.begin(), p.end(), [&](const RegionLabel& x) {
    return std::binary_search(t.begin(), t.end(), x, by_id);
  });
  if (!overlap) {
    throw PreconditionError("predictions and truth share no region ids");
  }
  const auto [pred, tru] = JoinRegions(p, t);
  return ClassifyOutcomes(pred, tru, strict);
}

ExperimentResult RunExperiment(const RunConfig& config) {
  const SynthOutput profiling = SynthesizeProfiling(config);
  const FingerprintDb db =
      BuildDatabase(config, profiling.trace, profiling.layout.marker_page);
  const SynthOutput victim = SynthesizeVictim(config);
  const AttackOutput attack =
      Attack(victim.trace, db, config.channels, config.preprocess);

  ExperimentResult r;
  r.report = Evaluate(attack.predictions, victim.trace.truth, config.strict);
  r.attack_preprocess = attack.preprocess.report;
  r.optable_confidence = attack.preprocess.report.confidence;
  r.optable_correct =
      attack.preprocess.report.optable_page == victim.layout.optable_page;
  r.db_entries = db.entries.size();
  r.victim_opcodes = victim.opcodes.executed.size();
  r.unique_opcodes =
      std::set<Opcode>(victim.opcodes.executed.begin(), victim.opcodes.executed.end())
          .size();
  return r;
}

std::vector<AblationRow> Ablate(
    const SideChannelTrace& trace, const std::vector<TruthBoundary>& truth,
    const FingerprintDb& db,
    const std::vector<std::pair<std::string, ChannelSet>>& subsets,
    const PreprocessConfig& config, bool strict) {
  if (db.entries.empty()) throw PreconditionError("fingerprint database is empty");
  for (const auto& [spec, set] : subsets) {
    if (set.empty()) {
      throw PreconditionError("channel subset '" + spec + "' is empty");
    }
  }
  const PreprocessResult pre = Preprocess(trace, config);
  std::vector<AblationRow> rows;
  for (const auto& [spec, set] : subsets) {
    const auto outcomes = MatchTrace(pre.segments, db, set);
    std::vector<Prediction> preds;
    preds.reserve(outcomes.size());
    for (const auto& o : outcomes) {
      preds.push_back({o.segment_id, o.predicted, o.score, o.runner_up_margin});
    }
    rows.push_back({spec, set, Evaluate(preds, truth, strict)});
  }
  return rows;
}

std::string FormatReport(const RecallReport& r, bool strict,
                         const ArtifactMeta& meta) {
  char recall[64];
  std::snprintf(recall, sizeof(recall), "recall = %.6f\nrecall_percent = %.3f\n",
                r.recall, 100.0 * r.recall);
  auto s = Stream();
  s << meta.Line() << '\n'
    << "grouping = " << (strict ? "opcode" : "family") << '\n'
    << "regions = " << r.n << '\n'
    << "correct = " << r.correct << '\n'
    << "errors = " << r.e << '\n'
    << "misses = " << r.m << '\n'
    << "insertions = " << r.i << '\n'
    << recall;
  return s.str();
}

std::string FormatConfusionCsv(const RecallReport& r, const ArtifactMeta& meta) {
  auto s = Stream();
  s << meta.Line() << "\ntruth,predicted,count\n";
  for (const auto& [key, count] : r.confusion) {
    s << key.first << ',' << key.second << ',' << count << '\n';
  }
  return s.str();
}

std::string FormatPreprocessReport(const PreprocessReport& r,
                                   const ArtifactMeta& meta) {
  char conf[64];
  std::snprintf(conf, sizeof(conf), "%.6f", r.confidence);
  auto s = Stream();
  s << meta.Line() << '\n'
    << "optable_page = " << FormatPageFrame(r.optable_page) << '\n'
    << "optable_confidence = " << conf << '\n'
    << "stack_pages = ";
  for (size_t k = 0; k < r.stack_pages.size(); ++k) {
    s << (k ? "," : "") << FormatPageFrame(r.stack_pages[k]);
  }
  s << '\n' << "events_removed = " << r.events_removed << '\n';
  return s.str();
}

std::string FormatAblationCsv(const std::vector<AblationRow>& rows,
                              const ArtifactMeta& meta) {
  auto s = Stream();
  s << meta.Line() << "\nsubset,channels,regions,errors,misses,insertions,recall\n";
  char buf[32];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%.6f", row.report.recall);
    s << '"' << row.spec << "\",\"" << row.channels.ToString() << "\","
      << row.report.n << ',' << row.report.e << ',' << row.report.m << ','
      << row.report.i << ',' << buf << '\n';
  }
  return s.str();
}

ArtifactMeta MetaFor(const RunConfig& config) {
  ArtifactMeta meta;
  meta.config_hash = config.Hash();
  meta.layout_seed = config.layout_seed;
  return meta;
}

std::vector<fs::path> CmdSynth(const RunConfig& config, bool markers,
                               const fs::path& out_dir) {
  const SynthOutput s =
      markers ? SynthesizeProfiling(config) : SynthesizeVictim(config);
  ArtifactMeta meta = MetaFor(config);
  meta.extra["kind"] = markers ? "profiling" : "victim";
  if (markers) meta.extra["marker_page"] = FormatPageFrame(s.layout.marker_page);
  return {Write(out_dir, "trace.csv", TraceText(s.trace, meta)),
          Write(out_dir, "truth.csv", TruthText(s.trace.truth, meta)),
          Write(out_dir, "config.txt", config.Serialize())};
}

std::vector<fs::path> CmdProfile(const RunConfig& config,
                                 const fs::path& trace_csv,
                                 const fs::path& truth_csv,
                                 std::optional<PageFrame> marker_page,
                                 const fs::path& out_dir) {
  ArtifactMeta meta;
  SideChannelTrace trace = LoadTrace(trace_csv, &meta);
  trace.truth = LoadTruth(truth_csv, nullptr);
  if (!marker_page) {
    const auto it = meta.extra.find("marker_page");
    if (it == meta.extra.end()) {
      throw PreconditionError("marker page unknown: pass --marker-page");
    }
    marker_page = ParsePageFrame(it->second);
  }
  const FingerprintDb db = BuildDatabase(config, trace, *marker_page);
  return {Write(out_dir, "db.jsonl", DbText(db)),
          Write(out_dir, "config.txt", config.Serialize())};
}

std::vector<fs::path> CmdPreprocess(const RunConfig& config,
                                    const fs::path& trace_csv,
                                    const fs::path& out_dir) {
  ArtifactMeta meta;
  const SideChannelTrace trace = LoadTrace(trace_csv, &meta);
  const PreprocessResult r = Preprocess(trace, config.preprocess);
  auto seg = Stream();
  WriteSegmentsCsv(seg, r.segments, meta);
  return {Write(out_dir, "preprocess.txt", FormatPreprocessReport(r.report, meta)),
          Write(out_dir, "segments.csv", seg.str()),
          Write(out_dir, "config.txt", config.Serialize())};
}

std::vector<fs::path> CmdAttack(const RunConfig& config,
                                const fs::path& trace_csv,
                                const fs::path& db_file,
                                const fs::path& out_dir) {
  ArtifactMeta meta;
  const SideChannelTrace trace = LoadTrace(trace_csv, &meta);
  const FingerprintDb db = LoadDb(db_file);
  const AttackOutput a = Attack(trace, db, config.channels, config.preprocess);
  meta.config_hash = config.Hash();
  meta.extra.erase("marker_page");
  meta.extra["kind"] = "predictions";
  meta.extra["channels"] = config.channels.ToString();
  return {Write(out_dir, "predictions.csv", PredictionsText(a.predictions, meta)),
          Write(out_dir, "preprocess.txt",
                FormatPreprocessReport(a.preprocess.report, meta)),
          Write(out_dir, "config.txt", config.Serialize())};
}

std::pair<std::string, std::vector<fs::path>> CmdEval(
    const RunConfig& config, const fs::path& predictions_csv,
    const fs::path& truth_csv, bool force, const fs::path& out_dir) {
  ArtifactMeta pmeta;
  ArtifactMeta tmeta;
  std::vector<Prediction> preds;
  {
    std::istringstream in(ReadFile(predictions_csv));
    preds = ReadPredictionsCsv(in, &pmeta);
  }
  const auto truth = LoadTruth(truth_csv, &tmeta);
  if (!force && pmeta.layout_seed && tmeta.layout_seed &&
      *pmeta.layout_seed != *tmeta.layout_seed) {
    throw PreconditionError("layout seeds differ between predictions (" +
                            std::to_string(*pmeta.layout_seed) + ") and truth (" +
                            std::to_string(*tmeta.layout_seed) +
                            "); pass --force to compare anyway");
  }
  const RecallReport r = Evaluate(preds, truth, config.strict);
  ArtifactMeta meta = MetaFor(config);
  if (tmeta.layout_seed) meta.layout_seed = tmeta.layout_seed;
  const std::string report = FormatReport(r, config.strict, meta);
  return {report,
          {Write(out_dir, "report.txt", report),
           Write(out_dir, "confusion.csv", FormatConfusionCsv(r, meta)),
           Write(out_dir, "config.txt", config.Serialize())}};
}

std::vector<fs::path> CmdAblate(const RunConfig& config,
                                const fs::path& trace_csv,
                                const fs::path& truth_csv,
                                const fs::path& db_file,
                                const fs::path& out_dir,
                                std::vector<std::string>* duplicates) {
  ArtifactMeta meta;
  const SideChannelTrace trace = LoadTrace(trace_csv, &meta);
  const auto truth = LoadTruth(truth_csv, nullptr);
  const FingerprintDb db = LoadDb(db_file);
  const auto subsets = ParseChannelSubsets(config.ablate_subsets, duplicates);
  const auto rows = Ablate(trace, truth, db, subsets, config.preprocess,
                           config.strict);
  return {Write(out_dir, "ablation.csv", FormatAblationCsv(rows, MetaFor(config))),
          Write(out_dir, "config.txt", config.Serialize())};
}

std::vector<fs::path> CmdEnd2End(const RunConfig& config,
                                 const fs::path& out_dir) {
  const ArtifactMeta meta = MetaFor(config);
  std::vector<fs::path> files;
  files.push_back(Write(out_dir, "config.txt", config.Serialize()));

  const SynthOutput profiling = SynthesizeProfiling(config);
  ArtifactMeta pmeta = meta;
  pmeta.extra["kind"] = "profiling";
  pmeta.extra["marker_page"] = FormatPageFrame(profiling.layout.marker_page);
  files.push_back(Write(out_dir, "profile_trace.csv",
                        TraceText(profiling.trace, pmeta)));
  files.push_back(Write(out_dir, "profile_truth.csv",
                        TruthText(profiling.trace.truth, pmeta)));
  const FingerprintDb db =
      BuildDatabase(config, profiling.trace, profiling.layout.marker_page);
  files.push_back(Write(out_dir, "db.jsonl", DbText(db)));

  const SynthOutput victim = SynthesizeVictim(config);
  ArtifactMeta vmeta = meta;
  vmeta.extra["kind"] = "victim";
  files.push_back(Write(out_dir, "trace.csv", TraceText(victim.trace, vmeta)));
  files.push_back(Write(out_dir, "truth.csv", TruthText(victim.trace.truth, vmeta)));

  const AttackOutput attack =
      Attack(victim.trace, db, config.channels, config.preprocess);
  ArtifactMeta ameta = meta;
  ameta.extra["kind"] = "predictions";
  ameta.extra["channels"] = config.channels.ToString();
  files.push_back(Write(out_dir, "predictions.csv",
                        PredictionsText(attack.predictions, ameta)));
  files.push_back(Write(out_dir, "preprocess.txt",
                        FormatPreprocessReport(attack.preprocess.report, meta)));

  const RecallReport r =
      Evaluate(attack.predictions, victim.trace.truth, config.strict);
  files.push_back(Write(out_dir, "report.txt", FormatReport(r, config.strict, meta)));
  files.push_back(Write(out_dir, "confusion.csv", FormatConfusionCsv(r, meta)));
  return files;
}

}  // namespace wasmleak
