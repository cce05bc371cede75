#ifndef WASMLEAK_PIPELINE_H_
#define WASMLEAK_PIPELINE_H_

#include <filesystem>
#include <string>
#include <vector>

#include "wasmleak/config.h"
#include "wasmleak/machine_model.h"
#include "wasmleak/matcher.h"
#include "wasmleak/metrics.h"
#include "wasmleak/module.h"
#include "wasmleak/preprocess.h"
#include "wasmleak/profiler.h"
#include "wasmleak/trace_io.h"

namespace wasmleak {

// Built-in module name or module file path.
FlatModule ResolveModule(const std::string& spec, uint64_t seed,
                         uint32_t reference_repeats);

struct SynthOutput {
  MemoryLayout layout;
  OpcodeTrace opcodes;
  SideChannelTrace trace;
};

// Attacker's profiling run: stock handlers, marker writes on, noise drawn
// from a stream derived from noise.seed.
SynthOutput SynthesizeProfiling(const RunConfig& config);
// Victim run: handlers with the configured mitigation, no markers, an
// independent noise stream.
SynthOutput SynthesizeVictim(const RunConfig& config);

FingerprintDb BuildDatabase(const RunConfig& config,
                            const SideChannelTrace& profiling,
                            PageFrame marker_page,
                            PreprocessReport* report = nullptr);

struct AttackOutput {
  PreprocessResult preprocess;
  std::vector<MatchOutcome> outcomes;
  std::vector<Prediction> predictions;
};

AttackOutput Attack(const SideChannelTrace& trace, const FingerprintDb& db,
                    const ChannelSet& channels,
                    const PreprocessConfig& config = {});

// Joins predictions with raw-trace truth on segment id and classifies. Throws
// PreconditionError when the two share no id, which usually means they come
// from different runs.
RecallReport Evaluate(const std::vector<Prediction>& predictions,
                      const std::vector<TruthBoundary>& truth, bool strict);

struct ExperimentResult {
  RecallReport report;
  PreprocessReport attack_preprocess;
  double optable_confidence = 0.0;
  bool optable_correct = false;
  size_t db_entries = 0;
  size_t victim_opcodes = 0;
  size_t unique_opcodes = 0;
};

// Whole pipeline in memory with the configured channel set.
ExperimentResult RunExperiment(const RunConfig& config);

struct AblationRow {
  std::string spec;
  ChannelSet channels;
  RecallReport report;
};

// Attack + eval once per channel subset on shared inputs.
std::vector<AblationRow> Ablate(const SideChannelTrace& trace,
                                const std::vector<TruthBoundary>& truth,
                                const FingerprintDb& db,
                                const std::vector<std::pair<std::string, ChannelSet>>& subsets,
                                const PreprocessConfig& config, bool strict);

// Text renderings shared by the CLI and the Python module.
std::string FormatReport(const RecallReport& report, bool strict,
                         const ArtifactMeta& meta);
std::string FormatConfusionCsv(const RecallReport& report,
                               const ArtifactMeta& meta);
std::string FormatPreprocessReport(const PreprocessReport& report,
                                   const ArtifactMeta& meta);
std::string FormatAblationCsv(const std::vector<AblationRow>& rows,
                              const ArtifactMeta& meta);

ArtifactMeta MetaFor(const RunConfig& config);

// File-level subcommands. Each writes its artifacts into `out_dir` and
// returns the list of written files.
std::vector<std::filesystem::path> CmdSynth(const RunConfig& config,
                                            bool markers,
                                            const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> CmdProfile(
    const RunConfig& config, const std::filesystem::path& trace_csv,
    const std::filesystem::path& truth_csv, std::optional<PageFrame> marker_page,
    const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> CmdPreprocess(
    const RunConfig& config, const std::filesystem::path& trace_csv,
    const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> CmdAttack(
    const RunConfig& config, const std::filesystem::path& trace_csv,
    const std::filesystem::path& db_file, const std::filesystem::path& out_dir);
// Returns the report text as well (first element of the pair).
std::pair<std::string, std::vector<std::filesystem::path>> CmdEval(
    const RunConfig& config, const std::filesystem::path& predictions_csv,
    const std::filesystem::path& truth_csv, bool force,
    const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> CmdAblate(
    const RunConfig& config, const std::filesystem::path& trace_csv,
    const std::filesystem::path& truth_csv, const std::filesystem::path& db_file,
    const std::filesystem::path& out_dir, std::vector<std::string>* duplicates);
std::vector<std::filesystem::path> CmdEnd2End(const RunConfig& config,
                                              const std::filesystem::path& out_dir);

}  // namespace wasmleak

#endif  // WASMLEAK_PIPELINE_H_
