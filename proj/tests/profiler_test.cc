#include <gtest/gtest.h>

#include <map>
#include <set>
#include <sstream>
#include <string>

#include "wasmleak/error.h"
#include "wasmleak/pipeline.h"
#include "wasmleak/profiler.h"

namespace wasmleak {
namespace {

class ProfilerTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    RunConfig c;
    c.SetSeed(3);
    profiling_ = new SynthOutput(SynthesizeProfiling(c));
  }
  static void TearDownTestSuite() {
    delete profiling_;
    profiling_ = nullptr;
  }
  static SynthOutput* profiling_;
};

SynthOutput* ProfilerTest::profiling_ = nullptr;

TEST_F(ProfilerTest, MarkerSplitFollowsDispatchOrder) {
  const auto& t = profiling_->trace;
  const auto& l = profiling_->layout;
  const auto labeled = SplitByMarker(t, l.marker_page, l.optable_page, l.stack_pages);
  ASSERT_EQ(labeled.size(), t.truth.size());
  for (size_t k = 0; k < labeled.size(); ++k) {
    EXPECT_EQ(labeled[k].label, t.truth[k].label) << k;
    EXPECT_EQ(labeled[k].segment.modes.front(), 'R');
    EXPECT_EQ(labeled[k].segment.classes.front(), 'O');
    for (const auto& e : labeled[k].segment.events) {
      ASSERT_NE(e.page, l.marker_page);
    }
  }
}

TEST_F(ProfilerTest, SplitNeedsMarkers) {
  const auto& l = profiling_->layout;
  EXPECT_THROW(SplitByMarker(profiling_->trace, 0x1, l.optable_page, l.stack_pages),
               PreconditionError);
}

TEST_F(ProfilerTest, DedupConservesSupportAndIsIdempotent) {
  const auto& l = profiling_->layout;
  const auto labeled =
      SplitByMarker(profiling_->trace, l.marker_page, l.optable_page, l.stack_pages);
  const FingerprintDb raw = BuildFingerprints(labeled);
  ASSERT_EQ(raw.entries.size(), labeled.size());
  const FingerprintDb once = DedupDb(raw);
  EXPECT_LT(once.entries.size(), raw.entries.size());
  uint64_t support = 0;
  std::map<std::string, uint64_t> per_label_raw;
  std::map<std::string, uint64_t> per_label_dedup;
  for (const auto& fp : raw.entries) ++per_label_raw[std::string(LabelName(fp.label))];
  for (const auto& fp : once.entries) {
    support += fp.support;
    per_label_dedup[std::string(LabelName(fp.label))] += fp.support;
  }
  EXPECT_EQ(support, raw.entries.size());
  EXPECT_EQ(per_label_dedup, per_label_raw);
  EXPECT_EQ(DedupDb(once), once);
}

TEST_F(ProfilerTest, DatabaseRoundTripIsExact) {
  const auto r = ProfileTrace(profiling_->trace, profiling_->layout.marker_page);
  EXPECT_EQ(r.report.optable_page, profiling_->layout.optable_page);
  std::stringstream buf;
  WriteDb(buf, r.db);
  const std::string first = buf.str();
  const FingerprintDb back = ReadDb(buf);
  EXPECT_EQ(back, r.db);
  std::stringstream again;
  WriteDb(again, back);
  EXPECT_EQ(again.str(), first);
}

TEST_F(ProfilerTest, EveryReferenceOpcodeHasAFingerprint) {
  const auto r = ProfileTrace(profiling_->trace, profiling_->layout.marker_page);
  std::set<Label> labels;
  for (const auto& fp : r.db.entries) labels.insert(fp.label);
  for (Opcode op : profiling_->opcodes.executed) {
    EXPECT_TRUE(labels.count(op)) << Mnemonic(op);
  }
}

TEST_F(ProfilerTest, ReferenceModuleCoversEverySupportedOpcode) {
  const auto r = ProfileTrace(profiling_->trace, profiling_->layout.marker_page);
  std::set<Label> labels;
  for (const auto& fp : r.db.entries) labels.insert(fp.label);
  std::set<Label> expected = {Label()};
  for (const auto& info : SupportedOpcodes()) expected.insert(info.opcode);
  EXPECT_EQ(labels, expected);
}

TEST(ProfileTraceTest, RejectsEmptyTrace) {
  EXPECT_THROW(ProfileTrace(SideChannelTrace{}, 0x10), PreconditionError);
}

TEST(PipelineTest, ClosedWorldStrictRecallIsPerfect) {
  RunConfig c;
  c.noise = NoiseModel::Zero();
  c.victim = "random";
  c.victim_steps = 20000;
  c.strict = true;
  const ExperimentResult r = RunExperiment(c);
  EXPECT_EQ(r.report.e + r.report.m + r.report.i, 0u);
  EXPECT_DOUBLE_EQ(r.report.recall, 1.0);
}

TEST(PipelineTest, EvaluateRejectsDisjointIds) {
  const std::vector<Prediction> p = {{5, Label(Opcode::kI32Add)}};
  const std::vector<TruthBoundary> t = {{7, Label(Opcode::kI32Add)}};
  EXPECT_THROW(Evaluate(p, t, false), PreconditionError);
  const std::vector<TruthBoundary> t2 = {{5, Label(Opcode::kI32Add)}, {9, Label()}};
  const RecallReport r = Evaluate(p, t2, false);
  EXPECT_EQ(r.n, 2u);
  EXPECT_EQ(r.correct, 2u);
}

TEST(DbFormatTest, RejectsBadInput) {
  std::stringstream empty;
  EXPECT_THROW(ReadDb(empty), FormatError);
  std::stringstream garbage("{not json\n");
  EXPECT_THROW(ReadDb(garbage), FormatError);
  std::stringstream wrong_version(R"({"format":"wasmleak-fingerprint-db","version":99})" "\n");
  EXPECT_THROW(ReadDb(wrong_version), FormatError);
}

TEST(BuildFingerprintsTest, RejectsEmptyInput) {
  EXPECT_THROW(BuildFingerprints({}), PreconditionError);
}

}  // namespace
}  // namespace wasmleak
