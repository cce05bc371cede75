#include <gtest/gtest.h>

#include <sstream>
#include <string>

#include "wasmleak/config.h"
#include "wasmleak/error.h"
#include "wasmleak/trace_io.h"

namespace wasmleak {
namespace {

SideChannelTrace SmallTrace() {
  SideChannelTrace t;
  t.events = {{0x8c81a, AccessMode::kRead, 8, 5740},
              {0x82000, AccessMode::kExec, 5, 5320},
              {0x863fe, AccessMode::kWrite, 9, 5425}};
  t.truth = {{0, Label(Opcode::kI32Add)}, {2, std::nullopt}};
  t.layout_seed = 12;
  return t;
}

ArtifactMeta Meta() {
  ArtifactMeta m;
  m.config_hash = "0123456789abcdef";
  m.layout_seed = 12;
  m.extra["kind"] = "victim";
  return m;
}

TEST(ArtifactMetaTest, LineRoundTrip) {
  const ArtifactMeta m = Meta();
  const auto back = ArtifactMeta::Parse(m.Line());
  ASSERT_TRUE(back.has_value());
  EXPECT_EQ(back->config_hash, m.config_hash);
  EXPECT_EQ(back->layout_seed, m.layout_seed);
  EXPECT_EQ(back->extra, m.extra);
  EXPECT_FALSE(ArtifactMeta::Parse("address,mode").has_value());
}

TEST(PageFrameTest, HexNotation) {
  EXPECT_EQ(FormatPageFrame(0x8c81a), "0x8c81a");
  EXPECT_EQ(ParsePageFrame("0x8C81A"), 0x8c81aU);
  EXPECT_THROW(ParsePageFrame("8c81a"), FormatError);
  EXPECT_THROW(ParsePageFrame("0x"), FormatError);
  EXPECT_THROW(ParsePageFrame("0xzz"), FormatError);
}

TEST(TraceCsvTest, RoundTrip) {
  const SideChannelTrace t = SmallTrace();
  std::stringstream buf;
  WriteTraceCsv(buf, t, Meta());
  EXPECT_EQ(buf.str(),
            Meta().Line() +
                "\naddress,mode,pf_count,latency\n0x8c81a,R,8,5740\n"
                "0x82000,E,5,5320\n0x863fe,W,9,5425\n");
  ArtifactMeta meta;
  const SideChannelTrace back = ReadTraceCsv(buf, &meta);
  EXPECT_EQ(back.events, t.events);
  EXPECT_EQ(meta.layout_seed, 12u);
}

TEST(TraceCsvTest, RejectsMalformedRows) {
  for (const char* body : {"0x1,Q,5,5\n", "0x1,R,5\n", "1,R,5,5\n", "0x1,R,x,5\n",
                           "0x1,R,5,-3\n"}) {
    std::stringstream in(std::string("address,mode,pf_count,latency\n") + body);
    EXPECT_THROW(ReadTraceCsv(in), FormatError) << body;
  }
  std::stringstream no_header("0x1,R,5,5\n");
  EXPECT_THROW(ReadTraceCsv(no_header), FormatError);
}

TEST(TruthCsvTest, RoundTrip) {
  const SideChannelTrace t = SmallTrace();
  std::stringstream buf;
  WriteTruthCsv(buf, t.truth, Meta());
  EXPECT_EQ(ReadTruthCsv(buf), t.truth);
  std::stringstream bad("boundary_index,label\n3,i32.nonsense\n");
  EXPECT_THROW(ReadTruthCsv(bad), FormatError);
}

TEST(PredictionsCsvTest, RoundTripAtPrintedPrecision) {
  const std::vector<Prediction> preds = {{4, Label(Opcode::kDrop), 0.5, 0.25},
                                         {9, std::nullopt, 0.125, 0.0}};
  std::stringstream buf;
  WritePredictionsCsv(buf, preds, Meta());
  EXPECT_NE(buf.str().find("4,drop,0.500000,0.250000\n"), std::string::npos);
  EXPECT_EQ(ReadPredictionsCsv(buf), preds);
}

TEST(ConfigTest, SerializeApplyRoundTrip) {
  RunConfig c;
  c.Set("noise.latency_jitter_sigma", "120");
  c.Set("match.channels", "all,-latency");
  c.Set("run.victim", "primes");
  c.SetSeed(9);
  RunConfig d;
  d.Apply(c.Serialize());
  EXPECT_EQ(d.Serialize(), c.Serialize());
  EXPECT_EQ(d.Hash(), c.Hash());
  EXPECT_NE(RunConfig().Hash(), c.Hash());
  EXPECT_EQ(d.layout_seed, 9u);
  EXPECT_EQ(d.noise.rng_seed, 9u);
  EXPECT_EQ(d.mitigation.seed, 9u);
}

TEST(ConfigTest, RejectsBadInput) {
  RunConfig c;
  EXPECT_THROW(c.Set("noise.colour", "1"), ConfigError);
  EXPECT_THROW(c.Set("noise.apic_quantum", "-1"), ConfigError);
  EXPECT_THROW(c.Set("noise.latency_jitter_sigma", "abc"), ConfigError);
  EXPECT_THROW(c.Set("eval.strict", "maybe"), ConfigError);
  EXPECT_THROW(c.Apply("just words\n"), ConfigError);
  c.Set("noise.ctx_switch_rate", "2");
  EXPECT_THROW(c.Validate(), ConfigError);
}

TEST(ConfigTest, CommentsAndBlankLines) {
  RunConfig c;
  c.Apply("# header\n\n  run.victim = primes   # inline\nrun.victim_steps=5000\n");
  EXPECT_EQ(c.victim, "primes");
  EXPECT_EQ(c.victim_steps, 5000u);
}

}  // namespace
}  // namespace wasmleak
