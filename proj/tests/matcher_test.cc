#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "wasmleak/config.h"
#include "wasmleak/error.h"
#include "wasmleak/matcher.h"
#include "wasmleak/profiler.h"

namespace wasmleak {
namespace {

// Definitional formula in extended precision.
double NaivePearson(const std::vector<double>& x, const std::vector<double>& y) {
  const long double n = static_cast<long double>(x.size());
  long double mx = 0, my = 0;
  for (size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  long double sxy = 0, sxx = 0, syy = 0;
  for (size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

TEST(PearsonTest, AgreesWithNaiveFormula) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<size_t> len(2, 40);
  for (int t = 0; t < 1000; ++t) {
    const size_t n = len(rng);
    std::vector<double> x(n), y(n);
    const double mix = normal(rng);
    for (size_t k = 0; k < n; ++k) {
      x[k] = 60.0 * normal(rng) + 5300.0;
      y[k] = mix * x[k] + 40.0 * normal(rng);
    }
    ASSERT_NEAR(Pearson(x, y), NaivePearson(x, y), 1e-9);
  }
}

TEST(PearsonTest, KnownValues) {
  const std::vector<double> x = {1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(Pearson(x, x), 1.0);
  EXPECT_DOUBLE_EQ(Pearson(x, std::vector<double>{8, 6, 4, 2}), -1.0);
  // [DERIVED] centred x = (-1,0,1), y = (1,-2,1): covariance 0.
  EXPECT_DOUBLE_EQ(Pearson(std::vector<double>{1, 2, 3},
                           std::vector<double>{2, -1, 2}),
                   0.0);
}

TEST(PearsonTest, DegenerateInputs) {
  const std::vector<double> c = {3, 3, 3};
  const std::vector<double> v = {1, 2, 3};
  EXPECT_THROW(Pearson(c, c), UndefinedCorrelation);
  EXPECT_THROW(Pearson(c, std::vector<double>{4, 4, 4}), UndefinedCorrelation);
  EXPECT_DOUBLE_EQ(Pearson(c, v), 0.0);
  EXPECT_THROW(Pearson(v, std::vector<double>{1, 2}), PreconditionError);
  EXPECT_THROW(Pearson(std::vector<double>{1}, std::vector<double>{1}),
               PreconditionError);
}

TEST(ScoreNumericTest, LengthRatioAndClamp) {
  const std::vector<double> x = {1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(ScoreNumeric(x, x), 1.0);
  EXPECT_DOUBLE_EQ(ScoreNumeric(x, std::vector<double>{1, 2}), 0.5);
  EXPECT_DOUBLE_EQ(ScoreNumeric(x, std::vector<double>{4, 3, 2, 1}), 0.0);
  EXPECT_DOUBLE_EQ(ScoreNumeric(x, std::vector<double>{}), 0.0);
}

TEST(ScoreNumericTest, ConstantFallback) {
  const std::vector<double> c = {5, 5, 5};
  EXPECT_DOUBLE_EQ(ScoreNumeric(c, c), 1.0);
  EXPECT_DOUBLE_EQ(ScoreNumeric(c, std::vector<double>{7, 7, 7}), 0.0);
  // One constant side: 1 / (1 + positional mismatches).
  EXPECT_DOUBLE_EQ(ScoreNumeric(c, std::vector<double>{5, 6, 7}), 1.0 / 3.0);
}

std::vector<std::string> AllStrings(size_t max_len) {
  std::vector<std::string> out = {""};
  for (size_t begin = 0; out.back().size() < max_len;) {
    const size_t end = out.size();
    for (size_t k = begin; k < end; ++k) {
      for (char ch : {'R', 'W', 'E'}) out.push_back(out[k] + ch);
    }
    begin = end;
  }
  return out;
}

TEST(ScoreDiscreteTest, ExhaustiveUpToLengthFour) {
  const auto strings = AllStrings(4);
  ASSERT_EQ(strings.size(), 121u);
  for (const auto& a : strings) {
    for (const auto& b : strings) {
      // Pad the shorter one with a symbol outside the alphabet: every padded
      // position then counts as a mismatch.
      std::string pa = a;
      std::string pb = b;
      pa.resize(std::max(a.size(), b.size()), '_');
      pb.resize(std::max(a.size(), b.size()), '-');
      size_t h = 0;
      for (size_t k = 0; k < pa.size(); ++k) h += pa[k] != pb[k];
      ASSERT_DOUBLE_EQ(ScoreDiscrete(a, b), 1.0 / (1.0 + h)) << a << "|" << b;
      ASSERT_DOUBLE_EQ(ScoreDiscrete(a, b), ScoreDiscrete(b, a));
    }
  }
}

TEST(ChannelSetTest, ParseAndRender) {
  EXPECT_EQ(ChannelSet::All().ToString(), "latency,pf_count,mode,class");
  EXPECT_EQ(ParseChannelSubset("all,-latency").ToString(), "pf_count,mode,class");
  EXPECT_EQ(ParseChannelSubset("mode,class").ToString(), "mode,class");
  EXPECT_TRUE(ParseChannelSubset("all,-latency,-pf_count,-mode,-class").empty());
  EXPECT_THROW(ParseChannelSubset("all,-colour"), ConfigError);
}

TEST(ChannelSetTest, DuplicateSubsetsAreDropped) {
  std::vector<std::string> dups;
  const auto subsets =
      ParseChannelSubsets("all; latency,pf_count,mode,class ;mode", &dups);
  ASSERT_EQ(subsets.size(), 2u);
  EXPECT_EQ(subsets[0].first, "all");
  EXPECT_EQ(subsets[1].first, "mode");
  ASSERT_EQ(dups.size(), 1u);
  EXPECT_EQ(dups[0], "latency,pf_count,mode,class");
}

Segment MakeSeg(const std::string& modes, const std::string& classes,
                std::vector<double> pf, std::vector<double> lat) {
  Segment s;
  s.modes = modes;
  s.classes = classes;
  s.pf = std::move(pf);
  s.latency = std::move(lat);
  s.events.resize(modes.size());
  return s;
}

Fingerprint MakeFp(Label label, const std::string& modes,
                   const std::string& classes, std::vector<uint32_t> pf,
                   std::vector<double> lat, uint64_t support = 1) {
  return {label, modes, classes, std::move(pf), std::move(lat), support};
}

TEST(ScoreSegmentTest, ProductOfChannelScores) {
  const Segment seg = MakeSeg("RER", "OXS", {8, 5, 7}, {100, 200, 150});
  const Fingerprint fp = MakeFp(Opcode::kI32Add, "REW", "OXS", {8, 5, 9},
                                {100, 210, 140});
  const auto parts = ScoreChannels(seg, fp, ChannelSet::All());
  ASSERT_EQ(parts.size(), 4u);
  double product = 1.0;
  for (const auto& p : parts) product *= p.value;
  EXPECT_DOUBLE_EQ(ScoreSegment(seg, fp, ChannelSet::All()), product);
  EXPECT_DOUBLE_EQ(ScoreSegment(seg, fp, ParseChannelSubset("mode")), 0.5);
  EXPECT_DOUBLE_EQ(ScoreSegment(seg, fp, ParseChannelSubset("class")), 1.0);
  EXPECT_THROW(ScoreSegment(seg, fp, ChannelSet()), PreconditionError);
}

TEST(MatchTraceTest, ArgmaxWithTieBreaks) {
  FingerprintDb db;
  db.entries = {
      MakeFp(Opcode::kI32Sub, "RE", "OX", {8, 5}, {100, 200}, 1),
      MakeFp(Opcode::kI32Add, "RE", "OX", {8, 5}, {100, 200}, 1),
      MakeFp(Opcode::kDrop, "RER", "OXS", {8, 5, 7}, {1, 2, 3}, 1),
  };
  const Segment seg = MakeSeg("RE", "OX", {8, 5}, {110, 190});
  const auto out = MatchTrace({seg}, db, ChannelSet::All());
  ASSERT_EQ(out.size(), 1u);
  // Equal score and support: the smaller label name wins.
  EXPECT_EQ(out[0].predicted, Label(Opcode::kI32Add));
  EXPECT_DOUBLE_EQ(out[0].score, 1.0);
  EXPECT_DOUBLE_EQ(out[0].runner_up_margin, 0.0);

  db.entries[0].support = 3;
  EXPECT_EQ(MatchTrace({seg}, db, ChannelSet::All())[0].predicted,
            Label(Opcode::kI32Sub));
}

TEST(MatchTraceTest, AgreesWithExhaustiveScoring) {
  std::mt19937 rng(5);
  const std::string modes = "RWE";
  const std::string classes = "OSX";
  auto random_seq = [&](size_t n, const std::string& alphabet) {
    std::string s(n, ' ');
    for (char& c : s) c = alphabet[rng() % alphabet.size()];
    return s;
  };
  FingerprintDb db;
  const auto ops = SupportedOpcodes();
  for (int k = 0; k < 60; ++k) {
    const size_t n = 2 + rng() % 6;
    std::vector<uint32_t> pf(n);
    std::vector<double> lat(n);
    for (size_t i = 0; i < n; ++i) {
      pf[i] = 5 + rng() % 5;
      lat[i] = 5000 + rng() % 600;
    }
    db.entries.push_back(MakeFp(ops[rng() % ops.size()].opcode,
                                random_seq(n, modes), random_seq(n, classes), pf,
                                lat, 1 + rng() % 3));
  }
  std::vector<Segment> segs;
  for (int k = 0; k < 200; ++k) {
    const auto& fp = db.entries[rng() % db.entries.size()];
    std::vector<double> lat = fp.latency_mean;
    for (double& x : lat) x += static_cast<double>(rng() % 200) - 100.0;
    std::string m = fp.mode_seq;
    if (rng() % 3 == 0) m[0] = 'W';
    segs.push_back(MakeSeg(m, fp.class_seq,
                           std::vector<double>(fp.pf_seq.begin(), fp.pf_seq.end()),
                           lat));
  }
  const auto out = MatchTrace(segs, db, ChannelSet::All());
  for (size_t s = 0; s < segs.size(); ++s) {
    double best = -1.0;
    for (const auto& fp : db.entries) {
      best = std::max(best, ScoreSegment(segs[s], fp, ChannelSet::All()));
    }
    double runner = 0.0;
    for (const auto& fp : db.entries) {
      if (fp.label != out[s].predicted) {
        runner = std::max(runner, ScoreSegment(segs[s], fp, ChannelSet::All()));
      }
    }
    ASSERT_DOUBLE_EQ(out[s].score, best) << s;
    ASSERT_NEAR(out[s].runner_up_margin, best - runner, 1e-12) << s;
  }
}

TEST(MatchTraceTest, RejectsEmptyInputs) {
  const Segment seg = MakeSeg("R", "O", {8}, {1});
  EXPECT_THROW(MatchTrace({seg}, FingerprintDb{}, ChannelSet::All()),
               PreconditionError);
  FingerprintDb db;
  db.entries.push_back(MakeFp(Opcode::kNop, "R", "O", {8}, {1}));
  EXPECT_THROW(MatchTrace({seg}, db, ChannelSet()), PreconditionError);
}

}  // namespace
}  // namespace wasmleak
