#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "wasmleak/error.h"
#include "wasmleak/metrics.h"

namespace wasmleak {
namespace {

struct PublishedRow {
  size_t n, e, m, i;
  double percent;
};

// Published region counts and the recall printed next to them.
const PublishedRow kPublished[] = {
    {1320561, 306935, 328, 139, 76.722},
    {69444, 20389, 7, 0, 70.630},
    {44351, 14269, 78, 1, 67.649},
    {213900, 44032, 2870, 1, 78.072},
    {8568798, 2767703, 21143, 3988, 67.407},
    {1905184, 543264, 1018, 690, 71.395},
    {126516521, 32598993, 92605, 52091, 74.119},
};

TEST(RecallTest, ReproducesPublishedRows) {
  for (const auto& r : kPublished) {
    const double got = 100.0 * Recall(r.n, r.e, r.m, r.i);
    EXPECT_NEAR(got, r.percent, 0.001) << r.n;
    EXPECT_DOUBLE_EQ(std::round(got * 1000.0) / 1000.0, r.percent) << r.n;
  }
}

TEST(RecallTest, Bounds) {
  EXPECT_DOUBLE_EQ(Recall(10, 0, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(Recall(10, 4, 3, 3), 0.0);
  EXPECT_DOUBLE_EQ(Recall(4, 1, 0, 0), 0.75);
  EXPECT_THROW(Recall(0, 0, 0, 0), PreconditionError);
  EXPECT_THROW(Recall(3, 2, 1, 1), PreconditionError);
}

Label L(Opcode op) { return op; }

TEST(ClassifyTest, CountsEachOutcomeKind) {
  const std::vector<Label> truth = {L(Opcode::kI32Add), L(Opcode::kI32Sub),
                                    L(Opcode::kI32Mul), std::nullopt,
                                    L(Opcode::kI64Add)};
  const std::vector<Label> pred = {L(Opcode::kI32Add), L(Opcode::kI32Add),
                                   std::nullopt, L(Opcode::kDrop),
                                   L(Opcode::kI32Add)};
  const RecallReport family = ClassifyOutcomes(pred, truth, false);
  EXPECT_EQ(family.n, 5u);
  EXPECT_EQ(family.correct, 2u);  // i64.add and i32.add share a family
  EXPECT_EQ(family.e, 1u);
  EXPECT_EQ(family.m, 1u);
  EXPECT_EQ(family.i, 1u);
  EXPECT_DOUBLE_EQ(family.recall, 0.4);

  const RecallReport strict = ClassifyOutcomes(pred, truth, true);
  EXPECT_EQ(strict.correct, 1u);
  EXPECT_EQ(strict.e, 2u);
  EXPECT_EQ((strict.confusion.at({"i64.add", "i32.add"})), 1u);
}

TEST(ClassifyTest, NullAgainstNullIsCorrect) {
  const std::vector<Label> both = {std::nullopt, std::nullopt};
  EXPECT_DOUBLE_EQ(ClassifyOutcomes(both, both).recall, 1.0);
}

TEST(ClassifyTest, RejectsMismatchedInput) {
  EXPECT_THROW(ClassifyOutcomes({std::nullopt}, {}), PreconditionError);
  EXPECT_THROW(ClassifyOutcomes({}, {}), PreconditionError);
}

TEST(JoinRegionsTest, MissingSidesBecomeNull) {
  const std::vector<RegionLabel> pred = {{1, L(Opcode::kNop)},
                                         {4, L(Opcode::kDrop)}};
  const std::vector<RegionLabel> truth = {{1, L(Opcode::kNop)},
                                          {2, L(Opcode::kI32Add)}};
  const auto [p, t] = JoinRegions(pred, truth);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p[0], L(Opcode::kNop));
  EXPECT_EQ(t[0], L(Opcode::kNop));
  EXPECT_EQ(p[1], std::nullopt);
  EXPECT_EQ(t[1], L(Opcode::kI32Add));
  EXPECT_EQ(p[2], L(Opcode::kDrop));
  EXPECT_EQ(t[2], std::nullopt);
}

TEST(AlignFreeTest, PublishedStringExample) {
  const auto c = AlignFree("Sidea-Chonnels ara interestin ",
                           "Side-Channels are interesting ");
  EXPECT_EQ(c, (AlignmentCounts{2, 1, 1, 30}));
  EXPECT_NEAR(100.0 * c.recall(), 86.667, 0.001);
}

TEST(AlignFreeTest, NaivePositionalComparisonIsPoor) {
  // [DERIVED] Counting equal characters position by position: "Side" agrees
  // and a shift follows, then a few coincidences. Hand count gives 6 of 30.
  const double naive = NaivePositionalRecall("Sidea-Chonnels ara interestin ",
                                             "Side-Channels are interesting ");
  EXPECT_DOUBLE_EQ(naive, 6.0 / 30.0);
}

TEST(AlignFreeTest, SimpleCases) {
  EXPECT_EQ(AlignFree("abc", "abc"), (AlignmentCounts{0, 0, 0, 3}));
  EXPECT_EQ(AlignFree("abd", "abc"), (AlignmentCounts{1, 0, 0, 3}));
  EXPECT_EQ(AlignFree("ab", "abc"), (AlignmentCounts{0, 1, 0, 3}));
  EXPECT_EQ(AlignFree("abcc", "abc"), (AlignmentCounts{0, 0, 1, 3}));
  EXPECT_THROW(AlignFree("", "a"), PreconditionError);
  EXPECT_THROW(AlignFree("a", ""), PreconditionError);
}

TEST(AlignFreeTest, LabelSequencesMatchStringForm) {
  const std::vector<Label> truth = {L(Opcode::kI32Add), L(Opcode::kDrop),
                                    std::nullopt};
  const std::vector<Label> pred = {L(Opcode::kI32Add), std::nullopt};
  EXPECT_EQ(AlignFree(pred, truth), AlignFree("ac", "abc"));
}

// Plain recursion over all edit choices, exponential but fine for short
// inputs.
size_t EditCostByRecursion(const std::string& a, size_t i, const std::string& b,
                           size_t j) {
  if (i == a.size()) return b.size() - j;
  if (j == b.size()) return a.size() - i;
  return std::min({EditCostByRecursion(a, i + 1, b, j + 1) + (a[i] != b[j]),
                   EditCostByRecursion(a, i + 1, b, j) + 1,
                   EditCostByRecursion(a, i, b, j + 1) + 1});
}

TEST(AlignFreeTest, TotalCostMatchesRecursionOnRandomPairs) {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> len(1, 7);
  std::uniform_int_distribution<int> sym(0, 2);
  for (int t = 0; t < 2000; ++t) {
    std::string a(len(rng), 'a');
    std::string b(len(rng), 'a');
    for (char& ch : a) ch = static_cast<char>('a' + sym(rng));
    for (char& ch : b) ch = static_cast<char>('a' + sym(rng));
    const auto c = AlignFree(a, b);
    ASSERT_EQ(c.e + c.m + c.i, EditCostByRecursion(a, 0, b, 0)) << a << " " << b;
    ASSERT_EQ(c.n - c.m + c.i, a.size());
  }
}

// Maps i32.x to i64.x and back; everything else stays put.
Label SwapWidth(const Label& l) {
  if (!l) return l;
  std::string name(Mnemonic(*l));
  if (name.rfind("i32.", 0) == 0) {
    name.replace(1, 2, "64");
  } else if (name.rfind("i64.", 0) == 0) {
    name.replace(1, 2, "32");
  } else {
    return l;
  }
  const auto swapped = OpcodeFromMnemonic(name);
  return swapped ? Label(*swapped) : l;
}

TEST(ClassifyTest, WidthSwapLeavesFamilyReportUnchanged) {
  std::mt19937_64 rng(11);
  const auto ops = SupportedOpcodes();
  std::uniform_int_distribution<size_t> pick(0, ops.size());
  auto draw = [&]() -> Label {
    const size_t k = pick(rng);
    return k == ops.size() ? Label() : Label(ops[k].opcode);
  };
  for (int round = 0; round < 50; ++round) {
    std::vector<Label> p(200);
    std::vector<Label> t(200);
    for (size_t k = 0; k < p.size(); ++k) {
      t[k] = draw();
      // Bias towards agreement so correct and error counts are both nonzero.
      p[k] = rng() % 2 ? t[k] : draw();
    }
    std::vector<Label> ps;
    std::vector<Label> ts;
    for (const auto& l : p) ps.push_back(SwapWidth(l));
    for (const auto& l : t) ts.push_back(SwapWidth(l));
    const RecallReport a = ClassifyOutcomes(p, t);
    const RecallReport b = ClassifyOutcomes(ps, ts);
    EXPECT_EQ(a.correct, b.correct);
    EXPECT_EQ(a.e, b.e);
    EXPECT_EQ(a.m, b.m);
    EXPECT_EQ(a.i, b.i);
    EXPECT_EQ(a.confusion, b.confusion);
  }
}

TEST(RecallTest, StrictlyDecreasesInEachErrorCount) {
  for (size_t n : {10u, 1000u}) {
    for (size_t e = 0; e < 3; ++e) {
      for (size_t m = 0; m < 3; ++m) {
        for (size_t i = 0; i < 3; ++i) {
          const double r = Recall(n, e, m, i);
          EXPECT_LT(Recall(n, e + 1, m, i), r);
          EXPECT_LT(Recall(n, e, m + 1, i), r);
          EXPECT_LT(Recall(n, e, m, i + 1), r);
        }
      }
    }
  }
}

}  // namespace
}  // namespace wasmleak
