// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "wasmleak/config.h"
#include "wasmleak/matcher.h"
#include "wasmleak/metrics.h"
#include "wasmleak/pipeline.h"
#include "wasmleak/trace_io.h"

namespace {

namespace fs = std::filesystem;
using wasmleak::RunConfig;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Printf(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
std::string Printf(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  return buf;
}

constexpr uint64_t kSeeds[] = {1, 2, 3, 4, 5};

double MeanRecall(RunConfig base, std::vector<double>* per_seed = nullptr) {
  double sum = 0.0;
  for (uint64_t s : kSeeds) {
    RunConfig c = base;
    c.SetSeed(s);
    const double r = 100.0 * wasmleak::RunExperiment(c).report.recall;
    if (per_seed != nullptr) per_seed->push_back(r);
    sum += r;
  }
  return sum / std::size(kSeeds);
}

std::string Join(const std::vector<double>& v) {
  std::string out;
  for (double x : v) out += (out.empty() ? "" : " ") + Printf("%.2f", x);
  return out;
}

// Recall from the published region counts, against an independent
// computation with exact integer arithmetic.
Outcome RecallArithmetic() {
  struct Row {
    const char* name;
    size_t n, e, m, i;
    double published_percent;
  };
  const Row rows[] = {
      {"aes-O0", 1320561, 306935, 328, 139, 76.722},
      {"aes-O1", 69444, 20389, 7, 0, 70.630},
      {"aes-O2", 44351, 14269, 78, 1, 67.649},
      {"primes", 213900, 44032, 2870, 1, 78.072},
      {"chess-O0", 8568798, 2767703, 21143, 3988, 67.407},
      {"chess-O2", 1905184, 543264, 1018, 690, 71.395},
      {"chess-O3", 126516521, 32598993, 92605, 52091, 74.119},
  };
  Outcome o{true, ""};
  double worst = 0.0;
  for (const Row& r : rows) {
    const double got = 100.0 * wasmleak::Recall(r.n, r.e, r.m, r.i);
    // Oracle: correct regions over all regions, rounded to 3 decimals.
    const double oracle = 100.0 * static_cast<double>(r.n - r.e - r.m - r.i) /
                          static_cast<double>(r.n);
    const double rounded = std::round(got * 1000.0) / 1000.0;
    worst = std::max({worst, std::abs(got - r.published_percent),
                      std::abs(got - oracle)});
    if (std::abs(got - r.published_percent) > 0.001 + 1e-9 ||
        std::abs(got - oracle) > 1e-9 ||
        std::abs(rounded - r.published_percent) > 1e-9) {
      o.pass = false;
      o.detail += Printf("%s got %.4f; ", r.name, got);
    }
  }
  if (o.pass) o.detail = Printf("7 rows, max |diff| %.5f pp", worst);
  return o;
}

Outcome AlignmentExample() {
  const std::string pred = "Sidea-Chonnels ara interestin ";
  const std::string truth = "Side-Channels are interesting ";
  const auto c = wasmleak::AlignFree(pred, truth);
  const double r = 100.0 * c.recall();
  const double naive = 100.0 * wasmleak::NaivePositionalRecall(pred, truth);
  const bool pass = c.e == 2 && c.m == 1 && c.i == 1 && c.n == 30 &&
                    std::abs(r - 86.667) < 0.001 && naive <= 20.0 + 1e-9;
  return {pass, Printf("E=%zu M=%zu I=%zu N=%zu recall %.3f%%, naive %.1f%%",
                       c.e, c.m, c.i, c.n, r, naive)};
}

Outcome ClosedWorld() {
  RunConfig c;
  c.noise = wasmleak::NoiseModel::Zero();
  c.victim = "random";
  c.victim_seed = 7;
  c.victim_steps = 100000;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = wasmleak::RunExperiment(c);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  size_t null_regions = 0;
  for (const auto& [key, count] : r.report.confusion) {
    if (key.first == "NULL") null_regions += count;
  }
  const bool pass = r.report.recall == 1.0 && r.victim_opcodes >= 100000 &&
                    null_regions > 0 && secs < 60.0;
  return {pass, Printf("recall %.4f%% over %zu regions (%zu NULL), %zu opcodes, "
                       "%.1fs",
                       100.0 * r.report.recall, r.report.n, null_regions,
                       r.victim_opcodes, secs)};
}

Outcome DefaultNoise() {
  RunConfig c;
  const auto first = wasmleak::RunExperiment(c);
  std::vector<double> per_seed;
  const double mean = MeanRecall(c, &per_seed);
  const bool pass = first.unique_opcodes >= 30 && first.victim_opcodes >= 10000 &&
                    mean >= 60.0 && mean <= 90.0 &&
                    *std::min_element(per_seed.begin(), per_seed.end()) >= 55.0;
  return {pass, Printf("%zu unique / %zu retired opcodes, mean %.2f%% [%s]",
                       first.unique_opcodes, first.victim_opcodes, mean,
                       Join(per_seed).c_str())};
}

Outcome LatencyAblation() {
  RunConfig all;
  RunConfig no_latency;
  no_latency.channels = wasmleak::ParseChannelSubset("all,-latency");
  const double a = MeanRecall(all);
  const double b = MeanRecall(no_latency);
  const bool pass = a - b <= 25.0 && b >= 40.0;
  return {pass, Printf("all %.2f%%, without latency %.2f%% (drop %.2f pp)", a, b,
                       a - b)};
}

Outcome OptableDetection() {
  size_t ok = 0;
  double min_conf = 1.0;
  for (uint64_t s = 1; s <= 20; ++s) {
    RunConfig c;
    c.SetSeed(s);
    const auto r = wasmleak::RunExperiment(c);
    min_conf = std::min(min_conf, r.optable_confidence);
    if (r.optable_correct && r.optable_confidence > 0.9) ++ok;
  }
  return {ok == 20, Printf("%zu/20 seeds correct, min confidence %.4f", ok,
                           min_conf)};
}

Outcome JitterMonotone() {
  const double base = RunConfig{}.noise.latency_jitter_sigma;
  std::vector<double> means;
  for (double k : {1.0, 2.0, 4.0}) {
    RunConfig c;
    c.noise.latency_jitter_sigma = base * k;
    means.push_back(MeanRecall(c));
  }
  const bool pass = means[1] <= means[0] + 1.0 && means[2] <= means[1] + 1.0;
  return {pass, Printf("sigma x1/x2/x4: %s", Join(means).c_str())};
}

Outcome NopMitigation() {
  RunConfig stock;
  RunConfig mitigated;
  mitigated.mitigation.nop_insertion_prob = 0.3;
  const double a = MeanRecall(stock);
  const double b = MeanRecall(mitigated);
  return {a - b >= 15.0, Printf("stock %.2f%%, nop 0.3 %.2f%% (drop %.2f pp)", a,
                                b, a - b)};
}

Outcome Determinism() {
  const fs::path root = fs::temp_directory_path() / "wasmleak_acceptance_det";
  fs::remove_all(root);
  RunConfig c;
  wasmleak::CmdEnd2End(c, root / "a");
  wasmleak::CmdEnd2End(c, root / "b");
  std::string differing;
  for (const char* f : {"trace.csv", "db.jsonl", "predictions.csv", "report.txt"}) {
    if (wasmleak::ReadFile(root / "a" / f) != wasmleak::ReadFile(root / "b" / f)) {
      differing += std::string(differing.empty() ? "" : ",") + f;
    }
  }
  fs::remove_all(root);
  return {differing.empty(),
          differing.empty() ? "trace, db, predictions, report byte-identical"
                            : "differ: " + differing};
}

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

// Walks every truth string over `alphabet` up to `max_len` as a trie,
// extending one edit-distance row per character, and compares the final
// row entry with the aligner's total cost at every node.
struct EditOracle {
  const std::string& pred;
  std::string alphabet;
  size_t max_len;
  size_t checked = 0;
  size_t bad = 0;

  void Walk(std::string& truth, const std::vector<size_t>& row) {
    if (!truth.empty()) {
      const auto c = wasmleak::AlignFree(pred, truth);
      ++checked;
      const bool consistent = c.n == truth.size() &&
                              (c.n - c.m) + c.i == pred.size() &&
                              c.e + c.m + c.i == row[pred.size()];
      if (!consistent) ++bad;
    }
    if (truth.size() == max_len) return;
    std::vector<size_t> next(row.size());
    for (char ch : alphabet) {
      next[0] = row[0] + 1;
      for (size_t i = 1; i <= pred.size(); ++i) {
        next[i] = std::min({row[i - 1] + (pred[i - 1] == ch ? 0 : 1), row[i] + 1,
                            next[i - 1] + 1});
      }
      truth.push_back(ch);
      Walk(truth, next);
      truth.pop_back();
    }
  }
};

std::vector<std::string> AllStrings(const std::string& alphabet, size_t max_len) {
  std::vector<std::string> out;
  std::vector<std::string> frontier = {""};
  for (size_t len = 1; len <= max_len; ++len) {
    std::vector<std::string> next;
    for (const auto& s : frontier) {
      for (char ch : alphabet) next.push_back(s + ch);
    }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

Outcome ScoringOracles() {
  std::mt19937_64 rng(20261018);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<size_t> len(2, 64);
  double worst_pearson = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const size_t n = len(rng);
    std::vector<double> x(n), y(n);
    const double mix = normal(rng);
    for (size_t k = 0; k < n; ++k) {
      x[k] = 100.0 * normal(rng) + 500.0;
      y[k] = mix * x[k] + 50.0 * normal(rng);
    }
    worst_pearson = std::max(
        worst_pearson, std::abs(wasmleak::Pearson(x, y) - NaivePearson(x, y)));
  }

  size_t discrete_bad = 0;
  const auto short_strings = AllStrings("RWE", 4);
  std::vector<std::string> with_empty = {""};
  with_empty.insert(with_empty.end(), short_strings.begin(), short_strings.end());
  for (const auto& a : with_empty) {
    for (const auto& b : with_empty) {
      size_t h = std::max(a.size(), b.size()) - std::min(a.size(), b.size());
      for (size_t k = 0; k < std::min(a.size(), b.size()); ++k) h += a[k] != b[k];
      if (std::abs(wasmleak::ScoreDiscrete(a, b) - 1.0 / (1.0 + h)) > 1e-15) {
        ++discrete_bad;
      }
    }
  }

  size_t align_bad = 0;
  size_t pairs = 0;
  for (const auto& p : AllStrings("abc", 8)) {
    EditOracle oracle{p, "abc", 8};
    std::vector<size_t> row(p.size() + 1);
    for (size_t i = 0; i <= p.size(); ++i) row[i] = i;
    std::string truth;
    oracle.Walk(truth, row);
    pairs += oracle.checked;
    align_bad += oracle.bad;
  }
  const bool pass = worst_pearson <= 1e-9 && discrete_bad == 0 && align_bad == 0;
  return {pass, Printf("pearson max |diff| %.2e over 1000 pairs; discrete %zu "
                       "pairs exact; align vs exhaustive edit cost %zu pairs, %zu bad",
                       worst_pearson, with_empty.size() * with_empty.size(), pairs,
                       align_bad)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {"recall_arithmetic", RecallArithmetic},
      {"align_free_example", AlignmentExample},
      {"closed_world_zero_noise", ClosedWorld},
      {"default_noise_recall_band", DefaultNoise},
      {"latency_ablation", LatencyAblation},
      {"optable_detection", OptableDetection},
      {"jitter_monotone", JitterMonotone},
      {"nop_insertion_mitigation", NopMitigation},
      {"end2end_determinism", Determinism},
      {"scoring_oracles", ScoringOracles},
  };
  int failures = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] %2d %-26s %s\n", o.pass ? "PASS" : "FAIL", index, c.name,
                o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  std::printf("%d/%d criteria passed\n", index - failures, index);
  return failures == 0 ? 0 : 1;
}
