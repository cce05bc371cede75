#include "wasmleak/metrics.h"

#include <algorithm>

#include "wasmleak/error.h"

namespace wasmleak {

double Recall(size_t n, size_t e, size_t m, size_t i) {
  if (n == 0) throw PreconditionError("recall: N must be positive");
  if (e + m + i > n) throw PreconditionError("recall: E + M + I exceeds N");
  return 1.0 - static_cast<double>(e + m + i) / static_cast<double>(n);
}

RecallReport ClassifyOutcomes(const std::vector<Label>& predicted,
                              const std::vector<Label>& truth, bool strict) {
  if (predicted.size() != truth.size()) {
    throw PreconditionError("classify: " + std::to_string(predicted.size()) +
                            " predictions for " + std::to_string(truth.size()) +
                            " truth regions");
  }
  if (truth.empty()) throw PreconditionError("classify: no regions");
  auto key = [strict](const Label& l) {
    return std::string(strict ? LabelName(l) : LabelFamily(l).name());
  };
  RecallReport r;
  r.n = truth.size();
  for (size_t k = 0; k < truth.size(); ++k) {
    const Label& p = predicted[k];
    const Label& t = truth[k];
    const std::string pk = key(p);
    const std::string tk = key(t);
    ++r.confusion[{tk, pk}];
    if (pk == tk) {
      ++r.correct;
    } else if (!p) {
      ++r.m;
    } else if (!t) {
      ++r.i;
    } else {
      ++r.e;
    }
  }
  r.recall = Recall(r.n, r.e, r.m, r.i);
  return r;
}

std::pair<std::vector<Label>, std::vector<Label>> JoinRegions(
    const std::vector<RegionLabel>& predicted,
    const std::vector<RegionLabel>& truth) {
  std::pair<std::vector<Label>, std::vector<Label>> out;
  auto& [p, t] = out;
  size_t a = 0;
  size_t b = 0;
  while (a < predicted.size() || b < truth.size()) {
    if (b == truth.size() ||
        (a < predicted.size() && predicted[a].id < truth[b].id)) {
      p.push_back(predicted[a++].label);
      t.push_back(std::nullopt);
    } else if (a == predicted.size() || truth[b].id < predicted[a].id) {
      p.push_back(std::nullopt);
      t.push_back(truth[b++].label);
    } else {
      p.push_back(predicted[a++].label);
      t.push_back(truth[b++].label);
    }
  }
  return out;
}

namespace {

template <typename Seq>
AlignmentCounts Align(const Seq& pred, const Seq& truth) {
  const size_t np = pred.size();
  const size_t nt = truth.size();
  if (np == 0 || nt == 0) throw PreconditionError("align: empty sequence");
  // cost[i][j]: aligning pred[0..i) with truth[0..j).
  std::vector<size_t> cost((np + 1) * (nt + 1));
  auto at = [&](size_t i, size_t j) -> size_t& { return cost[i * (nt + 1) + j]; };
  for (size_t i = 0; i <= np; ++i) at(i, 0) = i;
  for (size_t j = 0; j <= nt; ++j) at(0, j) = j;
  for (size_t i = 1; i <= np; ++i) {
    for (size_t j = 1; j <= nt; ++j) {
      const size_t diag = at(i - 1, j - 1) + (pred[i - 1] == truth[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i, j - 1) + 1, at(i - 1, j) + 1});
    }
  }
  AlignmentCounts c;
  c.n = nt;
  size_t i = np;
  size_t j = nt;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = pred[i - 1] == truth[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (same ? 0 : 1)) {
        c.e += same ? 0 : 1;
        --i;
        --j;
        continue;
      }
    }
    if (j > 0 && at(i, j) == at(i, j - 1) + 1) {
      ++c.m;
      --j;
    } else {
      ++c.i;
      --i;
    }
  }
  return c;
}

}  // namespace

AlignmentCounts AlignFree(std::string_view predicted, std::string_view truth) {
  return Align(predicted, truth);
}

AlignmentCounts AlignFree(const std::vector<Label>& predicted,
                          const std::vector<Label>& truth) {
  return Align(predicted, truth);
}

double NaivePositionalRecall(std::string_view predicted, std::string_view truth) {
  if (truth.empty()) throw PreconditionError("naive recall: empty truth");
  size_t hits = 0;
  for (size_t k = 0; k < truth.size() && k < predicted.size(); ++k) {
    hits += predicted[k] == truth[k] ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace wasmleak
