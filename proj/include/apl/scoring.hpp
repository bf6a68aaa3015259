// include/apl/scoring.hpp
//
// Edit-distance alignment, phoneme-recognition metrics and the hierarchical
// mispronunciation detection / diagnosis tallies with their derived metrics.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "apl/common.hpp"
#include "apl/phoneset.hpp"

namespace apl {

enum class EditOp { kMatch, kSub, kDel, kIns };

struct AlignStep {
  EditOp op;
  int ref_index = -1;  // set for match/sub/del
  int hyp_index = -1;  // set for match/sub/ins
};

struct EditCounts {
  long s = 0, d = 0, i = 0, n = 0;
  long distance() const { return s + d + i; }
};

namespace detail {

template <class T>
std::pair<std::vector<AlignStep>, EditCounts> align_impl(std::span<const T> ref, std::span<const T> hyp) {
  const size_t nr = ref.size(), nh = hyp.size();
  // Unit-cost Levenshtein DP.
  std::vector<std::vector<int>> cost(nr + 1, std::vector<int>(nh + 1, 0));
  for (size_t i = 0; i <= nr; ++i) cost[i][0] = static_cast<int>(i);
  for (size_t j = 0; j <= nh; ++j) cost[0][j] = static_cast<int>(j);
  for (size_t i = 1; i <= nr; ++i) {
    for (size_t j = 1; j <= nh; ++j) {
      int diag = cost[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      int del = cost[i - 1][j] + 1;
      int ins = cost[i][j - 1] + 1;
      cost[i][j] = std::min({diag, del, ins});
    }
  }
  // Backtrace preference on cost ties: match > substitution > deletion >
  // insertion.
  std::vector<AlignStep> rev;
  size_t i = nr, j = nh;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && ref[i - 1] == hyp[j - 1] && cost[i][j] == cost[i - 1][j - 1]) {
      rev.push_back({EditOp::kMatch, static_cast<int>(i - 1), static_cast<int>(j - 1)});
      --i, --j;
    } else if (i > 0 && j > 0 && !(ref[i - 1] == hyp[j - 1]) && cost[i][j] == cost[i - 1][j - 1] + 1) {
      rev.push_back({EditOp::kSub, static_cast<int>(i - 1), static_cast<int>(j - 1)});
      --i, --j;
    } else if (i > 0 && cost[i][j] == cost[i - 1][j] + 1) {
      rev.push_back({EditOp::kDel, static_cast<int>(i - 1), -1});
      --i;
    } else {
      rev.push_back({EditOp::kIns, -1, static_cast<int>(j - 1)});
      --j;
    }
  }
  std::vector<AlignStep> steps(rev.rbegin(), rev.rend());
  EditCounts counts;
  counts.n = static_cast<long>(nr);
  for (const auto& st : steps) {
    switch (st.op) {
      case EditOp::kMatch: break;
      case EditOp::kSub: ++counts.s; break;
      case EditOp::kDel: ++counts.d; break;
      case EditOp::kIns: ++counts.i; break;
    }
  }
  return {std::move(steps), counts};
}

}  // namespace detail

inline std::pair<std::vector<AlignStep>, EditCounts> align(std::span<const PhoneLabel> ref,
                                                           std::span<const PhoneLabel> hyp) {
  return detail::align_impl(ref, hyp);
}
inline std::pair<std::vector<AlignStep>, EditCounts> align(std::span<const int> ref, std::span<const int> hyp) {
  return detail::align_impl(ref, hyp);
}

// Correctness = (N-S-D)/N, Accuracy = (N-S-D-I)/N; the latter may go
// negative under heavy insertion.
double correctness(const EditCounts& c);
double accuracy(const EditCounts& c);

struct MddCounts {
  long ta = 0, fr = 0, fa = 0, tr = 0, cd = 0, de = 0;
  // perceived/recognized labels aligned to no canonical slot; excluded from
  // the tallies above
  long insertions_excluded = 0;
};

// Per canonical position: both pairwise alignments are anchored on the
// canonical sequence; a deleted position compares unequal to any label and
// equal to another deletion.
MddCounts hierarchical_eval(std::span<const PhoneLabel> canonical, std::span<const PhoneLabel> perceived,
                            std::span<const PhoneLabel> recognized);

// Metrics with zero denominators surface as nullopt, never as 0.
struct MddMetrics {
  std::optional<double> frr, far, detection_accuracy, precision, recall, f_measure, der;
};

MddMetrics mdd_metrics(const MddCounts& m);

struct ScoringInput {
  std::string id;
  std::vector<PhoneLabel> canonical, perceived, recognized;
};

struct ScoredUtterance {
  std::string id;
  EditCounts edit;  // recognized vs perceived
  MddCounts mdd;
};

struct CorpusReport {
  std::vector<ScoredUtterance> per_utterance;
  EditCounts edit;  // micro sums
  MddCounts mdd;
};

CorpusReport corpus_report(std::span<const ScoringInput> inputs);

std::string report_json(const CorpusReport& report);
std::string report_table(const CorpusReport& report, const std::string& row_label);

}  // namespace apl
