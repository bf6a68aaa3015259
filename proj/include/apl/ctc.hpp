// include/apl/ctc.hpp
//
// CTC objective with analytic gradient w.r.t. the frame log-posteriors,
// a path-enumeration oracle, greedy collapse and prefix beam search.
// All recursions run in log space; only the oracle works in probabilities.

#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "apl/common.hpp"
#include "apl/types.hpp"

namespace apl {

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

inline double log_sum_exp(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

inline void check_labels(std::span<const int> labels, Index n_classes, int blank) {
  if (blank < 0 || blank >= n_classes) throw NumericError(cat("blank id ", blank, " out of range"));
  for (int l : labels) {
    if (l < 0 || l >= n_classes) throw NumericError(cat("label id ", l, " out of range [0,", n_classes, ")"));
    if (l == blank) throw NumericError("label sequence must not contain the blank id");
  }
}

// Minimum frame count a label sequence admits: |labels| plus one separating
// blank per adjacent equal pair.
inline Index ctc_min_frames(std::span<const int> labels) {
  Index need = static_cast<Index>(labels.size());
  for (size_t i = 1; i < labels.size(); ++i) need += (labels[i] == labels[i - 1]);
  return need;
}

template <class S>
struct CtcResult {
  double loss;      // -log P(labels | log_probs)
  Mat<S> grad;      // d loss / d log_probs, same shape as the input
  double log_prob_forward;   // total from the alpha recursion
  double log_prob_backward;  // total from the beta recursion
};

// Forward-backward over the blank-interleaved extended label sequence.
template <class S>
CtcResult<S> ctc_loss(const Mat<S>& log_probs, std::span<const int> labels, int blank) {
  const Index t_len = log_probs.rows();
  const Index c = log_probs.cols();
  if (t_len < 1) throw NumericError("ctc: empty posterior matrix");
  if (c < 2) throw NumericError("ctc: need at least two classes (one label plus blank)");
  check_labels(labels, c, blank);
  if (t_len < ctc_min_frames(labels))
    throw NumericError(cat("ctc: target longer than input (", labels.size(), " labels, min ", ctc_min_frames(labels),
                           " frames, got ", t_len, ")"));

  const Index s_len = 2 * static_cast<Index>(labels.size()) + 1;
  auto ext_label = [&](Index s) { return (s % 2 == 0) ? blank : labels[static_cast<size_t>(s / 2)]; };
  auto lp = [&](Index t, Index s) { return static_cast<double>(log_probs(t, ext_label(s))); };
  auto can_skip = [&](Index s) {  // diagonal s-2 -> s transition
    return s >= 2 && ext_label(s) != blank && ext_label(s) != ext_label(s - 2);
  };

  Matd alpha = Matd::Constant(t_len, s_len, kLogZero);
  alpha(0, 0) = lp(0, 0);
  if (s_len > 1) alpha(0, 1) = lp(0, 1);
  for (Index t = 1; t < t_len; ++t) {
    // states reachable at time t given the frames remaining
    const Index s_hi = std::min<Index>(s_len - 1, 2 * t + 1);
    const Index s_lo = std::max<Index>(0, s_len - 2 * (t_len - t));
    for (Index s = s_lo; s <= s_hi; ++s) {
      double a = alpha(t - 1, s);
      if (s >= 1) a = log_sum_exp(a, alpha(t - 1, s - 1));
      if (can_skip(s)) a = log_sum_exp(a, alpha(t - 1, s - 2));
      alpha(t, s) = (a == kLogZero) ? kLogZero : a + lp(t, s);
    }
  }
  double log_p_fwd = alpha(t_len - 1, s_len - 1);
  if (s_len > 1) log_p_fwd = log_sum_exp(log_p_fwd, alpha(t_len - 1, s_len - 2));

  Matd beta = Matd::Constant(t_len, s_len, kLogZero);
  beta(t_len - 1, s_len - 1) = lp(t_len - 1, s_len - 1);
  if (s_len > 1) beta(t_len - 1, s_len - 2) = lp(t_len - 1, s_len - 2);
  for (Index t = t_len - 2; t >= 0; --t) {
    const Index s_hi = std::min<Index>(s_len - 1, 2 * t + 1);
    const Index s_lo = std::max<Index>(0, s_len - 2 * (t_len - t));
    for (Index s = s_lo; s <= s_hi; ++s) {
      double b = beta(t + 1, s);
      if (s + 1 < s_len) b = log_sum_exp(b, beta(t + 1, s + 1));
      if (s + 2 < s_len && can_skip(s + 2)) b = log_sum_exp(b, beta(t + 1, s + 2));
      beta(t, s) = (b == kLogZero) ? kLogZero : b + lp(t, s);
    }
  }
  double log_p_bwd = beta(0, 0);
  if (s_len > 1) log_p_bwd = log_sum_exp(log_p_bwd, beta(0, 1));

  if (log_p_fwd == kLogZero || !std::isfinite(log_p_fwd))
    throw NumericError("ctc: sequence probability underflowed to zero");

  // gamma_t(s) = alpha + beta - lp counts the frame posterior once;
  // summing exp(gamma) over s recovers P at every t.
  CtcResult<S> out;
  out.loss = -log_p_fwd;
  out.log_prob_forward = log_p_fwd;
  out.log_prob_backward = log_p_bwd;
  out.grad = Mat<S>::Zero(t_len, c);
  for (Index t = 0; t < t_len; ++t) {
    std::vector<double> per_class(static_cast<size_t>(c), kLogZero);
    for (Index s = 0; s < s_len; ++s) {
      if (alpha(t, s) == kLogZero || beta(t, s) == kLogZero) continue;
      double gamma = alpha(t, s) + beta(t, s) - lp(t, s);
      auto k = static_cast<size_t>(ext_label(s));
      per_class[k] = log_sum_exp(per_class[k], gamma);
    }
    for (Index k = 0; k < c; ++k)
      if (per_class[static_cast<size_t>(k)] != kLogZero)
        out.grad(t, k) = static_cast<S>(-std::exp(per_class[static_cast<size_t>(k)] - log_p_fwd));
  }
  return out;
}

// Exact per-prefix masses after the first t_used frames: log probability of
// the frame paths collapsing to exactly `labels`, split by whether the path
// currently ends in blank or in the final label. -inf/-inf when infeasible.
struct PrefixMass {
  double blank_ending = kLogZero;
  double label_ending = kLogZero;
  double total() const { return log_sum_exp(blank_ending, label_ending); }
};

template <class S>
PrefixMass ctc_prefix_masses(const Mat<S>& log_probs, Index t_used, std::span<const int> labels, int blank) {
  if (t_used < 1 || t_used > log_probs.rows() || t_used < ctc_min_frames(labels)) return {};
  check_labels(labels, log_probs.cols(), blank);
  const Index s_len = 2 * static_cast<Index>(labels.size()) + 1;
  auto ext_label = [&](Index s) { return (s % 2 == 0) ? blank : labels[static_cast<size_t>(s / 2)]; };
  std::vector<double> prev(static_cast<size_t>(s_len), kLogZero), cur(static_cast<size_t>(s_len), kLogZero);
  prev[0] = static_cast<double>(log_probs(0, blank));
  if (s_len > 1) prev[1] = static_cast<double>(log_probs(0, ext_label(1)));
  for (Index t = 1; t < t_used; ++t) {
    for (Index s = 0; s < s_len; ++s) {
      double a = prev[static_cast<size_t>(s)];
      if (s >= 1) a = log_sum_exp(a, prev[static_cast<size_t>(s - 1)]);
      if (s >= 2 && ext_label(s) != blank && ext_label(s) != ext_label(s - 2))
        a = log_sum_exp(a, prev[static_cast<size_t>(s - 2)]);
      cur[static_cast<size_t>(s)] = (a == kLogZero) ? kLogZero : a + static_cast<double>(log_probs(t, ext_label(s)));
    }
    std::swap(prev, cur);
  }
  PrefixMass m;
  m.blank_ending = prev[static_cast<size_t>(s_len - 1)];
  if (s_len > 1) m.label_ending = prev[static_cast<size_t>(s_len - 2)];
  return m;
}

// Exact log P(labels | log_probs); -inf when infeasible for the frame count.
template <class S>
double ctc_log_prob(const Mat<S>& log_probs, std::span<const int> labels, int blank) {
  return ctc_prefix_masses(log_probs, log_probs.rows(), labels, blank).total();
}

// Remove adjacent duplicates, then blanks.
inline std::vector<int> collapse(std::span<const int> path, int blank) {
  std::vector<int> out;
  int prev = -1;
  for (int id : path) {
    if (id != prev && id != blank) out.push_back(id);
    prev = id;
  }
  return out;
}

// Exhaustive sum over all C^T frame paths whose collapse equals `labels`.
// Guarded to C^T <= 10^6.
template <class S>
double ctc_brute_force(const Mat<S>& log_probs, std::span<const int> labels, int blank) {
  const Index t_len = log_probs.rows();
  const Index c = log_probs.cols();
  check_labels(labels, c, blank);
  double total_paths = std::pow(static_cast<double>(c), static_cast<double>(t_len));
  if (total_paths > 1e6) throw NumericError("ctc_brute_force: C^T exceeds the 1e6 guard");
  std::vector<int> path(static_cast<size_t>(t_len), 0);
  double total = 0.0;
  for (;;) {
    double p = 1.0;
    for (Index t = 0; t < t_len; ++t) p *= std::exp(static_cast<double>(log_probs(t, path[static_cast<size_t>(t)])));
    std::vector<int> collapsed = collapse(path, blank);
    if (collapsed.size() == labels.size() && std::equal(collapsed.begin(), collapsed.end(), labels.begin()))
      total += p;
    Index t = t_len - 1;
    for (; t >= 0; --t) {
      if (++path[static_cast<size_t>(t)] < c) break;
      path[static_cast<size_t>(t)] = 0;
    }
    if (t < 0) break;
  }
  return total;
}

// Full distribution over collapsed label sequences, for small-instance
// beam-search oracles.
template <class S>
std::map<std::vector<int>, double> ctc_label_distribution(const Mat<S>& log_probs, int blank) {
  const Index t_len = log_probs.rows();
  const Index c = log_probs.cols();
  double total_paths = std::pow(static_cast<double>(c), static_cast<double>(t_len));
  if (total_paths > 1e6) throw NumericError("ctc_label_distribution: C^T exceeds the 1e6 guard");
  std::map<std::vector<int>, double> dist;
  std::vector<int> path(static_cast<size_t>(t_len), 0);
  for (;;) {
    double p = 1.0;
    for (Index t = 0; t < t_len; ++t) p *= std::exp(static_cast<double>(log_probs(t, path[static_cast<size_t>(t)])));
    dist[collapse(path, blank)] += p;
    Index t = t_len - 1;
    for (; t >= 0; --t) {
      if (++path[static_cast<size_t>(t)] < c) break;
      path[static_cast<size_t>(t)] = 0;
    }
    if (t < 0) break;
  }
  return dist;
}

// CTC prefix beam search. Every candidate prefix carries its exact
// (blank-ending, label-ending) log masses, recomputed by the forward DP over
// the frames seen so far, so pruning never ranks by stale pruned-parent
// estimates. The beam keeps the top `beam_width` prefixes per frame by total
// mass (ties toward the lexicographically smaller prefix) and always retains
// the width-1 chain, which makes wider beams never worse than narrower ones
// down to width 1. Returns the most probable prefix of the final beam.
// Exact scoring costs O(T * |prefix|) per candidate per frame; fine at the
// frame counts this pipeline sees.
template <class S>
std::vector<int> beam_search(const Mat<S>& log_probs, int blank, int beam_width) {
  if (beam_width < 1) throw UsageError(cat("beam width must be >= 1, got ", beam_width));
  const Index t_len = log_probs.rows();
  const Index c = log_probs.cols();
  if (blank < 0 || blank >= c) throw NumericError(cat("blank id ", blank, " out of range"));
  if (t_len == 0) return {};

  std::vector<std::vector<int>> beam{{}};
  std::vector<int> track1;  // the width-1 chain, always kept in the beam
  for (Index t = 0; t < t_len; ++t) {
    // candidates: each beam prefix stays, or grows by one non-blank label
    std::map<std::vector<int>, PrefixMass> candidates;
    auto expand = [&](const std::vector<int>& prefix) {
      candidates.try_emplace(prefix);
      for (Index k = 0; k < c; ++k) {
        if (k == static_cast<Index>(blank)) continue;
        std::vector<int> grown = prefix;
        grown.push_back(static_cast<int>(k));
        candidates.try_emplace(std::move(grown));
      }
    };
    for (const auto& prefix : beam) expand(prefix);
    for (auto& [prefix, mass] : candidates)
      mass = ctc_prefix_masses(log_probs, t + 1, std::span<const int>(prefix), blank);

    // advance the width-1 chain among its own stay/grow moves
    {
      std::vector<int> next_track = track1;
      double best = candidates.at(track1).total();
      for (Index k = 0; k < c; ++k) {
        if (k == static_cast<Index>(blank)) continue;
        std::vector<int> grown = track1;
        grown.push_back(static_cast<int>(k));
        double total = candidates.at(grown).total();
        if (total > best) {
          best = total;
          next_track = std::move(grown);
        }
      }
      track1 = std::move(next_track);
    }

    // map order is lexicographic, so stable_sort keeps the smaller prefix
    // on ties
    std::vector<std::pair<std::vector<int>, PrefixMass>> scored(candidates.begin(), candidates.end());
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.second.total() > b.second.total(); });
    beam.clear();
    bool has_track = false;
    for (const auto& [prefix, mass] : scored) {
      if (static_cast<int>(beam.size()) == beam_width || mass.total() == kLogZero) break;
      beam.push_back(prefix);
      has_track |= (prefix == track1);
    }
    if (beam.empty()) beam.push_back({});
    if (!has_track) beam.back() = track1;
  }

  // the last iteration scored every surviving prefix on the full T frames
  std::vector<int> best;
  double best_total = kLogZero;
  bool first = true;
  for (const auto& prefix : beam) {
    double total = ctc_log_prob(log_probs, std::span<const int>(prefix), blank);
    if (first || total > best_total || (total == best_total && prefix < best)) {
      best = prefix;
      best_total = total;
      first = false;
    }
  }
  return best;
}

}  // namespace apl
