#pragma once

// Turning a probability vector into a label set. Ties are always resolved
// toward the lower label index, and every returned set is sorted.

#include <optional>
#include <string>
#include <vector>

#include "chargepred/numerics.hpp"

namespace chargepred {

struct NlnModel;

// Label indices ordered by descending probability, then ascending index.
std::vector<int> rank_labels(const Vector<double>& probs);

// The n most probable labels; 1 <= n <= L.
std::vector<int> decide_nln(const Vector<double>& probs, int n);

// The k most probable labels; 1 <= k <= L.
std::vector<int> decide_topk(const Vector<double>& probs, int k);

// {j : probs_j > t}, or the argmax singleton when that set is empty.
std::vector<int> decide_threshold(const Vector<double>& probs, double t);

// {j : probs_j > t} without the empty-set fallback.
std::vector<int> threshold_set(const Vector<double>& probs, double t);

struct Strategy {
  enum class Kind { nln_topn, threshold, topk };
  Kind kind = Kind::nln_topn;
  double threshold = 0.5;
  int k = 1;

  static Strategy nln() { return {}; }
  static Strategy global_threshold(double t) { return {Kind::threshold, t, 1}; }
  static Strategy top_k(int k) { return {Kind::topk, 0.5, k}; }

  std::string name() const;   // "nln" | "threshold" | "topk"
  std::string label() const;  // e.g. "threshold(0.5)"
};

struct LabelDecision {
  Strategy strategy;
  std::vector<int> predicted;
  std::optional<int> n_used;  // set for nln_topn
};

// For nln_topn the predicted count is clamped to [1, L].
LabelDecision decide(const Strategy& strategy, const Vector<double>& probs, const NlnModel* nln = nullptr);

}  // namespace chargepred
