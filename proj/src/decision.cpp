#include "chargepred/decision.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "chargepred/nln.hpp"

namespace chargepred {

namespace {

std::vector<int> top(const Vector<double>& probs, int n, const char* what) {
  if (n < 1 || n > probs.size())
    throw PreconditionError(std::string(what) + " = " + std::to_string(n) + " outside [1, " +
                            std::to_string(probs.size()) + "]");
  std::vector<int> ranked = rank_labels(probs);
  ranked.resize(static_cast<std::size_t>(n));
  std::sort(ranked.begin(), ranked.end());
  return ranked;
}

}  // namespace

std::vector<int> rank_labels(const Vector<double>& probs) {
  std::vector<int> idx(static_cast<std::size_t>(probs.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return probs(a) > probs(b); });
  return idx;
}

std::vector<int> decide_nln(const Vector<double>& probs, int n) { return top(probs, n, "n"); }

std::vector<int> decide_topk(const Vector<double>& probs, int k) { return top(probs, k, "k"); }

std::vector<int> threshold_set(const Vector<double>& probs, double t) {
  std::vector<int> out;
  for (Index j = 0; j < probs.size(); ++j)
    if (probs(j) > t) out.push_back(static_cast<int>(j));
  return out;
}

std::vector<int> decide_threshold(const Vector<double>& probs, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw PreconditionError("threshold must lie in [0, 1]");
  if (probs.size() == 0) throw PreconditionError("empty probability vector");
  std::vector<int> out = threshold_set(probs, t);
  if (out.empty()) out.push_back(rank_labels(probs).front());
  return out;
}

std::string Strategy::name() const {
  switch (kind) {
    case Kind::nln_topn: return "nln";
    case Kind::threshold: return "threshold";
    case Kind::topk: return "topk";
  }
  return "nln";
}

std::string Strategy::label() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::nln_topn: os << "nln_topn"; break;
    case Kind::threshold: os << "threshold(" << threshold << ")"; break;
    case Kind::topk: os << "topk(" << k << ")"; break;
  }
  return os.str();
}

LabelDecision decide(const Strategy& strategy, const Vector<double>& probs, const NlnModel* nln) {
  LabelDecision d;
  d.strategy = strategy;
  switch (strategy.kind) {
    case Strategy::Kind::nln_topn: {
      if (!nln) throw PreconditionError("nln_topn strategy requires an NLN model");
      const int n = std::min(predicted_count(*nln, probs), static_cast<int>(probs.size()));
      d.n_used = n;
      d.predicted = decide_nln(probs, n);
      break;
    }
    case Strategy::Kind::threshold: d.predicted = decide_threshold(probs, strategy.threshold); break;
    case Strategy::Kind::topk: d.predicted = decide_topk(probs, strategy.k); break;
  }
  return d;
}

}  // namespace chargepred
