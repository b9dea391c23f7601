#pragma once

// Micro/macro F1 over label sets, label-count slices and strategy sweeps.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "chargepred/decision.hpp"
#include "chargepred/param_io.hpp"

namespace chargepred {

using LabelList = std::vector<int>;

struct LabelScore {
  int label = 0;
  long tp = 0;
  long fp = 0;
  long fn = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  long support = 0;  // gold occurrences
};

enum class Slice { all, multi_label_only, by_count };
std::string_view to_string(Slice s);

struct EvalReport {
  double micro_f1 = 0;
  double macro_f1 = 0;            // mean over all L labels
  double macro_f1_supported = 0;  // mean over labels with support > 0
  long tp = 0;
  long fp = 0;
  long fn = 0;
  std::size_t num_samples = 0;
  std::vector<LabelScore> per_label;
  Slice slice = Slice::all;
  int count = 0;  // label count of a by_count slice (K means K or more)
};

// Per-label F1 is 0 when precision + recall = 0.
EvalReport f1_scores(const std::vector<LabelList>& predictions, const std::vector<LabelList>& golds,
                     std::size_t num_labels);

// Indices of samples with at least two gold labels.
std::vector<std::size_t> multi_label_slice(const std::vector<LabelList>& golds);

template <typename T>
std::vector<T> select(const std::vector<T>& items, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(items.at(i));
  return out;
}

EvalReport evaluate_slice(const std::vector<LabelList>& predictions, const std::vector<LabelList>& golds,
                          std::size_t num_labels, Slice slice);

// One report per count class present in the golds (classes 1..K, K capped).
std::vector<EvalReport> evaluate_by_count(const std::vector<LabelList>& predictions,
                                          const std::vector<LabelList>& golds, std::size_t num_labels,
                                          int num_classes = 4);

struct StrategyGrid {
  std::vector<double> thresholds{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<int> ks{1, 2, 3};
};

struct ComparisonRow {
  Strategy strategy;
  EvalReport all;
  EvalReport multi;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
  std::optional<std::size_t> best_threshold_all;    // max micro-F1 on the full set
  std::optional<std::size_t> best_threshold_multi;  // max micro-F1 on the multi-label slice
};

// Rows: nln_topn (when a model is given), then every grid threshold, then
// every grid k that fits in L.
ComparisonTable compare_strategies(const std::vector<Vector<double>>& probs, const std::vector<LabelList>& golds,
                                   const NlnModel* nln, const StrategyGrid& grid);

void write_report_csv(std::ostream& out, const std::vector<EvalReport>& reports);
void write_report_text(std::ostream& out, const std::vector<EvalReport>& reports,
                       const std::vector<std::string>& label_names);
Json report_to_json(const EvalReport& report, const std::vector<std::string>& label_names);

void write_comparison_csv(std::ostream& out, const ComparisonTable& table);
void write_comparison_text(std::ostream& out, const ComparisonTable& table);

}  // namespace chargepred
