#include "chargepred/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <ostream>

#include "chargepred/data.hpp"
#include "chargepred/nln.hpp"

namespace chargepred {

namespace {

double f1_of(long tp, long fp, long fn) {
  const double p = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  const double r = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string_view to_string(Slice s) {
  switch (s) {
    case Slice::all: return "all";
    case Slice::multi_label_only: return "multi_label_only";
    case Slice::by_count: return "by_count";
  }
  return "all";
}

EvalReport f1_scores(const std::vector<LabelList>& predictions, const std::vector<LabelList>& golds,
                     std::size_t num_labels) {
  if (predictions.size() != golds.size())
    throw DimensionError("got " + std::to_string(predictions.size()) + " predictions for " +
                         std::to_string(golds.size()) + " gold label sets");
  EvalReport r;
  r.num_samples = golds.size();
  r.per_label.resize(num_labels);
  for (std::size_t l = 0; l < num_labels; ++l) r.per_label[l].label = static_cast<int>(l);

  std::vector<char> pred_mark(num_labels), gold_mark(num_labels);
  auto mark = [&](const LabelList& set, std::vector<char>& m) {
    for (int l : set) {
      if (l < 0 || static_cast<std::size_t>(l) >= num_labels)
        throw DimensionError("label index " + std::to_string(l) + " outside [0, " + std::to_string(num_labels) + ")");
      m[static_cast<std::size_t>(l)] = 1;
    }
  };
  for (std::size_t i = 0; i < golds.size(); ++i) {
    std::fill(pred_mark.begin(), pred_mark.end(), 0);
    std::fill(gold_mark.begin(), gold_mark.end(), 0);
    mark(predictions[i], pred_mark);
    mark(golds[i], gold_mark);
    for (std::size_t l = 0; l < num_labels; ++l) {
      auto& s = r.per_label[l];
      if (pred_mark[l] && gold_mark[l]) ++s.tp;
      else if (pred_mark[l]) ++s.fp;
      else if (gold_mark[l]) ++s.fn;
    }
  }

  double macro = 0, macro_supported = 0;
  std::size_t supported = 0;
  for (auto& s : r.per_label) {
    s.support = s.tp + s.fn;
    s.precision = s.tp + s.fp ? static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp) : 0.0;
    s.recall = s.tp + s.fn ? static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fn) : 0.0;
    s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    r.tp += s.tp;
    r.fp += s.fp;
    r.fn += s.fn;
    macro += s.f1;
    if (s.support > 0) {
      macro_supported += s.f1;
      ++supported;
    }
  }
  r.micro_f1 = f1_of(r.tp, r.fp, r.fn);
  r.macro_f1 = num_labels ? macro / static_cast<double>(num_labels) : 0.0;
  r.macro_f1_supported = supported ? macro_supported / static_cast<double>(supported) : 0.0;
  return r;
}

std::vector<std::size_t> multi_label_slice(const std::vector<LabelList>& golds) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < golds.size(); ++i)
    if (golds[i].size() >= 2) idx.push_back(i);
  return idx;
}

EvalReport evaluate_slice(const std::vector<LabelList>& predictions, const std::vector<LabelList>& golds,
                          std::size_t num_labels, Slice slice) {
  if (slice == Slice::multi_label_only) {
    const auto idx = multi_label_slice(golds);
    EvalReport r = f1_scores(select(predictions, idx), select(golds, idx), num_labels);
    r.slice = slice;
    return r;
  }
  EvalReport r = f1_scores(predictions, golds, num_labels);
  r.slice = Slice::all;
  return r;
}

std::vector<EvalReport> evaluate_by_count(const std::vector<LabelList>& predictions,
                                          const std::vector<LabelList>& golds, std::size_t num_labels,
                                          int num_classes) {
  if (predictions.size() != golds.size()) throw DimensionError("prediction and gold lists differ in length");
  std::vector<std::vector<std::size_t>> buckets(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < golds.size(); ++i) {
    if (golds[i].empty()) continue;
    buckets[static_cast<std::size_t>(count_class(static_cast<int>(golds[i].size()), num_classes))].push_back(i);
  }
  std::vector<EvalReport> out;
  for (int c = 0; c < num_classes; ++c) {
    const auto& idx = buckets[static_cast<std::size_t>(c)];
    if (idx.empty()) continue;
    EvalReport r = f1_scores(select(predictions, idx), select(golds, idx), num_labels);
    r.slice = Slice::by_count;
    r.count = c + 1;
    out.push_back(std::move(r));
  }
  return out;
}

ComparisonTable compare_strategies(const std::vector<Vector<double>>& probs, const std::vector<LabelList>& golds,
                                   const NlnModel* nln, const StrategyGrid& grid) {
  if (probs.size() != golds.size()) throw DimensionError("probability and gold lists differ in length");
  if (probs.empty()) throw PreconditionError("nothing to compare");
  const auto labels = static_cast<std::size_t>(probs.front().size());
  const auto multi = multi_label_slice(golds);
  const auto multi_golds = select(golds, multi);

  std::vector<Strategy> strategies;
  if (nln) strategies.push_back(Strategy::nln());
  for (double t : grid.thresholds) strategies.push_back(Strategy::global_threshold(t));
  for (int k : grid.ks)
    if (k >= 1 && static_cast<std::size_t>(k) <= labels) strategies.push_back(Strategy::top_k(k));

  ComparisonTable table;
  for (const auto& s : strategies) {
    std::vector<LabelList> preds;
    preds.reserve(probs.size());
    for (const auto& p : probs) preds.push_back(decide(s, p, nln).predicted);
    ComparisonRow row{s, f1_scores(preds, golds, labels), f1_scores(select(preds, multi), multi_golds, labels)};
    row.all.slice = Slice::all;
    row.multi.slice = Slice::multi_label_only;
    table.rows.push_back(std::move(row));
  }
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (table.rows[i].strategy.kind != Strategy::Kind::threshold) continue;
    if (!table.best_threshold_all || table.rows[i].all.micro_f1 > table.rows[*table.best_threshold_all].all.micro_f1)
      table.best_threshold_all = i;
    if (!table.best_threshold_multi ||
        table.rows[i].multi.micro_f1 > table.rows[*table.best_threshold_multi].multi.micro_f1)
      table.best_threshold_multi = i;
  }
  return table;
}

void write_report_csv(std::ostream& out, const std::vector<EvalReport>& reports) {
  out << "slice,count,samples,micro_f1,macro_f1,macro_f1_supported,tp,fp,fn\n";
  for (const auto& r : reports) {
    out << to_string(r.slice) << ',' << (r.slice == Slice::by_count ? std::to_string(r.count) : "") << ','
        << r.num_samples << ',' << fmt(r.micro_f1) << ',' << fmt(r.macro_f1) << ',' << fmt(r.macro_f1_supported)
        << ',' << r.tp << ',' << r.fp << ',' << r.fn << '\n';
  }
}

void write_report_text(std::ostream& out, const std::vector<EvalReport>& reports,
                       const std::vector<std::string>& label_names) {
  out << std::left << std::setw(18) << "slice" << std::setw(7) << "count" << std::right << std::setw(9) << "samples"
      << std::setw(11) << "micro_f1" << std::setw(11) << "macro_f1" << std::setw(13) << "macro_f1_sup" << '\n';
  for (const auto& r : reports) {
    out << std::left << std::setw(18) << to_string(r.slice) << std::setw(7)
        << (r.slice == Slice::by_count ? std::to_string(r.count) : "-") << std::right << std::setw(9) << r.num_samples
        << std::setw(11) << fmt(r.micro_f1) << std::setw(11) << fmt(r.macro_f1) << std::setw(13)
        << fmt(r.macro_f1_supported) << '\n';
  }
  if (reports.empty()) return;
  out << '\n'
      << std::left << std::setw(24) << "label" << std::right << std::setw(11) << "precision" << std::setw(11)
      << "recall" << std::setw(11) << "f1" << std::setw(9) << "support" << '\n';
  for (const auto& s : reports.front().per_label) {
    const std::string name = static_cast<std::size_t>(s.label) < label_names.size()
                                 ? label_names[static_cast<std::size_t>(s.label)]
                                 : std::to_string(s.label);
    out << std::left << std::setw(24) << name << std::right << std::setw(11) << fmt(s.precision) << std::setw(11)
        << fmt(s.recall) << std::setw(11) << fmt(s.f1) << std::setw(9) << s.support << '\n';
  }
}

Json report_to_json(const EvalReport& r, const std::vector<std::string>& label_names) {
  Json per = Json::array();
  for (const auto& s : r.per_label) {
    Json e = {{"label", s.label},
              {"precision", s.precision},
              {"recall", s.recall},
              {"f1", s.f1},
              {"support", s.support},
              {"tp", s.tp},
              {"fp", s.fp},
              {"fn", s.fn}};
    if (static_cast<std::size_t>(s.label) < label_names.size())
      e["label_name"] = label_names[static_cast<std::size_t>(s.label)];
    per.push_back(std::move(e));
  }
  Json j = {{"slice", std::string(to_string(r.slice))},
            {"samples", r.num_samples},
            {"micro_f1", r.micro_f1},
            {"macro_f1", r.macro_f1},
            {"macro_f1_supported", r.macro_f1_supported},
            {"tp", r.tp},
            {"fp", r.fp},
            {"fn", r.fn},
            {"per_label", per}};
  if (r.slice == Slice::by_count) j["count"] = r.count;
  return j;
}

void write_comparison_csv(std::ostream& out, const ComparisonTable& table) {
  out << "strategy,param,micro_f1_all,macro_f1_all,micro_f1_multi,macro_f1_multi,best_threshold_all,"
         "best_threshold_multi\n";
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    std::string param;
    if (row.strategy.kind == Strategy::Kind::threshold) param = fmt(row.strategy.threshold);
    if (row.strategy.kind == Strategy::Kind::topk) param = std::to_string(row.strategy.k);
    out << row.strategy.name() << ',' << param << ',' << fmt(row.all.micro_f1) << ',' << fmt(row.all.macro_f1) << ','
        << fmt(row.multi.micro_f1) << ',' << fmt(row.multi.macro_f1) << ','
        << (table.best_threshold_all == i ? 1 : 0) << ',' << (table.best_threshold_multi == i ? 1 : 0) << '\n';
  }
}

void write_comparison_text(std::ostream& out, const ComparisonTable& table) {
  out << std::left << std::setw(18) << "strategy" << std::right << std::setw(11) << "micro_all" << std::setw(11)
      << "macro_all" << std::setw(12) << "micro_multi" << std::setw(12) << "macro_multi" << "  best\n";
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    std::string best;
    if (table.best_threshold_all == i) best += " all";
    if (table.best_threshold_multi == i) best += " multi";
    out << std::left << std::setw(18) << row.strategy.label() << std::right << std::setw(11) << fmt(row.all.micro_f1)
        << std::setw(11) << fmt(row.all.macro_f1) << std::setw(12) << fmt(row.multi.micro_f1) << std::setw(12)
        << fmt(row.multi.macro_f1) << ' ' << best << '\n';
  }
}

}  // namespace chargepred
