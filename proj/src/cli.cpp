#include "chargepred/cli.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

#include "chargepred/artifacts.hpp"
#include "chargepred/decision.hpp"
#include "chargepred/eval.hpp"

namespace chargepred {

namespace {

namespace fs = std::filesystem;

void require_file(const std::string& path) {
  if (path.empty() || !fs::exists(path)) throw MissingArtifactError(path.empty() ? "<unset>" : path);
}

void report_line_errors(std::ostream& err, const std::string& source, const std::vector<LineError>& errors) {
  for (const auto& e : errors) err << "warning: " << source << ":" << e.line << ": " << e.message << '\n';
}

std::string csv_comment(std::uint64_t seed, const std::string& digest) {
  return "# seed=" + std::to_string(seed) + " config_digest=" + digest + "\n";
}

void announce(std::ostream& out, const std::string& command, std::uint64_t seed, const std::string& digest) {
  out << command << ": seed=" << seed << " config_digest=" << digest << '\n';
}

// Everything except file paths, so that reruns in another directory digest
// identically.
Json classifier_config_json(const RunConfig& c) {
  return Json{{"command", "train-clf"},
              {"seed", c.seed},
              {"embedding_dim", c.classifier.embedding_dim},
              {"hidden", c.classifier.hidden},
              {"w1", c.classifier.w1},
              {"w2", c.classifier.w2},
              {"epochs", c.classifier.epochs},
              {"lr", c.classifier.lr},
              {"momentum", c.classifier.momentum},
              {"batch_size", c.classifier.batch_size},
              {"max_tokens", c.max_tokens},
              {"max_provision_tokens", c.max_provision_tokens}};
}

Json nln_config_json(const RunConfig& c) {
  return Json{{"command", "train-nln"},
              {"seed", c.seed},
              {"hidden", c.nln.hidden},
              {"count_classes", c.nln.count_classes},
              {"epochs", c.nln.epochs},
              {"lr", c.nln.lr},
              {"momentum", c.nln.momentum},
              {"batch_size", c.nln.batch_size},
              {"init_gate_bias", c.nln.init_gate_bias}};
}

// ---------------------------------------------------------------------------

int cmd_synth(RunConfig& c, std::ostream& out) {
  if (c.single_only) c.synth.count_mixture = {1.0, 0.0, 0.0, 0.0};
  c.synth.validate();
  const Json config = {{"command", "synth"},
                       {"seed", c.seed},
                       {"num_labels", c.synth.num_labels},
                       {"num_samples", c.synth.num_samples},
                       {"num_test_samples", c.synth.num_test_samples},
                       {"count_mixture", c.synth.count_mixture},
                       {"overflow_rate", c.synth.overflow_rate},
                       {"max_labels", c.synth.max_labels},
                       {"background_vocab", c.synth.background_vocab},
                       {"tokens_per_label", c.synth.tokens_per_label},
                       {"draws_per_label", c.synth.draws_per_label},
                       {"background_tokens", c.synth.background_tokens},
                       {"dropout", c.synth.dropout}};
  const std::string digest = config_digest(config);
  announce(out, "synth", c.seed, digest);

  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec || !fs::is_directory(c.out)) throw IoError("cannot create output directory " + c.out);

  const SynthCorpus corpus = synthesize(c.synth, c.seed);
  const fs::path dir(c.out);
  std::ostringstream train, test, prov, labels;
  write_cases(train, corpus.train);
  write_cases(test, corpus.test);
  write_provisions(prov, corpus.knowledge, corpus.train.label_names);
  write_label_list(labels, corpus.train.label_names);
  write_text_file((dir / "cases.jsonl").string(), train.str());
  write_text_file((dir / "cases_test.jsonl").string(), test.str());
  write_text_file((dir / "provisions.jsonl").string(), prov.str());
  write_text_file((dir / "labels.txt").string(), labels.str());

  const Json manifest = {{"format_version", kFormatVersion},
                         {"kind", "synth_manifest"},
                         {"seed", c.seed},
                         {"config_digest", digest},
                         {"config", config},
                         {"files",
                          {{"train", "cases.jsonl"},
                           {"test", "cases_test.jsonl"},
                           {"provisions", "provisions.jsonl"},
                           {"labels", "labels.txt"}}}};
  write_text_file((dir / "manifest.json").string(), manifest.dump(2) + "\n");
  out << "wrote " << corpus.train.size() << " train and " << corpus.test.size() << " test samples over "
      << c.synth.num_labels << " labels to " << c.out << '\n';
  return 0;
}

int cmd_synth_probs(RunConfig& c, std::ostream& out) {
  c.task.validate();
  const Json config = {{"command", "synth-probs"},
                       {"seed", c.seed},
                       {"num_labels", c.task.num_labels},
                       {"num_samples", c.task.num_samples},
                       {"count_mixture", c.task.count_mixture},
                       {"tau_min", c.task.tau_min},
                       {"tau_max", c.task.tau_max},
                       {"margin", c.task.margin},
                       {"positive_shape", c.task.positive_shape},
                       {"negative_shape", c.task.negative_shape}};
  const std::string digest = config_digest(config);
  announce(out, "synth-probs", c.seed, digest);
  const ThresholdTask task = synthesize_threshold_task(c.task, c.seed);

  ArtifactHeader h{kFormatVersion, "probs", c.seed, digest, {}};
  for (int j = 0; j < c.task.num_labels; ++j) h.label_names.push_back("charge_" + std::to_string(j));
  std::vector<ProbRecord> records;
  for (std::size_t i = 0; i < task.probs.size(); ++i)
    records.push_back({static_cast<long>(i), task.probs[i], task.gold[i]});
  std::ostringstream os;
  write_probs(os, h, records);
  write_text_file(c.out, os.str());
  if (!c.tau_out.empty()) {
    std::ostringstream ts;
    ts << csv_comment(c.seed, digest) << "label_index,tau\n";
    for (std::size_t j = 0; j < task.tau.size(); ++j) ts << j << ',' << Json(task.tau[j]).dump() << '\n';
    write_text_file(c.tau_out, ts.str());
  }
  out << "wrote " << records.size() << " probability vectors to " << c.out << '\n';
  return 0;
}

int cmd_train_clf(RunConfig& c, std::ostream& out, std::ostream& err) {
  require_file(c.cases);
  require_file(c.provisions);
  if (!c.labels.empty()) require_file(c.labels);
  c.classifier.seed = c.seed;
  c.classifier.validate();
  const Json config = classifier_config_json(c);
  const std::string digest = config_digest(config);
  announce(out, "train-clf", c.seed, digest);

  LabelSet labels = c.labels.empty() ? LabelSet() : read_label_list(c.labels);
  auto loaded = load_cases(c.cases, Split::train, labels);
  report_line_errors(err, c.cases, loaded.errors);
  Dataset& train = loaded.value;
  train.validate();
  labels.freeze();
  auto kb = load_provisions(c.provisions, labels);
  report_line_errors(err, c.provisions, kb.errors);
  for (std::size_t l = 0; l < kb.value.missing.size(); ++l)
    if (kb.value.missing[l]) err << "warning: no provision for '" << labels.names()[l] << "'\n";

  const Vocabulary vocab = build_vocabulary(train, c.max_tokens);
  encode_dataset(train, vocab, c.max_tokens);
  encode_knowledge(kb.value, vocab, c.max_provision_tokens);
  ClassifierModel model = make_classifier(vocab, train.label_names, kb.value, c.classifier);
  const TrainLog log = train_classifier(model, train, c.classifier, [&](int epoch, double loss) {
    out << "epoch " << epoch + 1 << " loss " << Json(loss).dump() << '\n';
  });

  Json doc = classifier_to_json(model);
  doc["config_digest"] = digest;
  doc["config"] = config;
  doc["training_log"] = log.epoch_loss;
  write_text_file(c.out, doc.dump() + "\n");
  out << "wrote classifier (" << vocab.size() << " tokens, " << train.num_labels() << " labels) to " << c.out << '\n';
  return 0;
}

int cmd_export_probs(RunConfig& c, std::ostream& out, std::ostream& err) {
  require_file(c.model);
  require_file(c.cases);
  const Json doc = read_json_file(c.model);
  const ClassifierModel model = classifier_from_json(doc);
  const Split split = split_from_string(c.split);
  const Json config = {{"command", "export-probs"},
                       {"model_digest", doc.value("config_digest", std::string{})},
                       {"seed", model.rng_seed},
                       {"split", c.split},
                       {"max_tokens", c.max_tokens}};
  const std::string digest = config_digest(config);
  announce(out, "export-probs", model.rng_seed, digest);

  LabelSet labels(model.label_names, true);
  auto loaded = load_cases(c.cases, split, labels);
  report_line_errors(err, c.cases, loaded.errors);
  Dataset& data = loaded.value;
  data.validate();
  encode_dataset(data, model.vocab, c.max_tokens);

  const Matrix<double> kb = encode_knowledge_matrix(model);
  std::vector<ProbRecord> records;
  records.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    records.push_back({static_cast<long>(i), predict_probs(model, kb, data.samples[i].tokens), data.samples[i].labels});
  std::ostringstream os;
  write_probs(os, ArtifactHeader{kFormatVersion, "probs", model.rng_seed, digest, model.label_names}, records);
  write_text_file(c.out, os.str());
  out << "wrote " << records.size() << " probability vectors to " << c.out << '\n';
  return 0;
}

int cmd_train_nln(RunConfig& c, std::ostream& out) {
  require_file(c.probs);
  c.nln.seed = c.seed;
  c.nln.validate();
  const Json config = nln_config_json(c);
  const std::string digest = config_digest(config);
  announce(out, "train-nln", c.seed, digest);

  const ProbFile probs = read_probs(c.probs);
  if (probs.records.empty()) throw DataError(c.probs + ": no probability records");
  for (const auto& r : probs.records)
    if (r.gold.empty()) throw DataError(c.probs + ": record " + std::to_string(r.id) + " has no gold labels");
  const NlnDataset data = make_nln_dataset(probs.probs(), probs.golds(), c.nln.count_classes);
  NlnModel model = make_nln(probs.num_labels(), c.nln, probs.label_names());
  const TrainLog log = train_nln(model, data, c.nln);
  for (std::size_t e = 0; e < log.epoch_loss.size(); ++e)
    out << "epoch " << e + 1 << " loss " << Json(log.epoch_loss[e]).dump() << '\n';
  out << "train count accuracy " << Json(count_accuracy(model, data)).dump() << '\n';

  Json doc = nln_to_json(model);
  doc["config_digest"] = digest;
  doc["config"] = config;
  doc["training_log"] = log.epoch_loss;
  write_text_file(c.out, doc.dump() + "\n");
  if (!c.thresholds_out.empty()) {
    std::ostringstream ts;
    ts << csv_comment(c.seed, digest);
    write_threshold_csv(ts, model);
    write_text_file(c.thresholds_out, ts.str());
  }
  out << "wrote NLN to " << c.out << '\n';
  return 0;
}

Strategy parse_strategy(const RunConfig& c) {
  if (c.strategy == "nln") return Strategy::nln();
  if (c.strategy == "threshold") return Strategy::global_threshold(c.t);
  if (c.strategy == "topk") return Strategy::top_k(c.k);
  throw PreconditionError("unknown strategy '" + c.strategy + "' (expected nln, threshold or topk)");
}

int cmd_predict(RunConfig& c, std::ostream& out) {
  require_file(c.probs);
  const Strategy strategy = parse_strategy(c);
  std::optional<NlnModel> nln;
  std::string nln_digest;
  if (strategy.kind == Strategy::Kind::nln_topn) {
    require_file(c.nln_model);
    const Json doc = read_json_file(c.nln_model);
    nln = nln_from_json(doc);
    nln_digest = doc.value("config_digest", std::string{});
  }
  const ProbFile probs = read_probs(c.probs);
  if (nln && nln->num_labels() != probs.num_labels())
    throw SchemaError("NLN expects " + std::to_string(nln->num_labels()) + " labels, probabilities have " +
                      std::to_string(probs.num_labels()));
  Json config = {{"command", "predict"}, {"strategy", strategy.label()}, {"nln_digest", nln_digest}};
  if (probs.header) config["probs_digest"] = probs.header->config_digest;
  const std::uint64_t seed = probs.header ? probs.header->seed : c.seed;
  const std::string digest = config_digest(config);
  announce(out, "predict", seed, digest);

  const auto names = probs.label_names();
  std::vector<PredictionRecord> records;
  for (const auto& r : probs.records) {
    const LabelDecision d = decide(strategy, r.probs, nln ? &*nln : nullptr);
    PredictionRecord p{r.id, strategy.name(), d.n_used, d.predicted, {}};
    for (int l : d.predicted) p.label_names.push_back(names[static_cast<std::size_t>(l)]);
    records.push_back(std::move(p));
  }
  std::ostringstream os;
  write_predictions(os, ArtifactHeader{kFormatVersion, "predictions", seed, digest, names}, records);
  write_text_file(c.out, os.str());
  out << "wrote " << records.size() << " predictions (" << strategy.label() << ") to " << c.out << '\n';
  return 0;
}

int cmd_evaluate(RunConfig& c, std::ostream& out) {
  require_file(c.predictions);
  require_file(c.gold);
  const PredictionFile preds = read_predictions(c.predictions);
  const ProbFile gold = read_probs(c.gold);
  if (preds.records.size() != gold.records.size())
    throw DataError("predictions (" + std::to_string(preds.records.size()) + ") and gold (" +
                    std::to_string(gold.records.size()) + ") differ in length");
  std::vector<LabelList> p, g;
  for (std::size_t i = 0; i < gold.records.size(); ++i) {
    if (preds.records[i].id != gold.records[i].id)
      throw DataError("record " + std::to_string(i) + ": prediction id " + std::to_string(preds.records[i].id) +
                      " does not match gold id " + std::to_string(gold.records[i].id));
    p.push_back(preds.records[i].labels);
    g.push_back(gold.records[i].gold);
  }
  const auto labels = static_cast<std::size_t>(gold.num_labels());
  Json config = {{"command", "evaluate"}, {"count_classes", c.count_classes}};
  if (preds.header) config["predictions_digest"] = preds.header->config_digest;
  if (gold.header) config["gold_digest"] = gold.header->config_digest;
  const std::uint64_t seed = preds.header ? preds.header->seed : c.seed;
  const std::string digest = config_digest(config);
  announce(out, "evaluate", seed, digest);

  std::vector<EvalReport> reports{evaluate_slice(p, g, labels, Slice::all),
                                  evaluate_slice(p, g, labels, Slice::multi_label_only)};
  for (auto& r : evaluate_by_count(p, g, labels, c.count_classes)) reports.push_back(std::move(r));

  if (c.json) {
    Json arr = Json::array();
    for (const auto& r : reports) arr.push_back(report_to_json(r, gold.label_names()));
    out << Json{{"seed", seed}, {"config_digest", digest}, {"reports", arr}}.dump(2) << '\n';
  } else {
    write_report_text(out, reports, gold.label_names());
  }
  if (!c.out.empty()) {
    std::ostringstream os;
    os << csv_comment(seed, digest);
    write_report_csv(os, reports);
    write_text_file(c.out, os.str());
  }
  return 0;
}

int cmd_compare(RunConfig& c, std::ostream& out) {
  require_file(c.probs);
  std::optional<NlnModel> nln;
  std::string nln_digest;
  if (!c.nln_model.empty()) {
    require_file(c.nln_model);
    const Json doc = read_json_file(c.nln_model);
    nln = nln_from_json(doc);
    nln_digest = doc.value("config_digest", std::string{});
  }
  const ProbFile probs = read_probs(c.probs);
  if (nln && nln->num_labels() != probs.num_labels()) throw SchemaError("NLN and probabilities disagree on L");
  Json config = {{"command", "compare"},
                 {"thresholds", c.grid_thresholds},
                 {"ks", c.grid_ks},
                 {"nln_digest", nln_digest}};
  if (probs.header) config["probs_digest"] = probs.header->config_digest;
  const std::uint64_t seed = probs.header ? probs.header->seed : c.seed;
  const std::string digest = config_digest(config);
  announce(out, "compare", seed, digest);

  const auto table = compare_strategies(probs.probs(), probs.golds(), nln ? &*nln : nullptr,
                                        StrategyGrid{c.grid_thresholds, c.grid_ks});
  write_comparison_text(out, table);
  if (!c.out.empty()) {
    std::ostringstream os;
    os << csv_comment(seed, digest);
    write_comparison_csv(os, table);
    write_text_file(c.out, os.str());
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Multi-label text classification with a learned per-sample label count", "chargepred"};
  app.require_subcommand(1);

  auto add_seed = [&](CLI::App* s) {
    s->add_option("--seed", c.seed, "random seed")->capture_default_str();
    s->set_config("--config", "", "read options from a TOML/INI file (flags win)");
  };

  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus with provisions and labels");
  add_seed(synth);
  synth->add_option("--out", c.out, "output directory")->required();
  synth->add_option("--labels", c.synth.num_labels, "number of labels")->capture_default_str();
  synth->add_option("--samples", c.synth.num_samples, "training samples")->capture_default_str();
  synth->add_option("--test-samples", c.synth.num_test_samples, "test samples")->capture_default_str();
  synth->add_flag("--single-only", c.single_only, "every sample carries one label");
  synth->add_option("--mixture", c.synth.count_mixture, "count-class mixture over {1,2,3,4+}");
  synth->add_option("--dropout", c.synth.dropout, "signature dropout rate")->capture_default_str();
  synth->add_option("--background-vocab", c.synth.background_vocab)->capture_default_str();
  synth->add_option("--tokens-per-label", c.synth.tokens_per_label)->capture_default_str();
  synth->add_option("--draws-per-label", c.synth.draws_per_label)->capture_default_str();
  synth->add_option("--background-tokens", c.synth.background_tokens)->capture_default_str();

  auto* synth_probs = app.add_subcommand("synth-probs", "generate probability vectors with known thresholds");
  add_seed(synth_probs);
  synth_probs->add_option("--out", c.out, "probabilities JSONL")->required();
  synth_probs->add_option("--labels", c.task.num_labels)->capture_default_str();
  synth_probs->add_option("--samples", c.task.num_samples)->capture_default_str();
  synth_probs->add_option("--tau-min", c.task.tau_min)->capture_default_str();
  synth_probs->add_option("--tau-max", c.task.tau_max)->capture_default_str();
  synth_probs->add_option("--margin", c.task.margin, "gap between a label's threshold and its gold values")
      ->capture_default_str();
  synth_probs->add_option("--positive-shape", c.task.positive_shape)->capture_default_str();
  synth_probs->add_option("--negative-shape", c.task.negative_shape)->capture_default_str();
  synth_probs->add_option("--tau-out", c.tau_out, "write the true thresholds as CSV");

  auto* train_clf = app.add_subcommand("train-clf", "train the two-branch classifier");
  add_seed(train_clf);
  train_clf->add_option("--cases", c.cases, "training cases JSONL")->required();
  train_clf->add_option("--provisions", c.provisions, "provisions JSONL")->required();
  train_clf->add_option("--label-list", c.labels, "label list defining index order");
  train_clf->add_option("--out", c.out, "classifier model JSON")->required();
  train_clf->add_option("--dim", c.classifier.embedding_dim)->capture_default_str();
  train_clf->add_option("--hidden", c.classifier.hidden)->capture_default_str();
  train_clf->add_option("--epochs", c.classifier.epochs)->capture_default_str();
  train_clf->add_option("--lr", c.classifier.lr)->capture_default_str();
  train_clf->add_option("--momentum", c.classifier.momentum)->capture_default_str();
  train_clf->add_option("--batch", c.classifier.batch_size)->capture_default_str();
  train_clf->add_option("--w1", c.classifier.w1)->capture_default_str();
  train_clf->add_option("--w2", c.classifier.w2)->capture_default_str();
  train_clf->add_option("--max-tokens", c.max_tokens)->capture_default_str();
  train_clf->add_option("--max-provision-tokens", c.max_provision_tokens)->capture_default_str();

  auto* export_probs = app.add_subcommand("export-probs", "write per-label probabilities for a case file");
  add_seed(export_probs);
  export_probs->add_option("--model", c.model, "classifier model JSON")->required();
  export_probs->add_option("--cases", c.cases, "cases JSONL")->required();
  export_probs->add_option("--split", c.split, "train | valid | test")->capture_default_str();
  export_probs->add_option("--max-tokens", c.max_tokens)->capture_default_str();
  export_probs->add_option("--out", c.out, "probabilities JSONL")->required();

  auto* train_nln_cmd = app.add_subcommand("train-nln", "train the number learning network");
  add_seed(train_nln_cmd);
  train_nln_cmd->add_option("--probs", c.probs, "probabilities JSONL with gold labels")->required();
  train_nln_cmd->add_option("--out", c.out, "NLN model JSON")->required();
  train_nln_cmd->add_option("--thresholds", c.thresholds_out, "write learned thresholds as CSV");
  train_nln_cmd->add_option("--hidden", c.nln.hidden)->capture_default_str();
  train_nln_cmd->add_option("--classes", c.nln.count_classes)->capture_default_str();
  train_nln_cmd->add_option("--epochs", c.nln.epochs)->capture_default_str();
  train_nln_cmd->add_option("--lr", c.nln.lr)->capture_default_str();
  train_nln_cmd->add_option("--momentum", c.nln.momentum)->capture_default_str();
  train_nln_cmd->add_option("--batch", c.nln.batch_size)->capture_default_str();
  train_nln_cmd->add_option("--init-bias", c.nln.init_gate_bias)->capture_default_str();

  auto* predict = app.add_subcommand("predict", "decide label sets from probabilities");
  add_seed(predict);
  predict->add_option("--probs", c.probs, "probabilities JSONL")->required();
  predict->add_option("--strategy", c.strategy, "nln | threshold | topk")->capture_default_str();
  predict->add_option("--t", c.t, "global threshold")->capture_default_str();
  predict->add_option("--k", c.k, "top-k size")->capture_default_str();
  predict->add_option("--nln", c.nln_model, "NLN model JSON (strategy nln)");
  predict->add_option("--out", c.out, "predictions JSONL")->required();

  auto* evaluate = app.add_subcommand("evaluate", "micro/macro F1 of predictions against gold labels");
  add_seed(evaluate);
  evaluate->add_option("--predictions", c.predictions, "predictions JSONL")->required();
  evaluate->add_option("--gold", c.gold, "probabilities JSONL carrying gold labels")->required();
  evaluate->add_option("--out", c.out, "report CSV");
  evaluate->add_option("--classes", c.count_classes, "count classes for the by-count slices")->capture_default_str();
  evaluate->add_flag("--json", c.json, "print the full report as JSON");

  auto* compare = app.add_subcommand("compare", "sweep decision strategies");
  add_seed(compare);
  compare->add_option("--probs", c.probs, "probabilities JSONL carrying gold labels")->required();
  compare->add_option("--nln", c.nln_model, "NLN model JSON");
  compare->add_option("--thresholds", c.grid_thresholds, "threshold grid")->delimiter(',');
  compare->add_option("--ks", c.grid_ks, "top-k grid")->delimiter(',');
  compare->add_option("--out", c.out, "comparison CSV");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ExitCode::usage);
  }

  try {
    if (*synth) return cmd_synth(c, out);
    if (*synth_probs) return cmd_synth_probs(c, out);
    if (*train_clf) return cmd_train_clf(c, out, err);
    if (*export_probs) return cmd_export_probs(c, out, err);
    if (*train_nln_cmd) return cmd_train_nln(c, out);
    if (*predict) return cmd_predict(c, out);
    if (*evaluate) return cmd_evaluate(c, out);
    if (*compare) return cmd_compare(c, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::io);
  }
  return static_cast<int>(ExitCode::usage);
}

}  // namespace chargepred
