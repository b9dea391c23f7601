#include "chargepred/nln.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

namespace chargepred {

void NlnConfig::validate() const {
  if (hidden < 1) throw PreconditionError("NLN hidden width must be >= 1");
  if (count_classes < 1) throw PreconditionError("NLN needs at least one count class");
  if (epochs < 0) throw PreconditionError("epochs must be >= 0");
  if (batch_size < 1) throw PreconditionError("batch_size must be >= 1");
}

void NlnModel::validate() const {
  if (!net.gate) throw SchemaError("NLN model has no gate");
  if (net.layers.size() != 2) throw SchemaError("NLN head must have exactly two dense layers");
  if (net.layers[0].activation != Activation::relu || net.layers[1].activation != Activation::softmax)
    throw SchemaError("NLN head must be relu followed by softmax");
  net.validate();
  if (!label_names.empty() && static_cast<Index>(label_names.size()) != num_labels())
    throw SchemaError("NLN label names do not match the gate width");
}

NlnDataset make_nln_dataset(const std::vector<Vector<double>>& probs, const std::vector<std::vector<int>>& golds,
                            int num_classes) {
  if (probs.size() != golds.size()) throw DimensionError("probability and gold lists differ in length");
  NlnDataset d;
  d.inputs = probs;
  d.count_classes.reserve(golds.size());
  for (const auto& g : golds) d.count_classes.push_back(count_class(static_cast<int>(g.size()), num_classes));
  return d;
}

NlnModel make_nln(Index num_labels, const NlnConfig& config, std::vector<std::string> label_names) {
  config.validate();
  if (num_labels < 1) throw PreconditionError("NLN needs at least one label");
  NlnModel m;
  m.rng_seed = config.seed;
  m.label_names = std::move(label_names);
  m.net.gate = MaskedDiagonalLayer<double>(num_labels, config.init_gate_bias);
  m.net.layers.emplace_back(num_labels, config.hidden, Activation::relu);
  m.net.layers.emplace_back(config.hidden, config.count_classes, Activation::softmax);
  std::mt19937_64 rng(config.seed);
  for (auto& l : m.net.layers) l.init_uniform(rng);
  m.validate();
  return m;
}

Vector<double> nln_forward(const NlnModel& model, const Vector<double>& x) { return stack_forward(model.net, x); }

int argmax_count(const Vector<double>& distribution) {
  if (distribution.size() == 0) throw PreconditionError("empty count distribution");
  Index best = 0;
  for (Index i = 1; i < distribution.size(); ++i)
    if (distribution(i) > distribution(best)) best = i;
  return static_cast<int>(best) + 1;
}

int predicted_count(const NlnModel& model, const Vector<double>& x) { return argmax_count(nln_forward(model, x)); }

Vector<double> thresholds(const NlnModel& model) { return -model.gate().bias; }

TrainLog train_nln(NlnModel& model, const NlnDataset& data, const NlnConfig& config,
                   const std::function<void(int, const NlnModel&)>& on_epoch) {
  config.validate();
  model.validate();
  if (data.size() == 0) throw PreconditionError("NLN training set is empty");
  const Index k = model.count_classes();
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.count_classes[i] < 0 || data.count_classes[i] >= k)
      throw DimensionError("count class " + std::to_string(data.count_classes[i]) + " outside the model's range");
  }
  std::mt19937_64 rng(config.seed ^ 0x5851f42d4c957f2dULL);
  Sgd<double> opt(config.lr, config.momentum);
  auto params = parameter_blocks(model.net);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainLog log;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      auto grads = StackGradients<double>::zeros_like(model.net);
      for (std::size_t i = start; i < end; ++i) {
        const auto& x = data.inputs[order[i]];
        const auto trace = forward_trace(model.net, x);
        Vector<double> y = Vector<double>::Zero(k);
        y(data.count_classes[order[i]]) = 1.0;
        grads.loss += cross_entropy(trace.output(), y);
        backward_from_logits(model.net, trace, loss_logit_gradient(Loss::cross_entropy, trace.output(), y), grads);
      }
      if (!std::isfinite(grads.loss))
        throw NumericError("NLN loss became non-finite at epoch " + std::to_string(epoch) + ", batch starting " +
                           std::to_string(start));
      total += grads.loss;
      grads.scale(1.0 / static_cast<double>(end - start));
      opt.step(params, gradient_blocks(grads));
    }
    log.epoch_loss.push_back(total / static_cast<double>(data.size()));
    if (on_epoch) on_epoch(epoch, model);
  }
  return log;
}

double count_accuracy(const NlnModel& model, const NlnDataset& data) {
  if (data.size() == 0) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (predicted_count(model, data.inputs[i]) - 1 == data.count_classes[i]) ++hit;
  return static_cast<double>(hit) / static_cast<double>(data.size());
}

double mean_cross_entropy(const NlnModel& model, const NlnDataset& data) {
  if (data.size() == 0) return 0.0;
  double total = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Vector<double> p = nln_forward(model, data.inputs[i]);
    total -= std::log(std::max(p(data.count_classes[i]), kProbClip));
  }
  return total / static_cast<double>(data.size());
}

GradCheckReport nln_grad_check(NlnModel& model, const Vector<double>& x, int count_class) {
  Vector<double> y = Vector<double>::Zero(model.count_classes());
  y(count_class) = 1.0;
  return grad_check(model.net, x, y, Loss::cross_entropy);
}

Json nln_to_json(const NlnModel& model) {
  return Json{{"format_version", kFormatVersion},
              {"kind", "nln"},
              {"rng_seed", model.rng_seed},
              {"num_labels", model.num_labels()},
              {"count_classes", model.count_classes()},
              {"label_names", model.label_names},
              {"gate_bias", vector_to_json(model.gate().bias)},
              {"layers", layers_to_json(model.net.layers)}};
}

NlnModel nln_from_json(const Json& doc) {
  check_document(doc, "nln");
  try {
    NlnModel m;
    m.rng_seed = doc.at("rng_seed").get<std::uint64_t>();
    m.label_names = doc.value("label_names", std::vector<std::string>{});
    m.net.gate = MaskedDiagonalLayer<double>();
    m.net.gate->bias = vector_from_json<double>(doc.at("gate_bias"), "gate_bias");
    m.net.layers = layers_from_json<double>(doc.at("layers"));
    m.validate();
    if (doc.at("num_labels").get<Index>() != m.num_labels() || doc.at("count_classes").get<Index>() != m.count_classes())
      throw SchemaError("NLN declared dimensions do not match its parameters");
    return m;
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("malformed NLN document: ") + e.what());
  } catch (const DimensionError& e) {
    throw SchemaError(std::string("inconsistent NLN document: ") + e.what());
  }
}

void write_threshold_csv(std::ostream& out, const NlnModel& model) {
  const Vector<double> t = thresholds(model);
  out << "label_index,label_name,threshold\n";
  for (Index j = 0; j < t.size(); ++j) {
    const std::string name =
        j < static_cast<Index>(model.label_names.size()) ? model.label_names[static_cast<std::size_t>(j)] : "";
    Json v = t(j);
    out << j << ',' << name << ',' << v.dump() << '\n';
  }
}

}  // namespace chargepred
