#include "chargepred/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace chargepred {

namespace {

LayerStack<double> make_head(Index in, Index hidden, Index labels, std::mt19937_64& rng) {
  LayerStack<double> head;
  if (hidden > 0) {
    head.layers.emplace_back(in, hidden, Activation::relu);
    head.layers.emplace_back(hidden, labels, Activation::sigmoid);
  } else {
    head.layers.emplace_back(in, labels, Activation::sigmoid);
  }
  for (auto& l : head.layers) l.init_uniform(rng);
  return head;
}

Vector<double> concat(const Vector<double>& a, const Vector<double>& b) {
  Vector<double> out(a.size() + b.size());
  out << a, b;
  return out;
}

std::size_t count_non_pad(const std::vector<int>& tokens) {
  return static_cast<std::size_t>(std::count_if(tokens.begin(), tokens.end(), [](int t) { return t != kPadId; }));
}

}  // namespace

void ClassifierConfig::validate() const {
  if (embedding_dim < 1) throw PreconditionError("embedding_dim must be >= 1");
  if (hidden < 0) throw PreconditionError("hidden must be >= 0");
  if (!(w1 >= 0 && w2 >= 0 && w1 + w2 > 0)) throw PreconditionError("loss weights need w1, w2 >= 0 and w1 + w2 > 0");
  if (epochs < 0) throw PreconditionError("epochs must be >= 0");
  if (batch_size < 1) throw PreconditionError("batch_size must be >= 1");
}

ClassifierModel make_classifier(const Vocabulary& vocab, const std::vector<std::string>& label_names,
                                const KnowledgeBase& kb, const ClassifierConfig& config) {
  config.validate();
  if (kb.provisions.size() != label_names.size())
    throw DimensionError("knowledge base has " + std::to_string(kb.provisions.size()) + " provisions for " +
                         std::to_string(label_names.size()) + " labels");
  ClassifierModel m;
  m.vocab = vocab;
  m.label_names = label_names;
  m.knowledge = kb.provisions;
  m.w1 = config.w1;
  m.w2 = config.w2;
  m.rng_seed = config.seed;

  std::mt19937_64 rng(config.seed);
  const Index d = config.embedding_dim;
  const Index labels = static_cast<Index>(label_names.size());
  m.embedding.resize(static_cast<Index>(vocab.size()), d);
  // Rows have unit expected squared norm.
  const double limit = std::sqrt(3.0 / static_cast<double>(d));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Index i = 0; i < m.embedding.size(); ++i) m.embedding.data()[i] = dist(rng);
  m.embedding.row(kPadId).setZero();
  m.text_head = make_head(d, config.hidden, labels, rng);
  m.knowledge_head = make_head(2 * d, config.hidden, labels, rng);
  return m;
}

Vector<double> encode_text(const ClassifierModel& model, const std::vector<int>& tokens) {
  Vector<double> sum = Vector<double>::Zero(model.dim());
  std::size_t n = 0;
  for (int t : tokens) {
    if (t == kPadId) continue;
    if (t < 0 || t >= model.embedding.rows())
      throw DimensionError("token id " + std::to_string(t) + " outside embedding table");
    sum += model.embedding.row(t).transpose();
    ++n;
  }
  if (n == 0) throw PreconditionError("cannot encode a token list with no non-PAD tokens");
  return sum / static_cast<double>(n);
}

Matrix<double> encode_knowledge_matrix(const ClassifierModel& model) {
  Matrix<double> kb(model.num_labels(), model.dim());
  for (Index l = 0; l < model.num_labels(); ++l)
    kb.row(l) = encode_text(model, model.knowledge[static_cast<std::size_t>(l)]).transpose();
  return kb;
}

Attention attend_knowledge(const Vector<double>& fact_vec, const Matrix<double>& kb) {
  if (fact_vec.size() != kb.cols())
    throw DimensionError("fact vector of size " + std::to_string(fact_vec.size()) + " against provisions of size " +
                         std::to_string(kb.cols()));
  const Vector<double> scores = kb * fact_vec / std::sqrt(static_cast<double>(kb.cols()));
  Attention a;
  a.weights = softmax(scores);
  a.context = kb.transpose() * a.weights;
  return a;
}

HeadOutputs classifier_forward(const ClassifierModel& model, const Matrix<double>& kb, const std::vector<int>& tokens) {
  const Vector<double> fact = encode_text(model, tokens);
  const Attention att = attend_knowledge(fact, kb);
  HeadOutputs out;
  out.text_probs = stack_forward(model.text_head, fact);
  out.knowledge_probs = stack_forward(model.knowledge_head, concat(fact, att.context));
  return out;
}

HeadOutputs classifier_forward(const ClassifierModel& model, const std::vector<int>& tokens) {
  return classifier_forward(model, encode_knowledge_matrix(model), tokens);
}

Vector<double> label_indicator(const std::vector<int>& labels, Index num_labels) {
  Vector<double> y = Vector<double>::Zero(num_labels);
  for (int l : labels) {
    if (l < 0 || l >= num_labels) throw DimensionError("label " + std::to_string(l) + " outside [0, L)");
    y(l) = 1.0;
  }
  return y;
}

double joint_loss(const Vector<double>& text_probs, const Vector<double>& knowledge_probs,
                  const std::vector<int>& gold_labels, double w1, double w2) {
  if (text_probs.size() != knowledge_probs.size()) throw DimensionError("head outputs differ in length");
  const Vector<double> y = label_indicator(gold_labels, text_probs.size());
  return w1 * binary_cross_entropy(text_probs, y) + w2 * binary_cross_entropy(knowledge_probs, y);
}

Vector<double> predict_probs(const ClassifierModel& model, const Matrix<double>& kb, const std::vector<int>& tokens) {
  const HeadOutputs h = classifier_forward(model, kb, tokens);
  return (h.text_probs + h.knowledge_probs) / 2.0;
}

ClassifierGradients classifier_backward(const ClassifierModel& model, const std::vector<const Sample*>& batch) {
  if (batch.empty()) throw PreconditionError("empty batch");
  const Index d = model.dim();
  const Index labels = model.num_labels();
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  const Matrix<double> kb = encode_knowledge_matrix(model);

  ClassifierGradients g;
  g.embedding = Matrix<double>::Zero(model.embedding.rows(), d);
  g.text = StackGradients<double>::zeros_like(model.text_head);
  g.knowledge = StackGradients<double>::zeros_like(model.knowledge_head);
  Matrix<double> dkb = Matrix<double>::Zero(labels, d);

  for (const Sample* s : batch) {
    const Vector<double> fact = encode_text(model, s->tokens);
    const Attention att = attend_knowledge(fact, kb);
    const auto text_trace = forward_trace(model.text_head, fact);
    const auto know_trace = forward_trace(model.knowledge_head, concat(fact, att.context));
    const Vector<double>& p1 = text_trace.output();
    const Vector<double>& p2 = know_trace.output();
    const Vector<double> y = label_indicator(s->labels, labels);
    g.loss += model.w1 * binary_cross_entropy(p1, y) + model.w2 * binary_cross_entropy(p2, y);

    Vector<double> dfact = backward_from_logits(model.text_head, text_trace,
                                                Vector<double>(model.w1 * (p1 - y) / static_cast<double>(labels)), g.text);
    const Vector<double> dknow_in = backward_from_logits(
        model.knowledge_head, know_trace, Vector<double>(model.w2 * (p2 - y) / static_cast<double>(labels)), g.knowledge);
    dfact += dknow_in.head(d);
    const Vector<double> dcontext = dknow_in.tail(d);

    // context = kb^T alpha
    dkb.noalias() += att.weights * dcontext.transpose();
    const Vector<double> dalpha = kb * dcontext;
    // alpha = softmax(scores)
    const Vector<double> dscores = (att.weights.array() * (dalpha.array() - att.weights.dot(dalpha))).matrix();
    // scores = kb fact / sqrt(d)
    dkb.noalias() += scale * dscores * fact.transpose();
    dfact.noalias() += scale * kb.transpose() * dscores;

    const double inv = 1.0 / static_cast<double>(count_non_pad(s->tokens));
    for (int t : s->tokens)
      if (t != kPadId) g.embedding.row(t) += inv * dfact.transpose();
  }
  for (Index l = 0; l < labels; ++l) {
    const auto& prov = model.knowledge[static_cast<std::size_t>(l)];
    const double inv = 1.0 / static_cast<double>(count_non_pad(prov));
    for (int t : prov)
      if (t != kPadId) g.embedding.row(t) += inv * dkb.row(l);
  }

  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  g.embedding *= inv_batch;
  g.text.scale(inv_batch);
  g.knowledge.scale(inv_batch);
  g.loss *= inv_batch;
  return g;
}

std::vector<ParamBlock<double>> parameter_blocks(ClassifierModel& model) {
  std::vector<ParamBlock<double>> out{{"embedding", as_span(model.embedding)}};
  for (auto& b : parameter_blocks(model.text_head, "text.")) out.push_back(b);
  for (auto& b : parameter_blocks(model.knowledge_head, "knowledge.")) out.push_back(b);
  return out;
}

std::vector<ParamBlock<double>> gradient_blocks(ClassifierGradients& grads) {
  std::vector<ParamBlock<double>> out{{"embedding", as_span(grads.embedding)}};
  for (auto& b : gradient_blocks(grads.text, "text.")) out.push_back(b);
  for (auto& b : gradient_blocks(grads.knowledge, "knowledge.")) out.push_back(b);
  return out;
}

TrainLog train_classifier(ClassifierModel& model, const Dataset& train, const ClassifierConfig& config,
                          const std::function<void(int, double)>& on_epoch) {
  config.validate();
  train.validate();
  if (static_cast<Index>(train.num_labels()) != model.num_labels())
    throw DimensionError("dataset has " + std::to_string(train.num_labels()) + " labels, model has " +
                         std::to_string(model.num_labels()));
  model.w1 = config.w1;
  model.w2 = config.w2;
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  Sgd<double> opt(config.lr, config.momentum);
  auto params = parameter_blocks(model);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  TrainLog log;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<const Sample*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&train.samples[order[i]]);
      auto grads = classifier_backward(model, batch);
      if (!std::isfinite(grads.loss))
        throw NumericError("classifier loss became non-finite at epoch " + std::to_string(epoch) + ", batch starting " +
                           std::to_string(start));
      total += grads.loss * static_cast<double>(batch.size());
      opt.step(params, gradient_blocks(grads));
    }
    const double mean = total / static_cast<double>(train.size());
    log.epoch_loss.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
  return log;
}

Json classifier_to_json(const ClassifierModel& model) {
  Json knowledge = Json::array();
  for (const auto& p : model.knowledge) knowledge.push_back(p);
  return Json{{"format_version", kFormatVersion},
              {"kind", "classifier"},
              {"rng_seed", model.rng_seed},
              {"embedding_dim", model.dim()},
              {"w1", model.w1},
              {"w2", model.w2},
              {"label_names", model.label_names},
              {"vocabulary", model.vocab.tokens()},
              {"embedding",
               std::vector<double>(model.embedding.data(), model.embedding.data() + model.embedding.size())},
              {"text_head", layers_to_json(model.text_head.layers)},
              {"knowledge_head", layers_to_json(model.knowledge_head.layers)},
              {"knowledge", knowledge}};
}

ClassifierModel classifier_from_json(const Json& doc) {
  check_document(doc, "classifier");
  try {
    ClassifierModel m;
    m.rng_seed = doc.at("rng_seed").get<std::uint64_t>();
    m.w1 = doc.at("w1").get<double>();
    m.w2 = doc.at("w2").get<double>();
    m.label_names = doc.at("label_names").get<std::vector<std::string>>();
    m.vocab = Vocabulary::from_tokens(doc.at("vocabulary").get<std::vector<std::string>>());
    const Index d = doc.at("embedding_dim").get<Index>();
    const Vector<double> flat = vector_from_json<double>(doc.at("embedding"), "embedding");
    if (flat.size() != static_cast<Index>(m.vocab.size()) * d) throw SchemaError("embedding has the wrong size");
    m.embedding.resize(static_cast<Index>(m.vocab.size()), d);
    std::copy(flat.data(), flat.data() + flat.size(), m.embedding.data());
    m.text_head.layers = layers_from_json<double>(doc.at("text_head"));
    m.knowledge_head.layers = layers_from_json<double>(doc.at("knowledge_head"));
    m.knowledge = doc.at("knowledge").get<std::vector<std::vector<int>>>();
    const Index labels = static_cast<Index>(m.label_names.size());
    if (static_cast<Index>(m.knowledge.size()) != labels) throw SchemaError("knowledge does not match label count");
    m.text_head.validate();
    m.knowledge_head.validate();
    if (m.text_head.in_dim() != d || m.text_head.out_dim() != labels || m.knowledge_head.in_dim() != 2 * d ||
        m.knowledge_head.out_dim() != labels)
      throw SchemaError("classifier head dimensions are inconsistent");
    for (const auto& p : m.knowledge)
      for (int t : p)
        if (t < 0 || t >= m.embedding.rows()) throw SchemaError("provision token outside vocabulary");
    return m;
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("malformed classifier document: ") + e.what());
  } catch (const DimensionError& e) {
    throw SchemaError(std::string("inconsistent classifier document: ") + e.what());
  }
}

}  // namespace chargepred
