#pragma once

// Phase-1 predictor. A shared embedding table feeds two sigmoid heads:
//   text head      : mean-pooled fact embedding            -> L probabilities
//   knowledge head : [fact ; attention over provisions]    -> L probabilities
// trained jointly on Loss = w1 * BCE(text) + w2 * BCE(knowledge).

#include <cstdint>
#include <functional>
#include <vector>

#include "chargepred/data.hpp"
#include "chargepred/numerics.hpp"
#include "chargepred/param_io.hpp"

namespace chargepred {

struct ClassifierConfig {
  int embedding_dim = 64;
  int hidden = 0;  // 0: each head is a single sigmoid layer
  double w1 = 0.5;
  double w2 = 0.5;
  int epochs = 30;
  double lr = 1.0;
  double momentum = 0.9;
  int batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ClassifierModel {
  Matrix<double> embedding;  // V x d
  LayerStack<double> text_head;
  LayerStack<double> knowledge_head;
  double w1 = 0.5;
  double w2 = 0.5;
  std::vector<std::vector<int>> knowledge;  // provision token ids per label
  Vocabulary vocab;
  std::vector<std::string> label_names;
  std::uint64_t rng_seed = 0;

  Index dim() const { return embedding.cols(); }
  Index num_labels() const { return static_cast<Index>(knowledge.size()); }
};

ClassifierModel make_classifier(const Vocabulary& vocab, const std::vector<std::string>& label_names,
                                const KnowledgeBase& kb, const ClassifierConfig& config);

// Mean of the embedding rows of the non-PAD tokens.
Vector<double> encode_text(const ClassifierModel& model, const std::vector<int>& tokens);

// Rows are encode_text of each provision.
Matrix<double> encode_knowledge_matrix(const ClassifierModel& model);

struct Attention {
  Vector<double> weights;  // softmax over provisions
  Vector<double> context;  // sum_l weights_l * kb_l
};

// Scaled dot-product attention: s_l = <fact, kb_l> / sqrt(d).
Attention attend_knowledge(const Vector<double>& fact_vec, const Matrix<double>& kb);

struct HeadOutputs {
  Vector<double> text_probs;
  Vector<double> knowledge_probs;
};

HeadOutputs classifier_forward(const ClassifierModel& model, const Matrix<double>& kb, const std::vector<int>& tokens);
HeadOutputs classifier_forward(const ClassifierModel& model, const std::vector<int>& tokens);

// BCE terms are averaged over labels.
double joint_loss(const Vector<double>& text_probs, const Vector<double>& knowledge_probs,
                  const std::vector<int>& gold_labels, double w1, double w2);

Vector<double> label_indicator(const std::vector<int>& labels, Index num_labels);

// Element-wise mean of the two heads.
Vector<double> predict_probs(const ClassifierModel& model, const Matrix<double>& kb, const std::vector<int>& tokens);

struct ClassifierGradients {
  Matrix<double> embedding;
  StackGradients<double> text;
  StackGradients<double> knowledge;
  double loss = 0;
};

// Mean loss and gradients over a batch of samples.
ClassifierGradients classifier_backward(const ClassifierModel& model, const std::vector<const Sample*>& batch);

std::vector<ParamBlock<double>> parameter_blocks(ClassifierModel& model);
std::vector<ParamBlock<double>> gradient_blocks(ClassifierGradients& grads);

struct TrainLog {
  std::vector<double> epoch_loss;
};

// Throws NumericError when the loss turns non-finite.
TrainLog train_classifier(ClassifierModel& model, const Dataset& train, const ClassifierConfig& config,
                          const std::function<void(int, double)>& on_epoch = {});

Json classifier_to_json(const ClassifierModel& model);
ClassifierModel classifier_from_json(const Json& doc);

}  // namespace chargepred
