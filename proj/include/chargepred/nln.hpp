#pragma once

// Number learning network. A masked diagonal gate relu(x + b) with one
// trainable bias per label, then a two-layer head (L -> h relu -> K softmax)
// that predicts how many labels a probability vector carries. The learned
// per-label pass threshold is -b.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "chargepred/classifier.hpp"
#include "chargepred/data.hpp"
#include "chargepred/numerics.hpp"
#include "chargepred/param_io.hpp"

namespace chargepred {

struct NlnConfig {
  int hidden = 64;
  int count_classes = kDefaultCountClasses;
  int epochs = 40;
  double lr = 0.01;
  double momentum = 0.9;
  int batch_size = 32;
  double init_gate_bias = -0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct NlnModel {
  LayerStack<double> net;  // gate + exactly two dense layers
  std::vector<std::string> label_names;
  std::uint64_t rng_seed = 0;

  Index num_labels() const { return net.gate ? net.gate->dim() : 0; }
  Index count_classes() const { return net.out_dim(); }
  const MaskedDiagonalLayer<double>& gate() const { return *net.gate; }
  void validate() const;
};

struct NlnDataset {
  std::vector<Vector<double>> inputs;  // phase-1 probability vectors
  std::vector<int> count_classes;      // class index of the gold label count

  std::size_t size() const { return inputs.size(); }
};

NlnDataset make_nln_dataset(const std::vector<Vector<double>>& probs, const std::vector<std::vector<int>>& golds,
                            int num_classes = kDefaultCountClasses);

NlnModel make_nln(Index num_labels, const NlnConfig& config, std::vector<std::string> label_names = {});

// Softmax distribution over count classes.
Vector<double> nln_forward(const NlnModel& model, const Vector<double>& x);

// Argmax index + 1, ties resolved toward the smaller count.
int argmax_count(const Vector<double>& distribution);
int predicted_count(const NlnModel& model, const Vector<double>& x);

// Per-label pass thresholds, -b.
Vector<double> thresholds(const NlnModel& model);

// Throws NumericError on a non-finite loss. `on_epoch` observes the model
// after every epoch.
TrainLog train_nln(NlnModel& model, const NlnDataset& data, const NlnConfig& config,
                   const std::function<void(int, const NlnModel&)>& on_epoch = {});

double count_accuracy(const NlnModel& model, const NlnDataset& data);
double mean_cross_entropy(const NlnModel& model, const NlnDataset& data);

GradCheckReport nln_grad_check(NlnModel& model, const Vector<double>& x, int count_class);

Json nln_to_json(const NlnModel& model);
NlnModel nln_from_json(const Json& doc);

// label_index,label_name,threshold
void write_threshold_csv(std::ostream& out, const NlnModel& model);

}  // namespace chargepred
