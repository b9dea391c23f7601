#pragma once

// Synthetic generators: a tokenized corpus whose labels own disjoint
// signature tokens, and a direct probability-vector task with known
// per-label thresholds for exercising the number learning network.

#include <cstdint>
#include <random>
#include <vector>

#include "chargepred/data.hpp"

namespace chargepred {

// Heavily skewed label-count distribution over the classes {1, 2, 3, 4+}:
// 120475 : 30831 : 2914 : 384, normalized.
std::vector<double> skewed_count_mixture();

// Of the 4+ class, the share with more than four labels (96 of 384).
inline constexpr double kSkewedOverflowRate = 96.0 / 384.0;

struct SynthConfig {
  int num_labels = 20;
  int num_samples = 5000;
  int num_test_samples = 1000;
  std::vector<double> count_mixture = skewed_count_mixture();
  double overflow_rate = kSkewedOverflowRate;  // P(count > K | top class)
  int max_labels = 9;
  int background_vocab = 2000;   // tokens owned by no label
  int tokens_per_label = 12;     // signature size per label
  int draws_per_label = 6;       // signature tokens emitted per gold label
  int background_tokens = 20;    // background tokens per sample
  double dropout = 0.0;          // P(a signature draw becomes background)

  void validate() const;
};

struct SynthCorpus {
  Dataset train;
  Dataset test;
  KnowledgeBase knowledge;  // texts only; encode against a vocabulary
};

std::string signature_token(const SynthConfig& config, int label, int slot);

SynthCorpus synthesize(const SynthConfig& config, std::uint64_t seed);

// Draws a label count: class from `mixture`, then for the top class an
// extra 1..(max_labels - K) labels with probability overflow_rate. Capped at
// num_labels.
int draw_label_count(std::mt19937_64& rng, const std::vector<double>& mixture, double overflow_rate, int max_labels,
                     int num_labels);

struct ThresholdTaskConfig {
  int num_labels = 20;
  int num_samples = 20000;
  std::vector<double> count_mixture = skewed_count_mixture();
  double overflow_rate = kSkewedOverflowRate;
  int max_labels = 9;
  double tau_min = 0.3;
  double tau_max = 0.7;
  // Gold label j: x = tau_j + margin + (1 - tau_j - margin) * u^positive_shape.
  // Other labels: x = tau_j * u^negative_shape, u ~ U[0, 1).
  double margin = 0.15;
  double positive_shape = 2.0;
  double negative_shape = 4.0;

  void validate() const;
};

// Probability vectors where label j is gold iff x_j > tau_j.
struct ThresholdTask {
  std::vector<double> tau;
  std::vector<Vector<double>> probs;
  std::vector<std::vector<int>> gold;
};

ThresholdTask synthesize_threshold_task(const ThresholdTaskConfig& config, std::uint64_t seed);

}  // namespace chargepred
