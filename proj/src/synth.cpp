#include "chargepred/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace chargepred {

namespace {

void check_mixture(const std::vector<double>& mixture) {
  if (mixture.empty()) throw PreconditionError("count mixture is empty");
  double total = 0;
  for (double p : mixture) {
    if (!(p >= 0)) throw PreconditionError("count mixture entries must be non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw PreconditionError("count mixture sums to " + std::to_string(total) + ", expected 1");
}

// `count` distinct labels in [0, num_labels), sorted.
std::vector<int> draw_labels(std::mt19937_64& rng, int num_labels, int count) {
  std::vector<int> pool(static_cast<std::size_t>(num_labels));
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < count; ++i) {
    std::uniform_int_distribution<int> pick(i, num_labels - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  std::vector<int> out(pool.begin(), pool.begin() + count);
  std::sort(out.begin(), out.end());
  return out;
}

double unit(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

}  // namespace

std::vector<double> skewed_count_mixture() {
  const double counts[] = {120475, 30831, 2914, 384};
  const double total = 120475 + 30831 + 2914 + 384;
  return {counts[0] / total, counts[1] / total, counts[2] / total, counts[3] / total};
}

void SynthConfig::validate() const {
  if (num_labels < 1) throw PreconditionError("num_labels must be >= 1");
  if (num_samples < 1) throw PreconditionError("num_samples must be >= 1");
  if (num_test_samples < 0) throw PreconditionError("num_test_samples must be >= 0");
  check_mixture(count_mixture);
  if (!(overflow_rate >= 0 && overflow_rate <= 1)) throw PreconditionError("overflow_rate must lie in [0, 1]");
  if (background_vocab < 1 || tokens_per_label < 1 || draws_per_label < 1 || background_tokens < 0)
    throw PreconditionError("token budget parameters must be positive");
  if (!(dropout >= 0 && dropout < 1)) throw PreconditionError("dropout must lie in [0, 1)");
}

void ThresholdTaskConfig::validate() const {
  if (num_labels < 1 || num_samples < 1) throw PreconditionError("threshold task needs labels and samples");
  check_mixture(count_mixture);
  if (!(tau_min > 0 && tau_min <= tau_max && tau_max < 1)) throw PreconditionError("thresholds must lie in (0, 1)");
  if (!(positive_shape > 0 && negative_shape > 0)) throw PreconditionError("shape exponents must be positive");
  if (!(margin >= 0 && tau_max + margin < 1)) throw PreconditionError("margin must keep gold values inside (tau, 1]");
}

int draw_label_count(std::mt19937_64& rng, const std::vector<double>& mixture, double overflow_rate, int max_labels,
                     int num_labels) {
  const double u = unit(rng);
  const int k = static_cast<int>(mixture.size());
  int cls = k - 1;
  double acc = 0;
  for (int c = 0; c < k; ++c) {
    acc += mixture[static_cast<std::size_t>(c)];
    if (u < acc) {
      cls = c;
      break;
    }
  }
  // Skip trailing zero-weight classes that rounding could land on.
  while (cls > 0 && mixture[static_cast<std::size_t>(cls)] == 0.0) --cls;
  int count = cls + 1;
  if (cls == k - 1 && max_labels > k && unit(rng) < overflow_rate) {
    std::uniform_int_distribution<int> extra(1, max_labels - k);
    count += extra(rng);
  }
  return std::min(count, num_labels);
}

std::string signature_token(const SynthConfig& config, int label, int slot) {
  return "w" + std::to_string(label * config.tokens_per_label + slot);
}

SynthCorpus synthesize(const SynthConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  const int signature_span = config.num_labels * config.tokens_per_label;
  auto background = [&](std::mt19937_64& g) {
    std::uniform_int_distribution<int> d(0, config.background_vocab - 1);
    return "w" + std::to_string(signature_span + d(g));
  };

  SynthCorpus corpus;
  std::vector<std::string> names;
  for (int l = 0; l < config.num_labels; ++l) names.push_back("charge_" + std::to_string(l));

  auto make_sample = [&](std::mt19937_64& g) {
    Sample s;
    const int count =
        draw_label_count(g, config.count_mixture, config.overflow_rate, config.max_labels, config.num_labels);
    s.labels = draw_labels(g, config.num_labels, count);
    std::vector<std::string> toks;
    std::uniform_int_distribution<int> slot(0, config.tokens_per_label - 1);
    for (int l : s.labels) {
      for (int d = 0; d < config.draws_per_label; ++d) {
        const int sl = slot(g);
        if (config.dropout > 0 && unit(g) < config.dropout)
          toks.push_back(background(g));
        else
          toks.push_back(signature_token(config, l, sl));
      }
    }
    for (int b = 0; b < config.background_tokens; ++b) toks.push_back(background(g));
    std::shuffle(toks.begin(), toks.end(), g);
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (i) s.raw_text.push_back(' ');
      s.raw_text += toks[i];
    }
    return s;
  };

  corpus.train.split = Split::train;
  corpus.train.label_names = names;
  for (int i = 0; i < config.num_samples; ++i) corpus.train.samples.push_back(make_sample(rng));
  corpus.test.split = Split::test;
  corpus.test.label_names = names;
  for (int i = 0; i < config.num_test_samples; ++i) corpus.test.samples.push_back(make_sample(rng));

  // Provisions: every signature token of the label once, shuffled.
  corpus.knowledge.texts.resize(static_cast<std::size_t>(config.num_labels));
  corpus.knowledge.missing.assign(static_cast<std::size_t>(config.num_labels), false);
  for (int l = 0; l < config.num_labels; ++l) {
    std::vector<std::string> toks;
    for (int sl = 0; sl < config.tokens_per_label; ++sl) toks.push_back(signature_token(config, l, sl));
    std::shuffle(toks.begin(), toks.end(), rng);
    std::string text;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (i) text.push_back(' ');
      text += toks[i];
    }
    corpus.knowledge.texts[static_cast<std::size_t>(l)] = std::move(text);
  }
  return corpus;
}

ThresholdTask synthesize_threshold_task(const ThresholdTaskConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  ThresholdTask task;
  std::uniform_real_distribution<double> tau_dist(config.tau_min, config.tau_max);
  for (int j = 0; j < config.num_labels; ++j) task.tau.push_back(tau_dist(rng));

  task.probs.reserve(static_cast<std::size_t>(config.num_samples));
  task.gold.reserve(static_cast<std::size_t>(config.num_samples));
  for (int i = 0; i < config.num_samples; ++i) {
    const int count =
        draw_label_count(rng, config.count_mixture, config.overflow_rate, config.max_labels, config.num_labels);
    std::vector<int> labels = draw_labels(rng, config.num_labels, count);
    std::vector<bool> on(static_cast<std::size_t>(config.num_labels), false);
    for (int l : labels) on[static_cast<std::size_t>(l)] = true;
    Vector<double> x(config.num_labels);
    for (int j = 0; j < config.num_labels; ++j) {
      const double t = task.tau[static_cast<std::size_t>(j)];
      if (on[static_cast<std::size_t>(j)]) {
        const double u = 1.0 - unit(rng);  // (0, 1]
        x(j) = t + config.margin + (1.0 - t - config.margin) * std::pow(u, config.positive_shape);
      } else {
        x(j) = t * std::pow(unit(rng), config.negative_shape);
      }
    }
    task.probs.push_back(std::move(x));
    task.gold.push_back(std::move(labels));
  }
  return task;
}

}  // namespace chargepred
