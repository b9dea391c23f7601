#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "chargepred/classifier.hpp"
#include "chargepred/nln.hpp"
#include "chargepred/synth.hpp"

namespace chargepred {

// Everything a pipeline stage can be configured with. Flags override values
// read from --config files.
struct RunConfig {
  std::uint64_t seed = 0;

  // paths
  std::string out;
  std::string cases;
  std::string provisions;
  std::string labels;
  std::string model;
  std::string nln_model;
  std::string probs;
  std::string predictions;
  std::string gold;
  std::string thresholds_out;
  std::string tau_out;
  std::string split = "test";

  std::size_t max_tokens = kDefaultMaxTokens;
  std::size_t max_provision_tokens = kDefaultMaxProvisionTokens;
  ClassifierConfig classifier;
  NlnConfig nln;
  SynthConfig synth;
  bool single_only = false;
  ThresholdTaskConfig task;

  std::string strategy = "nln";
  double t = 0.5;
  int k = 1;
  std::vector<double> grid_thresholds{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<int> grid_ks{1, 2, 3};
  int count_classes = kDefaultCountClasses;
  bool json = false;
};

// Runs one CLI invocation; args[0] is the program name. Returns the process
// exit code (see ExitCode).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace chargepred
