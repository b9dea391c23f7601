#pragma once

// Stage-boundary files. JSONL artifacts may start with one header record
// {"format_version", "kind", "seed", "config_digest", "label_names"}; every
// other line is a data record. Files without a header (for example
// probabilities produced by an external classifier) are accepted.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "chargepred/numerics.hpp"
#include "chargepred/param_io.hpp"

namespace chargepred {

// 64-bit FNV-1a of the compact JSON dump, as 16 hex digits.
std::string config_digest(const Json& config);

struct ArtifactHeader {
  int format_version = kFormatVersion;
  std::string kind;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::vector<std::string> label_names;

  Json to_json() const;
};

// {"id": int, "probs": [L reals], "gold": [label indices]}
struct ProbRecord {
  long id = 0;
  Vector<double> probs;
  std::vector<int> gold;
};

struct ProbFile {
  std::optional<ArtifactHeader> header;
  std::vector<ProbRecord> records;

  Index num_labels() const { return records.empty() ? 0 : records.front().probs.size(); }
  std::vector<Vector<double>> probs() const;
  std::vector<std::vector<int>> golds() const;
  std::vector<std::string> label_names() const;
};

void write_probs(std::ostream& out, const std::optional<ArtifactHeader>& header, const std::vector<ProbRecord>& records);
ProbFile read_probs(std::istream& in, const std::string& source = "probs");
ProbFile read_probs(const std::string& path);

// {"id": int, "strategy": string, "n": int|null, "labels": [indices], "label_names": [strings]}
struct PredictionRecord {
  long id = 0;
  std::string strategy;
  std::optional<int> n;
  std::vector<int> labels;
  std::vector<std::string> label_names;
};

struct PredictionFile {
  std::optional<ArtifactHeader> header;
  std::vector<PredictionRecord> records;
};

void write_predictions(std::ostream& out, const std::optional<ArtifactHeader>& header,
                       const std::vector<PredictionRecord>& records);
PredictionFile read_predictions(std::istream& in, const std::string& source = "predictions");
PredictionFile read_predictions(const std::string& path);

// Whole-document JSON files (models, manifests).
Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& contents);

}  // namespace chargepred
