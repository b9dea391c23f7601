#pragma once

// Corpus ingestion: tokenization, vocabularies, label indexing, cases and
// provisions JSONL files, and label-count classes.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "chargepred/numerics.hpp"

namespace chargepred {

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kUnkToken = "<unk>";

inline constexpr std::size_t kDefaultMaxTokens = 400;
inline constexpr std::size_t kDefaultMaxProvisionTokens = 85;
inline constexpr int kDefaultCountClasses = 4;

// Splits on Unicode whitespace, lowercases ASCII letters, keeps at most
// `max_tokens` tokens. An input with no tokens yields a single UNK token.
std::vector<std::string> tokenize(std::string_view text, std::size_t max_tokens = kDefaultMaxTokens);

class Vocabulary {
 public:
  Vocabulary();

  // Ids are assigned in first-seen order after the reserved PAD and UNK.
  static Vocabulary build(const std::vector<std::vector<std::string>>& documents);
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  int add(const std::string& token);
  int id(std::string_view token) const;  // UNK when absent
  bool contains(std::string_view token) const;
  const std::string& token(int id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // Maps tokens to ids, truncating to max_tokens. With `pad`, the result is
  // right-padded with PAD up to max_tokens. Never returns an empty list.
  std::vector<int> encode(const std::vector<std::string>& tokens, std::size_t max_tokens = kDefaultMaxTokens,
                          bool pad = false) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

enum class Split { train, valid, test };
std::string_view to_string(Split s);
Split split_from_string(std::string_view s);

// Ordered accusation names. Once frozen (e.g. read from a label-list file)
// no new names are admitted.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<std::string> names, bool frozen = true);

  std::optional<int> find(std::string_view name) const;
  int add(const std::string& name);
  bool frozen() const { return frozen_; }
  void freeze() { frozen_ = true; }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
  bool frozen_ = false;
};

LabelSet read_label_list(const std::string& path);
void write_label_list(std::ostream& out, const std::vector<std::string>& names);

struct Sample {
  std::vector<int> tokens;  // filled by encode_dataset
  std::vector<int> labels;  // sorted, unique, each < L
  std::string raw_text;
};

struct Dataset {
  std::vector<Sample> samples;
  std::vector<std::string> label_names;
  Split split = Split::train;

  std::size_t size() const { return samples.size(); }
  std::size_t num_labels() const { return label_names.size(); }
  void validate() const;
};

// Provision text per label. Labels without a provision hold a single UNK
// token and are flagged in `missing`.
struct KnowledgeBase {
  std::vector<std::string> texts;
  std::vector<std::vector<int>> provisions;
  std::vector<bool> missing;

  std::size_t size() const { return texts.size(); }
};

struct LineError {
  std::size_t line = 0;
  std::string message;
};

template <typename T>
struct Loaded {
  T value;
  std::vector<LineError> errors;
};

// Reads {"fact": string, "accusation": [string, ...]} lines. Malformed lines
// are reported and skipped. On the train split unknown accusations extend
// `labels` unless it is frozen; on valid/test splits they throw DataError.
Loaded<Dataset> load_cases(std::istream& in, Split split, LabelSet& labels);
Loaded<Dataset> load_cases(const std::string& path, Split split, LabelSet& labels);

// Reads {"accusation": string, "provision": string} lines for a fixed label set.
Loaded<KnowledgeBase> load_provisions(std::istream& in, const LabelSet& labels);
Loaded<KnowledgeBase> load_provisions(const std::string& path, const LabelSet& labels);

void write_cases(std::ostream& out, const Dataset& dataset);
void write_provisions(std::ostream& out, const KnowledgeBase& kb, const std::vector<std::string>& label_names);

Vocabulary build_vocabulary(const Dataset& train, std::size_t max_tokens = kDefaultMaxTokens);
void encode_dataset(Dataset& dataset, const Vocabulary& vocab, std::size_t max_tokens = kDefaultMaxTokens);
void encode_knowledge(KnowledgeBase& kb, const Vocabulary& vocab,
                      std::size_t max_tokens = kDefaultMaxProvisionTokens);

// Count class of a label set of the given size: min(count, K) - 1.
int count_class(int label_count, int num_classes = kDefaultCountClasses);

// One-hot CountTarget over the K count classes.
Vector<double> count_target(int label_count, int num_classes = kDefaultCountClasses);

}  // namespace chargepred
