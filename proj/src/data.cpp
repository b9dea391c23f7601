#include "chargepred/data.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"

namespace chargepred {

namespace {

using Json = nlohmann::json;

bool is_unicode_space(char32_t c) {
  if (c == 0x20 || (c >= 0x09 && c <= 0x0D)) return true;
  if (c == 0x85 || c == 0xA0 || c == 0x1680) return true;
  if (c >= 0x2000 && c <= 0x200A) return true;
  return c == 0x2028 || c == 0x2029 || c == 0x202F || c == 0x205F || c == 0x3000;
}

// Decodes one UTF-8 sequence starting at text[pos]; returns its length.
// Invalid lead bytes decode as a single non-space unit.
std::size_t decode_utf8(std::string_view text, std::size_t pos, char32_t& cp) {
  const auto b0 = static_cast<unsigned char>(text[pos]);
  std::size_t len = 1;
  if (b0 < 0x80) {
    cp = b0;
    return 1;
  }
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    cp = 0xFFFD;
    return 1;
  }
  if (pos + len > text.size()) {
    cp = 0xFFFD;
    return 1;
  }
  for (std::size_t i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(text[pos + i]);
    if ((b & 0xC0) != 0x80) {
      cp = 0xFFFD;
      return 1;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  return len;
}

std::ifstream open_input(const std::string& path) {
  if (!std::filesystem::exists(path)) throw MissingArtifactError(path);
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text, std::size_t max_tokens) {
  std::vector<std::string> out;
  std::string current;
  std::size_t pos = 0;
  while (pos < text.size() && out.size() < max_tokens) {
    char32_t cp = 0;
    const std::size_t len = decode_utf8(text, pos, cp);
    if (is_unicode_space(cp)) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      for (std::size_t i = 0; i < len; ++i) {
        char c = text[pos + i];
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        current.push_back(c);
      }
    }
    pos += len;
  }
  if (!current.empty() && out.size() < max_tokens) out.push_back(std::move(current));
  if (out.empty()) out.emplace_back(kUnkToken);
  return out;
}

// ---------------------------------------------------------------------------

Vocabulary::Vocabulary() {
  add(std::string(kPadToken));
  add(std::string(kUnkToken));
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& documents) {
  Vocabulary v;
  for (const auto& doc : documents)
    for (const auto& tok : doc) v.add(tok);
  return v;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < 2 || tokens[0] != kPadToken || tokens[1] != kUnkToken)
    throw SchemaError("vocabulary must start with the reserved PAD and UNK tokens");
  Vocabulary v;
  for (std::size_t i = 2; i < tokens.size(); ++i) {
    if (v.contains(tokens[i])) throw SchemaError("duplicate vocabulary token '" + tokens[i] + "'");
    v.add(tokens[i]);
  }
  return v;
}

int Vocabulary::add(const std::string& token) {
  if (auto it = ids_.find(token); it != ids_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  ids_.emplace(token, id);
  return id;
}

int Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return ids_.count(std::string(token)) > 0; }

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
    throw PreconditionError("token id " + std::to_string(id) + " outside vocabulary");
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens, std::size_t max_tokens, bool pad) const {
  std::vector<int> ids;
  ids.reserve(std::min(tokens.size(), max_tokens));
  for (const auto& t : tokens) {
    if (ids.size() >= max_tokens) break;
    ids.push_back(id(t));
  }
  if (ids.empty()) ids.push_back(kUnkId);
  if (pad && ids.size() < max_tokens) ids.resize(max_tokens, kPadId);
  return ids;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
  }
  return "train";
}

Split split_from_string(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "valid") return Split::valid;
  if (s == "test") return Split::test;
  throw PreconditionError("unknown split '" + std::string(s) + "'");
}

LabelSet::LabelSet(std::vector<std::string> names, bool frozen) {
  for (const auto& n : names) {
    if (index_.count(n)) throw DataError("duplicate label '" + n + "'");
    add(n);
  }
  frozen_ = frozen;
}

std::optional<int> LabelSet::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int LabelSet::add(const std::string& name) {
  if (auto it = index_.find(name); it != index_.end()) return it->second;
  if (frozen_) throw DataError("label set is frozen; unknown accusation '" + name + "'");
  const int id = static_cast<int>(names_.size());
  names_.push_back(name);
  index_.emplace(name, id);
  return id;
}

LabelSet read_label_list(const std::string& path) {
  auto in = open_input(path);
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    names.push_back(line);
  }
  if (names.empty()) throw DataError(path + ": label list is empty");
  return LabelSet(std::move(names), true);
}

void write_label_list(std::ostream& out, const std::vector<std::string>& names) {
  for (const auto& n : names) out << n << '\n';
}

void Dataset::validate() const {
  if (samples.empty()) throw DataError("dataset is empty");
  std::unordered_map<std::string, int> seen;
  for (const auto& n : label_names)
    if (seen[n]++) throw DataError("duplicate label name '" + n + "'");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.labels.empty()) throw DataError("sample " + std::to_string(i) + " has an empty label set");
    for (int l : s.labels)
      if (l < 0 || static_cast<std::size_t>(l) >= label_names.size())
        throw DataError("sample " + std::to_string(i) + " has label index " + std::to_string(l) + " out of range");
  }
}

// ---------------------------------------------------------------------------

Loaded<Dataset> load_cases(std::istream& in, Split split, LabelSet& labels) {
  Loaded<Dataset> result;
  result.value.split = split;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      result.errors.push_back({line_no, std::string("malformed JSON: ") + e.what()});
      continue;
    }
    if (!j.is_object() || !j.contains("fact") || !j["fact"].is_string()) {
      result.errors.push_back({line_no, "missing string field \"fact\""});
      continue;
    }
    if (!j.contains("accusation") || !j["accusation"].is_array()) {
      result.errors.push_back({line_no, "missing array field \"accusation\""});
      continue;
    }
    const auto& acc = j["accusation"];
    if (acc.empty()) {
      result.errors.push_back({line_no, "empty label set"});
      continue;
    }
    Sample s;
    s.raw_text = j["fact"].get<std::string>();
    bool ok = true;
    for (const auto& a : acc) {
      if (!a.is_string()) {
        result.errors.push_back({line_no, "accusation entries must be strings"});
        ok = false;
        break;
      }
      const std::string name = a.get<std::string>();
      std::optional<int> idx = labels.find(name);
      if (!idx) {
        if (split != Split::train)
          throw DataError("line " + std::to_string(line_no) + ": unknown accusation '" + name + "' in " +
                          std::string(to_string(split)) + " split");
        if (labels.frozen()) {
          result.errors.push_back({line_no, "unknown accusation '" + name + "'"});
          ok = false;
          break;
        }
        idx = labels.add(name);
      }
      s.labels.push_back(*idx);
    }
    if (!ok) continue;
    std::sort(s.labels.begin(), s.labels.end());
    s.labels.erase(std::unique(s.labels.begin(), s.labels.end()), s.labels.end());
    result.value.samples.push_back(std::move(s));
  }
  result.value.label_names = labels.names();
  return result;
}

Loaded<Dataset> load_cases(const std::string& path, Split split, LabelSet& labels) {
  auto in = open_input(path);
  return load_cases(in, split, labels);
}

Loaded<KnowledgeBase> load_provisions(std::istream& in, const LabelSet& labels) {
  Loaded<KnowledgeBase> result;
  auto& kb = result.value;
  kb.texts.assign(labels.size(), std::string{});
  kb.missing.assign(labels.size(), true);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      result.errors.push_back({line_no, std::string("malformed JSON: ") + e.what()});
      continue;
    }
    if (!j.is_object() || !j.contains("accusation") || !j["accusation"].is_string() || !j.contains("provision") ||
        !j["provision"].is_string()) {
      result.errors.push_back({line_no, "expected string fields \"accusation\" and \"provision\""});
      continue;
    }
    const auto idx = labels.find(j["accusation"].get<std::string>());
    if (!idx) {
      result.errors.push_back({line_no, "unknown accusation '" + j["accusation"].get<std::string>() + "'"});
      continue;
    }
    const auto u = static_cast<std::size_t>(*idx);
    if (!kb.missing[u]) {
      result.errors.push_back({line_no, "duplicate provision for '" + j["accusation"].get<std::string>() + "'"});
      continue;
    }
    kb.texts[u] = j["provision"].get<std::string>();
    kb.missing[u] = false;
  }
  return result;
}

Loaded<KnowledgeBase> load_provisions(const std::string& path, const LabelSet& labels) {
  auto in = open_input(path);
  return load_provisions(in, labels);
}

void write_cases(std::ostream& out, const Dataset& dataset) {
  for (const auto& s : dataset.samples) {
    Json acc = Json::array();
    for (int l : s.labels) acc.push_back(dataset.label_names.at(static_cast<std::size_t>(l)));
    Json j = {{"fact", s.raw_text}, {"accusation", acc}};
    out << j.dump() << '\n';
  }
}

void write_provisions(std::ostream& out, const KnowledgeBase& kb, const std::vector<std::string>& label_names) {
  for (std::size_t l = 0; l < kb.texts.size(); ++l) {
    if (!kb.missing.empty() && kb.missing[l]) continue;
    Json j = {{"accusation", label_names.at(l)}, {"provision", kb.texts[l]}};
    out << j.dump() << '\n';
  }
}

Vocabulary build_vocabulary(const Dataset& train, std::size_t max_tokens) {
  if (train.split != Split::train) throw PreconditionError("vocabulary must be built from the training split");
  Vocabulary v;
  for (const auto& s : train.samples)
    for (const auto& t : tokenize(s.raw_text, max_tokens)) v.add(t);
  return v;
}

void encode_dataset(Dataset& dataset, const Vocabulary& vocab, std::size_t max_tokens) {
  for (auto& s : dataset.samples) s.tokens = vocab.encode(tokenize(s.raw_text, max_tokens), max_tokens);
}

void encode_knowledge(KnowledgeBase& kb, const Vocabulary& vocab, std::size_t max_tokens) {
  kb.provisions.resize(kb.texts.size());
  if (kb.missing.size() != kb.texts.size()) kb.missing.resize(kb.texts.size(), false);
  for (std::size_t l = 0; l < kb.texts.size(); ++l) {
    if (kb.missing[l])
      kb.provisions[l] = {kUnkId};
    else
      kb.provisions[l] = vocab.encode(tokenize(kb.texts[l], max_tokens), max_tokens);
  }
}

int count_class(int label_count, int num_classes) {
  if (label_count < 1) throw PreconditionError("label count must be >= 1, got " + std::to_string(label_count));
  if (num_classes < 1) throw PreconditionError("number of count classes must be >= 1");
  return std::min(label_count, num_classes) - 1;
}

Vector<double> count_target(int label_count, int num_classes) {
  Vector<double> y = Vector<double>::Zero(num_classes);
  y(count_class(label_count, num_classes)) = 1.0;
  return y;
}

}  // namespace chargepred
