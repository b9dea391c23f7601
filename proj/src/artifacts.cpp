#include "chargepred/artifacts.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace chargepred {

namespace {

std::ifstream open_artifact(const std::string& path) {
  if (!std::filesystem::exists(path)) throw MissingArtifactError(path);
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

ArtifactHeader header_from_json(const Json& j, const std::string& source, const std::string& expected_kind) {
  if (!j.contains("format_version") || !j["format_version"].is_number_integer())
    throw SchemaError(source + ": header lacks an integer format_version");
  ArtifactHeader h;
  h.format_version = j["format_version"].get<int>();
  if (h.format_version != kFormatVersion)
    throw SchemaError(source + ": format_version " + std::to_string(h.format_version) + " is not supported");
  h.kind = j.value("kind", std::string{});
  if (h.kind != expected_kind) throw SchemaError(source + ": expected a '" + expected_kind + "' file, found '" + h.kind + "'");
  h.seed = j.value("seed", std::uint64_t{0});
  h.config_digest = j.value("config_digest", std::string{});
  h.label_names = j.value("label_names", std::vector<std::string>{});
  return h;
}

template <typename Fn>
void for_each_record(std::istream& in, const std::string& source, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw DataError(source + ":" + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    if (!j.is_object()) throw DataError(source + ":" + std::to_string(line_no) + ": expected a JSON object");
    try {
      fn(j, line_no);
    } catch (const Json::exception& e) {
      throw DataError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

}  // namespace

std::string config_digest(const Json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json ArtifactHeader::to_json() const {
  return Json{{"format_version", format_version},
              {"kind", kind},
              {"seed", seed},
              {"config_digest", config_digest},
              {"label_names", label_names}};
}

std::vector<Vector<double>> ProbFile::probs() const {
  std::vector<Vector<double>> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.probs);
  return out;
}

std::vector<std::vector<int>> ProbFile::golds() const {
  std::vector<std::vector<int>> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.gold);
  return out;
}

std::vector<std::string> ProbFile::label_names() const {
  if (header && static_cast<Index>(header->label_names.size()) == num_labels()) return header->label_names;
  std::vector<std::string> names;
  for (Index j = 0; j < num_labels(); ++j) names.push_back(std::to_string(j));
  return names;
}

void write_probs(std::ostream& out, const std::optional<ArtifactHeader>& header, const std::vector<ProbRecord>& records) {
  if (header) out << header->to_json().dump() << '\n';
  for (const auto& r : records) {
    Json j = {{"id", r.id}, {"probs", vector_to_json(r.probs)}, {"gold", r.gold}};
    out << j.dump() << '\n';
  }
}

ProbFile read_probs(std::istream& in, const std::string& source) {
  ProbFile f;
  for_each_record(in, source, [&](const Json& j, std::size_t line_no) {
    const std::string where = source + ":" + std::to_string(line_no);
    if (j.contains("kind") || j.contains("format_version")) {
      if (f.header || !f.records.empty()) throw DataError(where + ": header record must be the first line");
      f.header = header_from_json(j, source, "probs");
      return;
    }
    ProbRecord r;
    r.id = j.at("id").get<long>();
    r.probs = vector_from_json<double>(j.at("probs"), where + " probs");
    r.gold = j.value("gold", std::vector<int>{});
    if (r.probs.size() == 0) throw DataError(where + ": empty probability vector");
    if (!f.records.empty() && r.probs.size() != f.records.front().probs.size())
      throw DataError(where + ": probability vector length differs from earlier records");
    for (Index k = 0; k < r.probs.size(); ++k)
      if (!(r.probs(k) >= 0.0 && r.probs(k) <= 1.0)) throw DataError(where + ": probability outside [0, 1]");
    for (int g : r.gold)
      if (g < 0 || g >= r.probs.size()) throw DataError(where + ": gold label outside [0, L)");
    f.records.push_back(std::move(r));
  });
  return f;
}

ProbFile read_probs(const std::string& path) {
  auto in = open_artifact(path);
  return read_probs(in, path);
}

void write_predictions(std::ostream& out, const std::optional<ArtifactHeader>& header,
                       const std::vector<PredictionRecord>& records) {
  if (header) out << header->to_json().dump() << '\n';
  for (const auto& r : records) {
    Json j = {{"id", r.id},
              {"strategy", r.strategy},
              {"n", r.n ? Json(*r.n) : Json(nullptr)},
              {"labels", r.labels},
              {"label_names", r.label_names}};
    out << j.dump() << '\n';
  }
}

PredictionFile read_predictions(std::istream& in, const std::string& source) {
  PredictionFile f;
  for_each_record(in, source, [&](const Json& j, std::size_t line_no) {
    if (j.contains("kind") || j.contains("format_version")) {
      if (f.header || !f.records.empty())
        throw DataError(source + ":" + std::to_string(line_no) + ": header record must be the first line");
      f.header = header_from_json(j, source, "predictions");
      return;
    }
    PredictionRecord r;
    r.id = j.at("id").get<long>();
    r.strategy = j.value("strategy", std::string{});
    if (j.contains("n") && !j["n"].is_null()) r.n = j["n"].get<int>();
    r.labels = j.at("labels").get<std::vector<int>>();
    r.label_names = j.value("label_names", std::vector<std::string>{});
    f.records.push_back(std::move(r));
  });
  return f;
}

PredictionFile read_predictions(const std::string& path) {
  auto in = open_artifact(path);
  return read_predictions(in, path);
}

Json read_json_file(const std::string& path) {
  auto in = open_artifact(path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw SchemaError(path + ": not a JSON document: " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& contents) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << contents;
  out.flush();
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace chargepred
