#include "doctest.h"

#include <sstream>

#include "chargepred/artifacts.hpp"
#include "helpers.hpp"

using namespace chargepred;
using testing::vec;

TEST_CASE("config digest is FNV-1a of the compact dump") {
  // FNV-1a 64 of "{}" computed by hand from the offset basis and prime.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : std::string("{}")) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  CHECK(config_digest(Json::object()) == buf);
  CHECK(config_digest(Json{{"a", 1}}) != config_digest(Json{{"a", 2}}));
  CHECK(config_digest(Json{{"b", 1}, {"a", 2}}) == config_digest(Json{{"a", 2}, {"b", 1}}));
}

TEST_CASE("probs round-trip with header is value-exact") {
  std::vector<ProbRecord> recs{{0, vec({0.1 + 0.2, 1.0 / 3.0}), {1}}, {1, vec({0.0, 1.0}), {0, 1}}};
  ArtifactHeader h{kFormatVersion, "probs", 42, "00ff", {"theft", "robbery"}};
  std::stringstream buf;
  write_probs(buf, h, recs);
  const auto f = read_probs(buf);
  REQUIRE(f.header);
  CHECK(f.header->seed == 42);
  CHECK(f.header->config_digest == "00ff");
  CHECK(f.label_names() == std::vector<std::string>{"theft", "robbery"});
  REQUIRE(f.records.size() == 2);
  CHECK(f.records[0].probs == recs[0].probs);
  CHECK(f.records[1].gold == recs[1].gold);
}

TEST_CASE("probs without header are accepted") {
  std::istringstream in("{\"id\": 3, \"probs\": [0.5, 0.25], \"gold\": [0]}\n");
  const auto f = read_probs(in);
  CHECK_FALSE(f.header);
  CHECK(f.num_labels() == 2);
  CHECK(f.label_names() == std::vector<std::string>{"0", "1"});
}

TEST_CASE("probs reader rejects bad files") {
  std::istringstream version("{\"format_version\": 7, \"kind\": \"probs\"}\n");
  CHECK_THROWS_AS(read_probs(version), SchemaError);
  std::istringstream kind("{\"format_version\": 1, \"kind\": \"predictions\"}\n");
  CHECK_THROWS_AS(read_probs(kind), SchemaError);
  std::istringstream range("{\"id\": 0, \"probs\": [1.5], \"gold\": [0]}\n");
  CHECK_THROWS_AS(read_probs(range), DataError);
  std::istringstream ragged("{\"id\": 0, \"probs\": [0.5], \"gold\": [0]}\n{\"id\": 1, \"probs\": [0.5, 0.1], \"gold\": [0]}\n");
  CHECK_THROWS_AS(read_probs(ragged), DataError);
  std::istringstream gold("{\"id\": 0, \"probs\": [0.5], \"gold\": [1]}\n");
  CHECK_THROWS_AS(read_probs(gold), DataError);
  CHECK_THROWS_AS(read_probs(std::string("/nonexistent/p.jsonl")), MissingArtifactError);
}

TEST_CASE("predictions round-trip") {
  std::vector<PredictionRecord> recs{{0, "nln", 2, {0, 3}, {"a", "d"}}, {1, "threshold", std::nullopt, {1}, {"b"}}};
  std::stringstream buf;
  write_predictions(buf, ArtifactHeader{kFormatVersion, "predictions", 1, "ab", {"a", "b", "c", "d"}}, recs);
  const auto f = read_predictions(buf);
  REQUIRE(f.records.size() == 2);
  CHECK(f.records[0].n == 2);
  CHECK_FALSE(f.records[1].n.has_value());
  CHECK(f.records[0].labels == std::vector<int>{0, 3});
  CHECK(f.records[1].strategy == "threshold");
  CHECK(buf.str().find("\"n\":null") != std::string::npos);
}

TEST_CASE("json files") {
  testing::TempDir dir("json");
  CHECK_THROWS_AS(read_json_file(dir / "missing.json"), MissingArtifactError);
  write_text_file(dir / "sub/x.json", "not json");
  CHECK_THROWS_AS(read_json_file(dir / "sub/x.json"), SchemaError);
  write_text_file(dir / "y.json", "{\"a\": 1}");
  CHECK(read_json_file(dir / "y.json").at("a") == 1);
}
