#include "doctest.h"

#include <fstream>
#include <sstream>

#include "chargepred/artifacts.hpp"
#include "chargepred/cli.hpp"
#include "helpers.hpp"

using namespace chargepred;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "chargepred");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("usage errors exit 1, help exits 0") {
  CHECK(run({}).code == 1);
  CHECK(run({"bogus"}).code == 1);
  CHECK(run({"synth"}).code == 1);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"predict", "--probs", "x", "--out", "y", "--strategy", "nope"}).code == 3);
}

TEST_CASE("synth writes its files, single-only gives single labels, reruns are byte-identical") {
  testing::TempDir a("synth_a"), b("synth_b");
  auto r = run({"synth", "--out", a.path.string(), "--labels", "2", "--single-only", "--samples", "30", "--seed", "4"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("synth: seed=4 config_digest=") == 0);
  for (const char* f : {"cases.jsonl", "cases_test.jsonl", "provisions.jsonl", "labels.txt", "manifest.json"})
    CHECK(std::filesystem::exists(a / f));
  std::istringstream cases(slurp(a / "cases.jsonl"));
  std::string line;
  while (std::getline(cases, line)) CHECK(Json::parse(line).at("accusation").size() == 1);

  REQUIRE(run({"synth", "--out", b.path.string(), "--labels", "2", "--single-only", "--samples", "30", "--seed", "4"})
              .code == 0);
  for (const char* f : {"cases.jsonl", "cases_test.jsonl", "provisions.jsonl", "labels.txt", "manifest.json"})
    CHECK(slurp(a / f) == slurp(b / f));
}

TEST_CASE("default synth manifest echoes the normalized mixture") {
  testing::TempDir d("manifest");
  REQUIRE(run({"synth", "--out", d.path.string(), "--samples", "20", "--test-samples", "5"}).code == 0);
  const auto manifest = Json::parse(slurp(d / "manifest.json"));
  const auto mix = manifest.at("config").at("count_mixture").get<std::vector<double>>();
  REQUIRE(mix.size() == 4);
  CHECK(mix[0] == doctest::Approx(120475.0 / 154604.0).epsilon(1e-15));
  CHECK(mix[3] == doctest::Approx(384.0 / 154604.0).epsilon(1e-15));
  CHECK(manifest.at("config_digest").get<std::string>().size() == 16);
}

TEST_CASE("unwritable output exits 2") {
  testing::TempDir d("unwritable");
  write_text_file(d / "file", "x");
  CHECK(run({"synth", "--out", d / "file/sub"}).code == 2);
}

TEST_CASE("missing upstream artifact exits 3 and names the path") {
  const auto r = run({"train-nln", "--probs", "/nonexistent/probs.jsonl", "--out", "/tmp/unused.json"});
  CHECK(r.code == 3);
  CHECK(r.err.find("/nonexistent/probs.jsonl") != std::string::npos);
  CHECK(run({"export-probs", "--model", "/nonexistent/m.json", "--cases", "x", "--out", "y"}).code == 3);
}

TEST_CASE("schema version mismatch exits 4") {
  testing::TempDir d("schema");
  write_text_file(d / "probs.jsonl", "{\"format_version\": 2, \"kind\": \"probs\"}\n{\"id\": 0, \"probs\": [0.5], \"gold\": [0]}\n");
  CHECK(run({"train-nln", "--probs", d / "probs.jsonl", "--out", d / "nln.json"}).code == 4);
  write_text_file(d / "old.json", "{\"format_version\": 0, \"kind\": \"nln\"}");
  write_text_file(d / "ok.jsonl", "{\"id\": 0, \"probs\": [0.5], \"gold\": [0]}\n");
  CHECK(run({"predict", "--probs", d / "ok.jsonl", "--nln", d / "old.json", "--out", d / "p.jsonl"}).code == 4);
}

TEST_CASE("evaluate on predictions equal to gold reports 1.0/1.0") {
  testing::TempDir d("eval");
  write_text_file(d / "gold.jsonl",
                  "{\"id\": 0, \"probs\": [0.9, 0.1, 0.8], \"gold\": [0, 2]}\n"
                  "{\"id\": 1, \"probs\": [0.1, 0.9, 0.2], \"gold\": [1]}\n"
                  "{\"id\": 2, \"probs\": [0.1, 0.2, 0.9], \"gold\": [2]}\n");
  write_text_file(d / "pred.jsonl",
                  "{\"id\": 0, \"strategy\": \"topk\", \"n\": null, \"labels\": [0, 2], \"label_names\": [\"0\", \"2\"]}\n"
                  "{\"id\": 1, \"strategy\": \"topk\", \"n\": null, \"labels\": [1], \"label_names\": [\"1\"]}\n"
                  "{\"id\": 2, \"strategy\": \"topk\", \"n\": null, \"labels\": [2], \"label_names\": [\"2\"]}\n");
  const auto r = run({"evaluate", "--predictions", d / "pred.jsonl", "--gold", d / "gold.jsonl", "--json", "--out",
                      d / "report.csv"});
  REQUIRE(r.code == 0);
  const auto j = Json::parse(r.out.substr(r.out.find('\n') + 1));
  CHECK(j.at("reports")[0].at("micro_f1") == 1.0);
  CHECK(j.at("reports")[0].at("macro_f1") == 1.0);
  const auto csv = slurp(d / "report.csv");
  CHECK(csv.rfind("# seed=", 0) == 0);
  CHECK(csv.find("all,,3,1.000000,1.000000") != std::string::npos);
}

TEST_CASE("threshold and nln predictions differ on the multi-label slice of the threshold task") {
  testing::TempDir d("predict");
  REQUIRE(run({"synth-probs", "--out", d / "probs.jsonl", "--samples", "3000", "--seed", "3"}).code == 0);
  REQUIRE(run({"train-nln", "--probs", d / "probs.jsonl", "--out", d / "nln.json", "--epochs", "30", "--thresholds",
               d / "thr.csv", "--seed", "3"})
              .code == 0);
  REQUIRE(run({"predict", "--probs", d / "probs.jsonl", "--strategy", "nln", "--nln", d / "nln.json", "--out",
               d / "p_nln.jsonl"})
              .code == 0);
  REQUIRE(run({"predict", "--probs", d / "probs.jsonl", "--strategy", "threshold", "--t", "0.5", "--out",
               d / "p_thr.jsonl"})
              .code == 0);
  const auto gold = read_probs(d / "probs.jsonl");
  const auto pn = read_predictions(d / "p_nln.jsonl"), pt = read_predictions(d / "p_thr.jsonl");
  std::size_t differ = 0;
  for (std::size_t i = 0; i < gold.records.size(); ++i)
    if (gold.records[i].gold.size() >= 2 && pn.records[i].labels != pt.records[i].labels) ++differ;
  CHECK(differ > 0);
  CHECK(slurp(d / "thr.csv").find("label_index,label_name,threshold") != std::string::npos);

  const auto cmp = run({"compare", "--probs", d / "probs.jsonl", "--nln", d / "nln.json", "--out", d / "cmp.csv"});
  CHECK(cmp.code == 0);
  CHECK(cmp.out.find("nln_topn") != std::string::npos);
}
