#include "doctest.h"

#include <fstream>
#include <set>
#include <sstream>

#include "chargepred/data.hpp"
#include "chargepred/eval.hpp"
#include "chargepred/synth.hpp"
#include "helpers.hpp"

using namespace chargepred;

TEST_CASE("tokenize examples") {
  CHECK(tokenize("stole three phones") == std::vector<std::string>{"stole", "three", "phones"});
  CHECK(tokenize("") == std::vector<std::string>{"<unk>"});
  CHECK(tokenize(" \t\n ") == std::vector<std::string>{"<unk>"});
  CHECK(tokenize("Stole  THREE\tPhones") == std::vector<std::string>{"stole", "three", "phones"});
  // U+3000 ideographic space and U+00A0 split; non-ASCII letters are kept as-is.
  CHECK(tokenize("盗窃　手机 Ä") == std::vector<std::string>{"盗窃", "手机", "Ä"});

  std::string long_text;
  for (int i = 0; i < 500; ++i) long_text += "t" + std::to_string(i) + " ";
  const auto toks = tokenize(long_text, 400);
  REQUIRE(toks.size() == 400);
  CHECK(toks.front() == "t0");
  CHECK(toks.back() == "t399");
}

TEST_CASE("vocabulary reserves pad and unk") {
  const auto v = Vocabulary::build({{"a", "b"}, {"b", "c"}});
  CHECK(v.size() == 5);
  CHECK(v.id("<pad>") == kPadId);
  CHECK(v.id("<unk>") == kUnkId);
  CHECK(v.id("a") == 2);
  CHECK(v.id("c") == 4);
  CHECK(v.id("zzz") == kUnkId);
  CHECK(v.encode({"a", "zzz"}) == std::vector<int>{2, kUnkId});
  CHECK(v.encode({}) == std::vector<int>{kUnkId});
  CHECK(v.encode({"a"}, 3, true) == std::vector<int>{2, kPadId, kPadId});
  CHECK_THROWS(Vocabulary::from_tokens({"a", "b"}));
  const auto again = Vocabulary::from_tokens(v.tokens());
  CHECK(again.tokens() == v.tokens());
}

TEST_CASE("count_class caps at four") {
  CHECK(count_class(1) == 0);
  CHECK(count_class(2) == 1);
  CHECK(count_class(3) == 2);
  CHECK(count_class(4) == 3);
  CHECK(count_class(7) == 3);
  CHECK(count_class(9) == 3);
  for (int c = 5; c <= 9; ++c) CHECK(count_class(c) == 3);
  CHECK_THROWS_AS(count_class(0), PreconditionError);
  int prev = 0;
  for (int c = 1; c < 50; ++c) {
    CHECK(count_class(c) >= prev);
    prev = count_class(c);
  }
  const auto t = count_target(9);
  CHECK(t.sum() == 1.0);
  CHECK(t(3) == 1.0);
}

TEST_CASE("load_cases basic file") {
  std::istringstream in(
      "{\"fact\": \"he stole\", \"accusation\": [\"theft\"]}\n"
      "{\"fact\": \"he stole and robbed\", \"accusation\": [\"theft\", \"robbery\"]}\n");
  LabelSet labels;
  auto r = load_cases(in, Split::train, labels);
  CHECK(r.errors.empty());
  CHECK(r.value.size() == 2);
  CHECK(r.value.num_labels() == 2);
  CHECK(r.value.label_names == std::vector<std::string>{"theft", "robbery"});
  CHECK(r.value.samples[1].labels == std::vector<int>{0, 1});
}

TEST_CASE("load_cases reports bad lines and continues") {
  std::istringstream in(
      "{\"fact\": \"a\", \"accusation\": [\"x\"]}\n"
      "not json\n"
      "{\"fact\": \"b\", \"accusation\": []}\n"
      "{\"fact\": \"c\", \"accusation\": [\"y\"]}\n");
  LabelSet labels;
  auto r = load_cases(in, Split::train, labels);
  CHECK(r.value.size() == 2);
  REQUIRE(r.errors.size() == 2);
  CHECK(r.errors[0].line == 2);
  CHECK(r.errors[1].line == 3);
  CHECK(r.errors[1].message == "empty label set");
}

TEST_CASE("unknown accusation in test split is an error") {
  LabelSet labels({"theft"});
  std::istringstream in("{\"fact\": \"a\", \"accusation\": [\"arson\"]}\n");
  CHECK_THROWS_AS(load_cases(in, Split::test, labels), DataError);
}

TEST_CASE("missing cases file raises the missing-artifact error") {
  LabelSet labels;
  CHECK_THROWS_AS(load_cases(std::string("/nonexistent/cases.jsonl"), Split::train, labels), MissingArtifactError);
}

TEST_CASE("cases round-trip") {
  SynthConfig c;
  c.num_labels = 5;
  c.num_samples = 50;
  c.num_test_samples = 0;
  const auto corpus = synthesize(c, 3);
  std::stringstream buf;
  write_cases(buf, corpus.train);
  LabelSet labels(corpus.train.label_names);
  auto back = load_cases(buf, Split::train, labels);
  CHECK(back.errors.empty());
  REQUIRE(back.value.size() == corpus.train.size());
  for (std::size_t i = 0; i < back.value.size(); ++i) {
    CHECK(back.value.samples[i].raw_text == corpus.train.samples[i].raw_text);
    CHECK(back.value.samples[i].labels == corpus.train.samples[i].labels);
  }
  std::stringstream again;
  write_cases(again, back.value);
  std::stringstream first;
  write_cases(first, corpus.train);
  CHECK(again.str() == first.str());
}

TEST_CASE("provisions: missing entries become flagged unk") {
  LabelSet labels({"theft", "robbery", "arson"});
  std::istringstream in(
      "{\"accusation\": \"theft\", \"provision\": \"taking property\"}\n"
      "{\"accusation\": \"fraud\", \"provision\": \"deceit\"}\n"
      "{\"accusation\": \"arson\", \"provision\": \"setting fire\"}\n");
  auto r = load_provisions(in, labels);
  CHECK(r.errors.size() == 1);
  auto kb = r.value;
  REQUIRE(kb.size() == 3);
  CHECK(kb.missing == std::vector<bool>{false, true, false});
  const auto v = Vocabulary::build({tokenize("taking property setting fire")});
  encode_knowledge(kb, v);
  CHECK(kb.provisions[1] == std::vector<int>{kUnkId});
  CHECK(kb.provisions[0] == std::vector<int>{v.id("taking"), v.id("property")});
}

TEST_CASE("synth with single-label mixture") {
  SynthConfig c;
  c.num_labels = 2;
  c.num_samples = 10;
  c.num_test_samples = 0;
  c.count_mixture = {1, 0, 0, 0};
  const auto corpus = synthesize(c, 1);
  CHECK(corpus.train.size() == 10);
  for (const auto& s : corpus.train.samples) CHECK(s.labels.size() == 1);
}

TEST_CASE("synth rejects mixtures not summing to one") {
  SynthConfig c;
  c.count_mixture = {0.5, 0.4, 0.0, 0.0};
  CHECK_THROWS_AS(synthesize(c, 1), PreconditionError);
}

TEST_CASE("skewed mixture normalization matches the raw counts") {
  const double total = 120475.0 + 30831.0 + 2914.0 + 288.0 + 96.0;
  const auto m = skewed_count_mixture();
  REQUIRE(m.size() == 4);
  CHECK(m[0] == doctest::Approx(120475.0 / total).epsilon(1e-15));
  CHECK(m[3] == doctest::Approx(384.0 / total).epsilon(1e-15));
  CHECK(m[0] == doctest::Approx(0.779).epsilon(0.001));
  CHECK(m[1] == doctest::Approx(0.199).epsilon(0.002));
  CHECK(m[2] == doctest::Approx(0.019).epsilon(0.01));
  CHECK(m[3] == doctest::Approx(0.00248).epsilon(0.01));
}

TEST_CASE("synth count histogram and multi-label fraction") {
  SynthConfig c;
  c.num_samples = 10000;
  c.num_test_samples = 0;
  c.background_tokens = 2;
  const auto corpus = synthesize(c, 17);
  std::vector<double> hist(4, 0.0);
  std::vector<LabelList> golds;
  for (const auto& s : corpus.train.samples) {
    hist[static_cast<std::size_t>(count_class(static_cast<int>(s.labels.size())))] += 1.0 / 10000;
    golds.push_back(s.labels);
  }
  const double want[] = {0.779, 0.199, 0.019, 0.003};
  for (int k = 0; k < 4; ++k) CHECK(std::abs(hist[static_cast<std::size_t>(k)] - want[k]) <= 0.02);

  const double expected = (30831.0 + 2914.0 + 288.0 + 96.0) / 154604.0;
  CHECK(expected == doctest::Approx(0.2208).epsilon(0.001));
  const double frac = static_cast<double>(multi_label_slice(golds).size()) / 10000.0;
  CHECK(std::abs(frac - 0.221) <= 0.02);
}

TEST_CASE("synth is deterministic and signatures are exact without dropout") {
  SynthConfig c;
  c.num_labels = 6;
  c.num_samples = 300;
  c.num_test_samples = 20;
  const auto a = synthesize(c, 99), b = synthesize(c, 99);
  std::stringstream sa, sb;
  write_cases(sa, a.train);
  write_cases(sb, b.train);
  CHECK(sa.str() == sb.str());
  CHECK(a.knowledge.texts == b.knowledge.texts);

  for (const auto& s : a.train.samples) {
    const auto toks = tokenize(s.raw_text);
    const std::set<std::string> present(toks.begin(), toks.end());
    for (int l = 0; l < c.num_labels; ++l) {
      bool any = false;
      for (int slot = 0; slot < c.tokens_per_label; ++slot) any |= present.count(signature_token(c, l, slot)) > 0;
      const bool gold = std::find(s.labels.begin(), s.labels.end(), l) != s.labels.end();
      CHECK(any == gold);
    }
  }
}

TEST_CASE("encoding keeps label sets") {
  SynthConfig c;
  c.num_labels = 4;
  c.num_samples = 40;
  auto corpus = synthesize(c, 5);
  const auto v = build_vocabulary(corpus.train);
  encode_dataset(corpus.train, v);
  encode_dataset(corpus.test, v);
  for (const auto& s : corpus.train.samples) {
    CHECK_FALSE(s.tokens.empty());
    CHECK(std::is_sorted(s.labels.begin(), s.labels.end()));
  }
  CHECK_THROWS(build_vocabulary(corpus.test));
  // ids are stable for the same training data.
  CHECK(build_vocabulary(corpus.train).tokens() == v.tokens());
}

TEST_CASE("label list round-trip") {
  testing::TempDir dir("labels");
  {
    std::ofstream out(dir / "labels.txt");
    write_label_list(out, {"theft", "robbery"});
  }
  const auto set = read_label_list(dir / "labels.txt");
  CHECK(set.frozen());
  CHECK(set.names() == std::vector<std::string>{"theft", "robbery"});
}
