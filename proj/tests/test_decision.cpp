#include "doctest.h"

#include <algorithm>
#include <set>

#include "chargepred/decision.hpp"
#include "chargepred/nln.hpp"
#include "helpers.hpp"

using namespace chargepred;
using testing::vec;

namespace {

// Full sort of (−p, index) pairs, then keep k and sort by index.
std::vector<int> full_sort_topk(const Vector<double>& p, int k) {
  std::vector<std::pair<double, int>> keyed;
  for (Index j = 0; j < p.size(); ++j) keyed.emplace_back(-p(j), static_cast<int>(j));
  std::sort(keyed.begin(), keyed.end());
  std::vector<int> out;
  for (int i = 0; i < k; ++i) out.push_back(keyed[static_cast<std::size_t>(i)].second);
  std::sort(out.begin(), out.end());
  return out;
}

bool subset(const std::vector<int>& a, const std::vector<int>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

// Coarse values so ties are common.
Vector<double> tied_probs(std::mt19937_64& rng, Index n) {
  std::uniform_int_distribution<int> q(0, 10);
  Vector<double> p(n);
  for (Index j = 0; j < n; ++j) p(j) = q(rng) / 10.0;
  return p;
}

}  // namespace

TEST_CASE("decide_nln examples") {
  CHECK(decide_nln(vec({0.9, 0.1, 0.8, 0.05}), 2) == std::vector<int>{0, 2});
  CHECK(decide_nln(vec({0.9, 0.1, 0.8, 0.05}), 4) == std::vector<int>{0, 1, 2, 3});
  CHECK(decide_nln(vec({0.1, 0.5, 0.2, 0.5}), 1) == std::vector<int>{1});
  CHECK_THROWS_AS(decide_nln(vec({0.1, 0.2}), 0), PreconditionError);
  CHECK_THROWS_AS(decide_nln(vec({0.1, 0.2}), 3), PreconditionError);
}

TEST_CASE("decide_threshold examples") {
  CHECK(decide_threshold(vec({0.9, 0.4}), 0.5) == std::vector<int>{0});
  CHECK(decide_threshold(vec({0.9, 0.4}), 1.0) == std::vector<int>{0});
  CHECK(decide_threshold(vec({0.3, 0.6, 0.6}), 1.0) == std::vector<int>{1});
  CHECK(decide_threshold(vec({0.5, 0.5}), 0.5) == std::vector<int>{0});
}

TEST_CASE("decide_threshold matches set comprehension") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<int> dim(1, 15);
  for (int t = 0; t < 1000; ++t) {
    const Index L = dim(rng);
    const auto p = t % 2 ? testing::random_probs(rng, L) : tied_probs(rng, L);
    const double th = t % 5 == 0 ? std::round(u(rng) * 10) / 10 : u(rng);
    std::vector<int> want;
    for (Index j = 0; j < L; ++j)
      if (p(j) > th) want.push_back(static_cast<int>(j));
    if (want.empty()) {
      int best = 0;
      for (Index j = 1; j < L; ++j)
        if (p(j) > p(best)) best = static_cast<int>(j);
      want = {best};
    }
    CHECK(decide_threshold(p, th) == want);
  }
}

TEST_CASE("decide_topk matches a full-sort oracle and decide_nln") {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> dim(1, 12);
  for (int t = 0; t < 1000; ++t) {
    const Index L = dim(rng);
    const auto p = t % 2 ? testing::random_probs(rng, L) : tied_probs(rng, L);
    const int k = 1 + static_cast<int>(rng() % static_cast<unsigned>(L));
    const auto got = decide_topk(p, k);
    CHECK(got.size() == static_cast<std::size_t>(k));
    CHECK(got == full_sort_topk(p, k));
    CHECK(got == decide_nln(p, k));
  }
  CHECK(decide_topk(vec({0.2, 0.9, 0.4}), 1) == std::vector<int>{1});
}

TEST_CASE("top-n sets nest") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 300; ++t) {
    const auto p = tied_probs(rng, 8);
    for (int n = 1; n < 8; ++n) CHECK(subset(decide_nln(p, n), decide_nln(p, n + 1)));
  }
}

TEST_CASE("threshold sets are antitone in t") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 500; ++t) {
    const auto p = tied_probs(rng, 7);
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    CHECK(subset(threshold_set(p, b), threshold_set(p, a)));
  }
}

TEST_CASE("strategies are invariant under increasing transforms") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 300; ++t) {
    const auto p = tied_probs(rng, 6);
    const Vector<double> q = (p.array() * p.array() * 0.5 + 0.1).matrix();  // increasing on [0, 1]
    for (int k = 1; k <= 6; ++k) CHECK(decide_topk(p, k) == decide_topk(q, k));
    CHECK(rank_labels(p) == rank_labels(q));
    // threshold t on p corresponds to g(t) on q.
    for (double th : {0.2, 0.5, 0.8}) CHECK(decide_threshold(p, th) == decide_threshold(q, th * th * 0.5 + 0.1));
  }
}

TEST_CASE("decide dispatches and clamps n") {
  NlnConfig c;
  c.hidden = 4;
  auto m = make_nln(2, c);
  for (auto& l : m.net.layers) {
    l.weights.setZero();
    l.bias.setZero();
  }
  m.net.layers[1].bias(3) = 5.0;  // always predicts 4 labels
  const auto p = vec({0.3, 0.8});
  const auto d = decide(Strategy::nln(), p, &m);
  CHECK(d.n_used == 2);
  CHECK(d.predicted == std::vector<int>{0, 1});
  CHECK(decide(Strategy::global_threshold(0.5), p).predicted == std::vector<int>{1});
  CHECK(decide(Strategy::top_k(1), p).predicted == std::vector<int>{1});
  CHECK_FALSE(decide(Strategy::top_k(1), p).n_used.has_value());
  CHECK_THROWS_AS(decide(Strategy::nln(), p), PreconditionError);
  CHECK(Strategy::global_threshold(0.5).label() == "threshold(0.5)");
  CHECK(Strategy::top_k(2).name() == "topk");
}

TEST_CASE("decisions are deterministic") {
  std::mt19937_64 rng(6);
  const auto p = tied_probs(rng, 10);
  CHECK(decide_nln(p, 3) == decide_nln(p, 3));
  CHECK(decide_threshold(p, 0.4) == decide_threshold(p, 0.4));
}
