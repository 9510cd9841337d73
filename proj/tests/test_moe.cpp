#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "moedti/moe.hpp"
#include "moedti/ops.hpp"
#include "moedti/rng.hpp"

using namespace moedti;

TEST_CASE("classifier outputs are probabilities and depend on the input") {
  Rng rng(61);
  MlpClassifier clf(6, 10, rng);
  auto x = Tensor::uniform({5, 6}, -2.0, 2.0, rng);
  auto p = clf.probability(x);
  REQUIRE(p->shape == Shape{5, 1});
  for (double v : p->data) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  auto y = Tensor::uniform({5, 6}, -2.0, 2.0, rng);
  auto q = clf.probability(y);
  bool any_diff = false;
  for (int64_t i = 0; i < 5; ++i) any_diff |= p->at(i, 0) != q->at(i, 0);
  CHECK(any_diff);
  CHECK_THROWS_AS(clf.probability(Tensor::uniform({2, 5}, -1, 1, rng)), ShapeError);
}

TEST_CASE("gate weights are the first column of a two-logit softmax") {
  Rng rng(62);
  GatingModel gate(4, 8, rng);
  auto x = Tensor::uniform({7, 4}, -3.0, 3.0, rng);
  auto w = gate.weight(x);
  REQUIRE(w->shape == Shape{7, 1});
  for (double v : w->data) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("blend reproduces hand values and stays inside the expert envelope") {
  auto w = Tensor::create({2, 1}, {0.25, 0.5});
  auto pe = Tensor::create({2, 1}, {0.8, 0.1});
  auto pi = Tensor::create({2, 1}, {0.4, 0.9});
  auto p = blend(w, pe, pi);
  CHECK(p->at(0, 0) == doctest::Approx(0.25 * 0.8 + 0.75 * 0.4));
  CHECK(p->at(1, 0) == doctest::Approx(0.5 * 0.1 + 0.5 * 0.9));

  Rng rng(63);
  for (int trial = 0; trial < 1000; ++trial) {
    auto wt = Tensor::uniform({1, 1}, 0.0, 1.0, rng);
    auto a = Tensor::uniform({1, 1}, 0.001, 0.999, rng);
    auto b = Tensor::uniform({1, 1}, 0.001, 0.999, rng);
    double out = blend(wt, a, b)->at(0, 0);
    double lo = std::min(a->at(0, 0), b->at(0, 0));
    double hi = std::max(a->at(0, 0), b->at(0, 0));
    CHECK(out >= lo);
    CHECK(out <= hi);
  }
}

TEST_CASE("degenerate gate weights hand over to a single expert bit-exactly") {
  auto pe = Tensor::create({3, 1}, {0.8125, 0.25, 0.6875});
  auto pi = Tensor::create({3, 1}, {0.125, 0.9375, 0.5});
  auto all_ex = blend(Tensor::full({3, 1}, 1.0), pe, pi);
  auto all_in = blend(Tensor::full({3, 1}, 0.0), pe, pi);
  CHECK(all_ex->data == pe->data);
  CHECK(all_in->data == pi->data);
}

TEST_CASE("blend is differentiable through weight and both experts") {
  Rng rng(64);
  auto w = Tensor::uniform({4, 1}, 0.1, 0.9, rng, true);
  auto pe = Tensor::uniform({4, 1}, 0.1, 0.9, rng, true);
  auto pi = Tensor::uniform({4, 1}, 0.1, 0.9, rng, true);
  Tape::current().backward(ops::sum(blend(w, pe, pi)));
  CHECK_FALSE(w->grad.empty());
  CHECK_FALSE(pe->grad.empty());
  CHECK_FALSE(pi->grad.empty());
  // d(blend)/d(p_ex) = w, d/d(p_in) = 1 - w, d/dw = p_ex - p_in.
  for (int64_t i = 0; i < 4; ++i) {
    CHECK(pe->grad[i] == doctest::Approx(w->data[i]));
    CHECK(pi->grad[i] == doctest::Approx(1.0 - w->data[i]));
    CHECK(w->grad[i] == doctest::Approx(pe->data[i] - pi->data[i]));
  }
}

TEST_CASE("classifier and gate parameters round-trip by name") {
  Rng rng(65);
  MlpClassifier a(5, 7, rng);
  Rng rng2(66);
  MlpClassifier b(5, 7, rng2);
  auto x = Tensor::uniform({3, 5}, -1.0, 1.0, rng);
  CHECK(a.probability(x)->data != b.probability(x)->data);
  b.load_parameters("gex", a.named_parameters("gex"));
  CHECK(a.probability(x)->data == b.probability(x)->data);
  CHECK(a.parameters().size() == 4);

  GatingModel g1(5, 6, rng);
  Rng rng3(67);
  GatingModel g2(5, 6, rng3);
  CHECK(g1.weight(x)->data != g2.weight(x)->data);
  g2.load_parameters(g1.named_parameters());
  CHECK(g1.weight(x)->data == g2.weight(x)->data);
}
