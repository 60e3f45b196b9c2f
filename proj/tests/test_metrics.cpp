#include <cmath>
#include <random>

#include "doctest.h"
#include "trustguard/error.hpp"
#include "trustguard/metrics.hpp"

using namespace trustguard;

namespace {

struct Instance {
  std::vector<Level> truth, pred;
};

Instance random_instance(std::mt19937_64& rng, std::size_t classes) {
  std::uniform_int_distribution<std::size_t> len(1, 60);
  std::uniform_int_distribution<Level> cls(0, static_cast<Level>(classes - 1));
  std::bernoulli_distribution skew(0.3);
  Instance in;
  const std::size_t n = len(rng);
  for (std::size_t i = 0; i < n; ++i) {
    // Some instances collapse predictions to one class to hit degenerate cases.
    in.truth.push_back(cls(rng));
    in.pred.push_back(skew(rng) ? 0 : cls(rng));
  }
  return in;
}

ConfusionMatrix confusion_of(const Instance& in, std::size_t classes) {
  ConfusionMatrix m(classes);
  for (std::size_t i = 0; i < in.truth.size(); ++i) m.add(in.truth[i], in.pred[i]);
  return m;
}

// Pearson correlation of the 0/1 indicator vectors.
double pearson_mcc(const Instance& in) {
  const double n = static_cast<double>(in.truth.size());
  double st = 0, sp = 0, stt = 0, spp = 0, stp = 0;
  for (std::size_t i = 0; i < in.truth.size(); ++i) {
    const double t = in.truth[i] == 1, p = in.pred[i] == 1;
    st += t;
    sp += p;
    stt += t * t;
    spp += p * p;
    stp += t * p;
  }
  const double vt = n * stt - st * st, vp = n * spp - sp * sp;
  if (vt == 0 || vp == 0) return 0.0;
  return (n * stp - st * sp) / std::sqrt(vt * vp);
}

double pairwise_auc(const std::vector<double>& s, const std::vector<std::uint8_t>& pos) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!pos[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (pos[j]) continue;
      pairs += 1;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

}  // namespace

TEST_CASE("mcc examples") {
  CHECK(mcc(Confusion{5, 5, 0, 0}) == 1.0);
  CHECK(mcc(Confusion{3, 4, 1, 2}) == doctest::Approx(10.0 / std::sqrt(600.0)).epsilon(1e-15));
  CHECK(mcc(Confusion{6, 0, 4, 0}) == 0.0);
  CHECK(mcc(Confusion{0, 0, 0, 0}) == 0.0);
}

TEST_CASE("auc examples") {
  const double s[] = {0.9, 0.4, 0.5, 0.1};
  const std::uint8_t p[] = {1, 1, 0, 0};
  CHECK(auc(s, p) == doctest::Approx(0.75).epsilon(1e-15));
  const double sep[] = {0.9, 0.8, 0.2, 0.1};
  CHECK(auc(sep, p) == 1.0);
  const double tied[] = {0.3, 0.3, 0.3, 0.3};
  CHECK(auc(tied, p) == 0.5);
  const std::uint8_t one_class[] = {1, 1, 1, 1};
  CHECK_THROWS_AS(auc(s, one_class), Error);
}

TEST_CASE("balanced accuracy examples") {
  CHECK(balanced_accuracy(Confusion{6, 8, 2, 4}) == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(balanced_accuracy(Confusion{5, 7, 0, 0}) == 1.0);
  std::mt19937_64 rng(3);
  std::bernoulli_distribution coin(0.5);
  Confusion c;
  for (int i = 0; i < 100000; ++i) {
    const bool truth = i % 2 == 0, guess = coin(rng);
    if (truth && guess) ++c.tp;
    else if (truth) ++c.fn;
    else if (guess) ++c.fp;
    else ++c.tn;
  }
  CHECK(std::abs(balanced_accuracy(c) - 0.5) < 0.01);
}

TEST_CASE("f1 macro examples") {
  ConfusionMatrix m(2);
  // class 1: TP 3, FP 1, FN 2 ; class 0: TP 4
  m.add(1, 1, 3);
  m.add(0, 1, 1);
  m.add(1, 0, 2);
  m.add(0, 0, 4);
  const double f1_1 = 3.0 / (3.0 + 1.5);
  CHECK(f1_1 == doctest::Approx(0.6667).epsilon(1e-4));
  const double f1_0 = 4.0 / (4.0 + 1.5);
  CHECK(f1_macro(m) == doctest::Approx((f1_0 + f1_1) / 2).epsilon(1e-15));
  ConfusionMatrix perfect(2);
  perfect.add(0, 0, 3);
  perfect.add(1, 1, 2);
  CHECK(f1_macro(perfect) == 1.0);
  ConfusionMatrix absent(3);  // class 2 never true, never predicted
  absent.add(0, 0, 3);
  absent.add(1, 1, 2);
  CHECK(f1_macro(absent) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("metrics agree with brute-force oracles on 1000 random instances") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const Instance in = random_instance(rng, 2);
    const ConfusionMatrix m = confusion_of(in, 2);
    // Brute-force counts.
    Confusion c;
    for (std::size_t i = 0; i < in.truth.size(); ++i) {
      const bool t = in.truth[i] == 1, p = in.pred[i] == 1;
      c.tp += t && p;
      c.tn += !t && !p;
      c.fp += !t && p;
      c.fn += t && !p;
    }
    const Confusion b = m.binary(1);
    CHECK(b.tp == c.tp);
    CHECK(b.tn == c.tn);
    CHECK(b.fp == c.fp);
    CHECK(b.fn == c.fn);
    CHECK(mcc(b) == mcc(c));
    CHECK(std::abs(mcc(b) - pearson_mcc(in)) < 1e-12);
    CHECK(std::abs(mcc(m) - mcc(b)) < 1e-12);
    // BA from per-class recall.
    double rec = 0;
    int present = 0;
    for (Level cl = 0; cl < 2; ++cl) {
      std::size_t hit = 0, support = 0;
      for (std::size_t i = 0; i < in.truth.size(); ++i) {
        if (in.truth[i] != cl) continue;
        ++support;
        hit += in.pred[i] == cl;
      }
      if (support) {
        rec += static_cast<double>(hit) / static_cast<double>(support);
        ++present;
      }
    }
    if (present == 2) CHECK(balanced_accuracy(b) == rec / 2);
    // F1 per class from explicit counting.
    double f1 = 0;
    for (Level cl = 0; cl < 2; ++cl) {
      double tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < in.truth.size(); ++i) {
        tp += in.truth[i] == cl && in.pred[i] == cl;
        fp += in.truth[i] != cl && in.pred[i] == cl;
        fn += in.truth[i] == cl && in.pred[i] != cl;
      }
      f1 += tp + (fp + fn) / 2 > 0 ? tp / (tp + (fp + fn) / 2) : 0.0;
    }
    CHECK(f1_macro(m) == f1 / 2);
    // AUC with heavy ties (scores on a coarse grid).
    std::uniform_int_distribution<int> grid(0, 5);
    std::vector<double> s(in.truth.size());
    std::vector<std::uint8_t> pos(in.truth.size());
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = grid(rng) / 5.0;
      pos[i] = in.truth[i] == 1;
      has_pos = has_pos || pos[i];
      has_neg = has_neg || !pos[i];
    }
    if (has_pos && has_neg) CHECK(std::abs(auc(s, pos) - pairwise_auc(s, pos)) < 1e-12);
  }
}

TEST_CASE("metric ranges (property)") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t k = 2 + trial % 3;
    const Instance in = random_instance(rng, k);
    const ConfusionMatrix m = confusion_of(in, k);
    CHECK(mcc(m) >= -1.0 - 1e-12);
    CHECK(mcc(m) <= 1.0 + 1e-12);
    CHECK(balanced_accuracy(m) >= 0.0);
    CHECK(balanced_accuracy(m) <= 1.0);
    CHECK(f1_macro(m) >= 0.0);
    CHECK(f1_macro(m) <= 1.0);
  }
}

TEST_CASE("evaluate_predictions uses the Trust probability for AUC") {
  const double probs[] = {0.2, 0.8, 0.7, 0.3, 0.4, 0.6, 0.9, 0.1};
  const Level truths[] = {1, 0, 1, 0};
  const auto ev = evaluate_predictions(probs, truths, 2, 1);
  CHECK(ev.values.auc == 1.0);
  CHECK(ev.values.mcc == 1.0);
  CHECK(ev.confusion.total() == 4);
  const double four[] = {0.7, 0.1, 0.1, 0.1, 0.1, 0.7, 0.1, 0.1, 0.1, 0.1, 0.7, 0.1};
  const Level t4[] = {0, 1, 2};
  const auto ev4 = evaluate_predictions(four, t4, 4, 3);
  CHECK(ev4.values.mcc == doctest::Approx(1.0));
  CHECK(ev4.values.auc == 1.0);
}
