#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "trustguard/graph.hpp"

namespace trustguard {

// Binary counts with the Trust level as the positive class.
struct Confusion {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
};

// counts[truth * k + predicted]
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes = 2) : k_(classes), counts_(classes * classes, 0) {}

  void add(Level truth, Level predicted, std::size_t count = 1);
  void merge(const ConfusionMatrix& other);
  std::size_t classes() const { return k_; }
  std::size_t at(Level truth, Level predicted) const { return counts_[truth * k_ + predicted]; }
  std::size_t total() const;
  std::size_t tp(Level c) const { return at(c, c); }
  std::size_t fp(Level c) const;
  std::size_t fn(Level c) const;
  // Binary view, `positive` as the positive class.
  Confusion binary(Level positive) const;

 private:
  std::size_t k_;
  std::vector<std::size_t> counts_;
};

// (TP TN - FP FN) / sqrt((TP+FP)(TP+FN)(TN+FP)(TN+FN)); 0 when the denominator is 0.
double mcc(const Confusion& c);
// Multi-class generalisation (Gorodkin's R_K); equals the binary form for k = 2.
double mcc(const ConfusionMatrix& m);

// Rank formula with average ranks for ties. Throws a Data error when either
// class is absent.
double auc(std::span<const double> scores, std::span<const std::uint8_t> positive);

// (TPR + TNR) / 2.
double balanced_accuracy(const Confusion& c);
// Mean per-class recall over classes present in the truth.
double balanced_accuracy(const ConfusionMatrix& m);

// Unweighted mean over classes of TP / (TP + (FP + FN) / 2); an all-zero class scores 0.
double f1_macro(const ConfusionMatrix& m);

struct MetricValues {
  double mcc = 0.0;
  double auc = 0.0;
  double ba = 0.0;
  double f1 = 0.0;
};

struct EdgeEvaluation {
  MetricValues values;
  ConfusionMatrix confusion;
};

// probabilities: row-major edges x levels. Binary AUC scores by the
// probability of `positive_level`; with more levels AUC is the one-vs-rest
// macro average over levels present in the truth.
EdgeEvaluation evaluate_predictions(std::span<const double> probabilities, std::span<const Level> truths,
                                    std::size_t levels, Level positive_level);

}  // namespace trustguard
