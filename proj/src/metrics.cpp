#include "trustguard/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "trustguard/error.hpp"

namespace trustguard {

void ConfusionMatrix::add(Level truth, Level predicted, std::size_t count) {
  if (truth >= k_ || predicted >= k_) fail(ErrorKind::Dimension, "confusion: level out of range");
  counts_[truth * k_ + predicted] += count;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.k_ != k_) fail(ErrorKind::Dimension, "confusion: class counts differ");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::size_t ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0}); }

std::size_t ConfusionMatrix::fp(Level c) const {
  std::size_t n = 0;
  for (Level t = 0; t < k_; ++t)
    if (t != c) n += at(t, c);
  return n;
}

std::size_t ConfusionMatrix::fn(Level c) const {
  std::size_t n = 0;
  for (Level p = 0; p < k_; ++p)
    if (p != c) n += at(c, p);
  return n;
}

Confusion ConfusionMatrix::binary(Level positive) const {
  Confusion c;
  c.tp = tp(positive);
  c.fp = fp(positive);
  c.fn = fn(positive);
  c.tn = total() - c.tp - c.fp - c.fn;
  return c;
}

double mcc(const Confusion& c) {
  const double tp = static_cast<double>(c.tp), tn = static_cast<double>(c.tn);
  const double fp = static_cast<double>(c.fp), fn = static_cast<double>(c.fn);
  const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (denom == 0.0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(denom);
}

double mcc(const ConfusionMatrix& m) {
  const std::size_t k = m.classes();
  double s = 0.0, correct = 0.0, sum_pt = 0.0, sum_pp = 0.0, sum_tt = 0.0;
  for (Level i = 0; i < k; ++i)
    for (Level j = 0; j < k; ++j) s += static_cast<double>(m.at(i, j));
  for (Level c = 0; c < k; ++c) {
    double pred = 0.0, truth = 0.0;
    for (Level o = 0; o < k; ++o) {
      pred += static_cast<double>(m.at(o, c));
      truth += static_cast<double>(m.at(c, o));
    }
    correct += static_cast<double>(m.at(c, c));
    sum_pt += pred * truth;
    sum_pp += pred * pred;
    sum_tt += truth * truth;
  }
  const double denom = std::sqrt(s * s - sum_pp) * std::sqrt(s * s - sum_tt);
  if (denom == 0.0) return 0.0;
  return (correct * s - sum_pt) / denom;
}

double auc(std::span<const double> scores, std::span<const std::uint8_t> positive) {
  if (scores.size() != positive.size()) fail(ErrorKind::Dimension, "auc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::size_t pos = 0;
  for (auto p : positive) pos += p != 0;
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0) fail(ErrorKind::Data, "auc: undefined with a single class in the truth");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;  // ranks i+1..j
    for (std::size_t q = i; q < j; ++q)
      if (positive[order[q]]) rank_sum += avg;
    i = j;
  }
  const double p = static_cast<double>(pos), q = static_cast<double>(neg);
  return (rank_sum - p * (p + 1) / 2.0) / (p * q);
}

double balanced_accuracy(const Confusion& c) {
  const double tpr = c.tp + c.fn ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  const double tnr = c.tn + c.fp ? static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp) : 0.0;
  return (tpr + tnr) / 2.0;
}

double balanced_accuracy(const ConfusionMatrix& m) {
  double total = 0.0;
  std::size_t present = 0;
  for (Level c = 0; c < m.classes(); ++c) {
    const std::size_t support = m.tp(c) + m.fn(c);
    if (support == 0) continue;
    total += static_cast<double>(m.tp(c)) / static_cast<double>(support);
    ++present;
  }
  return present ? total / static_cast<double>(present) : 0.0;
}

double f1_macro(const ConfusionMatrix& m) {
  double total = 0.0;
  for (Level c = 0; c < m.classes(); ++c) {
    const double tp = static_cast<double>(m.tp(c));
    const double denom = tp + (static_cast<double>(m.fp(c)) + static_cast<double>(m.fn(c))) / 2.0;
    total += denom > 0.0 ? tp / denom : 0.0;
  }
  return total / static_cast<double>(m.classes());
}

EdgeEvaluation evaluate_predictions(std::span<const double> probabilities, std::span<const Level> truths,
                                    std::size_t levels, Level positive_level) {
  if (probabilities.size() != truths.size() * levels) {
    fail(ErrorKind::Dimension, "evaluate: " + std::to_string(truths.size()) + " labels for " +
                                   std::to_string(probabilities.size()) + " probabilities");
  }
  EdgeEvaluation out{{}, ConfusionMatrix(levels)};
  for (std::size_t e = 0; e < truths.size(); ++e) {
    const auto row = probabilities.subspan(e * levels, levels);
    const auto pred = static_cast<Level>(std::max_element(row.begin(), row.end()) - row.begin());
    out.confusion.add(truths[e], pred);
  }
  auto auc_for = [&](Level c) {
    std::vector<double> s(truths.size());
    std::vector<std::uint8_t> p(truths.size());
    for (std::size_t e = 0; e < truths.size(); ++e) {
      s[e] = probabilities[e * levels + c];
      p[e] = truths[e] == c;
    }
    return auc(s, p);
  };
  if (levels == 2) {
    const Confusion c = out.confusion.binary(positive_level);
    out.values.mcc = mcc(c);
    out.values.ba = balanced_accuracy(c);
    out.values.auc = auc_for(positive_level);
  } else {
    out.values.mcc = mcc(out.confusion);
    out.values.ba = balanced_accuracy(out.confusion);
    double total = 0.0;
    std::size_t present = 0;
    for (Level c = 0; c < levels; ++c) {
      const std::size_t support = out.confusion.tp(c) + out.confusion.fn(c);
      if (support == 0 || support == truths.size()) continue;
      total += auc_for(c);
      ++present;
    }
    if (present == 0) fail(ErrorKind::Data, "auc: undefined with a single class in the truth");
    out.values.auc = total / static_cast<double>(present);
  }
  out.values.f1 = f1_macro(out.confusion);
  return out;
}

}  // namespace trustguard
