#pragma once

// External clustering metrics: best-map accuracy, NMI normalized by the
// geometric mean of the entropies, and pairwise F1.

#include <cmath>
#include <map>
#include <sstream>
#include <string>

#include "anchorcc/numerics.hpp"

namespace anchorcc {

struct MetricsReport {
  double acc = 0.0;
  double nmi = 0.0;
  double fscore = 0.0;
  std::size_t n = 0;
  int k_pred = 0;
  int k_true = 0;

  std::string to_key_value() const;
};

namespace detail {

// Relabels to 0..k-1 in order of first appearance.
inline Labels compact_labels(const Labels& labels, int& k) {
  std::map<int, int> ids;
  Labels out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto it = ids.try_emplace(labels[i], static_cast<int>(ids.size())).first;
    out[i] = it->second;
  }
  k = static_cast<int>(ids.size());
  return out;
}

struct Contingency {
  Matrix counts;  // k_pred x k_true
  int k_pred = 0;
  int k_true = 0;
};

inline Contingency contingency(const Labels& pred, const Labels& truth, const char* who) {
  require(!pred.empty(), std::string(who) + ": empty labeling");
  require(pred.size() == truth.size(), std::string(who) + ": label lengths differ");
  Contingency c;
  const Labels p = compact_labels(pred, c.k_pred);
  const Labels t = compact_labels(truth, c.k_true);
  c.counts = Matrix::Zero(c.k_pred, c.k_true);
  for (std::size_t i = 0; i < p.size(); ++i) c.counts(p[i], t[i]) += 1.0;
  return c;
}

inline double pairs(double count) { return count * (count - 1.0) / 2.0; }

}  // namespace detail

/// Fraction of samples agreeing under the best bijection between predicted
/// and true labels.
inline double accuracy(const Labels& pred, const Labels& truth) {
  const auto c = detail::contingency(pred, truth, "accuracy");
  const Eigen::Index k = std::max(c.k_pred, c.k_true);
  Matrix square = Matrix::Zero(k, k);
  square.topLeftCorner(c.k_pred, c.k_true) = c.counts;
  return linear_assignment_max(square).total_score / static_cast<double>(pred.size());
}

inline double nmi(const Labels& pred, const Labels& truth) {
  const auto c = detail::contingency(pred, truth, "nmi");
  const double n = static_cast<double>(pred.size());
  const Vector row = c.counts.rowwise().sum();
  const Vector col = c.counts.colwise().sum().transpose();
  auto entropy = [n](const Vector& marginal) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < marginal.size(); ++i) {
      if (marginal[i] > 0.0) h -= marginal[i] / n * std::log(marginal[i] / n);
    }
    return h;
  };
  const double h_pred = entropy(row);
  const double h_true = entropy(col);
  if (h_pred <= 0.0 || h_true <= 0.0) return 0.0;
  double mutual = 0.0;
  for (Eigen::Index i = 0; i < c.counts.rows(); ++i) {
    for (Eigen::Index j = 0; j < c.counts.cols(); ++j) {
      const double nij = c.counts(i, j);
      if (nij > 0.0) mutual += nij / n * std::log(n * nij / (row[i] * col[j]));
    }
  }
  return std::clamp(mutual / std::sqrt(h_pred * h_true), 0.0, 1.0);
}

/// F1 of same-cluster decisions over all sample pairs, from contingency
/// counts. Two all-singleton labelings score 1.
inline double pairwise_fscore(const Labels& pred, const Labels& truth) {
  require(pred.size() >= 2, "pairwise_fscore: need at least two samples");
  const auto c = detail::contingency(pred, truth, "pairwise_fscore");
  double together = 0.0;
  for (Eigen::Index i = 0; i < c.counts.size(); ++i) together += detail::pairs(c.counts.data()[i]);
  double pred_pairs = 0.0;
  const Vector row = c.counts.rowwise().sum();
  for (Eigen::Index i = 0; i < row.size(); ++i) pred_pairs += detail::pairs(row[i]);
  double true_pairs = 0.0;
  const Vector col = c.counts.colwise().sum().transpose();
  for (Eigen::Index j = 0; j < col.size(); ++j) true_pairs += detail::pairs(col[j]);
  if (pred_pairs == 0.0 && true_pairs == 0.0) return 1.0;
  if (together == 0.0) return 0.0;
  const double precision = together / pred_pairs;
  const double recall = together / true_pairs;
  return 2.0 * precision * recall / (precision + recall);
}

inline MetricsReport evaluate(const Labels& pred, const Labels& truth) {
  MetricsReport r;
  r.acc = accuracy(pred, truth);
  r.nmi = nmi(pred, truth);
  r.fscore = pairwise_fscore(pred, truth);
  r.n = pred.size();
  detail::compact_labels(pred, r.k_pred);
  detail::compact_labels(truth, r.k_true);
  return r;
}

inline std::string MetricsReport::to_key_value() const {
  std::ostringstream os;
  os.precision(17);
  os << "# metrics: acc=best-map accuracy; nmi=I/sqrt(H_pred*H_true); fscore=pairwise F1\n"
     << "acc=" << acc << "\n"
     << "nmi=" << nmi << "\n"
     << "fscore=" << fscore << "\n"
     << "n=" << n << "\n"
     << "k_pred=" << k_pred << "\n"
     << "k_true=" << k_true << "\n";
  return os.str();
}

}  // namespace anchorcc
