#pragma once

// Random instance builders and brute-force reference implementations shared
// by the unit tests and the acceptance binary. Nothing here calls into the
// library code it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "anchorcc/anchorcc.hpp"

namespace testing_support {

using anchorcc::Labels;
using anchorcc::Matrix;
using anchorcc::Rng;
using anchorcc::Vector;

inline Matrix gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  }
  return m;
}

inline Matrix uniform(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform();
  }
  return m;
}

// Row-stochastic n x m graph with about `nnz` nonzeros per row. Row c < m is
// concentrated on anchor c so no column is empty.
inline anchorcc::AnchorGraph sparse_graph(Rng& rng, Eigen::Index n, Eigen::Index m, int nnz = 3) {
  Matrix z = Matrix::Zero(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i < m) z(i, i) += 1.0 + rng.uniform();
    for (int t = 0; t < nnz; ++t) z(i, static_cast<Eigen::Index>(rng.index(m))) += rng.uniform();
    z.row(i) /= z.row(i).sum();
  }
  return {z};
}

inline Matrix perm_matrix(const std::vector<int>& a) {
  const auto m = static_cast<Eigen::Index>(a.size());
  Matrix p = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) p(i, a[i]) = 1.0;
  return p;
}

inline std::vector<int> random_perm(Rng& rng, int m) {
  std::vector<int> p(m);
  std::iota(p.begin(), p.end(), 0);
  for (int i = m - 1; i > 0; --i) std::swap(p[i], p[rng.index(static_cast<std::size_t>(i) + 1)]);
  return p;
}

// Best assignment by enumerating every permutation; the lexicographically
// first one wins among ties within `tie`.
inline std::pair<std::vector<int>, double> exhaustive_assignment(const Matrix& score,
                                                                 double tie = 0.0) {
  std::vector<int> p(score.rows());
  std::iota(p.begin(), p.end(), 0);
  std::vector<int> best;
  double best_value = -std::numeric_limits<double>::infinity();
  do {
    double value = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) value += score(i, p[i]);
    if (value > best_value + tie) {
      best_value = value;
      best = p;
    }
  } while (std::next_permutation(p.begin(), p.end()));
  return {best, best_value};
}

// Tr(Z1^T Z2 P) + lambda Tr(S1^T P^T S2 P) as explicit index sums.
inline double naive_qap(const Matrix& z1, const Matrix& z2, const Matrix& p, double lambda) {
  const Eigen::Index n = z1.rows();
  const Eigen::Index m = z1.cols();
  Matrix k(m, m), s1(m, m), s2(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) {
      double kab = 0.0, s1ab = 0.0, s2ab = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        kab += z1(i, a) * z2(i, b);
        s1ab += z1(i, a) * z1(i, b);
        s2ab += z2(i, a) * z2(i, b);
      }
      k(a, b) = kab;
      s1(a, b) = s1ab;
      s2(a, b) = s2ab;
    }
  }
  double feature = 0.0;
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) feature += k(a, b) * p(b, a);
  }
  double structure = 0.0;
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) {
      for (Eigen::Index c = 0; c < m; ++c) {
        for (Eigen::Index d = 0; d < m; ++d) structure += s1(a, b) * p(c, a) * s2(c, d) * p(d, b);
      }
    }
  }
  if (std::isinf(lambda)) return structure;
  return feature + lambda * structure;
}

inline double exhaustive_qap(const Matrix& z1, const Matrix& z2, double lambda) {
  std::vector<int> p(z1.cols());
  std::iota(p.begin(), p.end(), 0);
  double best = -std::numeric_limits<double>::infinity();
  const Matrix k = z1.transpose() * z2;
  const Matrix s1 = z1.transpose() * z1;
  const Matrix s2 = z2.transpose() * z2;
  do {
    // P(i, p[i]) = 1: Tr(K P) = sum_i K(p[i], i), Tr(S1 P^T S2 P) = sum S1(p[i], p[j]) S2(i, j)
    double feature = 0.0;
    double structure = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      feature += k(p[i], i);
      for (std::size_t j = 0; j < p.size(); ++j) structure += s1(p[i], p[j]) * s2(i, j);
    }
    best = std::max(best, feature + lambda * structure);
  } while (std::next_permutation(p.begin(), p.end()));
  return best;
}

// ---- clustering metrics by definition ----

inline int label_count(const Labels& l) {
  return std::set<int>(l.begin(), l.end()).size();
}

inline Labels compact(const Labels& l) {
  std::map<int, int> ids;
  Labels out;
  for (int x : l) out.push_back(ids.try_emplace(x, static_cast<int>(ids.size())).first->second);
  return out;
}

inline double brute_accuracy(const Labels& pred, const Labels& truth) {
  const Labels p = compact(pred);
  const Labels t = compact(truth);
  const int k = std::max(label_count(p), label_count(t));
  std::vector<int> map(k);
  std::iota(map.begin(), map.end(), 0);
  int best = 0;
  do {
    int hits = 0;
    for (std::size_t i = 0; i < p.size(); ++i) hits += map[p[i]] == t[i];
    best = std::max(best, hits);
  } while (std::next_permutation(map.begin(), map.end()));
  return static_cast<double>(best) / static_cast<double>(p.size());
}

inline double brute_nmi(const Labels& pred, const Labels& truth) {
  const double n = static_cast<double>(pred.size());
  std::map<int, int> ca, cb;
  std::map<std::pair<int, int>, int> joint;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ++ca[pred[i]];
    ++cb[truth[i]];
    ++joint[{pred[i], truth[i]}];
  }
  double ha = 0.0, hb = 0.0, mi = 0.0;
  for (const auto& [_, c] : ca) ha -= c / n * std::log(c / n);
  for (const auto& [_, c] : cb) hb -= c / n * std::log(c / n);
  for (const auto& [key, c] : joint) {
    mi += c / n * std::log((c / n) / ((ca[key.first] / n) * (cb[key.second] / n)));
  }
  if (ha <= 0.0 || hb <= 0.0) return 0.0;
  return mi / std::sqrt(ha * hb);
}

inline double brute_fscore(const Labels& pred, const Labels& truth) {
  double tp = 0.0, fp = 0.0, fn = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t j = i + 1; j < pred.size(); ++j) {
      const bool same_pred = pred[i] == pred[j];
      const bool same_true = truth[i] == truth[j];
      tp += same_pred && same_true;
      fp += same_pred && !same_true;
      fn += !same_pred && same_true;
    }
  }
  if (tp + fp == 0.0 && tp + fn == 0.0) return 1.0;
  if (tp == 0.0) return 0.0;
  const double precision = tp / (tp + fp);
  const double recall = tp / (tp + fn);
  return 2.0 * precision * recall / (precision + recall);
}

inline Labels random_labels(Rng& rng, std::size_t n, int k) {
  Labels l(n);
  for (auto& x : l) x = static_cast<int>(rng.index(static_cast<std::size_t>(k)));
  return l;
}

// ---- doubly stochastic affine projection as a KKT system ----
// min ||X - Q||^2 s.t. X 1 = 1, X^T 1 = 1 (last column constraint dropped as
// redundant), solved densely.
inline Matrix kkt_affine_projection(const Matrix& q) {
  const Eigen::Index m = q.rows();
  const Eigen::Index vars = m * m;
  const Eigen::Index cons = 2 * m - 1;
  Matrix kkt = Matrix::Zero(vars + cons, vars + cons);
  Vector rhs = Vector::Zero(vars + cons);
  auto idx = [m](Eigen::Index i, Eigen::Index j) { return i * m + j; };
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      kkt(idx(i, j), idx(i, j)) = 2.0;
      rhs[idx(i, j)] = 2.0 * q(i, j);
    }
  }
  Eigen::Index c = vars;
  for (Eigen::Index i = 0; i < m; ++i, ++c) {
    for (Eigen::Index j = 0; j < m; ++j) kkt(c, idx(i, j)) = kkt(idx(i, j), c) = 1.0;
    rhs[c] = 1.0;
  }
  for (Eigen::Index j = 0; j + 1 < m; ++j, ++c) {
    for (Eigen::Index i = 0; i < m; ++i) kkt(c, idx(i, j)) = kkt(idx(i, j), c) = 1.0;
    rhs[c] = 1.0;
  }
  const Vector sol = kkt.fullPivLu().solve(rhs);
  Matrix out(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) out(i, j) = sol[idx(i, j)];
  }
  return out;
}

}  // namespace testing_support
