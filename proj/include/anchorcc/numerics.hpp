#pragma once

// Dense numerical kernels shared by the rest of the library: simplex
// projection, truncated SVD, linear assignment with a deterministic
// tie-break, k-means, and a few helpers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace anchorcc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Labels = std::vector<int>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw Error(message);
}

inline void require_finite(const Matrix& m, const std::string& what) {
  if (!m.allFinite()) throw Error(what + ": non-finite entry");
}

inline void require_finite(const Vector& v, const std::string& what) {
  if (!v.allFinite()) throw Error(what + ": non-finite entry");
}

// Seeded generator with hand-rolled distributions so that sequences do not
// depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return std::min(i, n - 1);
  }

  // Standard normal via Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  std::uint64_t next() { return engine_(); }

  // Fisher-Yates permutation of {0..n-1}.
  std::vector<int> permutation(std::size_t n) {
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[index(i)]);
    return p;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Derives an independent stream seed from a base seed and a salt.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Euclidean projection onto the probability simplex {z >= 0, sum z = 1},
/// by sorting and thresholding.
inline Vector project_simplex(const Vector& y) {
  require(y.size() > 0, "project_simplex: empty vector");
  require_finite(y, "project_simplex");
  const Eigen::Index m = y.size();
  std::vector<double> sorted(y.data(), y.data() + m);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    cumulative += sorted[j];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) theta = candidate;
  }
  Vector z = (y.array() - theta).max(0.0).matrix();
  // Renormalize away rounding drift; the support is already correct.
  const double total = z.sum();
  if (total > 0.0) z /= total;
  return z;
}

struct SvdResult {
  Matrix U;
  Vector sigma;
  Matrix V;
};

/// Rank-r truncated SVD. Singular vectors are sign-normalized so the entry
/// of largest magnitude in each column of U is positive.
inline SvdResult truncated_svd(const Matrix& m, Eigen::Index r) {
  const Eigen::Index min_dim = std::min(m.rows(), m.cols());
  require(r > 0 && r <= min_dim, "truncated_svd: rank must be in [1, min(rows, cols)]");
  require_finite(m, "truncated_svd");
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdResult out{svd.matrixU().leftCols(r), svd.singularValues().head(r),
                svd.matrixV().leftCols(r)};
  for (Eigen::Index j = 0; j < r; ++j) {
    Eigen::Index arg = 0;
    out.U.col(j).cwiseAbs().maxCoeff(&arg);
    if (out.U(arg, j) < 0.0) {
      out.U.col(j) *= -1.0;
      out.V.col(j) *= -1.0;
    }
  }
  return out;
}

struct AssignmentResult {
  // assignment[row] = column
  std::vector<int> assignment;
  double total_score = 0.0;
};

namespace detail {

// Hungarian algorithm (shortest augmenting paths with potentials) for a
// square cost matrix; minimizes. Returns row->column and the dual potentials.
struct HungarianSolution {
  std::vector<int> row_to_col;
  std::vector<double> u;
  std::vector<double> v;
};

inline HungarianSolution hungarian_min(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  HungarianSolution out;
  out.row_to_col.assign(n, -1);
  for (int j = 1; j <= n; ++j) out.row_to_col[p[j] - 1] = j - 1;
  out.u.assign(u.begin() + 1, u.end());
  out.v.assign(v.begin() + 1, v.end());
  return out;
}

// Among all perfect matchings on the tight edges, find the lexicographically
// smallest row->column vector, starting from an existing perfect matching.
inline std::vector<int> lexicographic_matching(const std::vector<std::vector<char>>& tight,
                                               std::vector<int> row_to_col) {
  const int n = static_cast<int>(row_to_col.size());
  std::vector<int> col_to_row(n);
  for (int i = 0; i < n; ++i) col_to_row[row_to_col[i]] = i;
  std::vector<char> col_fixed(n, 0);

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!tight[i][j] || col_fixed[j]) continue;
      if (row_to_col[i] == j) break;
      // Row r currently owns column j; look for an alternating path from r
      // to the column that row i gives up, through unfixed rows (> i).
      const int target = row_to_col[i];
      const int start = col_to_row[j];
      std::vector<int> parent_col(n, -1);  // column by which a row was reached
      std::vector<char> seen_row(n, 0);
      std::vector<int> prev_row(n, -1);
      std::queue<int> frontier;
      frontier.push(start);
      seen_row[start] = 1;
      int found_row = -1;
      while (!frontier.empty() && found_row < 0) {
        const int r = frontier.front();
        frontier.pop();
        for (int c = 0; c < n; ++c) {
          if (!tight[r][c] || col_fixed[c] || c == j || c == row_to_col[r]) continue;
          if (c == target) {
            found_row = r;
            break;
          }
          const int next = col_to_row[c];
          if (next == i || seen_row[next]) continue;
          seen_row[next] = 1;
          prev_row[next] = r;
          parent_col[next] = c;
          frontier.push(next);
        }
      }
      if (found_row < 0) continue;
      // Rotate: each row on the path takes the column recorded for it.
      std::vector<std::pair<int, int>> moves;
      moves.emplace_back(found_row, target);
      for (int r = found_row; r != start; r = prev_row[r]) {
        moves.emplace_back(prev_row[r], parent_col[r]);
      }
      moves.emplace_back(i, j);
      for (auto [row, col] : moves) {
        row_to_col[row] = col;
        col_to_row[col] = row;
      }
      break;
    }
    col_fixed[row_to_col[i]] = 1;
  }
  return row_to_col;
}

}  // namespace detail

/// Maximum-score bijection between rows and columns of a square matrix.
/// Among optimal assignments the lexicographically smallest one is returned.
inline AssignmentResult linear_assignment_max(const Matrix& score) {
  require(score.rows() == score.cols(), "linear_assignment_max: matrix must be square");
  require_finite(score, "linear_assignment_max");
  const int n = static_cast<int>(score.rows());
  AssignmentResult out;
  if (n == 0) return out;

  const Matrix cost = -score;
  auto solution = detail::hungarian_min(cost);

  const double scale = std::max(1.0, score.cwiseAbs().maxCoeff());
  const double tol = 1e-9 * scale;
  std::vector<std::vector<char>> tight(n, std::vector<char>(n, 0));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      tight[i][j] = cost(i, j) - solution.u[i] - solution.v[j] <= tol;
    }
    tight[i][solution.row_to_col[i]] = 1;
  }
  out.assignment = detail::lexicographic_matching(tight, std::move(solution.row_to_col));
  for (int i = 0; i < n; ++i) out.total_score += score(i, out.assignment[i]);
  return out;
}

/// ||S1 (x) S2||_F = ||S1||_F * ||S2||_F, without forming the Kronecker product.
inline double kron_frobenius_norm(const Matrix& s1, const Matrix& s2) {
  require(s1.rows() == s1.cols() && s2.rows() == s2.cols(),
          "kron_frobenius_norm: matrices must be square");
  require_finite(s1, "kron_frobenius_norm");
  require_finite(s2, "kron_frobenius_norm");
  return s1.norm() * s2.norm();
}

struct KMeansResult {
  Labels labels;
  Matrix centers;
  double inertia = 0.0;
  std::vector<double> inertia_history;  // after each assignment step
  int iterations = 0;
};

namespace detail {

inline double assign_nearest(const Matrix& points, const Matrix& centers, Labels& labels) {
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (Eigen::Index c = 0; c < centers.rows(); ++c) {
      const double d = (points.row(i) - centers.row(c)).squaredNorm();
      if (d < best) {
        best = d;
        arg = static_cast<int>(c);
      }
    }
    labels[i] = arg;
    inertia += best;
  }
  return inertia;
}

}  // namespace detail

/// Lloyd's k-means from k-means++ seeding. An empty cluster keeps its
/// previous center.
inline KMeansResult kmeans_fit(const Matrix& points, int k, std::uint64_t seed,
                               int max_iter = 100) {
  const Eigen::Index n = points.rows();
  require(k > 0, "kmeans: k must be positive");
  require(k <= n, "kmeans: k exceeds number of points");
  require_finite(points, "kmeans");

  Rng rng(seed);
  Matrix centers(k, points.cols());
  centers.row(0) = points.row(rng.index(n));
  Vector dist2(n);
  for (Eigen::Index i = 0; i < n; ++i) dist2[i] = (points.row(i) - centers.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = dist2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += dist2[i];
        if (acc > target && dist2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.index(n);
    }
    centers.row(c) = points.row(pick);
    for (Eigen::Index i = 0; i < n; ++i) {
      dist2[i] = std::min(dist2[i], (points.row(i) - centers.row(c)).squaredNorm());
    }
  }

  KMeansResult out;
  out.labels.assign(n, 0);
  out.inertia = detail::assign_nearest(points, centers, out.labels);
  out.inertia_history.push_back(out.inertia);
  for (int iter = 0; iter < max_iter; ++iter) {
    Matrix sums = Matrix::Zero(k, points.cols());
    std::vector<int> counts(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(out.labels[i]) += points.row(i);
      ++counts[out.labels[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) centers.row(c) = sums.row(c) / counts[c];
    }
    Labels next(n, 0);
    const double inertia = detail::assign_nearest(points, centers, next);
    ++out.iterations;
    out.inertia_history.push_back(inertia);
    out.inertia = inertia;
    if (next == out.labels) break;
    out.labels = std::move(next);
  }
  out.centers = std::move(centers);
  return out;
}

inline Labels kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iter = 100) {
  return kmeans_fit(points, k, seed, max_iter).labels;
}

/// Permutation matrix with P(i, assignment[i]) = 1.
inline Matrix permutation_matrix(const std::vector<int>& assignment) {
  const auto m = static_cast<Eigen::Index>(assignment.size());
  Matrix p = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) p(i, assignment[i]) = 1.0;
  return p;
}

inline bool is_permutation(const std::vector<int>& perm) {
  std::vector<char> seen(perm.size(), 0);
  for (int p : perm) {
    if (p < 0 || static_cast<std::size_t>(p) >= perm.size() || seen[p]) return false;
    seen[p] = 1;
  }
  return true;
}

inline std::vector<int> inverse_permutation(const std::vector<int>& perm) {
  std::vector<int> inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = static_cast<int>(i);
  return inv;
}

}  // namespace anchorcc
