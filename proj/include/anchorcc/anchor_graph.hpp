#pragma once

// Per-view anchor and anchor-graph learning. Alternates a row-wise simplex
// projection for the graph with an orthogonal Procrustes step for the
// anchors, minimizing ||X - Z A||_F^2 + beta ||Z||_F^2 with Z row-stochastic
// and A A^T = I. When m > d the anchors cannot be orthonormal; the anchor
// step becomes ridge least squares and the graph rows are solved as exact
// simplex-constrained QPs so the objective still decreases.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "anchorcc/numerics.hpp"

namespace anchorcc {

struct ViewMatrix {
  Matrix data;  // n x d
  int view_index = 0;

  Eigen::Index samples() const { return data.rows(); }
  Eigen::Index dims() const { return data.cols(); }
};

struct AnchorSet {
  Matrix anchors;  // m x d
  bool orthogonal = false;
  // Set when orthogonality was requested but m > d made it impossible.
  bool orthogonal_fallback = false;
};

struct AnchorGraph {
  Matrix graph;  // n x m, rows on the simplex

  Eigen::Index samples() const { return graph.rows(); }
  Eigen::Index anchors() const { return graph.cols(); }
};

struct LearningTrace {
  std::vector<double> objective_values;
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> warnings;
};

enum class InitStrategy { sample, kmeans };

namespace detail {

// Modified Gram-Schmidt over the rows of a (m <= d). Rows that collapse are
// replaced by the first canonical basis vector not yet in the span.
inline Matrix orthonormalize_rows(Matrix a) {
  const Eigen::Index m = a.rows();
  const Eigen::Index d = a.cols();
  Eigen::Index next_basis = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index j = 0; j < i; ++j) a.row(i) -= a.row(i).dot(a.row(j)) * a.row(j);
    }
    double norm = a.row(i).norm();
    while (norm < 1e-10 && next_basis < d) {
      a.row(i).setZero();
      a(i, next_basis++) = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index j = 0; j < i; ++j) a.row(i) -= a.row(i).dot(a.row(j)) * a.row(j);
      }
      norm = a.row(i).norm();
    }
    a.row(i) /= norm;
  }
  return a;
}

}  // namespace detail

/// Initial anchors: m distinct rows of X (sample) or k-means centers
/// (kmeans), row-orthonormalized when orthogonality is requested and m <= d.
inline AnchorSet init_anchors(const ViewMatrix& x, int m, std::uint64_t seed,
                              InitStrategy strategy = InitStrategy::sample,
                              bool orthogonal = true) {
  require(m > 0, "init_anchors: anchor count must be positive");
  require(m <= x.samples(), "init_anchors: anchor count exceeds sample count");
  require_finite(x.data, "init_anchors");

  AnchorSet out;
  if (strategy == InitStrategy::sample) {
    Rng rng(seed);
    const auto order = rng.permutation(static_cast<std::size_t>(x.samples()));
    out.anchors.resize(m, x.dims());
    for (int i = 0; i < m; ++i) out.anchors.row(i) = x.data.row(order[i]);
  } else {
    out.anchors = kmeans_fit(x.data, m, seed).centers;
  }

  if (orthogonal && m <= x.dims()) {
    out.anchors = detail::orthonormalize_rows(std::move(out.anchors));
    out.orthogonal = true;
  } else if (orthogonal) {
    out.orthogonal_fallback = true;
  }
  return out;
}

namespace detail {

// Primal active-set method for min 1/2 z'Hz - c'z over the probability
// simplex, H symmetric positive definite. Starts from the feasible point z
// and only ever decreases the objective.
class SimplexQp {
 public:
  explicit SimplexQp(const Matrix& hessian) : h_(hessian) {}

  Vector solve(const Vector& c, Vector z) const {
    const Eigen::Index m = c.size();
    std::vector<char> free(m, 0);
    for (Eigen::Index i = 0; i < m; ++i) free[i] = z[i] > 0.0;
    const int max_iter = 20 * static_cast<int>(m) + 20;
    for (int iter = 0; iter < max_iter; ++iter) {
      std::vector<Eigen::Index> support;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (free[i]) support.push_back(i);
      }
      const auto s = static_cast<Eigen::Index>(support.size());
      Matrix kkt = Matrix::Zero(s + 1, s + 1);
      Vector rhs(s + 1);
      for (Eigen::Index a = 0; a < s; ++a) {
        for (Eigen::Index b = 0; b < s; ++b) kkt(a, b) = h_(support[a], support[b]);
        kkt(a, s) = 1.0;
        kkt(s, a) = 1.0;
        rhs[a] = c[support[a]];
      }
      rhs[s] = 1.0;
      const Vector sol = kkt.partialPivLu().solve(rhs);

      // Step toward the subspace minimizer, stopping at the first bound.
      double step = 1.0;
      Eigen::Index blocking = -1;
      for (Eigen::Index a = 0; a < s; ++a) {
        const double target = sol[a];
        const double current = z[support[a]];
        if (target < 0.0 && current - target > 0.0) {
          const double ratio = current / (current - target);
          if (ratio < step) {
            step = ratio;
            blocking = support[a];
          }
        }
      }
      for (Eigen::Index a = 0; a < s; ++a) {
        z[support[a]] += step * (sol[a] - z[support[a]]);
      }
      if (blocking >= 0) {
        z[blocking] = 0.0;
        free[blocking] = 0;
        for (Eigen::Index a = 0; a < s; ++a) {
          if (z[support[a]] <= 0.0) {
            z[support[a]] = 0.0;
            free[support[a]] = 0;
          }
        }
        continue;
      }

      // Subspace optimum reached; check multipliers of the bound variables.
      const double nu = sol[s];  // Hz - c + nu 1 = mu, mu >= 0 on bounds
      const Vector gradient = h_ * z - c;
      const double scale = std::max(1.0, gradient.cwiseAbs().maxCoeff());
      Eigen::Index entering = -1;
      double most_negative = -1e-12 * scale;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (free[i]) continue;
        const double mu = gradient[i] + nu;
        if (mu < most_negative) {
          most_negative = mu;
          entering = i;
        }
      }
      if (entering < 0) break;
      free[entering] = 1;
    }
    z = z.cwiseMax(0.0);
    return z / z.sum();
  }

 private:
  Matrix h_;
};

}  // namespace detail

/// Graph step. For orthonormal anchors every row j is the simplex
/// projection of (X A^T)_j / (1 + beta), which solves
///   min ||x_j - z A||^2 + beta ||z||^2  over the simplex
/// exactly. Otherwise that closed form is only a starting point and the row
/// problem is solved with an active-set method; `warm_start`, when given,
/// replaces the starting point.
inline AnchorGraph update_graph(const ViewMatrix& x, const AnchorSet& a, double beta,
                                const AnchorGraph* warm_start = nullptr) {
  require(a.anchors.cols() == x.dims(), "update_graph: anchor dimension does not match view");
  require(beta >= 0.0, "update_graph: beta must be nonnegative");
  const Matrix y = (x.data * a.anchors.transpose()) / (1.0 + beta);
  AnchorGraph z{Matrix(x.samples(), a.anchors.rows())};
  for (Eigen::Index j = 0; j < y.rows(); ++j) {
    z.graph.row(j) = project_simplex(y.row(j).transpose()).transpose();
  }
  if (a.orthogonal) return z;

  const Eigen::Index m = a.anchors.rows();
  Matrix hessian = a.anchors * a.anchors.transpose();
  hessian.diagonal().array() += beta + 1e-12 * std::max(1.0, hessian.trace() / m);
  const detail::SimplexQp qp(hessian);
  const Matrix linear = x.data * a.anchors.transpose();
  if (warm_start) {
    require(warm_start->graph.rows() == z.graph.rows() && warm_start->graph.cols() == m,
            "update_graph: warm start shape mismatch");
  }
  for (Eigen::Index j = 0; j < y.rows(); ++j) {
    Vector start = warm_start ? Vector(warm_start->graph.row(j).transpose())
                              : Vector(z.graph.row(j).transpose());
    z.graph.row(j) = qp.solve(linear.row(j).transpose(), std::move(start)).transpose();
  }
  return z;
}

inline constexpr double kRidgeEpsilon = 1e-8;

/// Anchor step. Orthogonal with m <= d: A = U V^T from the SVD of B = Z^T X.
/// Otherwise ridge least squares (Z^T Z + eps I)^-1 Z^T X.
inline AnchorSet update_anchors(const ViewMatrix& x, const AnchorGraph& z, bool orthogonal) {
  require(z.samples() == x.samples(), "update_anchors: graph rows do not match view samples");
  const Eigen::Index m = z.anchors();
  const Matrix b = z.graph.transpose() * x.data;
  AnchorSet out;
  if (orthogonal && m <= x.dims()) {
    const auto svd = truncated_svd(b, m);
    out.anchors = svd.U * svd.V.transpose();
    out.orthogonal = true;
    return out;
  }
  Matrix gram = z.graph.transpose() * z.graph;
  gram.diagonal().array() += kRidgeEpsilon;
  out.anchors = gram.ldlt().solve(b);
  out.orthogonal_fallback = orthogonal;
  return out;
}

/// ||X - Z A||_F^2 + beta ||Z||_F^2
inline double objective(const ViewMatrix& x, const AnchorGraph& z, const AnchorSet& a,
                        double beta) {
  require(z.samples() == x.samples() && z.anchors() == a.anchors.rows() &&
              a.anchors.cols() == x.dims(),
          "objective: inconsistent shapes");
  return (x.data - z.graph * a.anchors).squaredNorm() + beta * z.graph.squaredNorm();
}

struct LearnOptions {
  int anchors = 0;
  double beta = 1.0;
  std::uint64_t seed = 0;
  double tol = 1e-6;
  int max_iter = 50;
  bool orthogonal = true;
  InitStrategy init = InitStrategy::sample;
};

struct LearnResult {
  AnchorSet anchors;
  AnchorGraph graph;
  LearningTrace trace;
};

/// Alternating minimization from init_anchors until the relative objective
/// change drops below tol or max_iter sweeps have run.
inline LearnResult learn(const ViewMatrix& x, const LearnOptions& opt) {
  require(opt.max_iter > 0, "learn: max_iter must be positive");
  require(opt.tol > 0.0, "learn: tol must be positive");
  LearnResult out;
  out.anchors = init_anchors(x, opt.anchors, opt.seed, opt.init, opt.orthogonal);
  if (out.anchors.orthogonal_fallback) {
    out.trace.warnings.push_back("view " + std::to_string(x.view_index) +
                                 ": anchor count exceeds dimension, orthogonality dropped");
  }
  double previous = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < opt.max_iter; ++iter) {
    out.graph = update_graph(x, out.anchors, opt.beta, iter > 0 ? &out.graph : nullptr);
    out.anchors = update_anchors(x, out.graph, opt.orthogonal);
    const double value = objective(x, out.graph, out.anchors, opt.beta);
    out.trace.objective_values.push_back(value);
    out.trace.iterations = iter + 1;
    if (std::isfinite(previous) &&
        std::abs(previous - value) <= opt.tol * std::max(std::abs(previous), 1e-300)) {
      out.trace.converged = true;
      break;
    }
    previous = value;
  }
  const Vector column_mass = out.graph.graph.colwise().sum().transpose();
  for (Eigen::Index c = 0; c < column_mass.size(); ++c) {
    if (column_mass[c] == 0.0) {
      out.trace.warnings.push_back("view " + std::to_string(x.view_index) + ": anchor " +
                                   std::to_string(c) + " has no assigned weight");
    }
  }
  return out;
}

}  // namespace anchorcc
