#pragma once

// Anchor correspondence between two views. The anchors of view 2 are matched
// to those of view 1 by maximizing
//
//   Tr(K P) + lambda * Tr(S1^T P^T S2 P),   K = Z1^T Z2, Si = Zi^T Zi,
//
// over doubly stochastic P with a projected fixed-point iteration, then
// rounding to a permutation. P is indexed (view-2 anchor, view-1 anchor), so
// Z2 * P lines the columns of view 2 up with view 1.

#include <cmath>
#include <limits>
#include <vector>

#include "anchorcc/anchor_graph.hpp"
#include "anchorcc/numerics.hpp"

namespace anchorcc {

struct FeatureKernel {
  Matrix K;
};

struct StructureGraph {
  Matrix S;
};

struct AlignConfig {
  // Structure weight. +infinity selects the structure-only objective. The
  // structure term grows like n^2/m^2 against n/m for the feature term, so
  // the default keeps it a tie-breaker.
  double lambda = 1e-4;
  double alpha = 0.5;
  double fp_tol = 1e-7;
  int fp_max_iter = 500;
  double ds_tol = 1e-9;
  int ds_max_iter = 1000;

  bool structure_only() const { return std::isinf(lambda); }

  void validate() const {
    require(lambda >= 0.0 && !std::isnan(lambda), "align: lambda must be nonnegative");
    require(alpha >= 0.0 && alpha <= 1.0, "align: alpha must lie in [0, 1]");
    require(fp_tol > 0.0 && ds_tol > 0.0, "align: tolerances must be positive");
    require(fp_max_iter > 0 && ds_max_iter > 0, "align: iteration limits must be positive");
  }
};

struct CorrespondencePlan {
  Matrix relaxed;
  AssignmentResult hard;
  double objective = 0.0;  // QAP objective at the rounded permutation
  int iterations = 0;
  bool converged = false;
  // ||P(t+1) - P(t)||_F for every fixed-point step.
  std::vector<double> step_norms;

  Matrix hard_matrix() const { return permutation_matrix(hard.assignment); }
};

inline FeatureKernel feature_kernel(const AnchorGraph& z1, const AnchorGraph& z2) {
  require(z1.samples() == z2.samples() && z1.anchors() == z2.anchors(),
          "feature_kernel: anchor graphs must have equal shapes");
  return {z1.graph.transpose() * z2.graph};
}

inline StructureGraph structure_graph(const AnchorGraph& z) {
  return {z.graph.transpose() * z.graph};
}

/// Closed-form projection onto {Q : Q 1 = 1, Q^T 1 = 1}.
inline Matrix ds_affine_project(const Matrix& q) {
  require(q.rows() == q.cols(), "ds_affine_project: matrix must be square");
  require_finite(q, "ds_affine_project");
  const Eigen::Index m = q.rows();
  const double md = static_cast<double>(m);
  const Vector ones = Vector::Ones(m);
  const Vector row_gap = ones - q.rowwise().sum();
  const Vector col_gap = ones - q.colwise().sum().transpose();
  const double total = q.sum();
  Matrix out = q;
  out += row_gap * ones.transpose() / md;
  out += ones * col_gap.transpose() / md;
  out.array() -= (md - total) / (md * md);
  return out;
}

struct DsProjection {
  Matrix value;
  int iterations = 0;
  bool converged = false;
};

/// Alternating projections onto the unit row/column-sum set and the
/// nonnegative orthant.
inline DsProjection ds_project(const Matrix& q, double tol = 1e-9, int max_iter = 1000) {
  require(q.rows() == q.cols(), "ds_project: matrix must be square");
  require_finite(q, "ds_project");
  DsProjection out;
  out.value = q;
  for (int iter = 0; iter < max_iter; ++iter) {
    Matrix next = ds_affine_project(out.value).cwiseMax(0.0);
    const double change = (next - out.value).norm();
    out.value = std::move(next);
    out.iterations = iter + 1;
    if (change < tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

struct QapTerms {
  Matrix K;
  Matrix S1;
  Matrix S2;
};

inline QapTerms qap_terms(const AnchorGraph& z1, const AnchorGraph& z2) {
  return {feature_kernel(z1, z2).K, structure_graph(z1).S, structure_graph(z2).S};
}

inline double qap_objective(const QapTerms& terms, const Matrix& p, double lambda) {
  require(p.rows() == terms.K.rows() && p.cols() == terms.K.cols(),
          "qap_objective: plan shape does not match anchor count");
  const double structure = (terms.S1.transpose() * p.transpose() * terms.S2 * p).trace();
  if (std::isinf(lambda)) return structure;
  return (terms.K * p).trace() + lambda * structure;
}

/// Tr(Z1^T Z2 P + lambda S1^T P^T S2 P)
inline double qap_objective(const AnchorGraph& z1, const AnchorGraph& z2, const Matrix& p,
                            double lambda) {
  return qap_objective(qap_terms(z1, z2), p, lambda);
}

inline AssignmentResult round_permutation(const Matrix& relaxed) {
  return linear_assignment_max(relaxed);
}

/// Projected fixed-point iteration from the barycenter,
///   P <- (1 - alpha) P + alpha * ds_project(K^T + 2 lambda S2 P S1^T),
/// followed by rounding. A run that exhausts fp_max_iter keeps the iterate
/// with the best relaxed objective.
inline CorrespondencePlan align(const AnchorGraph& z1, const AnchorGraph& z2,
                                const AlignConfig& cfg = {}) {
  cfg.validate();
  const QapTerms terms = qap_terms(z1, z2);
  const Eigen::Index m = terms.K.rows();
  const bool structure_only = cfg.structure_only();
  const double feature_weight = structure_only ? 0.0 : 1.0;
  const double structure_weight = structure_only ? 1.0 : cfg.lambda;

  CorrespondencePlan plan;
  Matrix p = Matrix::Constant(m, m, 1.0 / static_cast<double>(m));
  Matrix best = p;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < cfg.fp_max_iter; ++iter) {
    Matrix gradient = feature_weight * terms.K.transpose();
    if (structure_weight != 0.0) {
      gradient += 2.0 * structure_weight * terms.S2 * p * terms.S1.transpose();
    }
    const Matrix projected = ds_project(gradient, cfg.ds_tol, cfg.ds_max_iter).value;
    Matrix next = (1.0 - cfg.alpha) * p + cfg.alpha * projected;
    const double step = (next - p).norm();
    p = std::move(next);
    plan.step_norms.push_back(step);
    plan.iterations = iter + 1;
    if (step < cfg.fp_tol) {
      plan.converged = true;
      break;
    }
    const double value = qap_objective(terms, p, cfg.lambda);
    if (value > best_value) {
      best_value = value;
      best = p;
    }
  }
  plan.relaxed = plan.converged ? p : best;
  plan.hard = round_permutation(plan.relaxed);
  plan.objective = qap_objective(terms, plan.hard_matrix(), cfg.lambda);
  return plan;
}

inline constexpr int kBruteForceMaxAnchors = 8;

/// Exhaustive QAP maximization over all m! permutations; the first optimum
/// in lexicographic order wins.
inline AssignmentResult brute_force_align(const AnchorGraph& z1, const AnchorGraph& z2,
                                          double lambda) {
  const QapTerms terms = qap_terms(z1, z2);
  const int m = static_cast<int>(terms.K.rows());
  require(m <= kBruteForceMaxAnchors, "brute_force_align: anchor count above 8");
  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  AssignmentResult best;
  best.total_score = -std::numeric_limits<double>::infinity();
  do {
    const double value = qap_objective(terms, permutation_matrix(perm), lambda);
    if (value > best.total_score) {
      best.total_score = value;
      best.assignment = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace anchorcc
