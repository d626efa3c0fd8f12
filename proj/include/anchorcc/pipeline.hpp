#pragma once

// End-to-end multi-view clustering: learn an anchor graph per view, align
// every view's anchors to view 0, average the aligned graphs, embed with the
// top-k left singular vectors, and run k-means on the embedding.

#include <chrono>
#include <future>
#include <string>
#include <vector>

#include "anchorcc/alignment.hpp"
#include "anchorcc/anchor_graph.hpp"
#include "anchorcc/data_io.hpp"
#include "anchorcc/numerics.hpp"

namespace anchorcc {

enum class AlignMode { hard, relaxed, none };
enum class AnchorMode { orthogonal, fixed, unconstrained };

inline const char* to_string(AlignMode mode) {
  switch (mode) {
    case AlignMode::hard: return "hard";
    case AlignMode::relaxed: return "relaxed";
    case AlignMode::none: return "none";
  }
  return "?";
}

inline const char* to_string(AnchorMode mode) {
  switch (mode) {
    case AnchorMode::orthogonal: return "orthogonal";
    case AnchorMode::fixed: return "fixed";
    case AnchorMode::unconstrained: return "unconstrained";
  }
  return "?";
}

class PipelineError : public Error {
 public:
  PipelineError(std::string stage, const std::string& message)
      : Error("[" + stage + "] " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct PipelineConfig {
  int anchors = 0;
  int clusters = 0;
  double beta = 1.0;
  std::uint64_t seed = 0;
  AlignMode align_mode = AlignMode::hard;
  AnchorMode anchor_mode = AnchorMode::orthogonal;
  InitStrategy init = InitStrategy::sample;
  double learn_tol = 1e-6;
  int learn_max_iter = 50;
  AlignConfig align;  // lambda, alpha and fixed-point tolerances
  int kmeans_restarts = 10;
  int kmeans_max_iter = 100;
  // Permute every view's anchors with a seed-derived permutation before
  // alignment.
  bool scramble = false;
  bool parallel = true;

  void validate() const {
    require(anchors >= 1, "config: anchor count must be positive");
    require(clusters >= 1, "config: cluster count must be positive");
    require(beta >= 0.0, "config: beta must be nonnegative");
    require(learn_tol > 0.0 && learn_max_iter > 0, "config: invalid learning tolerances");
    require(kmeans_restarts >= 1 && kmeans_max_iter >= 1, "config: invalid k-means settings");
    align.validate();
  }
};

struct FusedGraph {
  Matrix graph;  // n x m
};

struct SpectralEmbedding {
  Matrix embedding;  // n x k, orthonormal columns
  int rank = 0;      // columns backed by nonzero singular values
  bool padded = false;
};

struct StageTimings {
  double learn = 0.0;
  double align = 0.0;
  double fuse = 0.0;
  double embed = 0.0;
  double kmeans = 0.0;
  double total = 0.0;
};

struct ClusteringResult {
  Labels labels;
  Matrix embedding;
  bool embedding_padded = false;
  std::vector<CorrespondencePlan> plans;  // plans[i] aligns view i + 1 to view 0
  std::vector<LearningTrace> traces;
  std::vector<AnchorGraph> graphs;        // as fused (after any scramble)
  std::vector<AnchorSet> anchor_sets;
  FusedGraph fused;
  double kmeans_inertia = 0.0;
  StageTimings timings;
  std::vector<std::string> warnings;
};

/// Moves column c of Z (and row c of A) to position perm[c].
inline std::pair<AnchorGraph, AnchorSet> scramble_anchors(const AnchorGraph& z, const AnchorSet& a,
                                                          const std::vector<int>& perm) {
  require(static_cast<Eigen::Index>(perm.size()) == z.anchors() && is_permutation(perm),
          "scramble_anchors: not a permutation of the anchor indices");
  require(a.anchors.rows() == z.anchors(), "scramble_anchors: anchor count mismatch");
  AnchorGraph zs{Matrix(z.graph.rows(), z.graph.cols())};
  AnchorSet as = a;
  for (std::size_t c = 0; c < perm.size(); ++c) {
    zs.graph.col(perm[c]) = z.graph.col(static_cast<Eigen::Index>(c));
    as.anchors.row(perm[c]) = a.anchors.row(static_cast<Eigen::Index>(c));
  }
  return {std::move(zs), std::move(as)};
}

/// (Z_0 + sum_i Z_i P_i) / v, with P_i taken from plans[i - 1] per mode.
inline FusedGraph fuse(const std::vector<AnchorGraph>& graphs,
                       const std::vector<CorrespondencePlan>& plans, AlignMode mode) {
  require(!graphs.empty(), "fuse: no graphs");
  const Matrix& first = graphs.front().graph;
  for (const auto& g : graphs) {
    require(g.graph.rows() == first.rows() && g.graph.cols() == first.cols(),
            "fuse: anchor graphs must have equal shapes");
  }
  if (mode != AlignMode::none) {
    require(plans.size() + 1 == graphs.size(), "fuse: need one plan per non-reference view");
  }
  FusedGraph out{first};
  for (std::size_t i = 1; i < graphs.size(); ++i) {
    const Matrix& z = graphs[i].graph;
    switch (mode) {
      case AlignMode::none:
        out.graph += z;
        break;
      case AlignMode::relaxed:
        require(plans[i - 1].relaxed.rows() == z.cols(), "fuse: plan shape mismatch");
        out.graph += z * plans[i - 1].relaxed;
        break;
      case AlignMode::hard: {
        const auto& assignment = plans[i - 1].hard.assignment;
        require(static_cast<Eigen::Index>(assignment.size()) == z.cols(),
                "fuse: plan shape mismatch");
        for (std::size_t c = 0; c < assignment.size(); ++c) {
          out.graph.col(assignment[c]) += z.col(static_cast<Eigen::Index>(c));
        }
        break;
      }
    }
  }
  out.graph /= static_cast<double>(graphs.size());
  return out;
}

/// Top-k left singular vectors of Z, through the eigendecomposition of the
/// m x m Gram matrix. Directions with vanishing singular value are replaced
/// by vectors from the orthogonal complement.
inline SpectralEmbedding spectral_embed(const FusedGraph& z, int k) {
  const Matrix& graph = z.graph;
  require(k >= 1, "spectral_embed: k must be positive");
  require(k <= graph.cols(), "spectral_embed: k exceeds anchor count");
  require(k <= graph.rows(), "spectral_embed: k exceeds sample count");
  const Matrix gram = graph.transpose() * graph;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  require(eig.info() == Eigen::Success, "spectral_embed: eigendecomposition failed");
  const Vector& values = eig.eigenvalues();  // ascending
  const Eigen::Index m = gram.rows();
  const double top = std::max(values[m - 1], 0.0);

  SpectralEmbedding out;
  out.embedding = Matrix::Zero(graph.rows(), k);
  for (int j = 0; j < k; ++j) {
    const double value = values[m - 1 - j];
    if (top <= 0.0 || value <= 1e-12 * top) break;
    out.embedding.col(j) = graph * eig.eigenvectors().col(m - 1 - j) / std::sqrt(value);
    ++out.rank;
  }
  out.padded = out.rank < k;

  Eigen::Index next_basis = 0;
  for (int j = 0; j < k; ++j) {
    auto col = out.embedding.col(j);
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i < j; ++i) col -= out.embedding.col(i).dot(col) * out.embedding.col(i);
    }
    double norm = col.norm();
    while (norm < 1e-8 && next_basis < graph.rows()) {
      col.setZero();
      col[next_basis++] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (int i = 0; i < j; ++i) col -= out.embedding.col(i).dot(col) * out.embedding.col(i);
      }
      norm = col.norm();
    }
    col /= norm;
  }
  return out;
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename Fn>
auto run_stage(const char* stage, Fn&& fn) {
  try {
    return fn();
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError(stage, e.what());
  }
}

// Runs fn(i) for i in [0, count), concurrently when asked, preserving order.
template <typename Fn>
auto map_indices(std::size_t count, bool parallel, Fn fn) {
  using Result = decltype(fn(std::size_t{0}));
  std::vector<Result> out;
  out.reserve(count);
  if (!parallel || count < 2) {
    for (std::size_t i = 0; i < count; ++i) out.push_back(fn(i));
    return out;
  }
  std::vector<std::future<Result>> pending;
  for (std::size_t i = 0; i < count; ++i) pending.push_back(std::async(std::launch::async, fn, i));
  for (auto& f : pending) out.push_back(f.get());
  return out;
}

inline LearnResult learn_view(const ViewMatrix& x, const PipelineConfig& cfg) {
  const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(x.view_index));
  if (cfg.anchor_mode == AnchorMode::fixed) {
    LearnResult out;
    out.anchors = init_anchors(x, cfg.anchors, seed, InitStrategy::kmeans, false);
    out.graph = update_graph(x, out.anchors, cfg.beta);
    out.trace.objective_values.push_back(objective(x, out.graph, out.anchors, cfg.beta));
    out.trace.iterations = 1;
    out.trace.converged = true;
    return out;
  }
  LearnOptions opt;
  opt.anchors = cfg.anchors;
  opt.beta = cfg.beta;
  opt.seed = seed;
  opt.tol = cfg.learn_tol;
  opt.max_iter = cfg.learn_max_iter;
  opt.orthogonal = cfg.anchor_mode == AnchorMode::orthogonal;
  opt.init = cfg.init;
  return learn(x, opt);
}

}  // namespace detail

inline std::vector<int> scramble_permutation(std::uint64_t seed, int view, int anchors) {
  Rng rng(derive_seed(seed, 1000 + static_cast<std::uint64_t>(view)));
  return rng.permutation(static_cast<std::size_t>(anchors));
}

/// Runs the full pipeline. Deterministic for a fixed cfg.seed.
inline ClusteringResult run(const MultiViewDataset& dataset, const PipelineConfig& cfg) {
  detail::run_stage("config", [&] {
    cfg.validate();
    dataset.validate();
    require(cfg.anchors <= dataset.samples(), "anchor count exceeds sample count");
    return 0;
  });
  ClusteringResult result;
  if (cfg.anchors < cfg.clusters) {
    result.warnings.push_back("anchor count is below cluster count");
  }
  const auto start = detail::Clock::now();

  auto stage_start = detail::Clock::now();
  auto learned = detail::run_stage("learn", [&] {
    return detail::map_indices(dataset.views.size(), cfg.parallel, [&](std::size_t i) {
      return detail::learn_view(dataset.views[i], cfg);
    });
  });
  for (auto& l : learned) {
    if (cfg.scramble) {
      const auto perm = scramble_permutation(cfg.seed, static_cast<int>(result.graphs.size()),
                                             cfg.anchors);
      std::tie(l.graph, l.anchors) = scramble_anchors(l.graph, l.anchors, perm);
    }
    result.warnings.insert(result.warnings.end(), l.trace.warnings.begin(), l.trace.warnings.end());
    result.graphs.push_back(std::move(l.graph));
    result.anchor_sets.push_back(std::move(l.anchors));
    result.traces.push_back(std::move(l.trace));
  }
  result.timings.learn = detail::seconds_since(stage_start);

  stage_start = detail::Clock::now();
  if (cfg.align_mode != AlignMode::none && result.graphs.size() > 1) {
    result.plans = detail::run_stage("align", [&] {
      return detail::map_indices(result.graphs.size() - 1, cfg.parallel, [&](std::size_t i) {
        return align(result.graphs.front(), result.graphs[i + 1], cfg.align);
      });
    });
    for (std::size_t i = 0; i < result.plans.size(); ++i) {
      if (!result.plans[i].converged) {
        result.warnings.push_back("view " + std::to_string(i + 1) +
                                  ": fixed-point alignment did not converge");
      }
    }
  }
  result.timings.align = detail::seconds_since(stage_start);

  stage_start = detail::Clock::now();
  result.fused = detail::run_stage("fuse", [&] { return fuse(result.graphs, result.plans, cfg.align_mode); });
  result.timings.fuse = detail::seconds_since(stage_start);

  stage_start = detail::Clock::now();
  auto embedding = detail::run_stage("embed", [&] { return spectral_embed(result.fused, cfg.clusters); });
  result.embedding = std::move(embedding.embedding);
  result.embedding_padded = embedding.padded;
  if (embedding.padded) result.warnings.push_back("fused graph rank below cluster count; embedding padded");
  result.timings.embed = detail::seconds_since(stage_start);

  stage_start = detail::Clock::now();
  detail::run_stage("kmeans", [&] {
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < cfg.kmeans_restarts; ++r) {
      auto fit = kmeans_fit(result.embedding, cfg.clusters,
                            derive_seed(cfg.seed, 2000 + static_cast<std::uint64_t>(r)),
                            cfg.kmeans_max_iter);
      if (fit.inertia < best) {
        best = fit.inertia;
        result.labels = std::move(fit.labels);
      }
    }
    result.kmeans_inertia = best;
    return 0;
  });
  result.timings.kmeans = detail::seconds_since(stage_start);
  result.timings.total = detail::seconds_since(start);
  return result;
}

}  // namespace anchorcc
