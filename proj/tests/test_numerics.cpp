#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "support.hpp"

using namespace anchorcc;
using namespace testing_support;

namespace {

// Cyclic Jacobi eigenvalue iteration for a symmetric matrix.
Vector jacobi_eigenvalues(Matrix a) {
  const Eigen::Index n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    }
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  Vector d = a.diagonal();
  std::sort(d.data(), d.data() + n, std::greater<>());
  return d;
}

double lloyd_inertia(const Matrix& x, Matrix centers, Labels& labels) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = centers.rows();
  labels.assign(n, -1);
  double inertia = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    Labels next(n);
    inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index c = 0; c < k; ++c) {
        const double d = (x.row(i) - centers.row(c)).squaredNorm();
        if (d < best) {
          best = d;
          next[i] = static_cast<int>(c);
        }
      }
      inertia += best;
    }
    if (next == labels) break;
    labels = next;
    for (Eigen::Index c = 0; c < k; ++c) {
      Vector sum = Vector::Zero(x.cols());
      int count = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (labels[i] == c) {
          sum += x.row(i).transpose();
          ++count;
        }
      }
      if (count) centers.row(c) = (sum / count).transpose();
    }
  }
  return inertia;
}

}  // namespace

TEST(ProjectSimplex, FeasibleInputIsUnchanged) {
  Vector y(3);
  y << 0.2, 0.3, 0.5;
  EXPECT_TRUE(project_simplex(y).isApprox(y, 1e-15));
}

TEST(ProjectSimplex, ConstantInputGivesUniform) {
  for (double c : {-4.0, 0.0, 0.7, 12.5}) {
    const Vector z = project_simplex(Vector::Constant(3, c));
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(z[i], 1.0 / 3.0, 1e-15);
  }
}

TEST(ProjectSimplex, ClipsToVertex) {
  Vector y(2);
  y << 2.0, 0.0;
  const Vector z = project_simplex(y);
  EXPECT_DOUBLE_EQ(z[0], 1.0);
  EXPECT_DOUBLE_EQ(z[1], 0.0);
  // Grid over the 1-simplex.
  double best = std::numeric_limits<double>::infinity();
  double best_t = -1.0;
  for (int s = 0; s <= 10000; ++s) {
    const double t = s / 10000.0;
    const double d = (2.0 - t) * (2.0 - t) + (1.0 - t) * (1.0 - t);
    if (d < best) {
      best = d;
      best_t = t;
    }
  }
  EXPECT_NEAR(z[0], best_t, 1e-4);
}

TEST(ProjectSimplex, NoGridPointIsCloser) {
  Rng rng(11);
  const int steps = 200;
  for (int trial = 0; trial < 50; ++trial) {
    const Vector y = 2.0 * gaussian(rng, 3, 1);
    const Vector z = project_simplex(y);
    EXPECT_NEAR(z.sum(), 1.0, 1e-12);
    EXPECT_GE(z.minCoeff(), 0.0);
    const double dz = (y - z).squaredNorm();
    for (int a = 0; a <= steps; ++a) {
      for (int b = 0; a + b <= steps; ++b) {
        Vector g(3);
        g << a / double(steps), b / double(steps), (steps - a - b) / double(steps);
        EXPECT_LE(dz, (y - g).squaredNorm() + 1e-12);
      }
    }
  }
}

TEST(ProjectSimplex, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(project_simplex(Vector()), Error);
  Vector y(2);
  y << 1.0, std::nan("");
  EXPECT_THROW(project_simplex(y), Error);
}

TEST(TruncatedSvd, Identity) {
  const auto svd = truncated_svd(Matrix::Identity(3, 3), 3);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(svd.sigma[i], 1.0, 1e-14);
}

TEST(TruncatedSvd, Diagonal) {
  Matrix m = Matrix::Zero(3, 3);
  m.diagonal() << 3.0, 2.0, 1.0;
  const auto svd = truncated_svd(m, 2);
  ASSERT_EQ(svd.sigma.size(), 2);
  EXPECT_NEAR(svd.sigma[0], 3.0, 1e-14);
  EXPECT_NEAR(svd.sigma[1], 2.0, 1e-14);
  EXPECT_EQ(svd.U.cols(), 2);
  EXPECT_EQ(svd.V.cols(), 2);
}

TEST(TruncatedSvd, MatchesJacobiEigenvaluesAndReconstructs) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix m = gaussian(rng, 8, 5);
    const auto svd = truncated_svd(m, 5);
    const Vector eig = jacobi_eigenvalues(m.transpose() * m);
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(svd.sigma[i] * svd.sigma[i], eig[i], 1e-9 * eig[0]);
    const Matrix rebuilt = svd.U * svd.sigma.asDiagonal() * svd.V.transpose();
    EXPECT_LE((rebuilt - m).norm(), 1e-8);
    EXPECT_LE((svd.U.transpose() * svd.U - Matrix::Identity(5, 5)).norm(), 1e-10);
  }
}

TEST(TruncatedSvd, SignConvention) {
  Rng rng(6);
  const Matrix m = gaussian(rng, 6, 4);
  const auto a = truncated_svd(m, 3);
  const auto b = truncated_svd(m, 3);
  EXPECT_EQ(a.U, b.U);
  for (int j = 0; j < 3; ++j) {
    Eigen::Index at = 0;
    a.U.col(j).cwiseAbs().maxCoeff(&at);
    EXPECT_GT(a.U(at, j), 0.0);
  }
}

TEST(TruncatedSvd, RejectsBadRank) {
  EXPECT_THROW(truncated_svd(Matrix::Identity(3, 2), 3), Error);
  EXPECT_THROW(truncated_svd(Matrix::Identity(3, 2), 0), Error);
}

TEST(LinearAssignment, IdentityScores) {
  const auto r = linear_assignment_max(Matrix::Identity(3, 3));
  EXPECT_EQ(r.assignment, (std::vector<int>{0, 1, 2}));
  EXPECT_DOUBLE_EQ(r.total_score, 3.0);
}

TEST(LinearAssignment, AntiDiagonal) {
  Matrix s = Matrix::Zero(3, 3);
  s(0, 2) = s(1, 1) = s(2, 0) = 1.0;
  const auto r = linear_assignment_max(s);
  EXPECT_EQ(r.assignment, (std::vector<int>{2, 1, 0}));
  EXPECT_DOUBLE_EQ(r.total_score, 3.0);
}

TEST(LinearAssignment, MatchesExhaustiveSearch) {
  Rng rng(21);
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = 1 + static_cast<int>(rng.index(7));
    const Matrix s = gaussian(rng, m, m);
    const auto r = linear_assignment_max(s);
    const auto [best, value] = exhaustive_assignment(s);
    ASSERT_NEAR(r.total_score, value, 1e-9) << "m=" << m;
    ASSERT_EQ(r.assignment, best);
  }
}

TEST(LinearAssignment, TiesResolveToLexicographicMinimum) {
  Rng rng(22);
  for (int trial = 0; trial < 500; ++trial) {
    const int m = 2 + static_cast<int>(rng.index(5));
    Matrix s(m, m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) s(i, j) = static_cast<double>(rng.index(3));
    }
    const auto r = linear_assignment_max(s);
    const auto [best, value] = exhaustive_assignment(s, 0.5);
    ASSERT_DOUBLE_EQ(r.total_score, value);
    ASSERT_EQ(r.assignment, best);
  }
  EXPECT_EQ(linear_assignment_max(Matrix::Constant(4, 4, 0.25)).assignment,
            (std::vector<int>{0, 1, 2, 3}));
}

TEST(LinearAssignment, RejectsBadInput) {
  EXPECT_THROW(linear_assignment_max(Matrix::Zero(2, 3)), Error);
  Matrix s = Matrix::Zero(2, 2);
  s(0, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(linear_assignment_max(s), Error);
}

TEST(KMeans, SeparatedPairs) {
  Matrix x(4, 2);
  x << 0, 0, 0.1, 0, 10, 10, 10, 10.1;
  const auto labels = kmeans(x, 2, 3);
  EXPECT_EQ(labels[0], labels[1]);
  EXPECT_EQ(labels[2], labels[3]);
  EXPECT_NE(labels[0], labels[2]);
}

TEST(KMeans, IdenticalPointsSingleCluster) {
  const Matrix x = Matrix::Constant(6, 3, 1.5);
  const auto labels = kmeans(x, 1, 0);
  EXPECT_EQ(labels, Labels(6, 0));
}

TEST(KMeans, GaussianClustersMatchExhaustiveRefinement) {
  const auto ds = generate_simulated(4, 10, 4, 10.0);
  const Matrix& x = ds.views[0].data;
  const Labels& truth = *ds.labels;
  const auto fit = kmeans_fit(x, 4, 9);
  EXPECT_DOUBLE_EQ(brute_accuracy(fit.labels, truth), 1.0);

  // Lloyd from every 4-point subset of the 40 samples.
  double best = std::numeric_limits<double>::infinity();
  Labels best_labels;
  const int n = static_cast<int>(x.rows());
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = b + 1; c < n; ++c)
        for (int d = c + 1; d < n; ++d) {
          Matrix centers(4, x.cols());
          centers << x.row(a), x.row(b), x.row(c), x.row(d);
          Labels labels;
          const double inertia = lloyd_inertia(x, centers, labels);
          if (inertia < best) {
            best = inertia;
            best_labels = labels;
          }
        }
  EXPECT_NEAR(fit.inertia, best, 1e-9 * best);
  EXPECT_DOUBLE_EQ(brute_accuracy(fit.labels, best_labels), 1.0);
}

TEST(KMeans, InertiaNeverIncreasesAndSeedIsDeterministic) {
  Rng rng(8);
  const Matrix x = gaussian(rng, 120, 3);
  const auto a = kmeans_fit(x, 5, 17);
  const auto b = kmeans_fit(x, 5, 17);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.centers, b.centers);
  for (std::size_t i = 1; i < a.inertia_history.size(); ++i) {
    EXPECT_LE(a.inertia_history[i], a.inertia_history[i - 1] + 1e-9);
  }
}

TEST(KMeans, RejectsBadK) {
  EXPECT_THROW(kmeans(Matrix::Zero(3, 2), 4, 0), Error);
  EXPECT_THROW(kmeans(Matrix::Zero(3, 2), 0, 0), Error);
}

TEST(KronFrobenius, Identity) {
  EXPECT_NEAR(kron_frobenius_norm(Matrix::Identity(2, 2), Matrix::Identity(2, 2)), 2.0, 1e-15);
}

TEST(KronFrobenius, ZeroFactor) {
  EXPECT_EQ(kron_frobenius_norm(Matrix::Identity(3, 3), Matrix::Zero(3, 3)), 0.0);
}

TEST(KronFrobenius, MatchesMaterializedProduct) {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = gaussian(rng, 3, 3);
    const Matrix b = gaussian(rng, 3, 3);
    double sum = 0.0;
    Matrix kron(9, 9);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l) kron(3 * i + k, 3 * j + l) = a(i, j) * b(k, l);
    for (int i = 0; i < 81; ++i) sum += kron.data()[i] * kron.data()[i];
    EXPECT_NEAR(kron_frobenius_norm(a, b), std::sqrt(sum), 1e-12 * std::sqrt(sum));
  }
}

TEST(Permutations, MatrixAndInverse) {
  const std::vector<int> p{2, 0, 3, 1};
  EXPECT_TRUE(is_permutation(p));
  EXPECT_FALSE(is_permutation({0, 0, 1}));
  EXPECT_FALSE(is_permutation({0, 3}));
  const auto inv = inverse_permutation(p);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(inv[p[i]], i);
  const Matrix pm = permutation_matrix(p);
  EXPECT_EQ(pm, perm_matrix(p));
  EXPECT_TRUE((pm * permutation_matrix(inv)).isIdentity());
}

TEST(Rng, DeterministicAndSeedSensitive) {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 10; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    EXPECT_NE(x, c.next());
  }
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  Rng d(5);
  auto perm = d.permutation(10);
  EXPECT_TRUE(is_permutation(perm));
}

TEST(Rng, MomentsLookRight) {
  Rng rng(99);
  double su = 0.0, sn = 0.0, sn2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  EXPECT_NEAR(su / n, 0.5, 0.005);
  EXPECT_NEAR(sn / n, 0.0, 0.01);
  EXPECT_NEAR(sn2 / n, 1.0, 0.02);
}
