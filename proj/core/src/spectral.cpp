#include "mulch/spectral.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mulch/rng.hpp"

namespace mulch {
namespace {

struct KMeansResult {
  std::vector<int> labels;
  double objective = std::numeric_limits<double>::infinity();
};

double sq_dist(const Eigen::MatrixXd& x, int row, const Eigen::MatrixXd& centroids, int c) {
  return (x.row(row) - centroids.row(c)).squaredNorm();
}

Eigen::MatrixXd seed_centroids(const Eigen::MatrixXd& x, int k, std::mt19937_64& rng) {
  const int n = static_cast<int>(x.rows());
  Eigen::MatrixXd centroids(k, x.cols());
  std::vector<double> d2(n, 0.0);
  centroids.row(0) = x.row(static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n))));
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = sq_dist(x, i, centroids, 0);
      for (int j = 1; j < c; ++j) best = std::min(best, sq_dist(x, i, centroids, j));
      d2[i] = best;
      total += best;
    }
    // All points already coincide with a centroid: any choice is equivalent.
    const std::size_t pick = total > 0.0
                                 ? categorical(rng, d2)
                                 : uniform_index(rng, static_cast<std::size_t>(n));
    centroids.row(c) = x.row(static_cast<int>(pick));
  }
  return centroids;
}

KMeansResult k_means_once(const Eigen::MatrixXd& x, int k, std::mt19937_64& rng) {
  const int n = static_cast<int>(x.rows());
  const int max_iters = 300;
  const double tol = 1e-6;

  Eigen::MatrixXd centroids = seed_centroids(x, k, rng);
  KMeansResult res;
  res.labels.assign(n, 0);

  for (int it = 0; it < max_iters; ++it) {
    double objective = 0.0;
    for (int i = 0; i < n; ++i) {
      int best_c = 0;
      double best_d = sq_dist(x, i, centroids, 0);
      for (int c = 1; c < k; ++c) {
        const double d = sq_dist(x, i, centroids, c);
        if (d < best_d) {
          best_d = d;
          best_c = c;
        }
      }
      res.labels[i] = best_c;
      objective += best_d;
    }
    res.objective = objective;

    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(k, x.cols());
    std::vector<int> size(k, 0);
    for (int i = 0; i < n; ++i) {
      next.row(res.labels[i]) += x.row(i);
      ++size[res.labels[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (size[c] > 0) {
        next.row(c) /= size[c];
      } else {
        // Revive an empty cluster at the point worst served by its centroid.
        int far_i = 0;
        double far_d = -1.0;
        for (int i = 0; i < n; ++i) {
          const double d = sq_dist(x, i, centroids, res.labels[i]);
          if (d > far_d) {
            far_d = d;
            far_i = i;
          }
        }
        next.row(c) = x.row(far_i);
      }
    }
    double motion = 0.0;
    for (int c = 0; c < k; ++c) motion = std::max(motion, (next.row(c) - centroids.row(c)).norm());
    centroids = std::move(next);
    if (motion <= tol) break;
  }

  // Final assignment against the converged centroids.
  double objective = 0.0;
  for (int i = 0; i < n; ++i) {
    int best_c = 0;
    double best_d = sq_dist(x, i, centroids, 0);
    for (int c = 1; c < k; ++c) {
      const double d = sq_dist(x, i, centroids, c);
      if (d < best_d) {
        best_d = d;
        best_c = c;
      }
    }
    res.labels[i] = best_c;
    objective += best_d;
  }
  res.objective = objective;
  return res;
}

std::vector<int> k_means(const Eigen::MatrixXd& x, int k, std::mt19937_64& rng) {
  const int restarts = 10;
  const std::uint64_t base = rng();
  KMeansResult best;
  for (int r = 0; r < restarts; ++r) {
    auto restart_rng = make_rng(base, static_cast<std::uint64_t>(r));
    KMeansResult cur = k_means_once(x, k, restart_rng);
    if (cur.objective < best.objective) best = std::move(cur);
  }
  return best.labels;
}

double choose2(double m) { return 0.5 * m * (m - 1.0); }

}  // namespace

Membership spectral_cluster(const CountMatrix& counts, int k, std::mt19937_64& rng) {
  const int n = static_cast<int>(counts.n);
  if (k < 1) throw std::invalid_argument("spectral_cluster: K must be >= 1");
  if (n < k) throw std::invalid_argument("spectral_cluster: need at least K nodes");

  Membership z;
  z.num_blocks = k;
  z.labels.assign(counts.n, 0);
  if (k == 1) return z;

  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = static_cast<double>(counts.at(i, j));

  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  int k_use = 0;
  for (int i = 0; i < std::min<int>(k, static_cast<int>(sigma.size())); ++i)
    if (sigma(i) > 1e-12 * sigma(0)) ++k_use;
  if (k_use == 0) {
    std::cerr << "spectral_cluster: count matrix is zero; returning a single cluster\n";
    return z;
  }
  if (k_use < k)
    std::cerr << "spectral_cluster: count matrix rank " << k_use << " < K=" << k
              << "; clustering on the available components\n";

  Eigen::MatrixXd embedding(n, 2 * k_use);
  for (int j = 0; j < k_use; ++j) {
    const double scale = std::sqrt(sigma(j));
    embedding.col(j) = svd.matrixU().col(j) * scale;
    embedding.col(k_use + j) = svd.matrixV().col(j) * scale;
  }
  for (int i = 0; i < n; ++i) {
    const double norm = embedding.row(i).norm();
    if (norm > 0.0) embedding.row(i) /= norm;
  }

  z.labels = k_means(embedding, k, rng);
  return z;
}

double adjusted_rand_index(const Membership& z_true, const Membership& z_hat) {
  const std::size_t n = z_true.labels.size();
  if (z_hat.labels.size() != n)
    throw std::invalid_argument("adjusted_rand_index: membership length mismatch");
  if (n == 0) return 1.0;

  int ka = 0;
  int kb = 0;
  for (int v : z_true.labels) {
    if (v < 0) throw std::invalid_argument("adjusted_rand_index: negative label");
    ka = std::max(ka, v + 1);
  }
  for (int v : z_hat.labels) {
    if (v < 0) throw std::invalid_argument("adjusted_rand_index: negative label");
    kb = std::max(kb, v + 1);
  }

  std::vector<std::vector<std::int64_t>> table(ka, std::vector<std::int64_t>(kb, 0));
  std::vector<std::int64_t> row_sum(ka, 0);
  std::vector<std::int64_t> col_sum(kb, 0);
  for (std::size_t i = 0; i < n; ++i) {
    ++table[z_true.labels[i]][z_hat.labels[i]];
    ++row_sum[z_true.labels[i]];
    ++col_sum[z_hat.labels[i]];
  }

  double index = 0.0;
  for (const auto& row : table)
    for (std::int64_t cell : row) index += choose2(static_cast<double>(cell));
  double sum_a = 0.0;
  for (std::int64_t v : row_sum) sum_a += choose2(static_cast<double>(v));
  double sum_b = 0.0;
  for (std::int64_t v : col_sum) sum_b += choose2(static_cast<double>(v));

  const double pairs = choose2(static_cast<double>(n));
  const double expected = pairs > 0.0 ? sum_a * sum_b / pairs : 0.0;
  const double max_index = 0.5 * (sum_a + sum_b);
  const double denom = max_index - expected;
  if (denom == 0.0) return index == max_index ? 1.0 : 0.0;
  return (index - expected) / denom;
}

}  // namespace mulch
