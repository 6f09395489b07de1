// Test-only oracles, kept independent of the library's solver paths.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "mni/norms.hpp"
#include "mni/rng.hpp"

namespace oracle {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// P(|Z| >= kappa) for standard normal Z.
inline double gaussian_two_sided_tail(double kappa) {
  return std::erfc(kappa / std::sqrt(2.0));
}

// Independent basis-pursuit solver (primal-dual hybrid gradient): used to
// cross-check the operator-splitting path on min ||h||_1 s.t. X h = y.
inline VectorXd pdhg_basis_pursuit(const MatrixXd& x, const VectorXd& y, int iters = 20000) {
  const Index n = x.rows(), p = x.cols();
  VectorXd h = VectorXd::Zero(p), h_bar = h, mu = VectorXd::Zero(n);
  // step sizes with sigma * tau * ||X||^2 <= 1
  VectorXd v = VectorXd::Ones(p).normalized();
  double op = 1.0;
  for (int i = 0; i < 50; ++i) {
    VectorXd w = x.transpose() * (x * v);
    op = std::sqrt(w.norm());
    if (w.norm() == 0.0) break;
    v = w.normalized();
  }
  const double tau = 0.9 / op, sigma = 0.9 / op;
  for (int it = 0; it < iters; ++it) {
    mu += sigma * (x * h_bar - y);
    const VectorXd g = h - tau * (x.transpose() * mu);
    VectorXd h_next(p);
    for (Index i = 0; i < p; ++i) {
      const double a = g(i);
      h_next(i) = a > tau ? a - tau : (a < -tau ? a + tau : 0.0);
    }
    h_bar = 2.0 * h_next - h;
    h = h_next;
  }
  return h;
}

// Singular values through the Gram-matrix eigenvalues: a route independent of
// the Jacobi SVD the library uses. The smaller-side Gram keeps the spectrum
// free of spurious zero eigenvalues.
inline VectorXd singular_values_via_gram(const MatrixXd& a) {
  const MatrixXd gram =
      a.rows() <= a.cols() ? MatrixXd(a * a.transpose()) : MatrixXd(a.transpose() * a);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram, Eigen::EigenvaluesOnly);
  VectorXd sv = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  std::sort(sv.data(), sv.data() + sv.size(), std::greater<double>());
  return sv;
}

// Lower estimate of sup { <w, h> : ||h|| <= 1, ||h||_2 <= r } by dense random
// direction search; each direction is scaled onto the binding constraint, so
// every candidate is feasible and the estimate converges from below.
inline double grid_sup_intersection(const VectorXd& w, const mni::NormFamily& norm, double r,
                                    int directions, std::uint64_t seed) {
  mni::RngStream rng(seed, 0);
  const Index p = w.size();
  double best = 0.0;
  VectorXd u(p);
  for (int d = 0; d < directions; ++d) {
    for (Index i = 0; i < p; ++i) u(i) = rng.normal();
    const double scale = std::max(norm.eval(u), u.norm() / r);
    if (scale <= 0.0) continue;
    best = std::max(best, w.dot(u) / scale);
  }
  return best;
}

inline double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t m = xs.size();
  auto ranks = [&](const std::vector<double>& v) {
    std::vector<std::size_t> idx(m);
    for (std::size_t i = 0; i < m; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> rank(m);
    for (std::size_t i = 0; i < m; ++i) rank[idx[i]] = static_cast<double>(i);
    return rank;
  };
  const auto rx = ranks(xs), ry = ranks(ys);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double num = 0, dx = 0, dy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    dx += (rx[i] - mx) * (rx[i] - mx);
    dy += (ry[i] - my) * (ry[i] - my);
  }
  return num / std::sqrt(dx * dy);
}

}  // namespace oracle
