#include "mni/dual_certificates.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "mni/parallel.hpp"

namespace mni {

namespace {

// One descent path on the sphere: angular steps along the normalized
// subgradient X * witness(X^T v), step theta0 / sqrt(t), best value kept.
double sphere_descent(const MatrixXd& design, const NormFamily& norm, int iters,
                      RngStream rng) {
  const Index n = design.rows();
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = rng.normal();
  double vn = v.norm();
  if (vn == 0.0) {
    v.setZero();
    v(0) = 1.0;
  } else {
    v /= vn;
  }

  double best = norm.dual_eval(design.transpose() * v);
  const double theta0 = 0.5;
  for (int t = 1; t <= iters; ++t) {
    const VectorXd w = design.transpose() * v;
    const VectorXd g = design * norm.dual_witness(w);
    const double gn = g.norm();
    if (gn == 0.0) break;
    v -= (theta0 / std::sqrt(static_cast<double>(t))) * (g / gn);
    vn = v.norm();
    if (vn == 0.0) break;
    v /= vn;
    best = std::min(best, norm.dual_eval(design.transpose() * v));
  }
  return best;
}

}  // namespace

double sphere_infimum(const MatrixXd& design, const NormFamily& norm, int restarts, int iters,
                      std::uint64_t seed, int jobs) {
  if (restarts < 1) throw std::invalid_argument("sphere_infimum: restarts must be >= 1");
  norm.check_dim(design.cols());
  std::vector<double> found(static_cast<std::size_t>(restarts),
                            std::numeric_limits<double>::infinity());
  parallel_for(static_cast<std::size_t>(restarts), jobs, [&](std::size_t r) {
    found[r] = sphere_descent(design, norm, iters, RngStream(seed, r));
  });
  double best = found[0];
  for (double f : found) best = std::min(best, f);
  return best;
}

DualCertificate certify(const ProblemInstance& inst, const NormFamily& norm,
                        const SolverConfig& cfg, const CertifyOptions& opts) {
  if (!inst.noise) throw std::invalid_argument("certify: instance has no noise vector");
  const Index n = inst.n();
  const Index p = inst.p();
  if (n > p) throw std::invalid_argument("certify: requires n <= p");
  norm.check_dim(p);
  const VectorXd& xi = *inst.noise;
  if (xi.size() != n) throw std::invalid_argument("certify: noise length mismatch");

  DualCertificate cert;
  cert.sphere_method = "pgd(restarts=" + std::to_string(opts.sphere_restarts) +
                       ",iters=" + std::to_string(opts.sphere_iters) + ")";
  const double xi_norm = xi.norm();
  if (xi_norm == 0.0) return cert;

  // Primal: minimum-norm interpolation of the noise.
  ProblemInstance noise_inst;
  noise_inst.design = inst.design;
  noise_inst.responses = xi;
  const EstimatorResult primal = solve_min_norm(noise_inst, norm, cfg);
  cert.primal_value = primal.objective;
  cert.primal_converged = primal.converged;

  // Dual: sup v^T xi s.t. ||X^T v||_* <= 1, by splitting on z = X^T v with
  // the dual-ball projection as the z-step.
  {
    MatrixXd gram = inst.design * inst.design.transpose();
    Eigen::LLT<MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) {
      gram.diagonal().array() += 1e-12 * gram.trace() / static_cast<double>(n);
      llt.compute(gram);
      if (llt.info() != Eigen::Success)
        throw std::runtime_error("certify: Cholesky of X X^T failed");
    }
    double rho = cfg.admm_rho;
    VectorXd z = VectorXd::Zero(p);
    VectorXd u = VectorXd::Zero(p);
    VectorXd v = VectorXd::Zero(n);
    cert.dual_converged = false;
    for (int it = 0; it < cfg.max_iters; ++it) {
      v = llt.solve(xi / rho + inst.design * (z - u));
      const VectorXd w = inst.design.transpose() * v;
      const VectorXd z_old = z;
      z = norm.dual_ball_project(w + u);
      u += w - z;
      const double r_norm = (w - z).norm();
      const double s_norm = rho * (z - z_old).norm();
      if (r_norm <= cfg.tol_primal * std::max({1.0, w.norm(), z.norm()}) &&
          s_norm <= cfg.tol_dual * std::max(1.0, rho * u.norm())) {
        cert.dual_converged = true;
        break;
      }
      if (cfg.adapt_rho && it < 500 && (it + 1) % 25 == 0) {
        if (r_norm > 10.0 * s_norm && rho < 1e4) {
          rho *= 2.0;
          u /= 2.0;
        } else if (s_norm > 10.0 * r_norm && rho > 1e-4) {
          rho /= 2.0;
          u *= 2.0;
        }
      }
    }
    // Radial polish keeps the reported value weakly feasible.
    const double feas = norm.dual_eval(inst.design.transpose() * v);
    cert.dual_value = v.dot(xi) / std::max(1.0, feas);
  }

  cert.lower_bracket = xi_norm * xi_norm / norm.dual_eval(inst.design.transpose() * xi);
  cert.sphere_inf_estimate = sphere_infimum(inst.design, norm, opts.sphere_restarts,
                                            opts.sphere_iters, opts.seed, opts.jobs);
  cert.upper_bracket =
      cert.sphere_inf_estimate > 0.0 ? xi_norm / cert.sphere_inf_estimate : 0.0;
  return cert;
}

AppendixBound appendix_lower_bounds(int n, Index p, const NormFamily& norm,
                                    const AppendixParams& params) {
  if (n < 1) throw std::invalid_argument("appendix_lower_bounds: n must be >= 1");
  AppendixBound out;
  const double nd = static_cast<double>(n);
  switch (norm.kind()) {
    case NormKind::L1: {
      const double alpha = params.alpha;
      if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("appendix_lower_bounds: alpha must be in (0, 1)");
      const double pd = static_cast<double>(p);
      const double denom = params.sigma ? params.sigma->sup_inv_sqrt_l1() : 1.0;
      out.value = std::sqrt(0.5 * alpha * std::log(pd / nd)) / denom;
      const double cond1 =
          std::pow(std::log(72.0 * nd / alpha) * std::sqrt(2.0 * std::numbers::pi),
                   1.0 / (1.0 - alpha));
      const double cond2 = std::exp(1.0 / alpha);
      out.valid = pd >= nd * std::max(cond1, cond2);
      break;
    }
    case NormKind::GroupLasso: {
      if (norm.dim() != p)
        throw std::invalid_argument("appendix_lower_bounds: p does not match the partition");
      double min_g = std::numeric_limits<double>::infinity();
      double max_g = 0.0;
      for (const auto& g : norm.groups()) {
        min_g = std::min(min_g, static_cast<double>(g.size()));
        max_g = std::max(max_g, static_cast<double>(g.size()));
      }
      const double w = max_g / min_g;
      out.value = std::sqrt(min_g) / (2.0 * std::sqrt(2.0));
      out.valid = static_cast<double>(p) >=
                  32.0 * nd * std::log(6.0 * std::sqrt(2.0) * (2.0 * std::sqrt(nd) + std::sqrt(w)));
      break;
    }
    case NormKind::Nuclear: {
      if (norm.dim() != p)
        throw std::invalid_argument("appendix_lower_bounds: p does not match the shape");
      const auto [p1, p2] = norm.shape();
      out.value = 0.5 * std::sqrt(static_cast<double>(std::max(p1, p2)));
      out.valid = 48.0 * nd * std::log(32.0 * nd * static_cast<double>(p1 + p2)) <=
                  static_cast<double>(p1 * p2);
      break;
    }
    case NormKind::L2:
      out.value = 0.0;
      out.valid = false;
      break;
  }
  return out;
}

}  // namespace mni
