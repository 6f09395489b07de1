#include "mni/solvers.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace mni {

namespace {

constexpr double kRhoMin = 1e-4;
constexpr double kRhoMax = 1e4;

// Projection onto {h : X h = y} plus the Gram solves the ADMM loop needs.
struct AffineProjector {
  const MatrixXd& design;
  VectorXd target;
  Eigen::LLT<MatrixXd> llt;

  AffineProjector(const MatrixXd& x, VectorXd y) : design(x), target(std::move(y)) {
    const Index n = x.rows();
    MatrixXd gram = x * x.transpose();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram, Eigen::EigenvaluesOnly);
    const double lmax = es.eigenvalues().maxCoeff();
    const double lmin = es.eigenvalues().minCoeff();
    if (!(lmax > 0.0) || lmin <= 1e-12 * lmax)
      throw std::runtime_error(
          "solve_min_norm: design rows are linearly dependent (X X^T is rank-deficient)");
    llt.compute(gram);
    if (llt.info() != Eigen::Success) {
      const double jitter = 1e-12 * gram.trace() / static_cast<double>(n);
      gram.diagonal().array() += jitter;
      llt.compute(gram);
      if (llt.info() != Eigen::Success)
        throw std::runtime_error("solve_min_norm: Cholesky of X X^T failed");
    }
  }

  VectorXd project(const VectorXd& v) const {
    return v + design.transpose() * llt.solve(target - design * v);
  }
};

double rerm_objective(const MatrixXd& x, const VectorXd& y, const NormFamily& norm,
                      double lambda, const VectorXd& h) {
  return (y - x * h).squaredNorm() / static_cast<double>(x.rows()) + 2.0 * lambda * norm.eval(h);
}

double spectral_norm_sq(const MatrixXd& x) {
  // Power iteration on X^T X from a fixed start; deterministic and plenty
  // accurate for a step size.
  VectorXd v = VectorXd::Ones(x.cols());
  v.normalize();
  double lam = 0.0;
  for (int it = 0; it < 50; ++it) {
    VectorXd w = x.transpose() * (x * v);
    const double nrm = w.norm();
    if (nrm == 0.0) return 0.0;
    v = w / nrm;
    lam = nrm;
  }
  return lam;
}

EstimatorResult admm_min_norm(const ProblemInstance& inst, const NormFamily& norm,
                              const SolverConfig& cfg) {
  const Index n = inst.n();
  const Index p = inst.p();
  if (inst.responses.size() != n)
    throw std::invalid_argument("solve_min_norm: responses length mismatch");
  if (n > p) throw std::invalid_argument("solve_min_norm: requires n <= p");
  norm.check_dim(p);

  AffineProjector proj(inst.design, inst.responses);

  double rho = cfg.admm_rho;
  VectorXd z = VectorXd::Zero(p);
  VectorXd u = VectorXd::Zero(p);
  VectorXd h = proj.project(z - u);

  EstimatorResult res;
  res.converged = false;
  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    h = proj.project(z - u);
    const VectorXd z_old = z;
    z = norm.prox(h + u, 1.0 / rho);
    u += h - z;

    const double r_norm = (h - z).norm();
    const double s_norm = rho * (z - z_old).norm();
    const double scale_r = std::max({1.0, h.norm(), z.norm()});
    const double scale_s = std::max(1.0, rho * u.norm());
    if (r_norm <= cfg.tol_primal * scale_r && s_norm <= cfg.tol_dual * scale_s) {
      res.converged = true;
      ++it;
      break;
    }
    // Residual balancing inside an initial window only; a perpetually
    // rescaled penalty can cycle instead of converging.
    if (cfg.adapt_rho && it < 500 && (it + 1) % 25 == 0) {
      if (r_norm > 10.0 * s_norm && rho < kRhoMax) {
        rho *= 2.0;
        u /= 2.0;
      } else if (s_norm > 10.0 * r_norm && rho > kRhoMin) {
        rho /= 2.0;
        u *= 2.0;
      }
    }
  }

  res.estimate = proj.project(z);  // feasible iterate
  res.objective = norm.eval(res.estimate);
  res.constraint_residual = (inst.design * res.estimate - inst.responses).norm();
  res.iterations = it;
  if (res.constraint_residual > cfg.feasibility_tol * (1.0 + inst.responses.norm()))
    res.converged = false;
  // u stays in the row space of X, so the constraint multipliers are
  // recovered from rho * u = X^T mu.
  res.multipliers = proj.llt.solve(inst.design * (rho * u));
  return res;
}

}  // namespace

void ProblemInstance::validate() const {
  if (design.rows() != responses.size())
    throw std::invalid_argument("ProblemInstance: responses length mismatch");
  if (truth && truth->size() != design.cols())
    throw std::invalid_argument("ProblemInstance: truth length mismatch");
  if (noise && noise->size() != design.rows())
    throw std::invalid_argument("ProblemInstance: noise length mismatch");
  if (covariance && covariance->dim() != design.cols())
    throw std::invalid_argument("ProblemInstance: covariance dimension mismatch");
  if (truth && noise) {
    const double gap =
        (responses - design * (*truth) - *noise).lpNorm<Eigen::Infinity>();
    if (gap > 1e-12 * (1.0 + responses.lpNorm<Eigen::Infinity>()))
      throw std::invalid_argument("ProblemInstance: Y != X h* + xi");
  }
}

EstimatorResult solve_min_norm(const ProblemInstance& inst, const NormFamily& norm,
                               const SolverConfig& cfg) {
  EstimatorResult res = admm_min_norm(inst, norm, cfg);
  if (cfg.check_uniqueness) {
    SolverConfig alt = cfg;
    alt.check_uniqueness = false;
    alt.admm_rho = cfg.admm_rho * 3.0;
    const EstimatorResult other = admm_min_norm(inst, norm, alt);
    const double gap = (res.estimate - other.estimate).lpNorm<Eigen::Infinity>();
    res.unique_hint = gap <= 1e-5 * (1.0 + res.estimate.lpNorm<Eigen::Infinity>());
  }
  return res;
}

EstimatorResult solve_min_l2_closed_form(const ProblemInstance& inst) {
  const Index n = inst.n();
  if (inst.responses.size() != n)
    throw std::invalid_argument("solve_min_l2_closed_form: responses length mismatch");
  if (n > inst.p()) throw std::invalid_argument("solve_min_l2_closed_form: requires n <= p");
  AffineProjector proj(inst.design, inst.responses);

  EstimatorResult res;
  res.multipliers = proj.llt.solve(inst.responses);
  res.estimate = inst.design.transpose() * res.multipliers;
  res.objective = res.estimate.norm();
  res.constraint_residual = (inst.design * res.estimate - inst.responses).norm();
  res.iterations = 1;
  res.converged = res.constraint_residual <= 1e-10 * (1.0 + inst.responses.norm());
  return res;
}

EstimatorResult solve_rerm(const ProblemInstance& inst, const NormFamily& norm, double lambda,
                           const SolverConfig& cfg, const VectorXd* warm_start) {
  const Index n = inst.n();
  const Index p = inst.p();
  if (inst.responses.size() != n)
    throw std::invalid_argument("solve_rerm: responses length mismatch");
  if (lambda < 0.0) throw std::invalid_argument("solve_rerm: lambda must be >= 0");
  norm.check_dim(p);

  const MatrixXd& x = inst.design;
  const VectorXd& y = inst.responses;
  const double nn = static_cast<double>(n);

  const double lip = 2.0 * spectral_norm_sq(x) / nn;
  double step = lip > 0.0 ? 1.0 / lip : 1.0;

  // Monotone FISTA: the accepted iterate never increases the objective, the
  // accelerated point keeps the O(1/k^2) rate, and after the active set
  // settles the gradient mapping contracts linearly.
  VectorXd xk = warm_start ? *warm_start : VectorXd::Zero(p);
  VectorXd xk_prev = xk;
  VectorXd yk = xk;
  double t_k = 1.0;
  double f_best = rerm_objective(x, y, norm, lambda, xk);

  auto smooth_value = [&](const VectorXd& h) { return (y - x * h).squaredNorm() / nn; };

  EstimatorResult res;
  res.converged = false;
  int it = 0;
  int stable = 0;
  for (; it < cfg.max_iters; ++it) {
    const VectorXd grad = (2.0 / nn) * (x.transpose() * (x * yk - y));
    const double fy = smooth_value(yk);

    VectorXd zk;
    for (;;) {
      zk = norm.prox(yk - step * grad, 2.0 * lambda * step);
      const VectorXd d = zk - yk;
      const double quad = fy + grad.dot(d) + d.squaredNorm() / (2.0 * step);
      if (smooth_value(zk) <= quad + 1e-15 * std::max(1.0, std::abs(quad))) break;
      step *= 0.5;
      if (step < 1e-18) break;
    }

    // Gradient mapping at the accelerated point; zero exactly at optima.
    const double grad_map = (yk - zk).norm() / step;

    const double f_z = rerm_objective(x, y, norm, lambda, zk);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_k * t_k));
    xk_prev = xk;
    double f_new = f_best;
    if (f_z <= f_best) {
      xk = zk;
      f_new = f_z;
    }
    yk = xk + (t_k / t_next) * (zk - xk) + ((t_k - 1.0) / t_next) * (xk - xk_prev);
    t_k = t_next;

    const double rel_change = std::abs(f_best - f_new) / std::max(1.0, std::abs(f_new));
    f_best = f_new;
    if (grad_map <= cfg.tol_dual * (1.0 + xk.norm()) && rel_change <= cfg.tol_objective) {
      if (++stable >= 3) {
        res.converged = true;
        ++it;
        break;
      }
    } else {
      stable = 0;
    }
  }

  res.estimate = xk;
  res.objective = f_best;
  res.constraint_residual = (x * xk - y).norm();
  res.iterations = it;
  if (lambda == 0.0 && n < p) res.unique_hint = false;
  return res;
}

double prediction_error(const ProblemInstance& inst, const VectorXd& estimate) {
  if (!inst.truth) throw std::invalid_argument("prediction_error: instance has no truth");
  if (!inst.covariance)
    throw std::invalid_argument("prediction_error: instance has no covariance");
  if (estimate.size() != inst.p())
    throw std::invalid_argument("prediction_error: estimate dimension mismatch");
  return inst.covariance->quad_norm(estimate - *inst.truth);
}

}  // namespace mni
