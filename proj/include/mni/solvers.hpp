#pragma once

#include <Eigen/Dense>
#include <optional>

#include "mni/covariance.hpp"
#include "mni/norms.hpp"

namespace mni {

// One regression problem Y = X h* + xi. truth/noise/covariance are optional;
// validate() enforces the model identity when both truth and noise are set.
struct ProblemInstance {
  MatrixXd design;     // n x p, rows are the X_i
  VectorXd responses;  // length n
  std::optional<VectorXd> truth;
  std::optional<VectorXd> noise;
  std::optional<Covariance> covariance;
  // Two-point adversarial construction: the alternative hypothesis h1 whose
  // predictions were planted as noise (set by the experiment generator).
  std::optional<VectorXd> adversary_h1;

  Index n() const { return design.rows(); }
  Index p() const { return design.cols(); }
  void validate() const;
};

struct SolverConfig {
  int max_iters = 50000;
  double tol_primal = 1e-10;      // consensus residual, relative
  double tol_dual = 1e-10;        // dual residual, relative
  double admm_rho = 1.0;          // initial penalty; adapted by balancing
  double feasibility_tol = 1e-9;  // constraint residual accepted for interpolation
  double tol_objective = 1e-10;   // relative objective change (RERM)
  bool adapt_rho = true;
  bool check_uniqueness = false;  // re-solve under a perturbed penalty and compare
};

struct EstimatorResult {
  VectorXd estimate;
  double objective = 0.0;            // ||h|| for interpolators, full RERM objective
  double constraint_residual = 0.0;  // ||X h - Y||_2
  int iterations = 0;
  bool converged = false;
  // Lagrange multipliers of the interpolation constraints (min-norm solves
  // only; X^T multipliers lies in the subdifferential of the norm at the
  // estimate). Empty when not available.
  VectorXd multipliers;
  // Uniqueness heuristic: set when check_uniqueness was requested, or to
  // false for lambda = 0 RERM on underdetermined systems.
  std::optional<bool> unique_hint;
};

// Minimum-norm interpolation: argmin ||h|| s.t. X h = Y, by operator
// splitting that alternates the norm prox with a Euclidean projection onto
// the affine constraint set (projection through a cached factorization of
// X X^T). Requires n <= p and linearly independent rows.
EstimatorResult solve_min_norm(const ProblemInstance& inst, const NormFamily& norm,
                               const SolverConfig& cfg = {});

// X^T (X X^T)^{-1} Y through a Cholesky factorization.
EstimatorResult solve_min_l2_closed_form(const ProblemInstance& inst);

// Regularized least squares: argmin (1/n) ||Y - X h||_2^2 + 2 lambda ||h||,
// by accelerated proximal gradient with backtracking and monotone restarts.
// warm_start, when given, seeds the iteration.
EstimatorResult solve_rerm(const ProblemInstance& inst, const NormFamily& norm, double lambda,
                           const SolverConfig& cfg = {}, const VectorXd* warm_start = nullptr);

// ||Sigma^{1/2} (estimate - h*)||_2; requires truth and covariance.
double prediction_error(const ProblemInstance& inst, const VectorXd& estimate);

}  // namespace mni
