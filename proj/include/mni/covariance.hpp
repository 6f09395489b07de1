#pragma once

#include <Eigen/Dense>

#include "mni/rng.hpp"

namespace mni {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Feature covariance Sigma, kept in one of three shapes so identity-design
// experiments never materialize a p x p matrix. Dense covariances are
// eigendecomposed once at construction; a dense Sigma must be symmetric PSD
// (eigenvalues >= -1e-10 relative; small negatives are clamped to zero).
class Covariance {
 public:
  static Covariance identity(Index p);
  static Covariance diagonal(VectorXd diag);
  static Covariance dense(const MatrixXd& sigma);

  Index dim() const { return p_; }
  bool is_identity() const { return kind_ == Kind::Identity; }

  // Sigma^{1/2} x and ||Sigma^{1/2} x||_2.
  VectorXd sqrt_apply(const VectorXd& x) const;
  double quad_norm(const VectorXd& x) const;
  // Sigma^{-1/2} x; requires Sigma positive definite.
  VectorXd inv_sqrt_apply(const VectorXd& x) const;

  // One feature row Sigma^{1/2} z, z ~ N(0, I_p).
  VectorXd sample(RngStream& rng) const;

  // Eigenvalues sorted descending.
  const VectorXd& eigenvalues() const { return eigenvalues_desc_; }
  double lambda_min() const { return eigenvalues_desc_(p_ - 1); }
  double max_diag() const { return max_diag_; }

  // sup_{||b||_1 = 1} ||Sigma^{-1/2} b||_1, the exact maximum over the
  // cross-polytope vertices, i.e. the largest column l1-norm of Sigma^{-1/2}.
  double sup_inv_sqrt_l1() const;

 private:
  enum class Kind { Identity, Diagonal, Dense };

  Covariance() = default;

  Kind kind_ = Kind::Identity;
  Index p_ = 0;
  VectorXd diag_;            // Diagonal
  MatrixXd eigvecs_;         // Dense
  VectorXd eigvals_;         // Dense, ascending (Eigen order)
  VectorXd eigenvalues_desc_;
  double max_diag_ = 1.0;
};

}  // namespace mni
