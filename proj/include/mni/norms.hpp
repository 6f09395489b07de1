#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace mni {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class NormKind { L1, L2, GroupLasso, Nuclear };

const char* norm_kind_name(NormKind kind);

// Thin SVD with deterministic conventions: singular values sorted descending
// and the first entry of each left singular vector with magnitude above
// 1e-12 * ||column||_inf made positive (the matching right vector is flipped
// with it).
struct ThinSvd {
  MatrixXd u;
  VectorXd s;
  MatrixXd v;
};
ThinSvd thin_svd(const MatrixXd& a);

// One of the four norm families. L1 and L2 accept any dimension; group-Lasso
// and nuclear instances pin the ambient dimension at construction.
//
// Vectors are the universal currency: nuclear-norm callers pass the matrix
// flattened column-major and the family reshapes internally.
class NormFamily {
 public:
  static NormFamily l1();
  static NormFamily l2();
  // groups must be disjoint and cover [0, p) where p is the total index count.
  static NormFamily group_lasso(std::vector<std::vector<Index>> groups);
  static NormFamily nuclear(Index rows, Index cols);

  NormKind kind() const { return kind_; }
  // 0 means any dimension (L1/L2).
  Index dim() const { return p_; }
  const std::vector<std::vector<Index>>& groups() const;
  std::pair<Index, Index> shape() const;

  double eval(const VectorXd& x) const;
  double dual_eval(const VectorXd& x) const;

  // argmin_z 0.5*||z - x||_2^2 + tau*||z||.
  VectorXd prox(const VectorXd& x, double tau) const;

  // Euclidean projection onto the dual unit ball {v : ||v||_* <= 1}.
  VectorXd dual_ball_project(const VectorXd& x) const;

  // A unit-norm maximizer of <x, v> over {||v|| <= 1}; attains dual_eval(x)
  // exactly and doubles as a subgradient of dual_eval at x. Returns 0 for
  // x = 0. Ties break deterministically (lowest index / leading block).
  VectorXd dual_witness(const VectorXd& x) const;

  void check_dim(Index n) const;

 private:
  NormFamily(NormKind kind, Index p) : kind_(kind), p_(p) {}

  NormKind kind_;
  Index p_;  // 0 = any
  std::vector<std::vector<Index>> groups_;
  Index rows_ = 0, cols_ = 0;
};

// Subgradient constructions anchored at a base point h*. Support information
// is frozen at construction: the support set for L1, the active groups for
// group-Lasso, and the thin SVD factors for nuclear (singular values below
// rank_rel_tol * sigma_max count as zero).
//
// Both constructors return elements of the subdifferential of ||.|| at h*:
// dual_eval(g) <= 1 and <g, h*> = ||h*||. lower(h) is the h-dependent element
// used to bound the inf-sup gap from below (sign(h) / normalized blocks /
// polar factor off the support); upper(h) is the element used to bound the
// sup-inf gap from above (sign flipped / zeroed off the support, U V^T for
// nuclear).
class SubgradientSpec {
 public:
  SubgradientSpec(NormFamily norm, VectorXd base_point, double rank_rel_tol = 1e-10);

  const NormFamily& norm() const { return norm_; }
  const VectorXd& base_point() const { return base_point_; }

  // Nonzeros (L1), active groups (group-Lasso), rank (nuclear), 0/1 (L2).
  Index support_size() const;
  bool full_support() const;

  VectorXd lower(const VectorXd& h) const;
  VectorXd upper(const VectorXd& h) const;

 private:
  NormFamily norm_;
  VectorXd base_point_;
  std::vector<Index> support_;        // L1 indices or active group indices
  std::vector<char> in_support_;      // fast membership
  MatrixXd u_, v_;                    // nuclear thin factors
};

}  // namespace mni
