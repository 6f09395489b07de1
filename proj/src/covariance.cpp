#include "mni/covariance.hpp"

#include <cmath>
#include <stdexcept>

namespace mni {

Covariance Covariance::identity(Index p) {
  if (p < 1) throw std::invalid_argument("Covariance::identity: p must be >= 1");
  Covariance c;
  c.kind_ = Kind::Identity;
  c.p_ = p;
  c.eigenvalues_desc_ = VectorXd::Ones(p);
  c.max_diag_ = 1.0;
  return c;
}

Covariance Covariance::diagonal(VectorXd diag) {
  if (diag.size() < 1) throw std::invalid_argument("Covariance::diagonal: empty diagonal");
  if ((diag.array() < 0).any())
    throw std::invalid_argument("Covariance::diagonal: negative entry");
  Covariance c;
  c.kind_ = Kind::Diagonal;
  c.p_ = diag.size();
  c.max_diag_ = diag.maxCoeff();
  c.eigenvalues_desc_ = diag;
  std::sort(c.eigenvalues_desc_.data(), c.eigenvalues_desc_.data() + diag.size(),
            std::greater<double>());
  c.diag_ = std::move(diag);
  return c;
}

Covariance Covariance::dense(const MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() < 1)
    throw std::invalid_argument("Covariance::dense: matrix must be square");
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() >
      1e-10 * (1.0 + sigma.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("Covariance::dense: matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (sigma + sigma.transpose()));
  if (es.info() != Eigen::Success)
    throw std::runtime_error("Covariance::dense: eigendecomposition failed");
  VectorXd vals = es.eigenvalues();
  const double scale = std::max(1.0, vals.cwiseAbs().maxCoeff());
  if (vals.minCoeff() < -1e-10 * scale)
    throw std::invalid_argument("Covariance::dense: matrix is not PSD");
  vals = vals.cwiseMax(0.0);

  Covariance c;
  c.kind_ = Kind::Dense;
  c.p_ = sigma.rows();
  c.eigvecs_ = es.eigenvectors();
  c.eigvals_ = vals;
  c.eigenvalues_desc_ = vals.reverse();
  c.max_diag_ = sigma.diagonal().maxCoeff();
  return c;
}

VectorXd Covariance::sqrt_apply(const VectorXd& x) const {
  if (x.size() != p_) throw std::invalid_argument("Covariance::sqrt_apply: dimension mismatch");
  switch (kind_) {
    case Kind::Identity:
      return x;
    case Kind::Diagonal:
      return diag_.cwiseSqrt().cwiseProduct(x);
    case Kind::Dense:
      return eigvecs_ * (eigvals_.cwiseSqrt().cwiseProduct(eigvecs_.transpose() * x));
  }
  return x;
}

double Covariance::quad_norm(const VectorXd& x) const {
  if (x.size() != p_) throw std::invalid_argument("Covariance::quad_norm: dimension mismatch");
  switch (kind_) {
    case Kind::Identity:
      return x.norm();
    case Kind::Diagonal:
      return std::sqrt(diag_.cwiseProduct(x.cwiseAbs2()).sum());
    case Kind::Dense: {
      const VectorXd w = eigvecs_.transpose() * x;
      return std::sqrt(eigvals_.cwiseProduct(w.cwiseAbs2()).sum());
    }
  }
  return 0.0;
}

VectorXd Covariance::inv_sqrt_apply(const VectorXd& x) const {
  if (x.size() != p_)
    throw std::invalid_argument("Covariance::inv_sqrt_apply: dimension mismatch");
  const double floor = 1e-14 * std::max(1.0, eigenvalues_desc_(0));
  if (lambda_min() <= floor)
    throw std::runtime_error("Covariance::inv_sqrt_apply: covariance is singular");
  switch (kind_) {
    case Kind::Identity:
      return x;
    case Kind::Diagonal:
      return x.cwiseQuotient(diag_.cwiseSqrt());
    case Kind::Dense:
      return eigvecs_ * (eigvecs_.transpose() * x).cwiseQuotient(eigvals_.cwiseSqrt());
  }
  return x;
}

VectorXd Covariance::sample(RngStream& rng) const {
  VectorXd z(p_);
  for (Index i = 0; i < p_; ++i) z(i) = rng.normal();
  if (kind_ == Kind::Identity) return z;
  return sqrt_apply(z);
}

double Covariance::sup_inv_sqrt_l1() const {
  switch (kind_) {
    case Kind::Identity:
      return 1.0;
    case Kind::Diagonal: {
      const double floor = 1e-14 * std::max(1.0, max_diag_);
      if (diag_.minCoeff() <= floor)
        throw std::runtime_error("Covariance::sup_inv_sqrt_l1: covariance is singular");
      return diag_.cwiseSqrt().cwiseInverse().maxCoeff();
    }
    case Kind::Dense: {
      const double floor = 1e-14 * std::max(1.0, eigenvalues_desc_(0));
      if (lambda_min() <= floor)
        throw std::runtime_error("Covariance::sup_inv_sqrt_l1: covariance is singular");
      const MatrixXd inv_sqrt =
          eigvecs_ * eigvals_.cwiseSqrt().cwiseInverse().asDiagonal() * eigvecs_.transpose();
      return inv_sqrt.cwiseAbs().colwise().sum().maxCoeff();
    }
  }
  return 1.0;
}

}  // namespace mni
