#include "mni/norms.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mni {

namespace {

inline double sign0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

inline Eigen::Map<const MatrixXd> as_matrix(const VectorXd& x, Index rows, Index cols) {
  return Eigen::Map<const MatrixXd>(x.data(), rows, cols);
}

inline VectorXd as_vector(const MatrixXd& m) {
  return Eigen::Map<const VectorXd>(m.data(), m.size());
}

}  // namespace

const char* norm_kind_name(NormKind kind) {
  switch (kind) {
    case NormKind::L1: return "l1";
    case NormKind::L2: return "l2";
    case NormKind::GroupLasso: return "group_lasso";
    case NormKind::Nuclear: return "nuclear";
  }
  return "?";
}

ThinSvd thin_svd(const MatrixXd& a) {
  Eigen::JacobiSVD<MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  ThinSvd out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  for (Index k = 0; k < out.s.size(); ++k) {
    const double tol = 1e-12 * out.u.col(k).cwiseAbs().maxCoeff();
    for (Index i = 0; i < out.u.rows(); ++i) {
      const double e = out.u(i, k);
      if (std::abs(e) > tol) {
        if (e < 0.0) {
          out.u.col(k) = -out.u.col(k);
          out.v.col(k) = -out.v.col(k);
        }
        break;
      }
    }
  }
  return out;
}

NormFamily NormFamily::l1() { return NormFamily(NormKind::L1, 0); }
NormFamily NormFamily::l2() { return NormFamily(NormKind::L2, 0); }

NormFamily NormFamily::group_lasso(std::vector<std::vector<Index>> groups) {
  Index total = 0;
  for (const auto& g : groups) {
    if (g.empty()) throw std::invalid_argument("group_lasso: empty group");
    total += static_cast<Index>(g.size());
  }
  if (total == 0) throw std::invalid_argument("group_lasso: no groups");
  std::vector<char> seen(static_cast<std::size_t>(total), 0);
  for (const auto& g : groups) {
    for (Index idx : g) {
      if (idx < 0 || idx >= total)
        throw std::invalid_argument("group_lasso: index outside [0, p)");
      if (seen[static_cast<std::size_t>(idx)])
        throw std::invalid_argument("group_lasso: groups are not disjoint");
      seen[static_cast<std::size_t>(idx)] = 1;
    }
  }
  NormFamily n(NormKind::GroupLasso, total);
  n.groups_ = std::move(groups);
  return n;
}

NormFamily NormFamily::nuclear(Index rows, Index cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("nuclear: shape must be positive");
  NormFamily n(NormKind::Nuclear, rows * cols);
  n.rows_ = rows;
  n.cols_ = cols;
  return n;
}

const std::vector<std::vector<Index>>& NormFamily::groups() const {
  if (kind_ != NormKind::GroupLasso)
    throw std::logic_error("groups() on a non-group-Lasso family");
  return groups_;
}

std::pair<Index, Index> NormFamily::shape() const {
  if (kind_ != NormKind::Nuclear) throw std::logic_error("shape() on a non-nuclear family");
  return {rows_, cols_};
}

void NormFamily::check_dim(Index n) const {
  if (p_ != 0 && n != p_)
    throw std::invalid_argument("norm: dimension mismatch (got " + std::to_string(n) +
                                ", expected " + std::to_string(p_) + ")");
  if (p_ == 0 && n < 1) throw std::invalid_argument("norm: empty vector");
}

double NormFamily::eval(const VectorXd& x) const {
  check_dim(x.size());
  switch (kind_) {
    case NormKind::L1:
      return x.lpNorm<1>();
    case NormKind::L2:
      return x.norm();
    case NormKind::GroupLasso: {
      double s = 0.0;
      for (const auto& g : groups_) {
        double block = 0.0;
        for (Index idx : g) block += x(idx) * x(idx);
        s += std::sqrt(block);
      }
      return s;
    }
    case NormKind::Nuclear: {
      Eigen::JacobiSVD<MatrixXd> svd(as_matrix(x, rows_, cols_));
      return svd.singularValues().sum();
    }
  }
  return 0.0;
}

double NormFamily::dual_eval(const VectorXd& x) const {
  check_dim(x.size());
  switch (kind_) {
    case NormKind::L1:
      return x.lpNorm<Eigen::Infinity>();
    case NormKind::L2:
      return x.norm();
    case NormKind::GroupLasso: {
      double best = 0.0;
      for (const auto& g : groups_) {
        double block = 0.0;
        for (Index idx : g) block += x(idx) * x(idx);
        best = std::max(best, block);
      }
      return std::sqrt(best);
    }
    case NormKind::Nuclear: {
      Eigen::JacobiSVD<MatrixXd> svd(as_matrix(x, rows_, cols_));
      return svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
    }
  }
  return 0.0;
}

VectorXd NormFamily::prox(const VectorXd& x, double tau) const {
  check_dim(x.size());
  if (!(tau >= 0.0)) throw std::invalid_argument("prox: tau must be nonnegative");
  if (tau == 0.0) return x;
  switch (kind_) {
    case NormKind::L1:
      return x.unaryExpr([tau](double v) { return sign0(v) * std::max(std::abs(v) - tau, 0.0); });
    case NormKind::L2: {
      const double nrm = x.norm();
      if (nrm <= tau) return VectorXd::Zero(x.size());
      return (1.0 - tau / nrm) * x;
    }
    case NormKind::GroupLasso: {
      VectorXd out = VectorXd::Zero(x.size());
      for (const auto& g : groups_) {
        double block = 0.0;
        for (Index idx : g) block += x(idx) * x(idx);
        const double nrm = std::sqrt(block);
        if (nrm > tau) {
          const double scale = 1.0 - tau / nrm;
          for (Index idx : g) out(idx) = scale * x(idx);
        }
      }
      return out;
    }
    case NormKind::Nuclear: {
      const ThinSvd svd = thin_svd(as_matrix(x, rows_, cols_));
      const VectorXd sv = (svd.s.array() - tau).max(0.0).matrix();
      return as_vector(MatrixXd(svd.u * sv.asDiagonal() * svd.v.transpose()));
    }
  }
  return x;
}

VectorXd NormFamily::dual_ball_project(const VectorXd& x) const {
  check_dim(x.size());
  switch (kind_) {
    case NormKind::L1:
      return x.cwiseMax(-1.0).cwiseMin(1.0);
    case NormKind::L2: {
      const double nrm = x.norm();
      return nrm <= 1.0 ? x : VectorXd(x / nrm);
    }
    case NormKind::GroupLasso: {
      VectorXd out = x;
      for (const auto& g : groups_) {
        double block = 0.0;
        for (Index idx : g) block += x(idx) * x(idx);
        const double nrm = std::sqrt(block);
        if (nrm > 1.0) {
          for (Index idx : g) out(idx) = x(idx) / nrm;
        }
      }
      return out;
    }
    case NormKind::Nuclear: {
      const ThinSvd svd = thin_svd(as_matrix(x, rows_, cols_));
      const VectorXd sv = svd.s.cwiseMin(1.0);
      return as_vector(MatrixXd(svd.u * sv.asDiagonal() * svd.v.transpose()));
    }
  }
  return x;
}

VectorXd NormFamily::dual_witness(const VectorXd& x) const {
  check_dim(x.size());
  switch (kind_) {
    case NormKind::L1: {
      Index best = 0;
      double mx = -1.0;
      for (Index i = 0; i < x.size(); ++i) {
        if (std::abs(x(i)) > mx) {
          mx = std::abs(x(i));
          best = i;
        }
      }
      VectorXd v = VectorXd::Zero(x.size());
      if (mx > 0.0) v(best) = sign0(x(best));
      return v;
    }
    case NormKind::L2: {
      const double nrm = x.norm();
      if (nrm == 0.0) return VectorXd::Zero(x.size());
      return x / nrm;
    }
    case NormKind::GroupLasso: {
      std::size_t best = 0;
      double mx = -1.0;
      for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
        double block = 0.0;
        for (Index idx : groups_[gi]) block += x(idx) * x(idx);
        if (block > mx) {
          mx = block;
          best = gi;
        }
      }
      VectorXd v = VectorXd::Zero(x.size());
      const double nrm = std::sqrt(mx);
      if (nrm > 0.0) {
        for (Index idx : groups_[best]) v(idx) = x(idx) / nrm;
      }
      return v;
    }
    case NormKind::Nuclear: {
      const ThinSvd svd = thin_svd(as_matrix(x, rows_, cols_));
      if (svd.s.size() == 0 || svd.s(0) == 0.0) return VectorXd::Zero(x.size());
      return as_vector(MatrixXd(svd.u.col(0) * svd.v.col(0).transpose()));
    }
  }
  return x;
}

SubgradientSpec::SubgradientSpec(NormFamily norm, VectorXd base_point, double rank_rel_tol)
    : norm_(std::move(norm)), base_point_(std::move(base_point)) {
  norm_.check_dim(base_point_.size());
  switch (norm_.kind()) {
    case NormKind::L1: {
      in_support_.assign(static_cast<std::size_t>(base_point_.size()), 0);
      for (Index i = 0; i < base_point_.size(); ++i) {
        if (base_point_(i) != 0.0) {
          support_.push_back(i);
          in_support_[static_cast<std::size_t>(i)] = 1;
        }
      }
      break;
    }
    case NormKind::L2:
      break;
    case NormKind::GroupLasso: {
      const auto& groups = norm_.groups();
      in_support_.assign(groups.size(), 0);
      for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        double block = 0.0;
        for (Index idx : groups[gi]) block += base_point_(idx) * base_point_(idx);
        if (block > 0.0) {
          support_.push_back(static_cast<Index>(gi));
          in_support_[gi] = 1;
        }
      }
      break;
    }
    case NormKind::Nuclear: {
      const auto [rows, cols] = norm_.shape();
      const ThinSvd svd = thin_svd(Eigen::Map<const MatrixXd>(base_point_.data(), rows, cols));
      Index rank = 0;
      const double cut = svd.s.size() > 0 ? rank_rel_tol * svd.s(0) : 0.0;
      while (rank < svd.s.size() && svd.s(rank) > cut && svd.s(rank) > 0.0) ++rank;
      u_ = svd.u.leftCols(rank);
      v_ = svd.v.leftCols(rank);
      break;
    }
  }
}

Index SubgradientSpec::support_size() const {
  switch (norm_.kind()) {
    case NormKind::L1:
    case NormKind::GroupLasso:
      return static_cast<Index>(support_.size());
    case NormKind::Nuclear:
      return u_.cols();
    case NormKind::L2:
      return base_point_.norm() > 0.0 ? 1 : 0;
  }
  return 0;
}

bool SubgradientSpec::full_support() const {
  switch (norm_.kind()) {
    case NormKind::L1:
      return static_cast<Index>(support_.size()) == base_point_.size();
    case NormKind::GroupLasso:
      return support_.size() == norm_.groups().size();
    case NormKind::Nuclear: {
      const auto [rows, cols] = norm_.shape();
      return u_.cols() == std::min(rows, cols);
    }
    case NormKind::L2:
      return true;
  }
  return false;
}

VectorXd SubgradientSpec::lower(const VectorXd& h) const {
  norm_.check_dim(h.size());
  switch (norm_.kind()) {
    case NormKind::L1: {
      VectorXd g(h.size());
      for (Index i = 0; i < h.size(); ++i)
        g(i) = in_support_[static_cast<std::size_t>(i)] ? sign0(base_point_(i)) : sign0(h(i));
      return g;
    }
    case NormKind::L2: {
      const double base_nrm = base_point_.norm();
      if (base_nrm > 0.0) return base_point_ / base_nrm;
      const double h_nrm = h.norm();
      return h_nrm > 0.0 ? VectorXd(h / h_nrm) : VectorXd::Zero(h.size());
    }
    case NormKind::GroupLasso: {
      const auto& groups = norm_.groups();
      VectorXd g = VectorXd::Zero(h.size());
      for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const VectorXd& src = in_support_[gi] ? base_point_ : h;
        double block = 0.0;
        for (Index idx : groups[gi]) block += src(idx) * src(idx);
        const double nrm = std::sqrt(block);
        if (nrm > 0.0) {
          for (Index idx : groups[gi]) g(idx) = src(idx) / nrm;
        }
      }
      return g;
    }
    case NormKind::Nuclear: {
      // Maximizing subgradient U V^T + W: W is the polar factor of the
      // corner block (I - U U^T) H (I - V V^T), so <g, h> attains
      // <U V^T, h> + ||corner||_S1.
      const auto [rows, cols] = norm_.shape();
      const Eigen::Map<const MatrixXd> hm(h.data(), rows, cols);
      MatrixXd g = u_ * v_.transpose();
      MatrixXd corner = hm;
      if (u_.cols() > 0) {
        corner -= u_ * (u_.transpose() * hm);
        corner -= (corner * v_) * v_.transpose();
      }
      const ThinSvd cs = thin_svd(corner);
      const double cut = cs.s.size() > 0 ? 1e-12 * std::max(1.0, cs.s(0)) : 0.0;
      Index r = 0;
      while (r < cs.s.size() && cs.s(r) > cut) ++r;
      if (r > 0) g += cs.u.leftCols(r) * cs.v.leftCols(r).transpose();
      return as_vector(g);
    }
  }
  return VectorXd::Zero(h.size());
}

VectorXd SubgradientSpec::upper(const VectorXd& h) const {
  norm_.check_dim(h.size());
  switch (norm_.kind()) {
    case NormKind::L1: {
      VectorXd g(h.size());
      for (Index i = 0; i < h.size(); ++i)
        g(i) = in_support_[static_cast<std::size_t>(i)] ? sign0(base_point_(i)) : -sign0(h(i));
      return g;
    }
    case NormKind::L2: {
      const double base_nrm = base_point_.norm();
      if (base_nrm > 0.0) return base_point_ / base_nrm;
      const double h_nrm = h.norm();
      return h_nrm > 0.0 ? VectorXd(-h / h_nrm) : VectorXd::Zero(h.size());
    }
    case NormKind::GroupLasso: {
      const auto& groups = norm_.groups();
      VectorXd g = VectorXd::Zero(h.size());
      for (Index gi : support_) {
        double block = 0.0;
        for (Index idx : groups[static_cast<std::size_t>(gi)])
          block += base_point_(idx) * base_point_(idx);
        const double nrm = std::sqrt(block);
        for (Index idx : groups[static_cast<std::size_t>(gi)]) g(idx) = base_point_(idx) / nrm;
      }
      return g;
    }
    case NormKind::Nuclear:
      return as_vector(MatrixXd(u_ * v_.transpose()));
  }
  return VectorXd::Zero(h.size());
}

}  // namespace mni
