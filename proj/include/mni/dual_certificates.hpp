#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "mni/covariance.hpp"
#include "mni/norms.hpp"
#include "mni/solvers.hpp"

namespace mni {

// Bracket on the norm of the interpolated noise nu = argmin ||h|| s.t.
// X h = xi, together with the value of the dual program
// sup v^T xi s.t. ||sum_i v_i X_i||_* <= 1 (strong duality: both sides agree).
//
// lower_bracket  = ||xi||_2 / ||sum_i (xi_i/||xi||_2) X_i||_*   (always valid)
// upper_bracket  = ||xi||_2 / sphere_inf_estimate; the sphere infimum is
// estimated from above, so the upper bracket is only valid up to that
// estimation error (see sphere_method).
struct DualCertificate {
  double primal_value = 0.0;
  double dual_value = 0.0;
  double lower_bracket = 0.0;
  double upper_bracket = 0.0;
  double sphere_inf_estimate = 0.0;
  std::string sphere_method;
  bool primal_converged = true;
  bool dual_converged = true;
};

struct CertifyOptions {
  int sphere_restarts = 32;
  int sphere_iters = 400;
  std::uint64_t seed = 0;
  int jobs = 1;
};

// Requires inst.noise, n <= p, independent rows. xi = 0 short-circuits to the
// all-zero certificate.
DualCertificate certify(const ProblemInstance& inst, const NormFamily& norm,
                        const SolverConfig& cfg = {}, const CertifyOptions& opts = {});

// Best value found for inf_{v in S^{n-1}} ||sum_i v_i X_i||_* by projected
// subgradient descent with random restarts; an upper bound on the true
// infimum.
double sphere_infimum(const MatrixXd& design, const NormFamily& norm, int restarts = 32,
                      int iters = 400, std::uint64_t seed = 0, int jobs = 1);

struct AppendixBound {
  double value = 0.0;
  bool valid = false;  // false when the lemma's dimension condition fails
};

struct AppendixParams {
  double alpha = 0.5;                  // l1 lemma tuning constant, in (0, 1)
  const Covariance* sigma = nullptr;   // l1 lemma only; nullptr = identity
};

// Closed-form high-probability lower bounds for the sphere infimum:
//   L1         sqrt((alpha/2) log(p/n)) / sup_{||b||_1=1} ||Sigma^{-1/2} b||_1
//              when p >= n max[(sqrt(2 pi) log(72 n/alpha))^{1/(1-alpha)}, e^{1/alpha}]
//   GroupLasso sqrt(min_i |G_i|) / (2 sqrt 2)
//              when p >= 32 n log(6 sqrt2 (2 sqrt n + sqrt W))
//   Nuclear    sqrt(max(p1, p2)) / 2
//              when 48 n log(32 n (p1 + p2)) <= p1 p2
// The formula value is always returned; `valid` reflects the condition.
// No closed form exists for L2 (valid = false, value = 0).
AppendixBound appendix_lower_bounds(int n, Index p, const NormFamily& norm,
                                    const AppendixParams& params = {});

}  // namespace mni
