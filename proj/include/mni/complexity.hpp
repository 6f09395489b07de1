#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "mni/covariance.hpp"
#include "mni/norms.hpp"

namespace mni {

// ---------------------------------------------------------------------------
// Local Rademacher fixed point
//   r*(gamma) = inf { r > 0 : E sup_{h in B, ||Sigma^{1/2} h||_2 <= r}
//                              sum_i eps_i <X_i, h>  <=  gamma n r }.
// The expectation is estimated by Monte Carlo over (X, eps) draws; the inner
// supremum over the intersection is surrogated by the minimum of the two
// single-constraint suprema, min(||w||_*, r ||Sigma^{-1/2} w||_2) for
// w = sum_i eps_i X_i, which upper-bounds the exact value (tests validate the
// surrogate against a grid oracle at small p). The crossing is located on a
// 64-point log grid over [1e-6, 1e2] and refined by bisection.
// ---------------------------------------------------------------------------

struct RStarEstimate {
  double value = 0.0;
  bool at_grid_boundary = false;
  int design_samples = 0;
  int rademacher_per_design = 0;
};

RStarEstimate estimate_r_star(const NormFamily& norm, const Covariance& cov, int n,
                              double gamma, int mc_samples = 256, std::uint64_t seed = 0);

// Closed-form upper bounds on r*(gamma) from the Gaussian computations:
//   L1         sqrt(48 max_i Sigma_ii)/gamma * sqrt(log(p/n)/n),
//              valid when p/n >= 384 e / gamma^2
//   GroupLasso sqrt(5)/gamma * sqrt(max_i |G_i| / n), valid when
//              log(M) <= max_i |G_i|
//   Nuclear    2/gamma * sqrt(max(p1, p2)/n)
// No closed form for L2 (valid = false).
struct ClosedFormRStar {
  double value = 0.0;
  bool valid = false;
};

ClosedFormRStar closed_form_r_star(const NormFamily& norm, const Covariance& cov, int n,
                                   double gamma);

// ---------------------------------------------------------------------------
// Small-ball constants. Gaussian features satisfy the L4-L2 condition with
// B^4 = 3, so any kappa in [0,1) works with delta = (1 - kappa^2)/3. The
// report pairs the analytic constants with an empirical check: over random
// directions h, the fraction of draws with |<X,h>| >= kappa ||Sigma^{1/2}h||_2
// must be at least delta.
// ---------------------------------------------------------------------------

struct SmallBallReport {
  double kappa = 0.0;
  double delta = 0.0;
  double min_fraction = 0.0;  // worst direction
  bool pass = false;
  int directions = 0;
  int samples = 0;
};

SmallBallReport estimate_small_ball(const Covariance& cov, int mc_samples,
                                    double kappa = 0.5773502691896258, int directions = 16,
                                    std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Subdifferential gaps. delta_gap_lower returns a certified candidate zeta
// for inf_{||h||=1, ||Sigma^{1/2}h||_2 <= r*} sup_g <g, h>: the analytic
// worst-case bound of the corresponding construction, tightened downward by
// any random probe that lands in the constraint set. delta_gap_upper returns
// the analytic candidate zeta_bar for the sup-inf variant and cross-checks
// that probes never exceed it.
//
// Analytic candidates (s = support size of the subgradient spec):
//   lower: L1 1 - 2 sqrt(s) r*/psi (capped at 1/2 when the off-support case
//          is possible under a non-identity covariance), GroupLasso
//          1 - 2 sqrt(s) r*, Nuclear 1 - 4 sqrt(s) r*, L2 -1.
//   upper: L1 sqrt(s) r*/psi, GroupLasso and Nuclear sqrt(s) r*,
//          L2 min(1, r*/sqrt(lambda_min)).
// ---------------------------------------------------------------------------

struct GapEstimate {
  double value = 0.0;      // certified candidate
  double analytic = 0.0;   // closed-form part
  double probe_extreme = 0.0;  // worst probe seen (min for lower, max for upper)
  int probes_attempted = 0;
  int probes_in_set = 0;
};

GapEstimate delta_gap_lower(const SubgradientSpec& spec, double r_star, int probe_count,
                            double psi = 1.0, const Covariance* cov = nullptr,
                            std::uint64_t seed = 0);

GapEstimate delta_gap_upper(const SubgradientSpec& spec, double r_star, int probe_count,
                            double psi = 1.0, const Covariance* cov = nullptr,
                            std::uint64_t seed = 0);

// Restricted eigenvalue: heuristic minimization of
// ||Sigma^{1/2} h||_2 / ||P_I h||_2 over the cone
// {||P_{I^c} h||_1 <= 3 ||P_I h||_1} by projected subgradient descent with
// restarts. Returns the smallest ratio found, an upper estimate of psi.
double restricted_eigenvalue(const Covariance& cov, const std::vector<Index>& support,
                             int restarts = 16, int iters = 400, std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Right-hand sides of the error bounds. T1*/T2* carry their explicit
// constants and bound the (non-squared) prediction error; T3..T9 are the
// sparsity-regime displays with implicit constants taken as 1 and bound the
// squared error. `v` denotes max.
//   T1a  sqrt8/(kappa sqrt delta) xi/sqrt n  v  r* (2||h*|| + nu)
//   T1b  sqrt8/(kappa sqrt delta) xi/sqrt n  v  r* nu / zeta
//   T2a  2 sqrt8/(sqrt delta kappa)(xi/sqrt n + sqrt(lambda ||h*||)) v
//        r*(2||h*|| + nu)
//   T2b  4 sqrt8/(sqrt delta kappa) xi/sqrt n +
//        (32/(delta kappa^2) lambda zeta_bar / r*  v  r* nu / zeta)
//   T3   S (xi^2/(beta n));  T4  S (xi^2/(beta n) + s lambda^2 / psi^2)
//        with S = max(1, sup_{||b||_1=1}||Sigma^{-1/2}b||_1^2 max_i Sigma_ii)
//   T5   W xi^2/n;           T6  W xi^2/n + s lambda^2
//   T7   xi^2/n;             T8  xi^2/n + s lambda^2
//   T9   xi^2/n + ||h*||_2^2 r_{c4 n}(Sigma) / n
// ---------------------------------------------------------------------------

enum class Theorem { T1a, T1b, T2a, T2b, T3, T4, T5, T6, T7, T8, T9 };

const char* theorem_name(Theorem t);
std::optional<Theorem> theorem_from_name(const std::string& name);

// Inputs default to NaN; theorem_rhs throws naming the first missing field.
struct TheoremInputs {
  double kappa = std::numeric_limits<double>::quiet_NaN();
  double delta = std::numeric_limits<double>::quiet_NaN();
  double noise_l2 = std::numeric_limits<double>::quiet_NaN();
  double n = std::numeric_limits<double>::quiet_NaN();
  double r_star = std::numeric_limits<double>::quiet_NaN();
  double h_star_norm = std::numeric_limits<double>::quiet_NaN();  // in ||.||
  double nu_norm = std::numeric_limits<double>::quiet_NaN();
  double zeta = std::numeric_limits<double>::quiet_NaN();
  double zeta_bar = std::numeric_limits<double>::quiet_NaN();
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double beta = std::numeric_limits<double>::quiet_NaN();
  double s = std::numeric_limits<double>::quiet_NaN();
  double psi = std::numeric_limits<double>::quiet_NaN();
  double sigma_factor = std::numeric_limits<double>::quiet_NaN();  // S above
  double w_ratio = std::numeric_limits<double>::quiet_NaN();       // W above
  double h_star_l2 = std::numeric_limits<double>::quiet_NaN();
  double tail_r_c4n = std::numeric_limits<double>::quiet_NaN();
};

double theorem_rhs(Theorem which, const TheoremInputs& in);

// r_k(Sigma) = sum_{i=k}^p lambda_i(Sigma), 1-based k; k > p gives 0.
double spectral_tail(const Covariance& cov, int k);

// k* = inf { k in [p] : r_k(Sigma)/lambda_k(Sigma) > c1 n }; nullopt encodes
// the empty-set convention inf {} = +infinity.
std::optional<int> effective_rank_kstar(const Covariance& cov, double c1, int n);

// Everything the bound-verification pipeline produces for one instance.
struct BoundReport {
  double gamma = 0.0;
  double r_star_estimate = 0.0;
  double r_star_closed_form = 0.0;
  bool r_star_closed_valid = false;
  double kappa = 0.0;
  double delta = 0.0;
  double zeta = 0.0;
  double zeta_bar = 0.0;
  double psi = 1.0;
  double nu_lower = 0.0;
  double nu_primal = 0.0;
  double nu_upper = 0.0;
  double h_star_norm = 0.0;
  double noise_l2 = 0.0;
  Theorem theorem = Theorem::T1a;
  double theorem_rhs_value = 0.0;
  double empirical_lhs = 0.0;
  double ratio = 0.0;
  int mc_samples = 0;
  int probe_count = 0;
};

}  // namespace mni
