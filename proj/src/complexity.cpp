#include "mni/complexity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mni/rng.hpp"

namespace mni {

namespace {

constexpr double kGridLo = 1e-6;
constexpr double kGridHi = 1e2;
constexpr int kGridPoints = 64;
constexpr int kRademacherPerDesign = 8;

double require_input(double v, const char* theorem, const char* field) {
  if (std::isnan(v))
    throw std::invalid_argument(std::string("theorem_rhs(") + theorem + "): missing input " +
                                field);
  return v;
}

// Draws h on the unit sphere of the family norm (Gaussian direction,
// normalized). The base-point direction is probe 0 when it is well-defined.
VectorXd norm_sphere_probe(const NormFamily& norm, Index p, RngStream& rng) {
  VectorXd z(p);
  for (Index i = 0; i < p; ++i) z(i) = rng.normal();
  const double nrm = norm.eval(z);
  if (nrm == 0.0) return VectorXd::Zero(p);
  return z / nrm;
}

}  // namespace

RStarEstimate estimate_r_star(const NormFamily& norm, const Covariance& cov, int n, double gamma,
                              int mc_samples, std::uint64_t seed) {
  if (!(gamma > 0.0)) throw std::invalid_argument("estimate_r_star: gamma must be > 0");
  if (n < 1) throw std::invalid_argument("estimate_r_star: n must be >= 1");
  if (mc_samples < 1) throw std::invalid_argument("estimate_r_star: mc_samples must be >= 1");
  const Index p = cov.dim();
  norm.check_dim(p);

  // Per (design, eps) draw the sup statistic is min(a, r b) with
  // a = ||w||_*, b = ||Sigma^{-1/2} w||_2 accumulated alongside w so no
  // inverse square root is ever applied.
  const int k = kRademacherPerDesign;
  std::vector<double> dual_part(static_cast<std::size_t>(mc_samples) * k);
  std::vector<double> ell2_part(dual_part.size());
  std::vector<VectorXd> w(k), wz(k);
  for (int s = 0; s < mc_samples; ++s) {
    RngStream rng(seed, static_cast<std::uint64_t>(s));
    for (int j = 0; j < k; ++j) {
      w[j].setZero(p);
      wz[j].setZero(p);
    }
    VectorXd z(p);
    for (int i = 0; i < n; ++i) {
      for (Index c = 0; c < p; ++c) z(c) = rng.normal();
      const VectorXd x = cov.is_identity() ? z : cov.sqrt_apply(z);
      for (int j = 0; j < k; ++j) {
        const double eps = rng.uniform() < 0.5 ? -1.0 : 1.0;
        w[j] += eps * x;
        wz[j] += eps * z;
      }
    }
    for (int j = 0; j < k; ++j) {
      dual_part[static_cast<std::size_t>(s) * k + j] = norm.dual_eval(w[j]);
      ell2_part[static_cast<std::size_t>(s) * k + j] = wz[j].norm();
    }
  }

  std::vector<double> vals(dual_part.size());
  const auto estimate_at = [&](double r) {
    for (std::size_t i = 0; i < vals.size(); ++i)
      vals[i] = std::min(dual_part[i], r * ell2_part[i]);
    return pairwise_mean(vals);
  };
  const auto holds_at = [&](double r) {
    return estimate_at(r) <= gamma * static_cast<double>(n) * r;
  };

  RStarEstimate out;
  out.design_samples = mc_samples;
  out.rademacher_per_design = k;

  const double log_lo = std::log(kGridLo);
  const double log_hi = std::log(kGridHi);
  int first_hold = -1;
  for (int i = 0; i < kGridPoints; ++i) {
    const double r = std::exp(log_lo + (log_hi - log_lo) * i / (kGridPoints - 1));
    if (holds_at(r)) {
      first_hold = i;
      break;
    }
  }
  if (first_hold < 0) {
    out.value = kGridHi;
    out.at_grid_boundary = true;
    return out;
  }
  if (first_hold == 0) {
    out.value = kGridLo;
    out.at_grid_boundary = true;
    return out;
  }
  double lo = std::exp(log_lo + (log_hi - log_lo) * (first_hold - 1) / (kGridPoints - 1));
  double hi = std::exp(log_lo + (log_hi - log_lo) * first_hold / (kGridPoints - 1));
  while ((hi - lo) > 1e-3 * hi) {
    const double mid = std::sqrt(lo * hi);
    if (holds_at(mid))
      hi = mid;
    else
      lo = mid;
  }
  out.value = hi;
  return out;
}

ClosedFormRStar closed_form_r_star(const NormFamily& norm, const Covariance& cov, int n,
                                   double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("closed_form_r_star: gamma must be > 0");
  if (n < 1) throw std::invalid_argument("closed_form_r_star: n must be >= 1");
  ClosedFormRStar out;
  const double nd = static_cast<double>(n);
  switch (norm.kind()) {
    case NormKind::L1: {
      const double pd = static_cast<double>(cov.dim());
      const double smax = cov.max_diag();
      out.value = std::sqrt(48.0 * smax) / gamma * std::sqrt(std::log(pd / nd) / nd);
      out.valid = pd / nd >= 384.0 * std::exp(1.0) / (gamma * gamma);
      break;
    }
    case NormKind::GroupLasso: {
      double max_g = 0.0;
      for (const auto& g : norm.groups()) max_g = std::max(max_g, static_cast<double>(g.size()));
      out.value = std::sqrt(5.0) / gamma * std::sqrt(max_g / nd);
      out.valid = std::log(static_cast<double>(norm.groups().size())) <= max_g;
      break;
    }
    case NormKind::Nuclear: {
      const auto [p1, p2] = norm.shape();
      out.value = 2.0 / gamma * std::sqrt(static_cast<double>(std::max(p1, p2)) / nd);
      out.valid = true;
      break;
    }
    case NormKind::L2:
      out.value = 0.0;
      out.valid = false;
      break;
  }
  return out;
}

SmallBallReport estimate_small_ball(const Covariance& cov, int mc_samples, double kappa,
                                    int directions, std::uint64_t seed) {
  if (mc_samples < 1) throw std::invalid_argument("estimate_small_ball: mc_samples must be >= 1");
  if (directions < 1) throw std::invalid_argument("estimate_small_ball: directions must be >= 1");
  if (!(kappa >= 0.0 && kappa < 1.0))
    throw std::invalid_argument("estimate_small_ball: kappa must be in [0, 1)");
  const Index p = cov.dim();

  SmallBallReport rep;
  rep.kappa = kappa;
  rep.delta = (1.0 - kappa * kappa) / 3.0;
  rep.directions = directions;
  rep.samples = mc_samples;
  rep.min_fraction = 1.0;
  for (int d = 0; d < directions; ++d) {
    RngStream rng(seed, static_cast<std::uint64_t>(d) * 2 + 1);
    VectorXd h(p);
    for (Index i = 0; i < p; ++i) h(i) = rng.normal();
    if (h.norm() == 0.0) h(0) = 1.0;
    const double threshold = kappa * cov.quad_norm(h);
    RngStream draw(seed, static_cast<std::uint64_t>(d) * 2 + 2);
    int hits = 0;
    for (int s = 0; s < mc_samples; ++s) {
      if (std::abs(cov.sample(draw).dot(h)) >= threshold) ++hits;
    }
    rep.min_fraction =
        std::min(rep.min_fraction, static_cast<double>(hits) / static_cast<double>(mc_samples));
  }
  rep.pass = rep.min_fraction >= rep.delta;
  return rep;
}

namespace {

double analytic_gap_lower(const SubgradientSpec& spec, double r_star, double psi,
                          bool identity_cov) {
  const double s = static_cast<double>(spec.support_size());
  switch (spec.norm().kind()) {
    case NormKind::L1: {
      if (identity_cov) return 1.0 - 2.0 * std::sqrt(s) * r_star;
      const double case2 = 1.0 - 2.0 * std::sqrt(s) * r_star / psi;
      return spec.full_support() ? case2 : std::min(0.5, case2);
    }
    case NormKind::GroupLasso:
      return 1.0 - 2.0 * std::sqrt(s) * r_star;
    case NormKind::Nuclear:
      return 1.0 - 4.0 * std::sqrt(s) * r_star;
    case NormKind::L2:
      return -1.0;
  }
  return -1.0;
}

double analytic_gap_upper(const SubgradientSpec& spec, double r_star, double psi,
                          const Covariance* cov) {
  const double s = static_cast<double>(spec.support_size());
  switch (spec.norm().kind()) {
    case NormKind::L1:
      return std::sqrt(s) * r_star / psi;
    case NormKind::GroupLasso:
    case NormKind::Nuclear:
      return std::sqrt(s) * r_star;
    case NormKind::L2: {
      const double lmin = cov ? cov->lambda_min() : 1.0;
      return lmin > 0.0 ? std::min(1.0, r_star / std::sqrt(lmin)) : 1.0;
    }
  }
  return 0.0;
}

}  // namespace

GapEstimate delta_gap_lower(const SubgradientSpec& spec, double r_star, int probe_count,
                            double psi, const Covariance* cov, std::uint64_t seed) {
  if (!(r_star > 0.0)) throw std::invalid_argument("delta_gap_lower: r_star must be > 0");
  const NormFamily& norm = spec.norm();
  const Index p = spec.base_point().size();
  const bool identity = cov == nullptr || cov->is_identity();

  GapEstimate out;
  out.analytic = analytic_gap_lower(spec, r_star, psi, identity);
  out.value = out.analytic;
  out.probe_extreme = std::numeric_limits<double>::infinity();

  RngStream rng(seed, 0);
  for (int t = 0; t < probe_count; ++t) {
    ++out.probes_attempted;
    VectorXd h;
    if (t == 0 && norm.eval(spec.base_point()) > 0.0) {
      h = spec.base_point() / norm.eval(spec.base_point());
    } else {
      h = norm_sphere_probe(norm, p, rng);
      if (norm.eval(h) == 0.0) continue;
    }
    const double quad = cov ? cov->quad_norm(h) : h.norm();
    if (quad > r_star) continue;
    ++out.probes_in_set;
    const double val = spec.lower(h).dot(h);
    out.probe_extreme = std::min(out.probe_extreme, val);
    out.value = std::min(out.value, val);
  }
  if (out.probes_in_set == 0) out.probe_extreme = out.analytic;
  return out;
}

GapEstimate delta_gap_upper(const SubgradientSpec& spec, double r_star, int probe_count,
                            double psi, const Covariance* cov, std::uint64_t seed) {
  if (!(r_star > 0.0)) throw std::invalid_argument("delta_gap_upper: r_star must be > 0");
  const NormFamily& norm = spec.norm();
  const Index p = spec.base_point().size();

  GapEstimate out;
  out.analytic = analytic_gap_upper(spec, r_star, psi, cov);
  out.value = out.analytic;
  out.probe_extreme = -std::numeric_limits<double>::infinity();

  RngStream rng(seed, 0);
  for (int t = 0; t < probe_count; ++t) {
    ++out.probes_attempted;
    VectorXd z(p);
    for (Index i = 0; i < p; ++i) z(i) = rng.normal();
    const double quad = cov ? cov->quad_norm(z) : z.norm();
    if (quad == 0.0) continue;
    const VectorXd h = (r_star / quad) * z;
    if (norm.eval(h) > 1.0) continue;
    ++out.probes_in_set;
    const double val = spec.upper(h).dot(h);
    out.probe_extreme = std::max(out.probe_extreme, val);
    if (val > out.analytic + 1e-9)
      throw std::logic_error("delta_gap_upper: probe exceeded the analytic bound");
  }
  if (out.probes_in_set == 0) out.probe_extreme = out.analytic;
  return out;
}

double restricted_eigenvalue(const Covariance& cov, const std::vector<Index>& support,
                             int restarts, int iters, std::uint64_t seed) {
  if (support.empty()) throw std::invalid_argument("restricted_eigenvalue: empty support");
  const Index p = cov.dim();
  std::vector<char> on(static_cast<std::size_t>(p), 0);
  for (Index i : support) {
    if (i < 0 || i >= p) throw std::invalid_argument("restricted_eigenvalue: index out of range");
    on[static_cast<std::size_t>(i)] = 1;
  }

  const auto cone_retract = [&](VectorXd& h) {
    double on_l1 = 0.0, off_l1 = 0.0;
    for (Index i = 0; i < p; ++i)
      (on[static_cast<std::size_t>(i)] ? on_l1 : off_l1) += std::abs(h(i));
    if (off_l1 > 3.0 * on_l1) {
      const double scale = off_l1 > 0.0 ? 3.0 * on_l1 / off_l1 : 0.0;
      for (Index i = 0; i < p; ++i)
        if (!on[static_cast<std::size_t>(i)]) h(i) *= scale;
    }
  };
  const auto ratio = [&](const VectorXd& h) {
    double m = 0.0;
    for (Index i : support) m += h(i) * h(i);
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return cov.quad_norm(h) / std::sqrt(m);
  };

  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts + 1; ++r) {
    RngStream rng(seed, static_cast<std::uint64_t>(r));
    VectorXd h(p);
    if (r == 0) {
      // Supported start: feasible with ratio ||Sigma^{1/2} h|| / ||h||.
      h.setZero();
      for (Index i : support) h(i) = rng.normal();
      if (h.cwiseAbs().maxCoeff() == 0.0) h(support[0]) = 1.0;
    } else {
      for (Index i = 0; i < p; ++i) h(i) = rng.normal();
      cone_retract(h);
    }
    h.normalize();
    best = std::min(best, ratio(h));

    for (int t = 1; t <= iters; ++t) {
      // grad of q/m with q = ||Sigma^{1/2}h||^2, m = ||P_I h||^2.
      const VectorXd sh = cov.sqrt_apply(h);
      const double q = sh.squaredNorm();
      double m = 0.0;
      for (Index i : support) m += h(i) * h(i);
      if (m == 0.0) break;
      VectorXd grad = 2.0 * cov.sqrt_apply(sh) / m;
      for (Index i : support) grad(i) -= 2.0 * q / (m * m) * h(i);
      const double gn = grad.norm();
      if (gn == 0.0) break;
      h -= (0.3 / std::sqrt(static_cast<double>(t))) * (grad / gn);
      cone_retract(h);
      const double hn = h.norm();
      if (hn == 0.0) break;
      h /= hn;
      best = std::min(best, ratio(h));
    }
  }
  return best;
}

const char* theorem_name(Theorem t) {
  switch (t) {
    case Theorem::T1a: return "T1a";
    case Theorem::T1b: return "T1b";
    case Theorem::T2a: return "T2a";
    case Theorem::T2b: return "T2b";
    case Theorem::T3: return "T3";
    case Theorem::T4: return "T4";
    case Theorem::T5: return "T5";
    case Theorem::T6: return "T6";
    case Theorem::T7: return "T7";
    case Theorem::T8: return "T8";
    case Theorem::T9: return "T9";
  }
  return "?";
}

std::optional<Theorem> theorem_from_name(const std::string& name) {
  for (Theorem t : {Theorem::T1a, Theorem::T1b, Theorem::T2a, Theorem::T2b, Theorem::T3,
                    Theorem::T4, Theorem::T5, Theorem::T6, Theorem::T7, Theorem::T8,
                    Theorem::T9}) {
    if (name == theorem_name(t)) return t;
  }
  return std::nullopt;
}

double theorem_rhs(Theorem which, const TheoremInputs& in) {
  const char* tn = theorem_name(which);
  const auto req = [&](double v, const char* f) { return require_input(v, tn, f); };
  switch (which) {
    case Theorem::T1a: {
      const double first = std::sqrt(8.0) / (req(in.kappa, "kappa") * std::sqrt(req(in.delta, "delta"))) *
                           req(in.noise_l2, "noise_l2") / std::sqrt(req(in.n, "n"));
      const double second = req(in.r_star, "r_star") *
                            (2.0 * req(in.h_star_norm, "h_star_norm") + req(in.nu_norm, "nu_norm"));
      return std::max(first, second);
    }
    case Theorem::T1b: {
      const double first = std::sqrt(8.0) / (req(in.kappa, "kappa") * std::sqrt(req(in.delta, "delta"))) *
                           req(in.noise_l2, "noise_l2") / std::sqrt(req(in.n, "n"));
      const double second =
          req(in.r_star, "r_star") * req(in.nu_norm, "nu_norm") / req(in.zeta, "zeta");
      return std::max(first, second);
    }
    case Theorem::T2a: {
      const double first =
          2.0 * std::sqrt(8.0) / (std::sqrt(req(in.delta, "delta")) * req(in.kappa, "kappa")) *
          (req(in.noise_l2, "noise_l2") / std::sqrt(req(in.n, "n")) +
           std::sqrt(req(in.lambda, "lambda") * req(in.h_star_norm, "h_star_norm")));
      const double second = req(in.r_star, "r_star") *
                            (2.0 * req(in.h_star_norm, "h_star_norm") + req(in.nu_norm, "nu_norm"));
      return std::max(first, second);
    }
    case Theorem::T2b: {
      const double first =
          4.0 * std::sqrt(8.0) / (std::sqrt(req(in.delta, "delta")) * req(in.kappa, "kappa")) *
          req(in.noise_l2, "noise_l2") / std::sqrt(req(in.n, "n"));
      const double a = 32.0 / (req(in.delta, "delta") * req(in.kappa, "kappa") * in.kappa) *
                       req(in.lambda, "lambda") * req(in.zeta_bar, "zeta_bar") /
                       req(in.r_star, "r_star");
      const double b =
          req(in.r_star, "r_star") * req(in.nu_norm, "nu_norm") / req(in.zeta, "zeta");
      return first + std::max(a, b);
    }
    case Theorem::T3: {
      const double xi2 = req(in.noise_l2, "noise_l2") * in.noise_l2;
      return req(in.sigma_factor, "sigma_factor") * xi2 /
             (req(in.beta, "beta") * req(in.n, "n"));
    }
    case Theorem::T4: {
      const double xi2 = req(in.noise_l2, "noise_l2") * in.noise_l2;
      const double psi = req(in.psi, "psi");
      return req(in.sigma_factor, "sigma_factor") *
             (xi2 / (req(in.beta, "beta") * req(in.n, "n")) +
              req(in.s, "s") * req(in.lambda, "lambda") * in.lambda / (psi * psi));
    }
    case Theorem::T5: {
      const double xi2 = req(in.noise_l2, "noise_l2") * in.noise_l2;
      return req(in.w_ratio, "w_ratio") * xi2 / req(in.n, "n");
    }
    case Theorem::T6: {
      const double xi2 = req(in.noise_l2, "noise_l2") * in.noise_l2;
      return req(in.w_ratio, "w_ratio") * xi2 / req(in.n, "n") +
             req(in.s, "s") * req(in.lambda, "lambda") * in.lambda;
    }
    case Theorem::T7: {
      const double xi2 = req(in.noise_l2, "noise_l2") * in.noise_l2;
      return xi2 / req(in.n, "n");
    }
    case Theorem::T8: {
      const double xi2 = req(in.noise_l2, "noise_l2") * in.noise_l2;
      return xi2 / req(in.n, "n") + req(in.s, "s") * req(in.lambda, "lambda") * in.lambda;
    }
    case Theorem::T9: {
      const double xi2 = req(in.noise_l2, "noise_l2") * in.noise_l2;
      return xi2 / req(in.n, "n") +
             req(in.h_star_l2, "h_star_l2") * in.h_star_l2 * req(in.tail_r_c4n, "tail_r_c4n") /
                 req(in.n, "n");
    }
  }
  throw std::logic_error("theorem_rhs: unknown theorem");
}

double spectral_tail(const Covariance& cov, int k) {
  if (k < 1) throw std::invalid_argument("spectral_tail: k must be >= 1");
  const VectorXd& ev = cov.eigenvalues();
  if (k > ev.size()) return 0.0;
  double s = 0.0;
  for (Index i = ev.size() - 1; i >= k - 1; --i) s += ev(i);  // ascending accumulation
  return s;
}

std::optional<int> effective_rank_kstar(const Covariance& cov, double c1, int n) {
  const VectorXd& ev = cov.eigenvalues();
  const double bound = c1 * static_cast<double>(n);
  for (int k = 1; k <= ev.size(); ++k) {
    const double lk = ev(k - 1);
    if (lk <= 0.0) break;  // zero eigenvalue: tail is zero too, ratio cannot exceed
    if (spectral_tail(cov, k) / lk > bound) return k;
  }
  return std::nullopt;
}

}  // namespace mni
