#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mni/complexity.hpp"
#include "mni/covariance.hpp"
#include "mni/dual_certificates.hpp"
#include "mni/norms.hpp"
#include "mni/solvers.hpp"

namespace mni {

// ---------------------------------------------------------------------------
// Instance generation
// ---------------------------------------------------------------------------

struct SignalSpec {
  enum class Kind { Sparse, GroupSparse, LowRank, Dense };
  enum class Placement { Prefix, Random };

  Kind kind = Kind::Sparse;
  int s = 0;  // nonzeros / active groups / rank; ignored for Dense
  double magnitude = 1.0;
  Placement placement = Placement::Prefix;
  // GroupSparse draws its partition from the norm family when present,
  // otherwise from this one.
  std::vector<std::vector<Index>> partition;
  Index rows = 0, cols = 0;  // LowRank shape

  static SignalSpec sparse(int s, double magnitude = 1.0,
                           Placement placement = Placement::Prefix);
  static SignalSpec group_sparse(int s, std::vector<std::vector<Index>> partition,
                                 double magnitude = 1.0,
                                 Placement placement = Placement::Prefix);
  static SignalSpec low_rank(int s, Index rows, Index cols, double magnitude = 1.0,
                             Placement placement = Placement::Prefix);
  static SignalSpec dense(double magnitude = 1.0);
};

struct NoiseSpec {
  enum class Kind { None, GaussianIID, FixedVector, AdversarialTwoPoint };

  Kind kind = Kind::None;
  double sigma = 0.0;    // GaussianIID
  VectorXd values;       // FixedVector
  double epsilon = 0.0;  // AdversarialTwoPoint, in (0, 1)
  std::uint64_t seed = 0;  // extra stream offset folded into the instance seed

  static NoiseSpec none();
  static NoiseSpec gaussian(double sigma);
  static NoiseSpec fixed(VectorXd values);
  static NoiseSpec adversarial(double epsilon);
};

struct CovarianceSpec {
  enum class Kind { Identity, Diagonal, Dense };
  Kind kind = Kind::Identity;
  VectorXd diag;
  MatrixXd dense;

  Covariance build(Index p) const;
};

// Draws h* for the given signal shape (deterministic given rng state).
VectorXd draw_signal(const SignalSpec& signal, Index p, RngStream& rng);

// Deterministic given seed: the design rows are Sigma^{1/2} z with iid
// normal z, Y is assembled exactly as X h* + xi. AdversarialTwoPoint draws h1
// from `signal` (the structure class), rescales it so that
// ||Sigma^{1/2} h1||_2^2 = eps^2/8 exactly, plants xi_i = <X_i, h1> and sets
// h* = 0; h1 is kept in ProblemInstance::adversary_h1.
ProblemInstance generate_instance(int n, Index p, const CovarianceSpec& cov_spec,
                                  const SignalSpec& signal, const NoiseSpec& noise,
                                  std::uint64_t seed);

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

// Norm template, resolved to a NormFamily once the ambient dimension of a
// sweep point is known. Group-Lasso uses consecutive groups of group_size;
// Nuclear uses rows x cols, or a square shape when sweeping p.
struct NormSpec {
  NormKind kind = NormKind::L1;
  Index group_size = 0;
  Index rows = 0, cols = 0;

  NormFamily build(Index p) const;
};

struct SweepPlan {
  enum class Axis { N, P, S, Lambda, NoiseLevel };
  enum class Estimator { MinNorm, Rerm };

  Axis axis = Axis::N;
  std::vector<double> values;
  int trials_per_point = 1;
  Estimator estimator = Estimator::MinNorm;
  double lambda = 0.0;
  NormSpec norm;
  int base_n = 0;
  Index base_p = 0;
  SignalSpec signal;
  NoiseSpec noise;
  CovarianceSpec covariance;
  SolverConfig solver;
  std::uint64_t master_seed = 0;
  std::string out_dir;  // empty = no files, records returned only
  int jobs = 1;
  // Optional per-record extras.
  bool with_certificate = false;
  bool with_r_star = false;
  std::optional<Theorem> theorem;
  double beta = 0.5;        // T3/T4 overparameterization constant
  double gamma = 0.0;       // r* localization; 0 = kappa*delta/32 with the
                            // Gaussian constants kappa=1/sqrt(3), delta=2/9
  int r_star_samples = 128;
  int certificate_restarts = 8;

  void validate() const;
};

struct TrialRecord {
  int point_index = 0;
  int trial_index = 0;
  std::uint64_t seed = 0;
  int n = 0;
  Index p = 0;
  int s = 0;
  std::string norm;
  std::string estimator;
  double lambda = 0.0;
  std::string noise_kind;
  double noise_l2 = 0.0;
  std::string status = "ok";  // "ok" or "error: ..."
  double prediction_error = 0.0;
  double l2_error = 0.0;
  double estimate_norm = 0.0;
  double constraint_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  // Optional extras; NaN = absent (written as empty CSV cells).
  double nu_lower = std::numeric_limits<double>::quiet_NaN();
  double nu_primal = std::numeric_limits<double>::quiet_NaN();
  double nu_upper = std::numeric_limits<double>::quiet_NaN();
  double r_star = std::numeric_limits<double>::quiet_NaN();
  std::string theorem;
  double theorem_rhs = std::numeric_limits<double>::quiet_NaN();
  double empirical_lhs = std::numeric_limits<double>::quiet_NaN();
  double ratio = std::numeric_limits<double>::quiet_NaN();
};

std::string trial_record_csv_header();
std::string trial_record_csv_row(const TrialRecord& r);

// Executes the plan. Trials run in parallel (plan.jobs); records are written
// in (point, trial) order so output bytes are independent of the job count.
// Writes out_dir/records.csv, out_dir/plan.json and out_dir/plot.csv when
// out_dir is set. Individual trial failures are recorded and the sweep
// continues.
std::vector<TrialRecord> run_sweep(const SweepPlan& plan);

// ---------------------------------------------------------------------------
// Bound verification
// ---------------------------------------------------------------------------

struct VerifySummary {
  Theorem theorem = Theorem::T1a;
  int count = 0;
  double max_ratio = 0.0;
  double q50 = 0.0;
  double q90 = 0.0;
  double ceiling = 0.0;
  bool pass = false;
};

// Default ratio ceilings. Bounds with explicit constants (T1a..T2b) use 1.0;
// the remaining theorems hide absolute constants, so their ceilings are
// empirical calibration values for the Gaussian test scale, not quantities
// from any analysis.
double default_ratio_ceiling(Theorem t);

VerifySummary verify_bound(const std::vector<TrialRecord>& records, Theorem which,
                           std::optional<double> ceiling = std::nullopt);

// ---------------------------------------------------------------------------
// Two-point lower-bound experiment
// ---------------------------------------------------------------------------

struct LowerBoundConfig {
  int n = 0;
  Index p = 0;
  double epsilon = 0.5;
  SignalSpec structure;  // the class L the alternative h1 is drawn from
  NormSpec norm;
  CovarianceSpec covariance;
  SolverConfig solver;
  std::uint64_t master_seed = 0;
  int jobs = 1;
};

struct LowerBoundSummary {
  int trials = 0;
  double fraction_noise_within = 0.0;  // ||xi||^2 <= n eps^2
  double fraction_error_floor = 0.0;   // max of the two errors >= eps^2/16
  double mean_noise_sq = 0.0;          // average ||xi||^2 (expected n eps^2/8)
  bool datasets_identical = true;
  double epsilon = 0.0;
  int n = 0;
};

LowerBoundSummary lower_bound_experiment(double epsilon, int n, int trials,
                                         const LowerBoundConfig& cfg);

// ---------------------------------------------------------------------------
// Full bound report for a single instance: small-ball constants, r*, the
// interpolated-noise bracket, the subdifferential gap candidates, and the
// chosen theorem's RHS against the measured LHS.
// ---------------------------------------------------------------------------

struct BoundReportConfig {
  int n = 0;
  Index p = 0;
  NormSpec norm;
  SignalSpec signal;
  NoiseSpec noise;
  CovarianceSpec covariance;
  SweepPlan::Estimator estimator = SweepPlan::Estimator::MinNorm;
  double lambda = 0.0;
  Theorem theorem = Theorem::T1a;
  double beta = 0.5;
  double gamma = 0.0;  // 0 = kappa*delta/32
  int r_star_samples = 128;
  int sphere_restarts = 8;
  int probe_count = 64;
  SolverConfig solver;
  std::uint64_t seed = 0;
  int jobs = 1;
};

BoundReport compute_bound_report(const BoundReportConfig& cfg);

// Gaussian small-ball constants used throughout: kappa = 1/sqrt(3),
// delta = (1 - kappa^2)/3 = 2/9, gamma = kappa*delta/32.
double gaussian_kappa();
double gaussian_delta();
double gaussian_gamma();

std::string format_g17(double v);

}  // namespace mni
