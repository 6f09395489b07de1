// Command-line front end: every subcommand is a thin orchestration over the
// library; numeric output goes to files under --out, a human summary to
// stdout, and failures produce a machine-readable JSON record on stderr.
//
// Exit codes: 0 success, 2 bad config, 3 solver non-convergence (solve).

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "mni/complexity.hpp"
#include "mni/dual_certificates.hpp"
#include "mni/experiments.hpp"
#include "mni/norms.hpp"
#include "mni/parallel.hpp"
#include "mni/solvers.hpp"

using nlohmann::json;

namespace {

struct ConfigError : std::runtime_error {
  std::string field;
  ConfigError(std::string field_path, const std::string& message)
      : std::runtime_error(message), field(std::move(field_path)) {}
};

const json& get_required(const json& j, const std::string& key, const std::string& path) {
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError(path + "/" + key, "missing required field");
  return *it;
}

double get_number(const json& j, const std::string& key, const std::string& path,
                  std::optional<double> fallback = std::nullopt) {
  const auto it = j.find(key);
  if (it == j.end()) {
    if (fallback) return *fallback;
    throw ConfigError(path + "/" + key, "missing required field");
  }
  if (!it->is_number()) throw ConfigError(path + "/" + key, "expected a number");
  return it->get<double>();
}

int get_int(const json& j, const std::string& key, const std::string& path,
            std::optional<int> fallback = std::nullopt) {
  const auto it = j.find(key);
  if (it == j.end()) {
    if (fallback) return *fallback;
    throw ConfigError(path + "/" + key, "missing required field");
  }
  if (!it->is_number_integer()) throw ConfigError(path + "/" + key, "expected an integer");
  return it->get<int>();
}

std::string get_string(const json& j, const std::string& key, const std::string& path,
                       std::optional<std::string> fallback = std::nullopt) {
  const auto it = j.find(key);
  if (it == j.end()) {
    if (fallback) return *fallback;
    throw ConfigError(path + "/" + key, "missing required field");
  }
  if (!it->is_string()) throw ConfigError(path + "/" + key, "expected a string");
  return it->get<std::string>();
}

Eigen::VectorXd parse_vector(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(path, "expected an array of numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd parse_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected an array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) throw ConfigError(path, "expected nonempty rows");
  Eigen::MatrixXd m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw ConfigError(path, "rows must all have the same length");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
  }
  return m;
}

mni::NormSpec parse_norm_spec(const json& j, const std::string& path) {
  mni::NormSpec spec;
  const std::string kind = get_string(j, "kind", path);
  if (kind == "l1") {
    spec.kind = mni::NormKind::L1;
  } else if (kind == "l2") {
    spec.kind = mni::NormKind::L2;
  } else if (kind == "group_lasso") {
    spec.kind = mni::NormKind::GroupLasso;
    spec.group_size = get_int(j, "group_size", path, 0);
  } else if (kind == "nuclear") {
    spec.kind = mni::NormKind::Nuclear;
    spec.rows = get_int(j, "rows", path, 0);
    spec.cols = get_int(j, "cols", path, 0);
  } else {
    throw ConfigError(path + "/kind", "unknown norm kind '" + kind + "'");
  }
  return spec;
}

mni::NormFamily parse_norm(const json& j, Eigen::Index p, const std::string& path) {
  const std::string kind = get_string(j, "kind", path);
  if (kind == "group_lasso" && j.contains("groups")) {
    const json& groups_json = j["groups"];
    if (!groups_json.is_array()) throw ConfigError(path + "/groups", "expected an array");
    std::vector<std::vector<Eigen::Index>> groups;
    for (const auto& g : groups_json) {
      std::vector<Eigen::Index> idx;
      for (const auto& e : g) idx.push_back(e.get<Eigen::Index>());
      groups.push_back(std::move(idx));
    }
    try {
      return mni::NormFamily::group_lasso(std::move(groups));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(path + "/groups", e.what());
    }
  }
  try {
    return parse_norm_spec(j, path).build(p);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

mni::SignalSpec parse_signal(const json& j, const std::string& path) {
  mni::SignalSpec spec;
  const std::string kind = get_string(j, "kind", path);
  if (kind == "sparse") {
    spec.kind = mni::SignalSpec::Kind::Sparse;
  } else if (kind == "group_sparse") {
    spec.kind = mni::SignalSpec::Kind::GroupSparse;
  } else if (kind == "low_rank") {
    spec.kind = mni::SignalSpec::Kind::LowRank;
    spec.rows = get_int(j, "rows", path, 0);
    spec.cols = get_int(j, "cols", path, 0);
  } else if (kind == "dense") {
    spec.kind = mni::SignalSpec::Kind::Dense;
  } else {
    throw ConfigError(path + "/kind", "unknown signal kind '" + kind + "'");
  }
  spec.s = get_int(j, "s", path, 0);
  spec.magnitude = get_number(j, "magnitude", path, 1.0);
  const std::string placement = get_string(j, "placement", path, "prefix");
  if (placement == "prefix") {
    spec.placement = mni::SignalSpec::Placement::Prefix;
  } else if (placement == "random") {
    spec.placement = mni::SignalSpec::Placement::Random;
  } else {
    throw ConfigError(path + "/placement", "expected 'prefix' or 'random'");
  }
  return spec;
}

mni::NoiseSpec parse_noise(const json& j, const std::string& path) {
  const std::string kind = get_string(j, "kind", path);
  if (kind == "none") return mni::NoiseSpec::none();
  if (kind == "gaussian") return mni::NoiseSpec::gaussian(get_number(j, "sigma", path));
  if (kind == "fixed") return mni::NoiseSpec::fixed(parse_vector(get_required(j, "values", path), path + "/values"));
  if (kind == "adversarial") return mni::NoiseSpec::adversarial(get_number(j, "epsilon", path));
  throw ConfigError(path + "/kind", "unknown noise kind '" + kind + "'");
}

mni::CovarianceSpec parse_covariance(const json& j, const std::string& path) {
  mni::CovarianceSpec spec;
  const std::string kind = get_string(j, "kind", path, "identity");
  if (kind == "identity") {
    spec.kind = mni::CovarianceSpec::Kind::Identity;
  } else if (kind == "diagonal") {
    spec.kind = mni::CovarianceSpec::Kind::Diagonal;
    spec.diag = parse_vector(get_required(j, "values", path), path + "/values");
  } else if (kind == "dense") {
    spec.kind = mni::CovarianceSpec::Kind::Dense;
    spec.dense = parse_matrix(get_required(j, "matrix", path), path + "/matrix");
  } else {
    throw ConfigError(path + "/kind", "unknown covariance kind '" + kind + "'");
  }
  return spec;
}

mni::SolverConfig parse_solver(const json& root) {
  mni::SolverConfig cfg;
  if (!root.contains("solver")) return cfg;
  const json& j = root["solver"];
  cfg.max_iters = get_int(j, "max_iters", "solver", cfg.max_iters);
  cfg.tol_primal = get_number(j, "tol_primal", "solver", cfg.tol_primal);
  cfg.tol_dual = get_number(j, "tol_dual", "solver", cfg.tol_dual);
  cfg.admm_rho = get_number(j, "admm_rho", "solver", cfg.admm_rho);
  cfg.feasibility_tol = get_number(j, "feasibility_tol", "solver", cfg.feasibility_tol);
  cfg.tol_objective = get_number(j, "tol_objective", "solver", cfg.tol_objective);
  if (!(cfg.tol_primal > 0 && cfg.tol_dual > 0 && cfg.feasibility_tol > 0 &&
        cfg.tol_objective > 0))
    throw ConfigError("solver", "tolerances must be positive");
  return cfg;
}

// An instance is either inline (design/responses arrays) or generated
// (n/p/signal/noise/covariance plus a seed).
mni::ProblemInstance parse_instance(const json& j, std::uint64_t seed_override, bool has_seed) {
  mni::ProblemInstance inst;
  if (j.contains("design")) {
    inst.design = parse_matrix(get_required(j, "design", "instance"), "instance/design");
    inst.responses =
        parse_vector(get_required(j, "responses", "instance"), "instance/responses");
    if (j.contains("truth")) inst.truth = parse_vector(j["truth"], "instance/truth");
    if (j.contains("noise")) {
      if (!j["noise"].is_array())
        throw ConfigError("instance/noise", "inline noise must be an array");
      inst.noise = parse_vector(j["noise"], "instance/noise");
    }
    if (j.contains("covariance"))
      inst.covariance =
          parse_covariance(j["covariance"], "instance/covariance").build(inst.design.cols());
    try {
      inst.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("instance", e.what());
    }
    return inst;
  }
  const int n = get_int(j, "n", "instance");
  const int p = get_int(j, "p", "instance");
  const mni::SignalSpec signal =
      parse_signal(get_required(j, "signal", "instance"), "instance/signal");
  const mni::NoiseSpec noise = parse_noise(get_required(j, "noise", "instance"), "instance/noise");
  mni::CovarianceSpec cov;
  if (j.contains("covariance")) cov = parse_covariance(j["covariance"], "instance/covariance");
  std::uint64_t seed = has_seed ? seed_override
                                : static_cast<std::uint64_t>(get_int(j, "seed", "instance", 0));
  try {
    return mni::generate_instance(n, p, cov, signal, noise, seed);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("instance", e.what());
  }
}

json load_config(const std::string& config_path) {
  std::ifstream in(config_path);
  if (!in) throw ConfigError("--config", "cannot open '" + config_path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", std::string("parse error: ") + e.what());
  }
}

struct GlobalOptions {
  std::string config_path;
  std::string out_dir = "out";
  long long seed = -1;  // -1 = use the config's seed
  int jobs = 0;
  bool quiet = false;

  bool has_seed() const { return seed >= 0; }
  std::uint64_t seed_u64() const { return static_cast<std::uint64_t>(seed); }
};

void emit(const GlobalOptions& opts, const std::string& line) {
  if (!opts.quiet) std::cout << line << "\n";
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  out << j.dump(2) << "\n";
}

std::string vector_preview(const Eigen::VectorXd& v, Eigen::Index limit = 20) {
  if (v.size() > limit) return "(" + std::to_string(v.size()) + " entries, see estimate.csv)";
  // Display-only rounding: entries below solver precision print as 0; the
  // CSV keeps full precision.
  const double snap = 1e-8 * (1.0 + v.cwiseAbs().maxCoeff());
  std::string s = "[";
  char buf[32];
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.6g", std::abs(v(i)) < snap ? 0.0 : v(i));
    s += buf;
    if (i + 1 < v.size()) s += ", ";
  }
  return s + "]";
}

int cmd_solve(const GlobalOptions& opts) {
  const json cfg = load_config(opts.config_path);
  const mni::ProblemInstance inst =
      parse_instance(get_required(cfg, "instance", ""), opts.seed_u64(), opts.has_seed());
  const mni::NormFamily norm =
      parse_norm(get_required(cfg, "norm", ""), inst.p(), "norm");
  const mni::SolverConfig solver = parse_solver(cfg);

  std::string estimator_kind = "min_norm";
  double lambda = 0.0;
  if (cfg.contains("estimator")) {
    estimator_kind = get_string(cfg["estimator"], "kind", "estimator");
    if (estimator_kind == "rerm") lambda = get_number(cfg["estimator"], "lambda", "estimator");
    else if (estimator_kind != "min_norm")
      throw ConfigError("estimator/kind", "expected 'min_norm' or 'rerm'");
  }

  const mni::EstimatorResult res = estimator_kind == "min_norm"
                                       ? mni::solve_min_norm(inst, norm, solver)
                                       : mni::solve_rerm(inst, norm, lambda, solver);

  std::filesystem::create_directories(opts.out_dir);
  {
    std::ofstream est(opts.out_dir + "/estimate.csv", std::ios::binary);
    est << "index,value\n";
    for (Eigen::Index i = 0; i < res.estimate.size(); ++i)
      est << i << "," << mni::format_g17(res.estimate(i)) << "\n";
  }
  json summary = {{"estimator", estimator_kind},
                  {"norm", mni::norm_kind_name(norm.kind())},
                  {"objective", res.objective},
                  {"constraint_residual", res.constraint_residual},
                  {"iterations", res.iterations},
                  {"converged", res.converged}};
  if (res.unique_hint) summary["unique_hint"] = *res.unique_hint;
  write_json(opts.out_dir + "/solve.json", summary);

  emit(opts, "solve: " + std::string(mni::norm_kind_name(norm.kind())) + " " + estimator_kind +
                 (res.converged ? " converged" : " DID NOT CONVERGE") + " in " +
                 std::to_string(res.iterations) + " iterations");
  emit(opts, "  objective = " + mni::format_g17(res.objective) +
                 ", residual = " + mni::format_g17(res.constraint_residual));
  emit(opts, "  h_hat = " + vector_preview(res.estimate));

  if (!res.converged) {
    json err = {{"error", {{"kind", "non_convergence"},
                           {"iterations", res.iterations},
                           {"constraint_residual", res.constraint_residual}}}};
    std::cerr << err.dump() << "\n";
    return 3;
  }
  return 0;
}

int cmd_certify(const GlobalOptions& opts) {
  const json cfg = load_config(opts.config_path);
  const mni::ProblemInstance inst =
      parse_instance(get_required(cfg, "instance", ""), opts.seed_u64(), opts.has_seed());
  const mni::NormFamily norm = parse_norm(get_required(cfg, "norm", ""), inst.p(), "norm");
  const mni::SolverConfig solver = parse_solver(cfg);

  mni::CertifyOptions copts;
  copts.jobs = opts.jobs;
  if (cfg.contains("certify")) {
    copts.sphere_restarts = get_int(cfg["certify"], "restarts", "certify", copts.sphere_restarts);
    copts.sphere_iters = get_int(cfg["certify"], "iters", "certify", copts.sphere_iters);
    copts.seed = static_cast<std::uint64_t>(get_int(cfg["certify"], "seed", "certify", 0));
  }
  if (!inst.noise) throw ConfigError("instance", "certify needs a noise vector");

  const mni::DualCertificate cert = mni::certify(inst, norm, solver, copts);
  std::filesystem::create_directories(opts.out_dir);
  write_json(opts.out_dir + "/certificate.json",
             json{{"primal_value", cert.primal_value},
                  {"dual_value", cert.dual_value},
                  {"lower_bracket", cert.lower_bracket},
                  {"upper_bracket", cert.upper_bracket},
                  {"sphere_inf_estimate", cert.sphere_inf_estimate},
                  {"sphere_method", cert.sphere_method},
                  {"primal_converged", cert.primal_converged},
                  {"dual_converged", cert.dual_converged}});
  emit(opts, "certify: primal = " + mni::format_g17(cert.primal_value) +
                 ", dual = " + mni::format_g17(cert.dual_value));
  emit(opts, "  bracket = [" + mni::format_g17(cert.lower_bracket) + ", " +
                 mni::format_g17(cert.upper_bracket) + "] (sphere inf " +
                 mni::format_g17(cert.sphere_inf_estimate) + ", upper-biased estimate)");
  return 0;
}

int cmd_sweep(const GlobalOptions& opts) {
  const json cfg = load_config(opts.config_path);
  const json& sj = get_required(cfg, "sweep", "");

  mni::SweepPlan plan;
  const std::string axis = get_string(sj, "axis", "sweep");
  if (axis == "n") plan.axis = mni::SweepPlan::Axis::N;
  else if (axis == "p") plan.axis = mni::SweepPlan::Axis::P;
  else if (axis == "s") plan.axis = mni::SweepPlan::Axis::S;
  else if (axis == "lambda") plan.axis = mni::SweepPlan::Axis::Lambda;
  else if (axis == "noise_level") plan.axis = mni::SweepPlan::Axis::NoiseLevel;
  else throw ConfigError("sweep/axis", "unknown axis '" + axis + "'");

  const json& values = get_required(sj, "values", "sweep");
  if (!values.is_array() || values.empty())
    throw ConfigError("sweep/values", "expected a nonempty array");
  for (const auto& v : values) plan.values.push_back(v.get<double>());

  plan.trials_per_point = get_int(sj, "trials_per_point", "sweep", 1);
  const std::string estimator = get_string(sj, "estimator", "sweep", "min_norm");
  if (estimator == "min_norm") plan.estimator = mni::SweepPlan::Estimator::MinNorm;
  else if (estimator == "rerm") plan.estimator = mni::SweepPlan::Estimator::Rerm;
  else throw ConfigError("sweep/estimator", "expected 'min_norm' or 'rerm'");
  plan.lambda = get_number(sj, "lambda", "sweep", 0.0);
  plan.base_n = get_int(sj, "base_n", "sweep", 0);
  plan.base_p = get_int(sj, "base_p", "sweep", 0);
  plan.with_certificate = sj.value("with_certificate", false);
  plan.with_r_star = sj.value("with_r_star", false);
  plan.beta = get_number(sj, "beta", "sweep", 0.5);
  plan.gamma = get_number(sj, "gamma", "sweep", 0.0);
  plan.r_star_samples = get_int(sj, "r_star_samples", "sweep", 128);
  plan.certificate_restarts = get_int(sj, "certificate_restarts", "sweep", 8);
  if (sj.contains("theorem")) {
    const std::string tname = get_string(sj, "theorem", "sweep");
    const auto t = mni::theorem_from_name(tname);
    if (!t) throw ConfigError("sweep/theorem", "unknown theorem '" + tname + "'");
    plan.theorem = *t;
  }

  plan.norm = parse_norm_spec(get_required(cfg, "norm", ""), "norm");
  plan.signal = parse_signal(get_required(cfg, "signal", ""), "signal");
  plan.noise = parse_noise(get_required(cfg, "noise", ""), "noise");
  if (cfg.contains("covariance")) plan.covariance = parse_covariance(cfg["covariance"], "covariance");
  plan.solver = parse_solver(cfg);
  plan.master_seed = opts.has_seed()
                         ? opts.seed_u64()
                         : static_cast<std::uint64_t>(get_int(cfg, "seed", "", 0));
  plan.jobs = opts.jobs;
  plan.out_dir = opts.out_dir;

  try {
    plan.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("sweep", e.what());
  }

  const auto records = mni::run_sweep(plan);
  int failed = 0;
  for (const auto& rec : records)
    if (rec.status != "ok") ++failed;
  emit(opts, "sweep: " + std::to_string(records.size()) + " records (" + std::to_string(failed) +
                 " failed) -> " + opts.out_dir + "/records.csv");
  if (plan.theorem) {
    const auto summary = mni::verify_bound(records, *plan.theorem);
    emit(opts, "  " + std::string(mni::theorem_name(summary.theorem)) +
                   ": max ratio = " + mni::format_g17(summary.max_ratio) +
                   ", median = " + mni::format_g17(summary.q50) +
                   (summary.pass ? " (within ceiling " : " (EXCEEDS ceiling ") +
                   mni::format_g17(summary.ceiling) + ")");
  }
  return 0;
}

int cmd_bounds(const GlobalOptions& opts) {
  const json cfg = load_config(opts.config_path);
  const json& bj = get_required(cfg, "bounds", "");

  mni::BoundReportConfig fsc;
  fsc.n = get_int(bj, "n", "bounds");
  fsc.p = get_int(bj, "p", "bounds");
  const std::string tname = get_string(bj, "theorem", "bounds", "T1a");
  const auto t = mni::theorem_from_name(tname);
  if (!t) throw ConfigError("bounds/theorem", "unknown theorem '" + tname + "'");
  fsc.theorem = *t;
  const std::string estimator = get_string(bj, "estimator", "bounds", "min_norm");
  if (estimator == "min_norm") fsc.estimator = mni::SweepPlan::Estimator::MinNorm;
  else if (estimator == "rerm") fsc.estimator = mni::SweepPlan::Estimator::Rerm;
  else throw ConfigError("bounds/estimator", "expected 'min_norm' or 'rerm'");
  fsc.lambda = get_number(bj, "lambda", "bounds", 0.0);
  fsc.beta = get_number(bj, "beta", "bounds", 0.5);
  fsc.gamma = get_number(bj, "gamma", "bounds", 0.0);
  fsc.r_star_samples = get_int(bj, "r_star_samples", "bounds", 128);
  fsc.sphere_restarts = get_int(bj, "sphere_restarts", "bounds", 8);
  fsc.probe_count = get_int(bj, "probe_count", "bounds", 64);
  fsc.norm = parse_norm_spec(get_required(cfg, "norm", ""), "norm");
  fsc.signal = parse_signal(get_required(cfg, "signal", ""), "signal");
  fsc.noise = parse_noise(get_required(cfg, "noise", ""), "noise");
  if (cfg.contains("covariance")) fsc.covariance = parse_covariance(cfg["covariance"], "covariance");
  fsc.solver = parse_solver(cfg);
  fsc.seed = opts.has_seed() ? opts.seed_u64()
                             : static_cast<std::uint64_t>(get_int(cfg, "seed", "", 0));
  fsc.jobs = opts.jobs;

  const mni::BoundReport rep = mni::compute_bound_report(fsc);
  std::filesystem::create_directories(opts.out_dir);
  write_json(opts.out_dir + "/bound_report.json",
             json{{"gamma", rep.gamma},
                  {"r_star_estimate", rep.r_star_estimate},
                  {"r_star_closed_form", rep.r_star_closed_form},
                  {"r_star_closed_valid", rep.r_star_closed_valid},
                  {"kappa", rep.kappa},
                  {"delta", rep.delta},
                  {"zeta", rep.zeta},
                  {"zeta_bar", rep.zeta_bar},
                  {"psi", rep.psi},
                  {"nu_lower", rep.nu_lower},
                  {"nu_primal", rep.nu_primal},
                  {"nu_upper", rep.nu_upper},
                  {"h_star_norm", rep.h_star_norm},
                  {"noise_l2", rep.noise_l2},
                  {"theorem", mni::theorem_name(rep.theorem)},
                  {"theorem_rhs", rep.theorem_rhs_value},
                  {"empirical_lhs", rep.empirical_lhs},
                  {"ratio", rep.ratio},
                  {"mc_samples", rep.mc_samples},
                  {"probe_count", rep.probe_count}});
  emit(opts, std::string("bounds: ") + mni::theorem_name(rep.theorem) +
                 " rhs = " + mni::format_g17(rep.theorem_rhs_value) +
                 ", lhs = " + mni::format_g17(rep.empirical_lhs) +
                 ", ratio = " + mni::format_g17(rep.ratio));
  emit(opts, "  r* = " + mni::format_g17(rep.r_star_estimate) + ", nu bracket = [" +
                 mni::format_g17(rep.nu_lower) + ", " + mni::format_g17(rep.nu_upper) +
                 "], zeta = " + mni::format_g17(rep.zeta));
  return 0;
}

int cmd_lower_bound(const GlobalOptions& opts) {
  const json cfg = load_config(opts.config_path);
  const json& lj = get_required(cfg, "lower_bound", "");

  mni::LowerBoundConfig lbc;
  const double epsilon = get_number(lj, "epsilon", "lower_bound");
  const int n = get_int(lj, "n", "lower_bound");
  const int trials = get_int(lj, "trials", "lower_bound");
  lbc.p = get_int(lj, "p", "lower_bound");
  lbc.norm = parse_norm_spec(get_required(cfg, "norm", ""), "norm");
  lbc.structure = parse_signal(get_required(cfg, "structure", ""), "structure");
  if (cfg.contains("covariance")) lbc.covariance = parse_covariance(cfg["covariance"], "covariance");
  lbc.solver = parse_solver(cfg);
  lbc.master_seed = opts.has_seed() ? opts.seed_u64()
                                    : static_cast<std::uint64_t>(get_int(cfg, "seed", "", 0));
  lbc.jobs = opts.jobs;
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw ConfigError("lower_bound/epsilon", "epsilon must be in (0, 1)");

  const mni::LowerBoundSummary summary = mni::lower_bound_experiment(epsilon, n, trials, lbc);
  std::filesystem::create_directories(opts.out_dir);
  write_json(opts.out_dir + "/lower_bound.json",
             json{{"epsilon", summary.epsilon},
                  {"n", summary.n},
                  {"trials", summary.trials},
                  {"fraction_noise_within", summary.fraction_noise_within},
                  {"fraction_error_floor", summary.fraction_error_floor},
                  {"mean_noise_sq", summary.mean_noise_sq},
                  {"datasets_identical", summary.datasets_identical}});
  emit(opts, "lower-bound: " + std::to_string(summary.trials) + " trials, datasets identical = " +
                 (summary.datasets_identical ? "yes" : "NO"));
  emit(opts, "  P(||xi||^2 <= n eps^2) = " + mni::format_g17(summary.fraction_noise_within) +
                 ", P(max error >= eps^2/16) = " + mni::format_g17(summary.fraction_error_floor));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"minimum-norm interpolation and RERM toolbox"};
  app.require_subcommand(1);

  GlobalOptions opts;
  app.add_option("--config", opts.config_path, "path to the JSON plan file")->required();
  app.add_option("--out", opts.out_dir, "output directory (default: out)");
  app.add_option("--seed", opts.seed, "master seed override");
  app.add_option("--jobs", opts.jobs, "parallel trial workers (0 = all cores)");
  app.add_flag("--quiet", opts.quiet, "suppress the stdout summary");

  auto* solve = app.add_subcommand("solve", "solve one instance");
  auto* sweep = app.add_subcommand("sweep", "run a Monte Carlo sweep");
  auto* certify = app.add_subcommand("certify", "interpolated-noise dual certificate");
  auto* bounds = app.add_subcommand("bounds", "bound report for one instance");
  auto* lower = app.add_subcommand("lower-bound", "two-point lower-bound experiment");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(opts);
    if (sweep->parsed()) return cmd_sweep(opts);
    if (certify->parsed()) return cmd_certify(opts);
    if (bounds->parsed()) return cmd_bounds(opts);
    if (lower->parsed()) return cmd_lower_bound(opts);
  } catch (const ConfigError& e) {
    json err = {{"error", {{"kind", "config"}, {"field", e.field}, {"message", e.what()}}}};
    std::cerr << err.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    json err = {{"error", {{"kind", "runtime"}, {"message", e.what()}}}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
