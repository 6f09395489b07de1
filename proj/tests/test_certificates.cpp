#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "mni/dual_certificates.hpp"
#include "mni/experiments.hpp"
#include "mni/norms.hpp"
#include "mni/rng.hpp"

using namespace mni;

namespace {

ProblemInstance noisy_instance(int n, Index p, const NormFamily& norm, std::uint64_t seed,
                               double sigma = 1.0) {
  SignalSpec signal = SignalSpec::sparse(2);
  if (norm.kind() == NormKind::GroupLasso)
    signal = SignalSpec::group_sparse(1, norm.groups());
  else if (norm.kind() == NormKind::Nuclear) {
    const auto [r, c] = norm.shape();
    signal = SignalSpec::low_rank(1, r, c);
  } else if (norm.kind() == NormKind::L2) {
    signal = SignalSpec::dense(0.3);
  }
  return generate_instance(n, p, CovarianceSpec{}, signal, NoiseSpec::gaussian(sigma), seed);
}

}  // namespace

TEST_CASE("one-constraint certificate has the documented values") {
  ProblemInstance inst;
  inst.design.resize(1, 2);
  inst.design << 1, 2;
  inst.noise = VectorXd::Constant(1, 2.0);
  inst.responses = *inst.noise;
  const DualCertificate cert = certify(inst, NormFamily::l1());
  CHECK(cert.primal_value == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(cert.dual_value == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(cert.lower_bracket == doctest::Approx(1.0));
}

TEST_CASE("zero noise short-circuits to the zero certificate") {
  ProblemInstance inst;
  inst.design = MatrixXd::Random(3, 9);
  inst.noise = VectorXd::Zero(3);
  inst.responses = VectorXd::Zero(3);
  const DualCertificate cert = certify(inst, NormFamily::l1());
  CHECK(cert.primal_value == 0.0);
  CHECK(cert.dual_value == 0.0);
  CHECK(cert.lower_bracket == 0.0);
  CHECK(cert.upper_bracket == 0.0);
}

TEST_CASE("certify requires a noise vector and n <= p") {
  ProblemInstance inst;
  inst.design = MatrixXd::Random(3, 9);
  inst.responses = VectorXd::Zero(3);
  CHECK_THROWS_AS(certify(inst, NormFamily::l1()), std::invalid_argument);
  inst.design = MatrixXd::Random(9, 3);
  inst.responses = VectorXd::Zero(9);
  inst.noise = VectorXd::Zero(9);
  CHECK_THROWS_AS(certify(inst, NormFamily::l1()), std::invalid_argument);
}

TEST_CASE("strong duality and bracket validity across the four families") {
  const NormFamily families[] = {NormFamily::l1(), NormFamily::l2(),
                                 NormSpec{NormKind::GroupLasso, 4, 0, 0}.build(24),
                                 NormFamily::nuclear(4, 6)};
  CertifyOptions opts;
  opts.sphere_restarts = 6;
  for (const NormFamily& norm : families) {
    for (int t = 0; t < 12; ++t) {
      const ProblemInstance inst = noisy_instance(6, 24, norm, 100 + t);
      const DualCertificate cert = certify(inst, norm, SolverConfig{}, opts);
      REQUIRE(cert.primal_converged);
      CHECK(std::abs(cert.primal_value - cert.dual_value) <=
            1e-6 * std::max(cert.primal_value, 1e-12));
      CHECK(cert.lower_bracket <= cert.primal_value + 1e-9);
      CHECK(cert.sphere_inf_estimate > 0.0);
    }
  }
}

TEST_CASE("sphere infimum on closed-form cases") {
  SUBCASE("n = 1 equals the dual norm of the single row") {
    MatrixXd x(1, 3);
    x << 1, -2, 0.5;
    CHECK(sphere_infimum(x, NormFamily::l1(), 4, 200, 1) ==
          doctest::Approx(2.0).epsilon(1e-9));
    CHECK(sphere_infimum(x, NormFamily::l2(), 4, 200, 1) ==
          doctest::Approx(x.row(0).norm()).epsilon(1e-9));
  }
  SUBCASE("identity rows: the symmetric point minimizes the max-coordinate") {
    // inf over the Euclidean sphere of ||v||_inf is 1/sqrt(n).
    const MatrixXd eye = MatrixXd::Identity(4, 4);
    CHECK(sphere_infimum(eye, NormFamily::l1(), 8, 2000, 2) ==
          doctest::Approx(0.5).epsilon(1e-3));
  }
  SUBCASE("estimate is an upper bound that never beats fixed probes") {
    RngStream rng(3, 0);
    MatrixXd x(5, 40);
    for (int i = 0; i < x.size(); ++i) x(i / 40, i % 40) = rng.normal();
    const double found = sphere_infimum(x, NormFamily::l1(), 8, 400, 3);
    for (int t = 0; t < 50; ++t) {
      VectorXd v(5);
      for (int i = 0; i < 5; ++i) v(i) = rng.normal();
      v.normalize();
      CHECK(found <= NormFamily::l1().dual_eval(x.transpose() * v) + 1e-12);
    }
  }
}

TEST_CASE("appendix closed forms on the documented points") {
  SUBCASE("l1") {
    const AppendixBound b = appendix_lower_bounds(10, 10000, NormFamily::l1());
    CHECK(b.valid);
    CHECK(b.value == doctest::Approx(std::sqrt(0.25 * std::log(1000.0))).epsilon(1e-12));
    CHECK(b.value == doctest::Approx(1.3141).epsilon(1e-4));
    // condition fails when p is too small relative to n
    CHECK_FALSE(appendix_lower_bounds(100, 300, NormFamily::l1()).valid);
  }
  SUBCASE("group lasso with blocks of 8") {
    const NormFamily norm = NormSpec{NormKind::GroupLasso, 8, 0, 0}.build(1328);
    const AppendixBound b = appendix_lower_bounds(10, 1328, norm);
    CHECK(b.valid);
    CHECK(b.value == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("nuclear 40 x 40") {
    const NormFamily norm = NormFamily::nuclear(40, 40);
    const AppendixBound small_n = appendix_lower_bounds(3, 1600, norm);
    CHECK(small_n.valid);
    CHECK(small_n.value == doctest::Approx(std::sqrt(40.0) / 2.0).epsilon(1e-12));
    CHECK(small_n.value == doctest::Approx(3.1623).epsilon(1e-4));
    CHECK_FALSE(appendix_lower_bounds(10, 1600, norm).valid);
  }
  SUBCASE("no closed form for l2") {
    CHECK_FALSE(appendix_lower_bounds(5, 100, NormFamily::l2()).valid);
  }
  SUBCASE("covariance enters the l1 bound through the inverse-root factor") {
    const Covariance cov = Covariance::diagonal(VectorXd::Constant(10000, 4.0));
    AppendixParams params;
    params.sigma = &cov;
    const AppendixBound b = appendix_lower_bounds(10, 10000, NormFamily::l1(), params);
    CHECK(b.value == doctest::Approx(2.0 * std::sqrt(0.25 * std::log(1000.0))).epsilon(1e-12));
  }
}

TEST_CASE("monte carlo check of the l1 appendix bound at a small scale") {
  // 20 seeded designs at n = 5, p = 2000 (the lemma's condition holds);
  // the found sphere value must clear the closed form in at least 19.
  const AppendixBound bound = appendix_lower_bounds(5, 2000, NormFamily::l1());
  REQUIRE(bound.valid);
  int hits = 0;
  for (int t = 0; t < 20; ++t) {
    RngStream rng(500 + t, 0);
    MatrixXd x(5, 2000);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 2000; ++j) x(i, j) = rng.normal();
    if (sphere_infimum(x, NormFamily::l1(), 4, 250, t) >= bound.value) ++hits;
  }
  CHECK(hits >= 19);
}
