#include <cmath>

#include "doctest.h"
#include "rflin/errors.hpp"
#include "rflin/precision_matrix.hpp"
#include "rflin/rng.hpp"

using namespace rflin;

namespace {

Vector random_unit(int d, Rng& rng) {
  Vector v(d);
  for (int j = 0; j < d; ++j) v(j) = rng.normal();
  return v / v.norm();
}

Vector e(int d, int j) {
  Vector v = Vector::Zero(d);
  v(j) = 1.0;
  return v;
}

}  // namespace

TEST_CASE("pm_new") {
  PrecisionMatrix a(2, 1.0);
  CHECK(a.inv().isApprox(Matrix::Identity(2, 2)));
  CHECK(a.count() == 0);
  PrecisionMatrix b(3, 0.5);
  CHECK((b.inv() - 2.0 * Matrix::Identity(3, 3)).norm() == 0.0);
  CHECK((b.mat() - 0.5 * Matrix::Identity(3, 3)).norm() == 0.0);
  CHECK(b.logdet() == doctest::Approx(3.0 * std::log(0.5)));
  CHECK_THROWS_AS(PrecisionMatrix(2, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(PrecisionMatrix(2, -1.0), std::invalid_argument);
}

TEST_CASE("pm_update examples") {
  PrecisionMatrix pm(2, 1.0);
  pm.update(e(2, 0));
  Matrix expected(2, 2);
  expected << 0.5, 0.0, 0.0, 1.0;
  CHECK((pm.inv() - expected).norm() <= 1e-15);
  CHECK(pm.count() == 1);
  CHECK(pm.quad_form(e(2, 0)) == doctest::Approx(0.5));
  CHECK(pm.logdet() == doctest::Approx(std::log(2.0)));

  const Matrix before = pm.inv();
  pm.update(Vector::Zero(2));
  CHECK((pm.inv() - before).norm() == 0.0);

  CHECK_THROWS_AS(pm.update(Vector::Constant(2, 1.0)), ContractViolation);
}

TEST_CASE("repeated updates along one direction") {
  for (int K : {1, 5, 100, 1000}) {
    PrecisionMatrix pm(3, 1.0);
    for (int k = 0; k < K; ++k) pm.update(e(3, 0));
    CHECK(pm.quad_form(e(3, 0)) == doctest::Approx(1.0 / (1.0 + K)).epsilon(1e-12));
    CHECK(pm.quad_form(e(3, 1)) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("quad_form examples") {
  PrecisionMatrix pm(3, 1.0);
  Vector phi(3);
  phi << 0.3, -0.4, 0.5;
  CHECK(pm.quad_form(phi) == doctest::Approx(phi.squaredNorm()));
  CHECK(pm.quad_form(Vector::Zero(3)) == 0.0);
  CHECK(quad_form(pm.inv(), phi) == doctest::Approx(phi.squaredNorm()));
}

TEST_CASE("self_normalized_stat against a dense solve") {
  PrecisionMatrix pm(4, 1.0);
  CHECK(pm.self_normalized_stat(Vector::Zero(4)) == 0.0);
  CHECK(pm.self_normalized_stat(e(4, 0)) == doctest::Approx(1.0));
  Rng rng(17);
  for (int k = 0; k < 50; ++k) pm.update(random_unit(4, rng));
  for (int trial = 0; trial < 20; ++trial) {
    Vector v(4);
    for (int j = 0; j < 4; ++j) v(j) = 3.0 * rng.normal();
    const Vector x = pm.mat().fullPivLu().solve(v);
    CHECK(std::abs(pm.self_normalized_stat(v) - std::sqrt(v.dot(x))) <= 1e-9);
  }
}

TEST_CASE("elliptic potential examples") {
  const auto three = elliptic_potential_check({e(2, 0), e(2, 0), e(2, 0)}, 1.0);
  CHECK(three.lhs == doctest::Approx(1.0 + 0.5 + 1.0 / 3.0).epsilon(1e-12));
  CHECK(three.bound == doctest::Approx(4.0 * std::log(2.5)).epsilon(1e-12));
  CHECK(three.ok);

  const auto empty = elliptic_potential_check({}, 1.0);
  CHECK(empty.lhs == 0.0);
  CHECK(empty.bound == 0.0);
  CHECK(empty.ok);

  Rng rng(5);
  std::vector<Vector> phis;
  for (int t = 0; t < 10000; ++t) phis.push_back(random_unit(5, rng));
  const auto many = elliptic_potential_check(phis, 1.0);
  CHECK(many.ok);
  CHECK(many.lhs <= many.bound + 1e-9);
}

TEST_CASE("incremental inverse tracks a fresh inverse") {
  for (int d : {2, 5, 8}) {
    Rng rng(static_cast<std::uint64_t>(d));
    PrecisionMatrix pm(d, 1.0);
    for (int t = 0; t < 10000; ++t) {
      pm.update(random_unit(d, rng) * std::sqrt(rng.uniform()));
      if (t % 997 == 0 || t == 9999) {
        const Matrix fresh = pm.mat().inverse();
        CHECK((pm.inv() - fresh).norm() <= 1e-8);
        CHECK((pm.mat() * pm.inv() - Matrix::Identity(d, d)).norm() <= 1e-8);
        CHECK(std::abs(pm.logdet() - std::log(pm.mat().determinant())) <= 1e-8 * std::max(1.0, pm.logdet()));
      }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(pm.mat());
    CHECK(eig.eigenvalues().minCoeff() >= 1.0 - 1e-9);
  }
}

TEST_CASE("quad_form is monotone in updates") {
  Rng rng(23);
  PrecisionMatrix pm(4, 1.0);
  std::vector<Vector> probes;
  for (int i = 0; i < 10; ++i) probes.push_back(random_unit(4, rng));
  std::vector<double> last;
  for (const auto& p : probes) last.push_back(pm.quad_form(p));
  for (int t = 0; t < 2000; ++t) {
    pm.update(random_unit(4, rng));
    for (std::size_t i = 0; i < probes.size(); ++i) {
      const double q = pm.quad_form(probes[i]);
      CHECK(q <= last[i] + 1e-12);
      last[i] = q;
    }
  }
}

TEST_CASE("add_gram matches sequential updates") {
  Rng rng(31);
  PrecisionMatrix a(3, 1.0), b(3, 1.0);
  Matrix gram = Matrix::Zero(3, 3);
  for (int t = 0; t < 40; ++t) {
    const Vector v = random_unit(3, rng);
    a.update(v);
    gram += v * v.transpose();
  }
  b.add_gram(gram, 40);
  CHECK((a.inv() - b.inv()).norm() <= 1e-10);
  CHECK(a.count() == b.count());
  CHECK(a.logdet() == doctest::Approx(b.logdet()).epsilon(1e-10));
}
