#include "support.hpp"

#include "porosplit/error.hpp"
#include "porosplit/model.hpp"

#include <doctest.h>

using namespace porosplit;
using porosplit::test::Rng;

TEST_CASE("isotropic elasticity in Voigt form") {
  CHECK(isotropic_elasticity(1.0, 0.0).voigt.isApprox(Mat3(Vec3(2, 2, 2).asDiagonal())));

  Mat3 expected;
  expected << 3, 1, 0, 1, 3, 0, 0, 0, 2;
  CHECK((isotropic_elasticity(1.0, 1.0).voigt - expected).norm() == 0.0);

  CHECK_THROWS_AS(isotropic_elasticity(0.0, 1.0), MaterialError);
  CHECK_THROWS_AS(isotropic_elasticity(1.0, -0.5), MaterialError);
}

TEST_CASE("Voigt contraction equals the Frobenius product") {
  Rng rng(3);
  for (int i = 0; i < 10; ++i) {
    const Mat2 a = rng.sym2(), b = rng.sym2();
    CHECK(to_voigt(a).dot(to_voigt(b)) == doctest::Approx((a.array() * b.array()).sum()));
    CHECK((from_voigt(to_voigt(a)) - a).norm() < 1e-15);
  }
  // C eps = 2 mu eps + lambda tr(eps) I applied to a random strain
  const double mu = 0.7, lambda = 1.3;
  const Mat2 eps = rng.sym2();
  const Mat2 sigma = 2 * mu * eps + lambda * eps.trace() * Mat2::Identity();
  CHECK((from_voigt(isotropic_elasticity(mu, lambda).voigt * to_voigt(eps)) - sigma).norm() <
        1e-14);
}

TEST_CASE("alpha : C^-1 : alpha") {
  const auto C = isotropic_elasticity(1.0, 1.0);
  BiotTensor I;
  I.value = Mat2::Identity();
  CHECK(alpha_C_inv_alpha(C, I) == doctest::Approx(0.5).epsilon(1e-15));

  BiotTensor zero;
  zero.value = Mat2::Zero();
  CHECK(alpha_C_inv_alpha(C, zero) == 0.0);

  // a^2 d / (2 mu + d lambda) with d = 2
  for (double mu : {0.3, 1.0, 7.5})
    for (double lambda : {0.0, 0.4, 12.0})
      for (double a : {0.2, 1.0, 3.0}) {
        BiotTensor alpha;
        alpha.value = a * Mat2::Identity();
        const double closed = a * a * 2.0 / (2 * mu + 2 * lambda);
        const double value = alpha_C_inv_alpha(isotropic_elasticity(mu, lambda), alpha);
        CHECK(std::abs(value - closed) <= 1e-14 * closed);
        CHECK(std::abs(value - a * a / drained_bulk_modulus(mu, lambda)) <= 1e-14 * closed);
      }
}

TEST_CASE("alpha : C^-1 : alpha is nonnegative and vanishes only for alpha = 0") {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    ElasticityTensor C;
    C.voigt = rng.spd3();
    BiotTensor alpha;
    alpha.value = rng.sym2();
    CHECK(alpha_C_inv_alpha(C, alpha) > 0.0);
  }
  ElasticityTensor C;
  C.voigt = rng.spd3();
  BiotTensor zero;
  zero.value = Mat2::Zero();
  CHECK(alpha_C_inv_alpha(C, zero) == 0.0);
}

TEST_CASE("contraction rate") {
  CHECK(contraction_rate(1.0, 1.0) == 0.5);
  CHECK(contraction_rate(0.0, 3.0) == 0.0);
  CHECK(contraction_rate(0.5, 0.25) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(contraction_rate(1.0, 0.0), MaterialError);

  const double xs[] = {0.01, 0.1, 0.5, 1, 4, 100};
  for (std::size_t i = 1; i < std::size(xs); ++i) {
    CHECK(contraction_rate(xs[i], 1.0) > contraction_rate(xs[i - 1], 1.0));
    CHECK(contraction_rate(1.0, xs[i]) < contraction_rate(1.0, xs[i - 1]));
  }
}

TEST_CASE("theoretical rate of a field") {
  CHECK(theoretical_rate(MaterialField::homogeneous(test::isotropic(1, 1, 1, 0.25))) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(theoretical_rate(MaterialField::homogeneous(test::isotropic(1, 1, 0, 0.25))) == 0.0);

  // heterogeneous: largest coupling strength, smallest storage
  std::vector<MaterialRecord> recs = {test::isotropic(1, 1, 1, 2.0), test::isotropic(1, 1, 2, 0.5),
                                      test::isotropic(1, 1, 0.5, 4.0)};
  const auto field = MaterialField::per_element(recs);
  CHECK(max_coupling_strength(field) == doctest::Approx(2.0));
  CHECK(theoretical_rate(field) == doctest::Approx(2.0 / 2.5));
}

TEST_CASE("material validation") {
  CHECK(validate_material(MaterialField::homogeneous(test::isotropic()), 4).empty());

  std::vector<MaterialRecord> recs(3, test::isotropic());
  recs[1].c0 = 0.0;
  auto issues = validate_material(MaterialField::per_element(recs), 3);
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].element == 1);
  CHECK(issues[0].message.find("positive compressibility") != std::string::npos);

  auto bad_k = test::isotropic();
  bad_k.permeability.value << 1, 0, 0, -1;
  issues = validate_material(MaterialField::homogeneous(bad_k), 1);
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].message.find("permeability not SPD") != std::string::npos);

  auto bad_rho = test::isotropic();
  bad_rho.rho = -1;
  bad_rho.biot.value << 1, 2, 0, 1;
  issues = validate_material(MaterialField::homogeneous(bad_rho), 1);
  CHECK(issues.size() == 2);
  CHECK_THROWS_AS(require_valid_material(MaterialField::homogeneous(bad_rho), 1), MaterialError);

  CHECK_FALSE(validate_material(MaterialField::per_element(recs), 5).empty());
}

TEST_CASE("theta parameters") {
  CHECK_NOTHROW(ThetaParams{1.0, 0.5, 0.01}.validate());
  CHECK_THROWS_AS((ThetaParams{0.0, 1.0, 0.1}.validate()), ConfigError);
  CHECK_THROWS_AS((ThetaParams{1.0, 1.5, 0.1}.validate()), ConfigError);
  CHECK_THROWS_AS((ThetaParams{1.0, 1.0, 0.0}.validate()), ConfigError);
}
