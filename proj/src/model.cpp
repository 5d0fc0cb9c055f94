#include "porosplit/model.hpp"

#include "porosplit/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace porosplit {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;

bool is_symmetric(const Eigen::MatrixXd& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

double smallest_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

void check_record(const MaterialRecord& r, std::size_t element,
                  std::vector<MaterialIssue>& issues) {
  auto add = [&](std::string msg) { issues.push_back({element, std::move(msg)}); };
  if (!(r.rho > 0.0) || !std::isfinite(r.rho)) add("density must be positive");
  if (!(r.c0 > 0.0) || !std::isfinite(r.c0))
    add("positive compressibility required (c0 > 0)");

  const Mat3& C = r.elasticity.voigt;
  if (!C.allFinite()) {
    add("elasticity tensor has non-finite entries");
  } else if (!is_symmetric(C)) {
    add("elasticity tensor not symmetric");
  } else if (!(smallest_eigenvalue(C) > 0.0)) {
    add("elasticity tensor not positive definite");
  }

  const Mat2& a = r.biot.value;
  if (!a.allFinite()) {
    add("Biot tensor has non-finite entries");
  } else if (!is_symmetric(a)) {
    add("Biot tensor not symmetric");
  }

  const Mat2& k = r.permeability.value;
  if (!k.allFinite()) {
    add("permeability has non-finite entries");
  } else if (!is_symmetric(k) || !(smallest_eigenvalue(k) > 0.0)) {
    add("permeability not SPD");
  }
}

}  // namespace

Vec3 to_voigt(const Mat2& t) { return {t(0, 0), t(1, 1), kSqrt2 * t(0, 1)}; }

Mat2 from_voigt(const Vec3& v) {
  Mat2 t;
  t << v(0), v(2) / kSqrt2, v(2) / kSqrt2, v(1);
  return t;
}

MaterialField MaterialField::homogeneous(MaterialRecord record) {
  return MaterialField(std::vector<MaterialRecord>{std::move(record)});
}

MaterialField MaterialField::per_element(std::vector<MaterialRecord> records) {
  if (records.empty()) throw MaterialError("material field has no records");
  return MaterialField(std::move(records));
}

MaterialField MaterialField::with_storage(double c0) const {
  auto records = records_;
  for (auto& r : records) r.c0 = c0;
  return MaterialField(std::move(records));
}

void ThetaParams::validate() const {
  auto in_unit = [](double t) { return t > 0.0 && t <= 1.0; };
  if (!in_unit(theta1)) throw ConfigError("theta1 must lie in (0,1]");
  if (!in_unit(theta2)) throw ConfigError("theta2 must lie in (0,1]");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be finite and positive");
}

ElasticityTensor isotropic_elasticity(double mu, double lambda) {
  if (!(mu > 0.0) || !std::isfinite(mu))
    throw MaterialError("shear modulus mu must be positive");
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw MaterialError("Lame parameter lambda must be nonnegative");
  ElasticityTensor C;
  C.voigt << 2.0 * mu + lambda, lambda, 0.0,
             lambda, 2.0 * mu + lambda, 0.0,
             0.0, 0.0, 2.0 * mu;
  return C;
}

double alpha_C_inv_alpha(const ElasticityTensor& C, const BiotTensor& alpha) {
  Eigen::LLT<Mat3> llt(C.voigt);
  if (llt.info() != Eigen::Success)
    throw MaterialError("elasticity tensor is singular or indefinite");
  const Vec3 a = to_voigt(alpha.value);
  const Vec3 x = llt.solve(a);
  return std::max(0.0, a.dot(x));
}

double contraction_rate(double coupling_strength, double c0) {
  if (!(c0 > 0.0)) throw MaterialError("positive compressibility required (c0 > 0)");
  if (!(coupling_strength >= 0.0)) throw MaterialError("coupling strength must be nonnegative");
  return coupling_strength / (c0 + coupling_strength);
}

double max_coupling_strength(const MaterialField& material) {
  double x = 0.0;
  for (const auto& r : material.records())
    x = std::max(x, alpha_C_inv_alpha(r.elasticity, r.biot));
  return x;
}

double theoretical_rate(const MaterialField& material) {
  if (material.record_count() == 0) throw MaterialError("material field is empty");
  double c0 = std::numeric_limits<double>::infinity();
  for (const auto& r : material.records()) c0 = std::min(c0, r.c0);
  return contraction_rate(max_coupling_strength(material), c0);
}

double drained_bulk_modulus(double mu, double lambda) { return lambda + mu; }

std::vector<MaterialIssue> validate_material(const MaterialField& material,
                                             std::size_t element_count) {
  std::vector<MaterialIssue> issues;
  if (material.record_count() == 0) {
    issues.push_back({0, "material field is empty"});
    return issues;
  }
  if (!material.is_homogeneous() && material.record_count() != element_count) {
    std::ostringstream os;
    os << "material has " << material.record_count() << " records for "
       << element_count << " elements";
    issues.push_back({0, os.str()});
  }
  const auto& records = material.records();
  for (std::size_t e = 0; e < records.size(); ++e) check_record(records[e], e, issues);
  return issues;
}

void require_valid_material(const MaterialField& material, std::size_t element_count) {
  const auto issues = validate_material(material, element_count);
  if (issues.empty()) return;
  std::ostringstream os;
  os << "invalid material:";
  for (const auto& i : issues) os << "\n  element " << i.element << ": " << i.message;
  throw MaterialError(os.str());
}

}  // namespace porosplit
