#pragma once

// Material data of the dynamic Biot model in two space dimensions and the
// scalar quantities that govern the convergence of the undrained split.
//
// Symmetric second-order tensors are mapped to Voigt 3-vectors
// (a_xx, a_yy, sqrt(2) a_xy). With the sqrt(2) scaling the Voigt dot product
// equals the Frobenius product, so a fourth-order tensor with major and minor
// symmetry is a symmetric 3x3 matrix and alpha : C^-1 : alpha is a plain
// quadratic form.

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace porosplit {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

/// Voigt image of a symmetric 2x2 tensor.
Vec3 to_voigt(const Mat2& t);
Mat2 from_voigt(const Vec3& v);

/// Fourth-order elasticity tensor acting on Voigt strains (Pa).
struct ElasticityTensor {
  Mat3 voigt = Mat3::Zero();
};

/// Biot coupling tensor (dimensionless).
struct BiotTensor {
  Mat2 value = Mat2::Zero();
};

/// Permeability tensor in mobility convention (m^2 / (Pa s)).
struct PermeabilityTensor {
  Mat2 value = Mat2::Identity();
};

struct MaterialRecord {
  double rho = 1.0;  // kg/m^3
  double c0 = 1.0;   // 1/Pa
  ElasticityTensor elasticity;
  BiotTensor biot;
  PermeabilityTensor permeability;
};

/// Piecewise-constant material data. A single record is broadcast to every
/// element.
class MaterialField {
 public:
  MaterialField() = default;
  static MaterialField homogeneous(MaterialRecord record);
  static MaterialField per_element(std::vector<MaterialRecord> records);

  const MaterialRecord& at(std::size_t element) const {
    return records_.size() == 1 ? records_.front() : records_[element];
  }
  bool is_homogeneous() const { return records_.size() == 1; }
  std::size_t record_count() const { return records_.size(); }
  const std::vector<MaterialRecord>& records() const { return records_; }

  /// Copy with c0 replaced on every element.
  MaterialField with_storage(double c0) const;

 private:
  explicit MaterialField(std::vector<MaterialRecord> records)
      : records_(std::move(records)) {}
  std::vector<MaterialRecord> records_;
};

struct ThetaParams {
  double theta1 = 1.0;
  double theta2 = 1.0;
  double dt = 1.0;

  /// Throws ConfigError unless both thetas lie in (0,1] and dt is finite
  /// and positive.
  void validate() const;
};

/// C eps = 2 mu eps + lambda tr(eps) I. Requires mu > 0 and lambda >= 0.
ElasticityTensor isotropic_elasticity(double mu, double lambda);

/// alpha : C^-1 : alpha for one element. Throws MaterialError when C is
/// singular.
double alpha_C_inv_alpha(const ElasticityTensor& C, const BiotTensor& alpha);

/// Norm contraction factor x / (c0 + x) of the undrained split.
double contraction_rate(double coupling_strength, double c0);

/// Field version: x = max_e alpha_C_inv_alpha(e), c0 = min_e c0(e).
double theoretical_rate(const MaterialField& material);

/// Maximum of alpha_C_inv_alpha over all records.
double max_coupling_strength(const MaterialField& material);

/// Drained bulk modulus lambda + 2 mu / d with d = 2.
double drained_bulk_modulus(double mu, double lambda);

struct MaterialIssue {
  std::size_t element;
  std::string message;
};

/// Lists every violated invariant; an empty result means the field is valid.
/// `element_count` sizes the check for per-element fields; homogeneous fields
/// report element index 0.
std::vector<MaterialIssue> validate_material(const MaterialField& material,
                                             std::size_t element_count);

/// Throws MaterialError with all issues joined, if any.
void require_valid_material(const MaterialField& material, std::size_t element_count);

}  // namespace porosplit
