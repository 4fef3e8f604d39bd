#pragma once

// Primitives on the unit hypersphere S^{D-1}: radial/angular decomposition,
// geodesic distance, slerp, log/exp maps and the weighted Karcher mean.

#include <cstddef>
#include <span>
#include <vector>

#include "geoagg/vector_ops.hpp"

namespace geoagg {

inline constexpr double kDegenerateEps = 1e-12;
inline constexpr double kParallelTol = 1e-7;
inline constexpr double kUnitTolerance = 1e-9;

/// A vector of Euclidean length one (within kUnitTolerance).
class UnitVector {
 public:
  /// Normalizes `v`. Throws DegenerateVector if ||v|| < eps.
  static UnitVector normalize(std::span<const double> v, double eps = kDegenerateEps);
  /// Wraps components that are already unit length; throws InvalidArgument otherwise.
  static UnitVector from_unit(Vector components);

  std::size_t dim() const noexcept { return c_.size(); }
  const Vector& components() const noexcept { return c_; }
  std::span<const double> span() const noexcept { return c_; }
  double operator[](std::size_t i) const { return c_[i]; }

  friend bool operator==(const UnitVector&, const UnitVector&) = default;

 private:
  explicit UnitVector(Vector c) : c_(std::move(c)) {}
  Vector c_;
};

/// (r, u) with r >= 0 and r * u reconstructing the source vector.
struct PolarForm {
  double radius = 0.0;
  UnitVector direction;

  Vector reconstruct() const { return scaled(direction.span(), radius); }
};

/// Element of the tangent space at `base`; orthogonal to it.
struct TangentVector {
  UnitVector base;
  Vector components;

  double length() const { return norm(components); }
};

struct BarycenterConfig {
  double tol = 1e-10;  ///< stop once the tangent update norm falls below this
  int max_iters = 100;

  void validate() const;
};

/// Result of the Karcher iteration with its convergence trace.
struct BarycenterResult {
  UnitVector mean;
  int iterations = 0;         ///< number of exp-map updates applied
  double final_update = 0.0;  ///< norm of the last computed tangent update
};

/// Splits `v` into norm and direction. Throws DegenerateVector if ||v|| < eps.
PolarForm decompose(std::span<const double> v, double eps = kDegenerateEps);

/// Geodesic distance in radians, in [0, pi].
///
/// Evaluated as 2 atan2(|u - v|, |u + v|), which equals arccos(<u, v>) but keeps
/// full relative precision near 0 and pi where arccos loses half the digits.
double angle_between(const UnitVector& u, const UnitVector& v);

/// Point at fraction t along the shortest geodesic from u to v.
///
/// Falls back to normalized linear interpolation when the angle is below
/// `parallel_tol`; throws AntipodalDirections when it exceeds pi - parallel_tol.
UnitVector slerp(const UnitVector& u, const UnitVector& v, double t,
                 double parallel_tol = kParallelTol);

/// Tangent vector at `base` of length angle(base, p) pointing toward p.
TangentVector log_map(const UnitVector& base, const UnitVector& p,
                      double parallel_tol = kParallelTol);

/// Follows the geodesic from `base` with initial velocity `t`. `t.base` must equal `base`.
UnitVector exp_map(const UnitVector& base, const TangentVector& t);

/// Weighted Frechet mean on the sphere by Karcher iteration.
///
/// Starts from the normalized Euclidean weighted mean and repeatedly moves along
/// the weighted average of the log maps. Directions carrying positive weight must
/// not contain an antipodal pair (AntipodalDirections); the Euclidean mean must not
/// cancel (DegenerateInit); the update must drop below 1e-6 within max_iters
/// (NonConvergence).
BarycenterResult spherical_barycenter_detailed(std::span<const UnitVector> directions,
                                               std::span<const double> weights,
                                               const BarycenterConfig& cfg = {});

UnitVector spherical_barycenter(std::span<const UnitVector> directions,
                                std::span<const double> weights,
                                const BarycenterConfig& cfg = {});

}  // namespace geoagg
