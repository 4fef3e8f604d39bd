#include "geoagg/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace geoagg {

namespace {

double angle_raw(std::span<const double> u, std::span<const double> v) {
  double diff = 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    const double s = u[i] + v[i];
    diff += d * d;
    sum += s * s;
  }
  return 2.0 * std::atan2(std::sqrt(diff), std::sqrt(sum));
}

void normalize_in_place(Vector& v) {
  const double n = norm(v);
  for (double& x : v) x /= n;
}

[[noreturn]] void throw_antipodal(double phi) {
  throw Error(ErrorCode::AntipodalDirections,
              "angle " + std::to_string(phi) + " rad leaves no unique geodesic");
}

// Writes log_base(p) into `out`. `phi` must be angle_raw(base, p).
void log_map_into(std::span<const double> base, std::span<const double> p, double phi,
                  std::span<double> out) {
  const std::size_t d = base.size();
  if (phi == 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const double c = dot(base, p);
  for (std::size_t i = 0; i < d; ++i) out[i] = p[i] - c * base[i];
  // One re-orthogonalization pass against `base`.
  const double drift = dot(out, base);
  for (std::size_t i = 0; i < d; ++i) out[i] -= drift * base[i];
  const double wn = norm(out);
  if (wn == 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const double s = phi / wn;
  for (double& x : out) x *= s;
}

// exp_base(t) written into `out`, renormalized to unit length.
void exp_map_into(std::span<const double> base, std::span<const double> t,
                  std::span<double> out) {
  const double n = norm(t);
  if (n == 0.0) {
    std::copy(base.begin(), base.end(), out.begin());
    return;
  }
  const double a = std::cos(n);
  const double b = std::sin(n) / n;
  double sq = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    out[i] = a * base[i] + b * t[i];
    sq += out[i] * out[i];
  }
  const double inv = 1.0 / std::sqrt(sq);
  for (double& x : out) x *= inv;
}

}  // namespace

UnitVector UnitVector::normalize(std::span<const double> v, double eps) {
  if (v.empty()) throw Error(ErrorCode::InvalidArgument, "vector must have dim >= 1");
  if (!all_finite(v)) throw Error(ErrorCode::InvalidArgument, "vector has non-finite components");
  const double n = norm(v);
  if (!(n >= eps)) {
    throw Error(ErrorCode::DegenerateVector,
                "norm " + std::to_string(n) + " below " + std::to_string(eps));
  }
  Vector c(v.begin(), v.end());
  for (double& x : c) x /= n;
  return UnitVector(std::move(c));
}

UnitVector UnitVector::from_unit(Vector components) {
  if (components.empty()) throw Error(ErrorCode::InvalidArgument, "vector must have dim >= 1");
  const double n = norm(components);
  if (!std::isfinite(n) || std::abs(n - 1.0) > kUnitTolerance) {
    throw Error(ErrorCode::InvalidArgument, "not a unit vector (norm " + std::to_string(n) + ")");
  }
  return UnitVector(std::move(components));
}

void BarycenterConfig::validate() const {
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "barycenter tol must be > 0");
  if (max_iters < 1) throw Error(ErrorCode::InvalidArgument, "barycenter max_iters must be >= 1");
}

PolarForm decompose(std::span<const double> v, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be > 0");
  UnitVector dir = UnitVector::normalize(v, eps);
  return PolarForm{norm(v), std::move(dir)};
}

double angle_between(const UnitVector& u, const UnitVector& v) {
  require_same_dim(u.dim(), v.dim(), "angle_between");
  return angle_raw(u.span(), v.span());
}

UnitVector slerp(const UnitVector& u, const UnitVector& v, double t, double parallel_tol) {
  require_same_dim(u.dim(), v.dim(), "slerp");
  if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorCode::InvalidArgument, "slerp t must lie in [0, 1]");
  const double phi = angle_raw(u.span(), v.span());
  if (phi > std::numbers::pi - parallel_tol) throw_antipodal(phi);
  if (t == 0.0) return u;
  if (t == 1.0) return v;

  Vector out(u.dim());
  if (phi < parallel_tol) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - t) * u[i] + t * v[i];
  } else {
    const double s = std::sin(phi);
    const double a = std::sin((1.0 - t) * phi) / s;
    const double b = std::sin(t * phi) / s;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * u[i] + b * v[i];
  }
  normalize_in_place(out);
  return UnitVector::from_unit(std::move(out));
}

TangentVector log_map(const UnitVector& base, const UnitVector& p, double parallel_tol) {
  require_same_dim(base.dim(), p.dim(), "log_map");
  const double phi = angle_raw(base.span(), p.span());
  if (phi > std::numbers::pi - parallel_tol) throw_antipodal(phi);
  Vector t(base.dim());
  log_map_into(base.span(), p.span(), phi, t);
  return TangentVector{base, std::move(t)};
}

UnitVector exp_map(const UnitVector& base, const TangentVector& t) {
  require_same_dim(base.dim(), t.components.size(), "exp_map");
  require_same_dim(base.dim(), t.base.dim(), "exp_map base");
  if (distance(base.span(), t.base.span()) > 1e-12) {
    throw Error(ErrorCode::InvalidArgument, "tangent vector is attached to a different base point");
  }
  Vector out(base.dim());
  exp_map_into(base.span(), t.components, out);
  return UnitVector::from_unit(std::move(out));
}

BarycenterResult spherical_barycenter_detailed(std::span<const UnitVector> directions,
                                               std::span<const double> weights,
                                               const BarycenterConfig& cfg) {
  cfg.validate();
  if (directions.empty()) throw Error(ErrorCode::InvalidArgument, "barycenter needs >= 1 direction");
  if (directions.size() != weights.size()) {
    throw Error(ErrorCode::DimensionMismatch, "directions and weights differ in length");
  }
  const std::size_t dim = directions.front().dim();
  double total = 0.0;
  for (std::size_t i = 0; i < directions.size(); ++i) {
    require_same_dim(dim, directions[i].dim(), "barycenter direction");
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
      throw Error(ErrorCode::InvalidArgument, "barycenter weights must be finite and >= 0");
    }
    total += weights[i];
  }
  if (!(total > 0.0)) throw Error(ErrorCode::InvalidArgument, "barycenter weights sum to zero");

  std::vector<double> w(weights.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = weights[i] / total;

  for (std::size_t i = 0; i < directions.size(); ++i) {
    if (w[i] == 0.0) continue;
    for (std::size_t j = i + 1; j < directions.size(); ++j) {
      if (w[j] == 0.0) continue;
      const double phi = angle_raw(directions[i].span(), directions[j].span());
      if (phi > std::numbers::pi - kParallelTol) throw_antipodal(phi);
    }
  }

  Vector mean(dim, 0.0);
  for (std::size_t i = 0; i < directions.size(); ++i) axpy(w[i], directions[i].span(), mean);
  const double init_norm = norm(mean);
  if (init_norm < 1e-9) {
    throw Error(ErrorCode::DegenerateInit,
                "weighted Euclidean mean has norm " + std::to_string(init_norm));
  }
  for (double& x : mean) x /= init_norm;

  Vector update(dim);
  Vector lifted(dim);
  Vector next(dim);
  double step = 0.0;
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    std::fill(update.begin(), update.end(), 0.0);
    for (std::size_t i = 0; i < directions.size(); ++i) {
      if (w[i] == 0.0) continue;
      const double phi = angle_raw(mean, directions[i].span());
      if (phi > std::numbers::pi - kParallelTol) throw_antipodal(phi);
      log_map_into(mean, directions[i].span(), phi, lifted);
      axpy(w[i], lifted, update);
    }
    step = norm(update);
    if (step < cfg.tol) {
      return BarycenterResult{UnitVector::from_unit(std::move(mean)), iter, step};
    }
    exp_map_into(mean, update, next);
    mean.swap(next);
  }

  // Out of iterations: measure the residual update at the final iterate.
  std::fill(update.begin(), update.end(), 0.0);
  for (std::size_t i = 0; i < directions.size(); ++i) {
    if (w[i] == 0.0) continue;
    const double phi = angle_raw(mean, directions[i].span());
    if (phi > std::numbers::pi - kParallelTol) throw_antipodal(phi);
    log_map_into(mean, directions[i].span(), phi, lifted);
    axpy(w[i], lifted, update);
  }
  step = norm(update);
  if (step > 1e-6) {
    throw Error(ErrorCode::NonConvergence, "update norm " + std::to_string(step) + " after " +
                                               std::to_string(cfg.max_iters) + " iterations");
  }
  return BarycenterResult{UnitVector::from_unit(std::move(mean)), cfg.max_iters, step};
}

UnitVector spherical_barycenter(std::span<const UnitVector> directions,
                                std::span<const double> weights, const BarycenterConfig& cfg) {
  return spherical_barycenter_detailed(directions, weights, cfg).mean;
}

}  // namespace geoagg
