#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <numbers>

#include "geoagg/sphere.hpp"
#include "test_support.hpp"

using namespace geoagg;
using testing::deg;

namespace {

UnitVector uv(Vector v) { return UnitVector::from_unit(std::move(v)); }

void check_error(ErrorCode expected, auto&& fn) {
  try {
    fn();
    FAIL("expected " << error_name(expected));
  } catch (const Error& e) {
    CHECK(e.code() == expected);
  }
}

}  // namespace

TEST_CASE("decompose splits norm and direction") {
  const PolarForm p = decompose(Vector{3, 4});
  CHECK(p.radius == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(p.direction[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(p.direction[1] == doctest::Approx(0.8).epsilon(1e-15));

  const PolarForm q = decompose(Vector{0, 0, 1});
  CHECK(q.radius == 1.0);
  CHECK(q.direction.components() == Vector{0, 0, 1});

  check_error(ErrorCode::DegenerateVector, [] { decompose(Vector{1e-15, 0}, 1e-12); });
  check_error(ErrorCode::InvalidArgument, [] { decompose(Vector{1, 0}, 0.0); });
}

TEST_CASE("decompose round trip reconstructs the vector") {
  std::mt19937_64 gen(11);
  for (std::size_t dim : {1u, 2u, 8u, 768u}) {
    for (int i = 0; i < 200; ++i) {
      Vector v = testing::gaussian(gen, dim);
      const double s = std::pow(10.0, testing::uniform(gen, -6, 6));
      for (double& x : v) x *= s;
      const PolarForm p = decompose(v);
      CHECK(std::abs(norm(p.direction.span()) - 1.0) <= 1e-12);
      CHECK(distance(p.reconstruct(), v) <= 1e-9 * norm(v));
    }
  }
}

TEST_CASE("UnitVector rejects non-unit components") {
  check_error(ErrorCode::InvalidArgument, [] { UnitVector::from_unit({1.0, 1.0}); });
  check_error(ErrorCode::InvalidArgument, [] { UnitVector::from_unit({}); });
  CHECK_NOTHROW(UnitVector::from_unit({1.0 + 5e-10, 0.0}));
}

TEST_CASE("angle_between examples") {
  CHECK(angle_between(uv({1, 0}), uv({0, 1})) == doctest::Approx(std::numbers::pi / 2).epsilon(1e-15));
  CHECK(angle_between(uv({0.6, 0.8}), uv({0.6, 0.8})) == 0.0);
  // 40 degrees = 0.698131700797731830769... (mpmath)
  const UnitVector v = UnitVector::normalize(Vector{std::cos(deg(40)), std::sin(deg(40))});
  CHECK(std::abs(angle_between(uv({1, 0}), v) - 0.6981317007977318) < 1e-15);
  CHECK(angle_between(uv({1, 0}), uv({-1, 0})) == doctest::Approx(std::numbers::pi));
  check_error(ErrorCode::DimensionMismatch, [] { angle_between(uv({1, 0}), uv({1, 0, 0})); });
}

TEST_CASE("angle_between is symmetric and matches arccos away from the poles") {
  std::mt19937_64 gen(3);
  for (int i = 0; i < 500; ++i) {
    const UnitVector a = testing::random_unit(gen, 5);
    const UnitVector b = testing::random_unit(gen, 5);
    const double ab = angle_between(a, b);
    CHECK(ab == angle_between(b, a));
    const double c = std::clamp(dot(a.span(), b.span()), -1.0, 1.0);
    if (std::abs(c) < 0.9) CHECK(ab == doctest::Approx(std::acos(c)).epsilon(1e-13));
  }
}

TEST_CASE("slerp examples and errors") {
  const UnitVector mid = slerp(uv({1, 0}), uv({0, 1}), 0.5);
  CHECK(mid[0] == doctest::Approx(std::numbers::sqrt2 / 2).epsilon(1e-15));
  CHECK(mid[1] == doctest::Approx(std::numbers::sqrt2 / 2).epsilon(1e-15));

  CHECK(slerp(uv({1, 0, 0}), uv({0, 1, 0}), 0.0).components() == Vector{1, 0, 0});
  CHECK(slerp(uv({1, 0, 0}), uv({0, 1, 0}), 1.0).components() == Vector{0, 1, 0});

  for (double t : {0.0, 0.3, 1.0}) {
    check_error(ErrorCode::AntipodalDirections, [&] { slerp(uv({1, 0}), uv({-1, 0}), t); });
  }
  check_error(ErrorCode::InvalidArgument, [] { slerp(uv({1, 0}), uv({0, 1}), 1.5); });
  check_error(ErrorCode::DimensionMismatch, [] { slerp(uv({1, 0}), uv({0, 1, 0}), 0.5); });
}

TEST_CASE("slerp near-parallel fallback stays unit and between the endpoints") {
  const UnitVector u = uv({1, 0});
  const UnitVector v = UnitVector::normalize(Vector{1, 1e-9});
  const UnitVector r = slerp(u, v, 0.5);
  CHECK(std::abs(norm(r.span()) - 1.0) <= 1e-12);
  CHECK(r[1] == doctest::Approx(5e-10).epsilon(1e-6));
}

TEST_CASE("slerp stays on the geodesic (1000 random triples per dim)") {
  std::mt19937_64 gen(7);
  for (std::size_t dim : {2u, 8u, 768u}) {
    double worst_norm = 0.0;
    double worst_angle = 0.0;
    int done = 0;
    while (done < 1000) {
      const UnitVector u = testing::random_unit(gen, dim);
      const UnitVector v = testing::random_unit(gen, dim);
      const double phi = angle_between(u, v);
      if (phi > std::numbers::pi - 1e-3) continue;
      const double t = testing::uniform(gen, 0.0, 1.0);
      const UnitVector r = slerp(u, v, t);
      worst_norm = std::max(worst_norm, std::abs(norm(r.span()) - 1.0));
      worst_angle = std::max(worst_angle, std::abs(angle_between(u, r) - t * phi));
      ++done;
    }
    CAPTURE(dim);
    CHECK(worst_norm <= 1e-9);
    CHECK(worst_angle <= 1e-8);
  }
}

TEST_CASE("log_map examples") {
  const TangentVector t = log_map(uv({1, 0}), uv({0, 1}));
  CHECK(std::abs(t.components[0]) < 1e-16);
  CHECK(t.components[1] == doctest::Approx(std::numbers::pi / 2).epsilon(1e-15));

  const TangentVector z = log_map(uv({0, 0, 1}), uv({0, 0, 1}));
  CHECK(z.components == Vector{0, 0, 0});

  // [0, 1] verified by the exp round trip below.
  const UnitVector base = uv({1, 0});
  const UnitVector p = UnitVector::normalize(Vector{std::cos(1.0), std::sin(1.0)});
  const TangentVector one = log_map(base, p);
  CHECK(std::abs(one.components[0]) < 1e-15);
  CHECK(one.components[1] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(distance(exp_map(base, one).span(), p.span()) < 1e-14);

  check_error(ErrorCode::AntipodalDirections, [] { log_map(uv({1, 0}), uv({-1, 0})); });
}

TEST_CASE("log_map output is tangent to the base") {
  std::mt19937_64 gen(5);
  for (int i = 0; i < 300; ++i) {
    const UnitVector b = testing::random_unit(gen, 16);
    const UnitVector p = testing::random_unit(gen, 16);
    const TangentVector t = log_map(b, p);
    CHECK(std::abs(dot(t.components, b.span())) <= 1e-8 * std::max(1e-300, t.length()));
    CHECK(t.length() == doctest::Approx(angle_between(b, p)).epsilon(1e-12));
  }
}

TEST_CASE("exp_map examples") {
  const UnitVector base = uv({1, 0});
  const UnitVector q = exp_map(base, TangentVector{base, {0, std::numbers::pi / 2}});
  CHECK(std::abs(q[0]) < 1e-15);
  CHECK(q[1] == doctest::Approx(1.0));

  const UnitVector b3 = uv({0, 1, 0});
  CHECK(exp_map(b3, TangentVector{b3, {0, 0, 0}}).components() == Vector{0, 1, 0});

  check_error(ErrorCode::InvalidArgument, [&] { exp_map(base, TangentVector{uv({0, 1}), {1, 0}}); });
}

TEST_CASE("exp(log(p)) = p for 1000 random pairs with angle < 3 rad") {
  std::mt19937_64 gen(13);
  int done = 0;
  double worst = 0.0;
  while (done < 1000) {
    const std::size_t dim = 2 + gen() % 40;
    const UnitVector b = testing::random_unit(gen, dim);
    const UnitVector p = testing::random_unit(gen, dim);
    if (angle_between(b, p) >= 3.0) continue;
    worst = std::max(worst, distance(exp_map(b, log_map(b, p)).span(), p.span()));
    ++done;
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("spherical_barycenter examples") {
  const std::vector<UnitVector> pair = {uv({1, 0}), uv({0, 1})};
  const UnitVector m = spherical_barycenter(pair, std::vector<double>{1, 1});
  CHECK(m[0] == doctest::Approx(std::numbers::sqrt2 / 2).epsilon(1e-14));
  CHECK(m[1] == doctest::Approx(std::numbers::sqrt2 / 2).epsilon(1e-14));

  const std::vector<UnitVector> single = {uv({0, 0, 1})};
  CHECK(spherical_barycenter(single, std::vector<double>{1}).components() == Vector{0, 0, 1});

  std::vector<UnitVector> cone;
  for (double az : {0.0, 120.0, 240.0}) {
    cone.push_back(UnitVector::normalize(Vector{std::sin(deg(30)) * std::cos(deg(az)),
                                                std::sin(deg(30)) * std::sin(deg(az)), std::cos(deg(30))}));
  }
  const UnitVector top = spherical_barycenter(cone, std::vector<double>{1, 1, 1});
  CHECK(distance(top.span(), Vector{0, 0, 1}) < 1e-12);

  // Two directions at 60 degrees with weights {2, 1}: slerp at t = 1/3.
  const UnitVector u1 = uv({1, 0, 0});
  const UnitVector u2 = UnitVector::normalize(Vector{std::cos(deg(60)), std::sin(deg(60)), 0});
  const std::vector<UnitVector> sixty = {u1, u2};
  const UnitVector b = spherical_barycenter(sixty, std::vector<double>{2, 1});
  CHECK(angle_between(b, slerp(u1, u2, 1.0 / 3.0)) <= 1e-12);
  CHECK(angle_between(b, u1) == doctest::Approx(deg(20)).epsilon(1e-12));
}

TEST_CASE("spherical_barycenter errors") {
  const std::vector<UnitVector> antipodal = {uv({1, 0}), uv({-1, 0})};
  check_error(ErrorCode::AntipodalDirections,
              [&] { spherical_barycenter(antipodal, std::vector<double>{1, 1}); });
  check_error(ErrorCode::AntipodalDirections,
              [&] { spherical_barycenter(antipodal, std::vector<double>{3, 1}); });
  // Zero weight removes the antipodal partner from consideration.
  CHECK(spherical_barycenter(antipodal, std::vector<double>{1, 0}).components() == Vector{1, 0});

  std::vector<UnitVector> star;
  for (double az : {0.0, 120.0, 240.0}) star.push_back(UnitVector::normalize(Vector{std::cos(deg(az)), std::sin(deg(az))}));
  check_error(ErrorCode::DegenerateInit, [&] { spherical_barycenter(star, std::vector<double>{1, 1, 1}); });

  check_error(ErrorCode::InvalidArgument, [] { spherical_barycenter({}, std::vector<double>{}); });
  const std::vector<UnitVector> two = {uv({1, 0}), uv({0, 1})};
  check_error(ErrorCode::InvalidArgument, [&] { spherical_barycenter(two, std::vector<double>{0, 0}); });
  check_error(ErrorCode::InvalidArgument, [&] { spherical_barycenter(two, std::vector<double>{1, -1}); });
  check_error(ErrorCode::DimensionMismatch, [&] { spherical_barycenter(two, std::vector<double>{1}); });
  check_error(ErrorCode::InvalidArgument,
              [&] { spherical_barycenter(two, std::vector<double>{1, 1}, BarycenterConfig{0.0, 10}); });
}

TEST_CASE("Karcher iteration reports NonConvergence when capped too early") {
  // Three spread-out directions in 3D with unequal weights: the Euclidean start is
  // not the Frechet mean, so a single update cannot reach a 1e-6 residual.
  const std::vector<UnitVector> dirs = {uv({1, 0, 0}), uv({0, 1, 0}), uv({0, 0, 1})};
  const std::vector<double> w = {5, 1, 0.2};
  check_error(ErrorCode::NonConvergence,
              [&] { spherical_barycenter(dirs, w, BarycenterConfig{1e-14, 1}); });
  const BarycenterResult full = spherical_barycenter_detailed(dirs, w);
  CHECK(full.iterations < 100);
  CHECK(full.final_update < 1e-10);
}

TEST_CASE("Karcher mean of two directions equals slerp (1000 weighted pairs)") {
  std::mt19937_64 gen(17);
  double worst = 0.0;
  int worst_iters = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t dim = std::vector<std::size_t>{2, 8, 768}[i % 3];
    const UnitVector u = testing::random_unit(gen, dim);
    const UnitVector v = testing::at_angle(gen, u, testing::uniform(gen, 1e-3, deg(170)));
    const double a = testing::uniform(gen, 0.01, 5.0);
    const double b = testing::uniform(gen, 0.01, 5.0);
    const std::vector<UnitVector> dirs = {u, v};
    const BarycenterResult r = spherical_barycenter_detailed(dirs, std::vector<double>{a, b});
    worst = std::max(worst, angle_between(r.mean, slerp(u, v, b / (a + b))));
    worst_iters = std::max(worst_iters, r.iterations);
  }
  CHECK(worst <= 1e-8);
  CHECK(worst_iters <= 100);
}

TEST_CASE("barycenter is invariant to weight scale and ordering") {
  std::mt19937_64 gen(19);
  for (int i = 0; i < 200; ++i) {
    const std::size_t k = 2 + gen() % 6;
    const UnitVector center = testing::random_unit(gen, 12);
    std::vector<UnitVector> dirs;
    std::vector<double> w;
    for (std::size_t j = 0; j < k; ++j) {
      dirs.push_back(testing::at_angle(gen, center, testing::uniform(gen, 0.0, deg(60))));
      w.push_back(testing::uniform(gen, 0.1, 3.0));
    }
    const UnitVector base = spherical_barycenter(dirs, w);

    std::vector<double> scaled_w = w;
    const double c = std::pow(10.0, testing::uniform(gen, -3, 3));
    for (double& x : scaled_w) x *= c;
    CHECK(distance(spherical_barycenter(dirs, scaled_w).span(), base.span()) <= 1e-10);

    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    std::vector<UnitVector> pd;
    std::vector<double> pw;
    for (std::size_t j : perm) {
      pd.push_back(dirs[j]);
      pw.push_back(w[j]);
    }
    CHECK(distance(spherical_barycenter(pd, pw).span(), base.span()) <= 1e-10);
  }
}

TEST_CASE("barycenter lies on the great circle for coplanar directions") {
  // Scalar angular average: directions on one great circle at angles theta_i
  // average to the direction at sum(w theta) / sum(w).
  std::mt19937_64 gen(23);
  for (int i = 0; i < 200; ++i) {
    const std::size_t k = 2 + gen() % 4;
    std::vector<UnitVector> dirs;
    std::vector<double> w;
    double num = 0.0;
    double den = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double theta = testing::uniform(gen, -deg(50), deg(50));
      dirs.push_back(UnitVector::normalize(Vector{std::cos(theta), std::sin(theta), 0.0}));
      w.push_back(testing::uniform(gen, 0.1, 2.0));
      num += w.back() * theta;
      den += w.back();
    }
    const UnitVector m = spherical_barycenter(dirs, w);
    const double expected = num / den;
    CHECK(distance(m.span(), Vector{std::cos(expected), std::sin(expected), 0.0}) <= 1e-9);
  }
}
