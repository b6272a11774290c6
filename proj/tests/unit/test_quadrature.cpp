#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kinfrac/errors.hpp"
#include "kinfrac/quadrature.hpp"

using namespace kinfrac;
constexpr double pi = std::numbers::pi;

namespace {

// Monte Carlo estimate of the sphere integral of f over S^2 (uniform directions).
template <class F>
double monte_carlo_s2(F f, int samples, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  double acc = 0.0;
  for (int s = 0; s < samples; ++s) {
    double x = g(rng), y = g(rng), z = g(rng);
    const double r = std::sqrt(x * x + y * y + z * z);
    acc += f(x / r, y / r, z / r);
  }
  return 4.0 * pi * acc / samples;
}

Eigen::VectorXd column_fn(const Quadrature& q, auto f) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(q.size()));
  for (std::size_t i = 0; i < q.size(); ++i) v(static_cast<Eigen::Index>(i)) = f(i);
  return v;
}

}  // namespace

TEST_CASE("sphere measures of the rules") {
  for (int n : {4, 8, 16}) {
    const Quadrature q = build_quadrature(2, n);
    CHECK(q.weights().sum() == doctest::Approx(4 * pi).epsilon(1e-14));
    CHECK(q.half_measure() == doctest::Approx(pi).epsilon(1e-13));
    CHECK(q.size() == static_cast<std::size_t>(n * n));
  }
  const Quadrature q1 = build_quadrature(1, 8);
  CHECK(q1.size() == 16);
  CHECK(q1.weights().sum() == doctest::Approx(2 * pi).epsilon(1e-14));
  // The midpoint rule over-estimates |B^1| = 2 slightly; that defect is what the tolerance reports.
  CHECK(std::abs(q1.half_measure() - 2.0) / 2.0 == doctest::Approx(q1.half_moment_tolerance()));
  CHECK(q1.half_moment_tolerance() < 0.01);
}

TEST_CASE("no grazing directions and balanced hemispheres") {
  for (int d : {1, 2})
    for (int n : {4, 6, 8, 16}) {
      const Quadrature q = build_quadrature(d, n);
      for (std::size_t i = 0; i < q.size(); ++i) {
        CHECK(std::abs(q.omega_y(i)) > 1e-3);
        CHECK(q.nodes().row(static_cast<Eigen::Index>(i)).norm() == doctest::Approx(1.0).epsilon(1e-14));
      }
      CHECK(q.upward().size() == q.downward().size());
    }
}

TEST_CASE("second moments") {
  const Quadrature q1 = build_quadrature(1, 8);
  const Eigen::VectorXd wy2 = column_fn(q1, [&](std::size_t i) { return q1.omega_y(i) * q1.omega_y(i); });
  CHECK(average(q1, as_span(wy2)) == doctest::Approx(0.5).epsilon(1e-12));

  const Quadrature q = build_quadrature(2, 8);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      const double m = (q.weights().array() * q.nodes().col(a).array() * q.nodes().col(b).array()).sum();
      CHECK(m == doctest::Approx(a == b ? 4 * pi / 3 : 0.0).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("d=2 moments against a Monte Carlo oracle") {
  const Quadrature q = build_quadrature(2, 8);
  auto rule = [&](auto f) {
    double s = 0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      const auto r = q.nodes().row(static_cast<Eigen::Index>(i));
      s += q.weights()(static_cast<Eigen::Index>(i)) * f(r(0), r(1), r(2));
    }
    return s;
  };
  auto f1 = [](double, double, double z) { return z * z; };
  auto f2 = [](double x, double, double z) { return x * x * z * z; };
  auto f3 = [](double x, double y, double z) { return 1.0 + x * y + z * z * z * z; };
  const int samples = 400000;
  CHECK(rule(f1) == doctest::Approx(monte_carlo_s2(f1, samples, 1)).epsilon(5e-3));
  CHECK(rule(f2) == doctest::Approx(monte_carlo_s2(f2, samples, 2)).epsilon(1e-2));
  CHECK(rule(f3) == doctest::Approx(monte_carlo_s2(f3, samples, 3)).epsilon(5e-3));
  // Exact values: 4 pi / 3, 4 pi / 15, 4 pi + 4 pi / 5.
  CHECK(rule(f1) == doctest::Approx(4 * pi / 3).epsilon(1e-13));
  CHECK(rule(f2) == doctest::Approx(4 * pi / 15).epsilon(1e-13));
  CHECK(rule(f3) == doctest::Approx(4 * pi + 4 * pi / 5).epsilon(1e-13));
}

TEST_CASE("average and half moments") {
  for (int d : {1, 2}) {
    const Quadrature q = build_quadrature(d, 8);
    const Eigen::VectorXd c = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(q.size()), 3.5);
    CHECK(average(q, as_span(c)) == doctest::Approx(3.5).epsilon(1e-14));
    CHECK(half_moment(q, as_span(c), HalfRange::upper) == doctest::Approx(3.5).epsilon(1e-14));
    CHECK(half_moment(q, as_span(c), HalfRange::lower) == doctest::Approx(3.5).epsilon(1e-14));
    const Eigen::VectorXd wy = column_fn(q, [&](std::size_t i) { return q.omega_y(i); });
    CHECK(std::abs(average(q, as_span(wy))) < 1e-12);
    const Eigen::VectorXd lower = column_fn(q, [&](std::size_t i) { return q.omega_y(i) < 0 ? 1.0 : 0.0; });
    CHECK(half_moment(q, as_span(lower), HalfRange::upper) == 0.0);
  }
  const Quadrature q = build_quadrature(2, 8);
  const Eigen::VectorXd wy = column_fn(q, [&](std::size_t i) { return q.omega_y(i); });
  CHECK(half_moment(q, as_span(wy), HalfRange::upper) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  const Eigen::VectorXd wy2 = wy.cwiseProduct(wy);
  CHECK(average(q, as_span(wy2)) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("refinement consistency for a smooth function") {
  for (int d : {1, 2}) {
    double previous = -1.0, prev_diff = 1e300;
    for (int n : {4, 8, 16, 32}) {
      const Quadrature q = build_quadrature(d, n);
      const Eigen::VectorXd v = column_fn(q, [&](std::size_t i) {
        const auto r = q.nodes().row(static_cast<Eigen::Index>(i));
        return std::exp(0.7 * r(0) + 0.3 * r(d));
      });
      const double a = average(q, as_span(v));
      if (previous >= 0) {
        const double diff = std::abs(a - previous);
        CHECK(diff <= std::max(prev_diff, 1e-14));
        prev_diff = diff;
      }
      previous = a;
    }
  }
}

TEST_CASE("invalid resolutions are rejected") {
  CHECK_THROWS_AS(build_quadrature(2, 5), InvalidArgument);
  CHECK_THROWS_AS(build_quadrature(1, 2), InvalidArgument);
  CHECK_THROWS_AS(build_quadrature(3, 8), InvalidArgument);
  const Quadrature q = build_quadrature(1, 4);
  const Eigen::VectorXd wrong = Eigen::VectorXd::Ones(3);
  CHECK_THROWS_AS(average(q, as_span(wrong)), InvalidArgument);
}
