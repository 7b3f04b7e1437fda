#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "robustopt/clipping.hpp"

using namespace robustopt;

TEST_CASE("clip factor caps the norm at the threshold", "[clipping]") {
  CHECK(clip_factor(20.0, 10.0) == 0.5);
  CHECK(clip_factor(5.0, 10.0) == 1.0);
  CHECK(clip_factor(10.0, 10.0) == 1.0);
  CHECK(clip_factor(0.0, 10.0) == 1.0);
}

TEST_CASE("clip factor rejects invalid inputs", "[clipping]") {
  CHECK_THROWS_AS(clip_factor(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(clip_factor(1.0, -2.0), std::invalid_argument);
  CHECK_THROWS_AS(clip_factor(-1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(clip_factor(std::nan(""), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(clip_factor(1.0, std::nan("")), std::invalid_argument);
}

TEST_CASE("euclidean ball projection is radial", "[clipping]") {
  const auto ball = ProjectionDomain::euclidean_ball(Vec{1.0, 1.0}, 2.0);
  CHECK(ball.bounded());
  CHECK(ball.project(Vec{5.0, 1.0}) == Vec{3.0, 1.0});
  CHECK(ball.project(Vec{1.5, 1.0}) == Vec{1.5, 1.0});
  CHECK(ball.project(Vec{1.0, 1.0}) == Vec{1.0, 1.0});

  const auto free = ProjectionDomain::unbounded();
  CHECK_FALSE(free.bounded());
  CHECK(free.project(Vec{100.0, -3.0}) == Vec{100.0, -3.0});

  CHECK_THROWS_AS(ProjectionDomain::euclidean_ball(Vec{0.0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ProjectionDomain::euclidean_ball(Vec{0.0}, -1.0), std::invalid_argument);
}

TEST_CASE("one clipped descent step", "[clipping]") {
  const Vec theta{0.0, 0.0};
  const Vec gradient{10.0, 0.0};
  const Vec next = qc_sgd_step(theta, gradient, 5.0, 0.1, ProjectionDomain::unbounded());
  CHECK(next == Vec{-0.5, 0.0});

  // A short gradient passes through unclipped.
  const Vec mild = qc_sgd_step(theta, Vec{2.0, 0.0}, 5.0, 0.1, ProjectionDomain::unbounded());
  CHECK(mild == Vec{-0.2, 0.0});

  // Projection caps the update inside the feasible ball.
  const auto ball = ProjectionDomain::euclidean_ball(Vec{0.0, 0.0}, 0.3);
  const Vec capped = qc_sgd_step(theta, gradient, 5.0, 0.1, ball);
  CHECK(capped[0] == Catch::Approx(-0.3).margin(1e-15));
  CHECK(capped[1] == 0.0);
}

TEST_CASE("step displacement is bounded by step size times threshold", "[clipping]") {
  const Vec theta{1.0, -2.0, 0.5};
  const double tau = 3.0, beta = 0.05;
  Vec gradient{100.0, -40.0, 8.0};
  const Vec next = qc_sgd_step(theta, gradient, tau, beta, ProjectionDomain::unbounded());
  CHECK(distance(next, theta) <= beta * tau * (1.0 + 1e-12));

  CHECK_THROWS_AS(qc_sgd_step(theta, Vec{1.0, 2.0}, tau, beta, ProjectionDomain::unbounded()),
                  std::invalid_argument);
  CHECK_THROWS_AS(qc_sgd_step(theta, gradient, tau, 0.0, ProjectionDomain::unbounded()),
                  std::invalid_argument);
}
