#include <doctest.h>

#include <cmath>
#include <numbers>

#include "choreo/errors.hpp"
#include "choreo/nbody.hpp"
#include "test_support.hpp"

using namespace choreo;

TEST_SUITE("nbody") {

TEST_CASE("s coefficients: hand-evaluated sums") {
  // n = 3: two terms, each sin^2(pi/3) / sin^3(pi/3) = 2/sqrt(3), times 1/4
  CHECK(s_coefficient(3, 1) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-14));
  // n = 4, k = 2: terms 1/sin^3(pi/4) twice, middle term vanishes
  CHECK(s_coefficient(4, 2) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  const double s1 = s_coefficient(7, 1);
  CHECK(std::abs(2.0 * std::numbers::pi / std::sqrt(s1) - 4.1387) < 5e-4);
  CHECK_THROWS_AS(s_coefficient(1, 1), InvalidInput);
}

TEST_CASE("s coefficients are symmetric in k and n - k") {
  for (int n = 3; n <= 12; ++n)
    for (int k = 1; k < n; ++k) CHECK(std::abs(s_coefficient(n, k) - s_coefficient(n, n - k)) <= 1e-14);
  CHECK(s_coefficient(9, 2) == s_coefficient(9, 7));
}

TEST_CASE("system configuration") {
  for (int n = 3; n <= 12; ++n)
    for (double mu : {0.0, 200.0}) {
      SystemConfig c(n, mu);
      CHECK(std::abs(c.frame_freq * c.frame_freq - (mu + s_coefficient(n, 1))) <= 1e-12 * (mu + 1.0));
      CHECK(c.zeta * n == doctest::Approx(2.0 * std::numbers::pi));
      CHECK(c.dim() == 6 * (n + (mu > 0.0 ? 1 : 0)));
    }
  CHECK_THROWS_AS(SystemConfig(2), InvalidInput);
  CHECK_THROWS_AS(SystemConfig(5, -1.0), InvalidInput);
}

TEST_CASE("square equilibrium positions") {
  SystemConfig c(4);
  const Vec x = polygon_equilibrium(c);
  const double expect[4][3] = {{0, 1, 0}, {-1, 0, 0}, {0, -1, 0}, {1, 0, 0}};
  for (int j = 1; j <= 4; ++j)
    for (int a = 0; a < 3; ++a) CHECK(std::abs(x[3 * c.ring_index(j) + a] - expect[j - 1][a]) < 1e-15);
  CHECK(x.tail(12).norm() == 0.0);
}

TEST_CASE("the polygon is a relative equilibrium") {
  for (int n = 3; n <= 12; ++n)
    for (double mu : {0.0, 200.0, 300.0}) {
      SystemConfig c(n, mu);
      const Vec f = vector_field(polygon_equilibrium(c), c);
      CHECK(f.lpNorm<Eigen::Infinity>() < 1e-12 * std::max(1.0, mu));
    }
  SystemConfig m(7, 200.0);
  CHECK(vector_field(polygon_equilibrium(m), m).norm() < 1e-10);
  CHECK(position(polygon_equilibrium(m), m, 0).norm() == 0.0);
}

TEST_CASE("vertical momentum balance") {
  SystemConfig c(5);
  const Vec x = testing::random_state(c, 7);
  const int b = c.bodies();
  Vec f = vector_field(x, c);
  double az = 0.0, vz = 0.0;
  for (int j = 0; j < b; ++j) az += f[3 * b + 3 * j + 2];
  CHECK(std::abs(az) < 1e-12);

  const UnfoldingParams lam(0.3, -0.7, 0.11);
  f = vector_field(x, c, lam);
  az = 0.0;
  for (int j = 0; j < b; ++j) {
    az += f[3 * b + 3 * j + 2];
    vz += velocity(x, c, j).z();
  }
  CHECK(std::abs(az - (c.n * lam[0] + lam[2] * vz)) < 1e-12);
}

TEST_CASE("potential gradient against central differences") {
  for (double mu : {0.0, 200.0}) {
    SystemConfig c(6, mu);
    const Vec x = testing::random_state(c, 11);
    const Vec g = potential_gradient(x, c);
    const double h = 1e-6;
    for (int i = 0; i < 3 * c.bodies(); ++i) {
      Vec xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const double fd = (potential(xp, c) - potential(xm, c)) / (2 * h);
      CHECK(std::abs(fd - g[i]) <= 1e-6 * std::max(1.0, std::abs(g[i])));
    }
    // action and reaction
    Eigen::Vector3d total = Eigen::Vector3d::Zero();
    for (int j = 0; j < c.bodies(); ++j) total += g.segment<3>(3 * j);
    CHECK(total.norm() < 1e-12 * std::max(1.0, mu));
  }
}

TEST_CASE("field Jacobian against central differences") {
  SystemConfig c(4, 50.0);
  const Vec x = testing::random_state(c, 3);
  const UnfoldingParams lam(0.01, 0.02, -0.03);
  const Mat jac = field_jacobian(x, c, lam);
  const double h = 1e-6;
  double worst = 0.0;
  for (int i = 0; i < c.dim(); ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const Vec col = (vector_field(xp, c, lam) - vector_field(xm, c, lam)) / (2 * h);
    worst = std::max(worst, (col - jac.col(i)).lpNorm<Eigen::Infinity>() / std::max(1.0, jac.col(i).norm()));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("unfolding fields") {
  SystemConfig c(5);
  const Vec eq = polygon_equilibrium(c);
  auto f = unfolding_fields(eq, c);
  const int b = c.bodies();
  CHECK(f[2].norm() == 0.0);
  for (int j = 0; j < b; ++j) {
    CHECK(f[0].segment<3>(3 * b + 3 * j) == Eigen::Vector3d(0, 0, 1));
    // tangent to the circle through the body
    CHECK(std::abs(f[1].segment<3>(3 * b + 3 * j).dot(position(eq, c, j))) < 1e-15);
    CHECK(f[1].segment<3>(3 * b + 3 * j).norm() == doctest::Approx(1.0));
  }
  CHECK(f[0].head(3 * b).norm() == 0.0);

  const Vec x = testing::random_state(c, 5);
  f = unfolding_fields(x, c);
  Eigen::Matrix3d gram;
  for (int a = 0; a < 3; ++a)
    for (int d = 0; d < 3; ++d) gram(a, d) = f[a].dot(f[d]);
  CHECK(gram.determinant() / (gram(0, 0) * gram(1, 1) * gram(2, 2)) > 1e-3);
}

TEST_CASE("conserved quantities") {
  SystemConfig c(7);
  const auto q = conserved_quantities(polygon_equilibrium(c), c);
  CHECK(q.pz == 0.0);
  CHECK(q.angular == doctest::Approx(-7.0 * std::sqrt(s_coefficient(7, 1))).epsilon(1e-14));
  CHECK(q.angular == doctest::Approx(-10.627).epsilon(1e-4));

  const Vec x = testing::random_state(c, 9);
  Vec mirrored = x;
  for (int j = 0; j < c.bodies(); ++j) {
    mirrored[3 * j + 2] = -mirrored[3 * j + 2];
    mirrored[3 * c.bodies() + 3 * j + 2] = -mirrored[3 * c.bodies() + 3 * j + 2];
  }
  const auto a = conserved_quantities(x, c), m = conserved_quantities(mirrored, c);
  CHECK(m.pz == doctest::Approx(-a.pz));
  CHECK(m.angular == doctest::Approx(a.angular));
}

TEST_CASE("collision guard") {
  SystemConfig c(3);
  Vec x = polygon_equilibrium(c);
  position(x, c, 1) = position(x, c, 0) + Eigen::Vector3d(5e-4, 0, 0);
  CHECK(min_pair_distance(x, c) == doctest::Approx(5e-4));
  CHECK_THROWS_AS(vector_field(x, c), CollisionProximity);
  CHECK_THROWS_AS(check_collisions(x, c), CollisionProximity);
}

}  // TEST_SUITE
