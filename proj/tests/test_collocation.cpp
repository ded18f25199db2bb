#include <doctest.h>

#include <cmath>
#include <numbers>

#include "choreo/collocation.hpp"
#include "choreo/errors.hpp"
#include "choreo/spectrum.hpp"

using namespace choreo;

namespace {

// Newton solve from the small-amplitude guess, anchored at the equilibrium.
NewtonResult first_orbit(const ModeRecord& mode, const SystemConfig& c, const Mesh& mesh, double amplitude) {
  const OrbitSolution pred = lyapunov_predictor(mode, amplitude, c, mesh);
  const OrbitSolution eq = OrbitSolution::constant(c, polygon_equilibrium(c), pred.period, mesh);
  const Vec w = inner_product_weights(mesh, c.dim());
  Vec dir = pred.pack() - eq.pack();
  dir /= weighted_norm(dir, w);
  return newton_correct(pred, PhaseConstraints{pred}, ArclengthConstraint{eq.pack(), dir, amplitude});
}

ModeRecord hiphop_mode() { return vertical_modes(SystemConfig(4))[1]; }

ModeRecord planar_mode(const SystemConfig& c, int k) {
  for (const auto& m : planar_modes(c))
    if (m.wave_number == k) return m;
  throw std::runtime_error("no mode");
}

// Largest |x' - T f(x)| of the interpolant at interval midpoints.
double midpoint_defect(const OrbitSolution& o) {
  double worst = 0.0;
  for (int i = 0; i < o.mesh.intervals(); ++i) {
    const double t = 0.5 * (o.mesh.breakpoints[i] + o.mesh.breakpoints[i + 1]);
    const Vec d = evaluate_orbit_derivative(o, t) - o.period * vector_field(evaluate_orbit(o, t), o.config, o.lambdas);
    worst = std::max(worst, d.lpNorm<Eigen::Infinity>());
  }
  return worst;
}

}  // namespace

TEST_SUITE("collocation") {

TEST_CASE("mesh basics") {
  const Mesh m = Mesh::uniform(10, 4);
  CHECK(m.intervals() == 10);
  CHECK(m.node_count() == 41);
  CHECK(m.node_time(4) == doctest::Approx(0.1));
  CHECK(m.locate(1.0) == 9);
  CHECK(m.locate(0.0) == 0);
  Mesh bad = m;
  bad.breakpoints[3] = bad.breakpoints[2];
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = m;
  bad.degree = 8;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

TEST_CASE("quadrature weights integrate piecewise polynomials exactly") {
  Mesh m = Mesh::uniform(7, 4);
  m.breakpoints = {0.0, 0.05, 0.2, 0.21, 0.5, 0.7, 0.9, 1.0};
  const Vec w = inner_product_weights(m, 1);
  REQUIRE(w.size() == m.node_count() + 4);
  for (int p = 0; p <= 4; ++p) {
    double s = 0.0;
    for (int g = 0; g < m.node_count(); ++g) s += w[g] * std::pow(m.node_time(g), p);
    CHECK(s == doctest::Approx(1.0 / (p + 1)).epsilon(1e-14));
  }
}

TEST_CASE("system dimensions") {
  SystemConfig c(3);
  const Mesh m = Mesh::uniform(10, 4);
  const OrbitSolution o = OrbitSolution::constant(c, polygon_equilibrium(c), 5.0, m);
  const int dim = c.dim();
  CHECK(o.unknowns() == dim * (10 * 4 + 1) + 4);
  const Vec r = assemble_residual(o, PhaseConstraints{o});
  CHECK(r.size() == dim * 10 * 4 + dim + 3);
  CHECK(r.size() == o.unknowns() - 1);
  CollocationSystem sys(c, m, PhaseConstraints{o}, ArclengthConstraint{o.pack(), Vec::Ones(o.unknowns()), 0.0});
  CHECK(sys.size() == o.unknowns());
}

TEST_CASE("the equilibrium solves every block") {
  for (double mu : {0.0, 200.0}) {
    SystemConfig c(5, mu);
    const OrbitSolution o = OrbitSolution::constant(c, polygon_equilibrium(c), 3.7, Mesh::uniform(12));
    CHECK(assemble_residual(o, PhaseConstraints{o}).lpNorm<Eigen::Infinity>() < 1e-12 * std::max(1.0, mu));
  }
}

TEST_CASE("the vertical unfolding enters every z equation with weight T") {
  SystemConfig c(4);
  const double T = 5.0, eps = 1e-3;
  const Mesh m = Mesh::uniform(10);
  OrbitSolution o = OrbitSolution::constant(c, polygon_equilibrium(c), T, m);
  const Vec r0 = assemble_residual(o, PhaseConstraints{o});
  o.lambdas[0] = eps;
  const Vec d = assemble_residual(o, PhaseConstraints{o}) - r0;
  int hit = 0;
  for (int i = 0; i < d.size(); ++i) {
    if (std::abs(d[i]) < 1e-14) continue;
    ++hit;
    CHECK(std::abs(std::abs(d[i]) - T * eps) < 1e-13);
  }
  CHECK(hit == m.intervals() * m.degree * c.bodies());
}

TEST_CASE("analytic Jacobian against finite differences") {
  SystemConfig c(4);
  const Mesh m = Mesh::uniform(6);
  OrbitSolution o = lyapunov_predictor(hiphop_mode(), 0.05, c, m);
  o.lambdas << 1e-3, -2e-3, 5e-4;
  const Vec w = inner_product_weights(m, c.dim());
  Vec dir = Vec::Ones(o.unknowns());
  dir /= weighted_norm(dir, w);
  CollocationSystem sys(c, m, PhaseConstraints{o}, ArclengthConstraint{o.pack(), dir, 0.01});
  const Vec x = o.pack();
  const Mat jac = sys.dense_jacobian(x);
  const double h = 1e-6;
  double worst = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const Vec col = (sys.residual(xp) - sys.residual(xm)) / (2 * h);
    worst = std::max(worst, (col - jac.col(i)).lpNorm<Eigen::Infinity>());
  }
  CHECK(worst < 1e-6);

  // the condensed solver reproduces the dense solve
  const auto fac = sys.factorize(x);
  const Vec b = Vec::LinSpaced(x.size(), -1.0, 2.0);
  const Vec y = fac->solve(b);
  CHECK((jac * y - b).lpNorm<Eigen::Infinity>() < 1e-9 * b.lpNorm<Eigen::Infinity>() * y.lpNorm<Eigen::Infinity>());

  // determinant sign, up to a mesh-dependent constant
  OrbitSolution o2 = o;
  o2.period *= 1.3;
  const Vec x2 = o2.pack();
  const int dense1 = jac.determinant() > 0 ? 1 : -1;
  const int dense2 = sys.dense_jacobian(x2).determinant() > 0 ? 1 : -1;
  CHECK(fac->det_sign() * dense1 == sys.factorize(x2)->det_sign() * dense2);
}

TEST_CASE("Newton from the small-amplitude guess") {
  SystemConfig c(7);
  const Mesh m = Mesh::uniform(40);
  const NewtonResult nr = first_orbit(planar_mode(c, 3), c, m, 1e-3);
  CHECK(nr.residual_norm < 1e-10);
  CHECK(nr.orbit.period == doctest::Approx(2.0 * std::numbers::pi / 1.850581532085).epsilon(1e-3));
  CHECK(std::abs(nr.orbit.period - 3.3953) < 1e-3);
  CHECK(nr.orbit.lambdas.cwiseAbs().maxCoeff() < 1e-8);

  // a converged orbit is a fixed point of the iteration
  const Vec w = inner_product_weights(m, c.dim());
  const Vec x = nr.orbit.pack();
  Vec dir = Vec::Zero(x.size());
  dir[x.size() - 4] = 1.0;
  const NewtonResult again = newton_correct(nr.orbit, PhaseConstraints{nr.orbit}, ArclengthConstraint{x, dir, 0.0});
  CHECK(again.iterations == 1);
  CHECK(again.last_correction == 0.0);
  CHECK((again.orbit.pack() - x).norm() == 0.0);
  (void)w;
}

TEST_CASE("orbit evaluation") {
  SystemConfig c(4);
  const Mesh m = Mesh::uniform(30);
  const NewtonResult nr = first_orbit(hiphop_mode(), c, m, 0.05);
  const OrbitSolution& o = nr.orbit;
  CHECK((evaluate_orbit(o, 0.0) - evaluate_orbit(o, 1.0)).lpNorm<Eigen::Infinity>() < 1e-9);
  for (int g = 0; g < m.node_count(); ++g)
    CHECK((evaluate_orbit(o, m.node_time(g)) - o.nodes.col(g)).lpNorm<Eigen::Infinity>() < 1e-15);
  CHECK((evaluate_orbit(o, 1.25) - evaluate_orbit(o, 0.25)).lpNorm<Eigen::Infinity>() < 1e-15);
}

TEST_CASE("interpolant defect decreases with refinement") {
  SystemConfig c(4);
  const double d50 = midpoint_defect(first_orbit(hiphop_mode(), c, Mesh::uniform(50), 0.3).orbit);
  const double d100 = midpoint_defect(first_orbit(hiphop_mode(), c, Mesh::uniform(100), 0.3).orbit);
  CHECK(d100 < 1e-6);
  CHECK(d50 / d100 > 10.0);
}

TEST_CASE("a collapsed mesh does not resolve the orbit") {
  SystemConfig c(4);
  bool unresolved = false;
  try {
    const NewtonResult nr = first_orbit(hiphop_mode(), c, Mesh::uniform(2), 0.3);
    unresolved = midpoint_defect(nr.orbit) > 1e-4;
  } catch (const NoConvergence&) {
    unresolved = true;
  }
  CHECK(unresolved);
}

TEST_CASE("mesh adaptation") {
  SystemConfig c(3);
  const OrbitSolution flat = OrbitSolution::constant(c, polygon_equilibrium(c), 2.0, Mesh::uniform(10));
  const Mesh same = adapted_mesh(flat, 16);
  CHECK(same.intervals() == 16);
  for (int i = 0; i <= 16; ++i) CHECK(same.breakpoints[i] == doctest::Approx(i / 16.0).epsilon(1e-14));

  // a sharp pulse at t = 0.5 pulls the small intervals towards it
  OrbitSolution pulse = OrbitSolution::constant(c, polygon_equilibrium(c), 2.0, Mesh::uniform(200));
  for (int g = 0; g < pulse.mesh.node_count(); ++g) {
    const double t = pulse.mesh.node_time(g);
    pulse.nodes(2, g) = std::exp(-std::pow((t - 0.5) / 0.02, 2));
  }
  const Mesh adapted = adapted_mesh(pulse, 40);
  int smallest = 0;
  for (int i = 1; i < adapted.intervals(); ++i)
    if (adapted.width(i) < adapted.width(smallest)) smallest = i;
  CHECK(std::abs(adapted.breakpoints[smallest] - 0.5) < 0.05);
  CHECK(adapted.width(adapted.locate(0.5)) < 0.2 * adapted.width(0));

  // adapting again without changing the solution barely moves the mesh
  SystemConfig c4(4);
  const OrbitSolution o = first_orbit(hiphop_mode(), c4, Mesh::uniform(60), 0.3).orbit;
  const OrbitSolution once = adapt_mesh(o, 60);
  const OrbitSolution twice = adapt_mesh(once, 60);
  // relative to the mean interval width 1/60
  double moved = 0.0;
  for (int i = 0; i <= 60; ++i)
    moved = std::max(moved, 60.0 * std::abs(twice.mesh.breakpoints[i] - once.mesh.breakpoints[i]));
  MESSAGE("largest breakpoint move, in mean widths: " << moved);
  CHECK(moved < 0.01);
  // values survive the transfer
  for (double t : {0.1, 0.37, 0.8})
    CHECK((evaluate_orbit(once, t) - evaluate_orbit(o, t)).lpNorm<Eigen::Infinity>() < 1e-8);
}

}  // TEST_SUITE
