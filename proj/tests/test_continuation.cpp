#include <doctest.h>

#include <cmath>
#include <numbers>

#include "choreo/continuation.hpp"
#include "choreo/errors.hpp"
#include "choreo/verifier.hpp"

using namespace choreo;

namespace {

ModeRecord planar_mode(const SystemConfig& c, int k) {
  for (const auto& m : planar_modes(c))
    if (m.wave_number == k) return m;
  throw std::runtime_error("no mode");
}

ContinuationSettings short_run(int steps) {
  ContinuationSettings s;
  s.max_steps = steps;
  s.intervals = 40;
  s.initial_step = 0.05;
  s.max_step = 0.2;
  return s;
}

// The family of n = 7, k = 3 is shared by several cases; compute it once.
const FamilyBranch& seven_three() {
  static const FamilyBranch b = [] {
    SystemConfig c(7);
    return start_family(planar_mode(c, 3), c, short_run(12));
  }();
  return b;
}

double max_norm_distance(const OrbitSolution& a, const OrbitSolution& b, int samples = 50) {
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double t = static_cast<double>(i) / samples;
    worst = std::max(worst, (evaluate_orbit(a, t) - evaluate_orbit(b, t)).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

}  // namespace

TEST_SUITE("continuation") {

TEST_CASE("settings validation") {
  ContinuationSettings s;
  CHECK_NOTHROW(s.validate());
  s.min_step = 0.1;
  s.initial_step = 0.05;
  CHECK_THROWS_AS(s.validate(), InvalidInput);
  s = ContinuationSettings{};
  s.initial_step = 1.0;
  CHECK_THROWS_AS(s.validate(), InvalidInput);
  s = ContinuationSettings{};
  s.intervals = 9;
  CHECK_THROWS_AS(s.validate(), InvalidInput);
  s = ContinuationSettings{};
  s.max_steps = -1;
  CHECK_THROWS_AS(s.validate(), InvalidInput);
}

TEST_CASE("no steps gives the corrected first orbit only") {
  SystemConfig c(7);
  for (const auto& mode : planar_modes(c)) {
    ContinuationSettings s;
    s.max_steps = 0;
    const FamilyBranch b = start_family(mode, c, s);
    REQUIRE(b.orbits.size() == 1);
    CHECK(b.tangents.size() == 1);
    CHECK(b.steps.empty());
    CHECK(b.wave_number == mode.wave_number);
    CHECK(std::abs(b.orbits[0].period - 2.0 * std::numbers::pi / mode.frequency) < 1e-3);
    CHECK(b.orbits[0].lambdas.cwiseAbs().maxCoeff() < 1e-8);
    CHECK(b.termination == "max steps");
  }
}

TEST_CASE("a short stretch of the n = 7, k = 3 family") {
  const FamilyBranch& b = seven_three();
  REQUIRE(b.orbits.size() == 13);
  REQUIRE(b.steps.size() == 12);
  const Vec w = inner_product_weights(b.orbits[0].mesh, b.config.dim());
  CHECK(b.orbits.front().period == doctest::Approx(3.3953).epsilon(1e-4));
  CHECK(b.orbits.back().period > b.orbits.front().period);
  for (size_t i = 0; i < b.orbits.size(); ++i) {
    const OrbitSolution& o = b.orbits[i];
    CHECK(o.lambdas.cwiseAbs().maxCoeff() < 1e-8);
    CHECK(weighted_norm(b.tangents[i], inner_product_weights(o.mesh, b.config.dim())) == doctest::Approx(1.0));
    const SymmetryReport sym = symmetry_residuals(o);
    CHECK(sym.traveling_wave < 1e-6);
    CHECK(sym.reversibility < 1e-6);
    CHECK(sym.max_abs_z < 1e-8);
    if (i + 1 < b.orbits.size() && b.orbits[i + 1].mesh.breakpoints == o.mesh.breakpoints) {
      // consecutive members stay within ten steps of each other
      const double dist = weighted_norm(b.orbits[i + 1].pack() - o.pack(), w);
      CHECK(dist <= 10.0 * b.steps[i]);
    }
  }
  for (int it : b.newton_iterations) CHECK(it <= 8);
  CHECK(b.events.empty());
}

TEST_CASE("locating a period") {
  const FamilyBranch& b = seven_three();
  const OrbitSolution& member = b.orbits[5];
  const OrbitSolution same = locate_period(b, member.period);
  CHECK(same.period == member.period);
  CHECK((same.pack() - member.pack()).norm() == 0.0);

  const double target = 0.3 * b.orbits[7].period + 0.7 * b.orbits[8].period;
  const OrbitSolution o = locate_period(b, target);
  CHECK(std::abs(o.period - target) < 1e-9 * target);
  CHECK(o.lambdas.cwiseAbs().maxCoeff() < 1e-8);
  CHECK(symmetry_residuals(o).traveling_wave < 1e-6);

  const auto [lo, hi] = b.period_range();
  CHECK_THROWS_AS(locate_period(b, lo - 0.1), NotBracketed);
  CHECK_THROWS_AS(locate_period(b, hi + 0.1), NotBracketed);
}

TEST_CASE("halving the step does not move the family") {
  SystemConfig c(7);
  ContinuationSettings s = short_run(12);
  s.initial_step = 0.025;
  s.max_step = 0.1;
  const FamilyBranch fine = start_family(planar_mode(c, 3), c, s);
  const FamilyBranch& coarse = seven_three();
  const auto [lo, hi] = coarse.period_range();
  int compared = 0;
  for (const auto& o : fine.orbits) {
    if (o.period <= lo || o.period >= hi) continue;
    const OrbitSolution twin = locate_period(coarse, o.period);
    CHECK(max_norm_distance(o, twin) < 1e-6);
    ++compared;
  }
  CHECK(compared >= 5);
}

TEST_CASE("no branch to switch to at a fold") {
  const FamilyBranch& b = seven_three();
  BranchEvent fold;
  fold.kind = EventKind::Fold;
  fold.step = 4;
  fold.orbit = b.orbits[4];
  fold.tangent = b.tangents[4];
  CHECK_THROWS_AS(branch_switch(b, fold, short_run(3)), NullSpaceAmbiguous);
}

TEST_CASE("event kind names") {
  for (EventKind k : {EventKind::BranchPoint, EventKind::Fold, EventKind::Collision, EventKind::PeriodTarget})
    CHECK(event_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(event_kind_from_string("cusp"), InvalidInput);
}

}  // TEST_SUITE
