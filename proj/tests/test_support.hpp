#pragma once

#include <random>

#include "choreo/nbody.hpp"

namespace testing {

// Perturbed polygon: every body moved by up to `spread` in each coordinate and
// given velocities of the same size. Collision-free for spread well below the
// polygon side.
inline choreo::Vec random_state(const choreo::SystemConfig& c, unsigned seed, double spread = 0.1) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(-spread, spread);
  choreo::Vec x = choreo::polygon_equilibrium(c);
  for (int i = 0; i < x.size(); ++i) x[i] += u(gen);
  return x;
}

}  // namespace testing
