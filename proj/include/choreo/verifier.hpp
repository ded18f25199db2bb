#pragma once

#include <functional>
#include <vector>

#include "choreo/collocation.hpp"

namespace choreo {

/// Dormand-Prince 8(5,3) with 7th-order dense output.
class Dop853 {
 public:
  using Rhs = std::function<void(double t, const Vec& y, Vec& dy)>;

  Dop853(Rhs rhs, double rtol, double atol) : rhs_(std::move(rhs)), rtol_(rtol), atol_(atol) {}

  /// Integrates from (t0, y0) to t1, calling `sink(t, y)` at every requested
  /// output time (ascending, inside [t0, t1]) from the dense interpolant.
  /// Throws StepUnderflow when the step size collapses.
  Vec run(double t0, const Vec& y0, double t1, const std::vector<double>& outputs,
          const std::function<void(double, const Vec&)>& sink);

  long accepted() const { return accepted_; }
  long rejected() const { return rejected_; }
  long max_steps = 2000000;

 private:
  double initial_step(double t, const Vec& y, const Vec& f0, double direction);

  Rhs rhs_;
  double rtol_, atol_;
  long accepted_ = 0, rejected_ = 0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  long accepted_steps = 0;
  long rejected_steps = 0;
};

/// Integrates the unaugmented rotating-frame equations. Samples are returned at
/// `output_times` (default: 0 and duration). Throws CollisionProximity,
/// StepUnderflow.
Trajectory integrate(const Vec& state, const SystemConfig& config, double duration, double tol,
                     std::vector<double> output_times = {});

struct OracleReport {
  double return_residual = 0.0;  // |x(T) - x(0)|, max norm, IVP from x(0)
  double max_deviation = 0.0;    // IVP against the collocation interpolant
  double pz_drift = 0.0;         // relative drift of the conserved quantities
  double angular_drift = 0.0;
  double energy_drift = 0.0;
};

OracleReport cross_validate(const OrbitSolution& orbit, double tol = 1e-12, int samples = 200);

/// Symmetry residuals measured on the orbit's own interpolant, in the
/// normalized time tau = t / T (so a shift of jk zeta is jk/n).
struct SymmetryReport {
  double traveling_wave = 0.0;  // u_j(tau) = R(j zeta) u_n(tau + jk/n), all j
  double reversibility = 0.0;   // u_n(tau) = conj u_n(-tau)
  double spatial = 0.0;         // z_j(tau) = z_n(tau + jk/n)
  double half_period = 0.0;     // u_n(tau) = u_n(tau + 1/2), z_n(tau) = -z_n(tau + 1/2)
  double alternation = 0.0;     // z_j = (-1)^j z_n (k = n/2)
  double axial = 0.0;           // (x, -y, -z)(tau) = (x, y, z)(c - tau), c in {0, 1/2}
  double max_abs_z = 0.0;
  bool spatial_applies = false;
  bool half_period_applies = false;
};

SymmetryReport symmetry_residuals(const OrbitSolution& orbit, int samples = 400);

struct UnfoldingReport {
  bool passed = false;
  Eigen::Vector3d magnitudes = Eigen::Vector3d::Zero();
  /// det of the Gram matrix of F1..F3 over the orbit, normalized by its
  /// diagonal (1 for orthogonal fields, 0 when one vanishes).
  double gram_determinant = 0.0;
};

UnfoldingReport unfolding_check(const OrbitSolution& orbit, double tol = 1e-8);

}  // namespace choreo
