#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <memory>
#include <vector>

#include "choreo/nbody.hpp"

namespace choreo {

/// Partition 0 = t_0 < ... < t_N = 1 of the rescaled period. Each interval
/// carries a polynomial of the given degree, represented by its values at
/// degree+1 equally spaced nodes; the polynomial is collocated at `degree`
/// Gauss points.
struct Mesh {
  std::vector<double> breakpoints{0.0, 1.0};
  int degree = 4;

  static Mesh uniform(int intervals, int degree = 4);

  int intervals() const { return static_cast<int>(breakpoints.size()) - 1; }
  int node_count() const { return intervals() * degree + 1; }
  double width(int i) const { return breakpoints[i + 1] - breakpoints[i]; }
  double node_time(int g) const;
  /// Interval containing t in [0, 1]; t = 1 maps to the last interval.
  int locate(double t) const;
  /// Throws InvalidInput unless breakpoints increase strictly from 0 to 1 and
  /// 2 <= degree <= 7.
  void validate() const;
};

/// Gauss-Legendre collocation data on [0, 1].
struct CollocationRule {
  int degree = 0;
  Vec gauss_points;
  Vec gauss_weights;
  Mat basis;        // basis(c, l) = L_l(z_c) for the equally spaced nodes l/degree
  Mat basis_deriv;  // L_l'(z_c)
  Vec node_weights;  // integral over [0, 1] of L_l

  static const CollocationRule& get(int degree);
};

/// Lagrange basis on the nodes l/degree, l = 0..degree, evaluated at z.
void lagrange_basis(int degree, double z, Vec& values, Vec* derivatives = nullptr);

/// A periodic orbit: piecewise polynomial on a mesh over the rescaled period
/// [0, 1], its period T and the unfolding parameters.
struct OrbitSolution {
  SystemConfig config;
  Mesh mesh;
  Mat nodes;  // dim x node_count
  double period = 0.0;
  UnfoldingParams lambdas = UnfoldingParams::Zero();
  int wave_number = 0;
  FamilyType family = FamilyType::Planar;

  double frequency() const;
  /// dim * node_count + 4 (period and the three unfolding parameters).
  int unknowns() const { return config.dim() * mesh.node_count() + 4; }
  /// Flat unknown vector: node values node-major, then T, l1, l2, l3.
  Vec pack() const;
  void unpack(const Vec& flat);

  static OrbitSolution constant(const SystemConfig& config, const Vec& state, double period, const Mesh& mesh);
};

/// State at rescaled time t; t outside [0, 1] is reduced mod 1.
Vec evaluate_orbit(const OrbitSolution& orbit, double t);
/// d/dt of the interpolant at rescaled time t (physical velocity times T).
Vec evaluate_orbit_derivative(const OrbitSolution& orbit, double t);

/// Minimum pair distance over all mesh nodes.
double orbit_min_distance(const OrbitSolution& orbit);

/// Reference orbit for the time-phase integral (the previous family member).
struct PhaseConstraints {
  OrbitSolution reference;
};

/// Pseudo-arclength equation <X - anchor, direction>_w = step, with the
/// weighted inner product of inner_product_weights().
struct ArclengthConstraint {
  Vec anchor;
  Vec direction;
  double step = 0.0;
};

/// Quadrature weights of the node values (so that <a, a>_w approximates the
/// L2 norm over the period) followed by unit weights for T and the unfoldings.
Vec inner_product_weights(const Mesh& mesh, int dim);
double weighted_dot(const Vec& a, const Vec& b, const Vec& weights);
double weighted_norm(const Vec& a, const Vec& weights);

/// Collocation residuals x'(t_c) - T f(x(t_c), lambda), periodicity
/// x(1) - x(0), and the integrals I1 = int y_n, I2 = int z_n,
/// I3 = int (x_n - ref_n) . ref_n'. Size dim * (N m + 1) + 3.
Vec assemble_residual(const OrbitSolution& candidate, const PhaseConstraints& constraints);

/// Factorized bordered Jacobian. Interior node values of every interval are
/// condensed out with a local QR factorization; the remaining system in the
/// breakpoint values, T and lambda is factorized with a sparse LU.
class BorderedFactorization {
 public:
  Vec solve(const Vec& rhs) const;
  /// Sign of the determinant of the full bordered Jacobian, up to a sign that
  /// depends only on the mesh and the dimension.
  int det_sign() const { return det_sign_; }
  double log_abs_det() const { return log_abs_det_; }

 private:
  friend class CollocationSystem;
  struct Interval {
    Eigen::HouseholderQR<Mat> qr;
    Mat top_rest;  // transformed boundary + parameter columns of the pivot rows
    Mat border_mult;  // border rows x interior columns
  };
  int dim_ = 0;
  int degree_ = 0;
  int intervals_ = 0;
  std::vector<Interval> blocks_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
  int det_sign_ = 1;
  double log_abs_det_ = 0.0;
};

/// Full square system: collocation + periodicity + I1..I3 + arclength equation.
class CollocationSystem {
 public:
  CollocationSystem(const SystemConfig& config, const Mesh& mesh, const PhaseConstraints& constraints,
                    const ArclengthConstraint& arclength);

  int size() const { return size_; }
  Vec residual(const Vec& x) const;
  /// Largest |x'| over the collocation points, the size of the terms that
  /// cancel in the collocation residual.
  double derivative_scale(const Vec& x) const;
  /// Throws SingularJacobian when the reduced system cannot be factorized.
  std::unique_ptr<BorderedFactorization> factorize(const Vec& x) const;
  /// Dense Jacobian, by analytic assembly. Only for small test problems.
  Mat dense_jacobian(const Vec& x) const;

 private:
  void collocation_point(const Vec& x, int interval, int c, Vec& value, Vec& deriv) const;
  Mat border_rows() const;  // 4 x size, I1, I2, I3 and arclength (value-independent)
  Vec border_values(const Vec& x) const;

  SystemConfig config_;
  Mesh mesh_;
  const CollocationRule* rule_;
  ArclengthConstraint arclength_;
  Vec weights_;
  int dim_;
  int nodes_;
  int size_;
  int ref_body_;
  // reference body position / derivative at every Gauss point, 3 x (N m)
  Mat ref_pos_;
  Mat ref_vel_;
};

struct NewtonSettings {
  double tolerance = 1e-10;
  int max_iterations = 20;
  /// Accept a residual below this (relative to the largest derivative) once
  /// the update stagnates at round-off.
  double stagnation_tolerance = 1e-9;
};

struct NewtonResult {
  OrbitSolution orbit;
  int iterations = 0;
  double residual_norm = 0.0;
  double last_correction = 0.0;
  /// Factorization of the Jacobian at the returned orbit.
  std::shared_ptr<const BorderedFactorization> factorization;
};

/// Damped Newton iteration on the bordered system. Every iteration factorizes
/// the Jacobian at the current iterate; the loop stops once the residual there
/// is below tolerance, so the returned factorization belongs to the returned
/// orbit. Throws NoConvergence, SingularJacobian or CollisionProximity.
NewtonResult newton_correct(const OrbitSolution& guess, const PhaseConstraints& constraints,
                            const ArclengthConstraint& arclength, const NewtonSettings& settings = {});

/// Re-represent the orbit on another mesh by evaluating its interpolant.
OrbitSolution remesh(const OrbitSolution& orbit, const Mesh& mesh);
/// Same for a flat vector in the layout of OrbitSolution::pack (e.g. a tangent).
Vec remesh_flat(const Vec& flat, const Mesh& from, const Mesh& to, int dim);

/// New mesh with target_intervals intervals equidistributing the local
/// interpolation error estimate, and the orbit re-represented on it.
Mesh adapted_mesh(const OrbitSolution& orbit, int target_intervals);
OrbitSolution adapt_mesh(const OrbitSolution& orbit, int target_intervals);

}  // namespace choreo
