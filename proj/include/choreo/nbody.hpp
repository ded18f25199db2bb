#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>

namespace choreo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Pairs closer than this (ring circumradius is 1) are treated as a collision.
inline constexpr double kCollisionRadius = 1e-3;

/// Coefficient s_k of the regular n-gon:
///   s_k = 1/4 * sum_{j=1}^{n-1} sin^2(k j zeta / 2) / sin^3(j zeta / 2),  zeta = 2 pi / n.
/// s_1 is the squared angular velocity that makes the unit polygon a relative
/// equilibrium; i*sqrt(s_k) are the vertical eigenvalues. k is taken mod n.
double s_coefficient(int n, int k);

/// Problem definition: n unit masses on a ring, optionally a central body of
/// mass mu, observed in a frame rotating with angular velocity frame_freq.
///
/// With mu > 0 the central body is stored as body 0 and ring body j (1..n) is
/// body j. Without it, ring body j is stored at index j-1, so body n (the
/// reference body of every symmetry relation) is always the last one.
struct SystemConfig {
  int n = 0;
  double mu = 0.0;
  double frame_freq = 0.0;  // sqrt(mu + s_1)
  double zeta = 0.0;        // 2 pi / n

  SystemConfig() = default;
  /// Throws InvalidInput for n < 3 or mu < 0.
  explicit SystemConfig(int n, double mu = 0.0);

  bool has_central_body() const { return mu > 0.0; }
  int bodies() const { return has_central_body() ? n + 1 : n; }
  int dim() const { return 6 * bodies(); }
  /// Storage index of ring body j; j is reduced into 1..n.
  int ring_index(int j) const;
  double mass(int body) const { return (has_central_body() && body == 0) ? mu : 1.0; }
};

/// Family tag carried by orbits and branches. Secondary covers every family
/// reached by branch switching (Axial, Unchained planar, ...).
enum class FamilyType { Planar, Vertical, Secondary };

std::string to_string(FamilyType type);
FamilyType family_type_from_string(const std::string& s);

using UnfoldingParams = Eigen::Vector3d;

// State layout: positions of all bodies (3 each), then velocities (3 each).
inline auto position(Vec& x, const SystemConfig& c, int body) { (void)c; return x.segment<3>(3 * body); }
inline auto position(const Vec& x, const SystemConfig& c, int body) { (void)c; return x.segment<3>(3 * body); }
inline auto velocity(Vec& x, const SystemConfig& c, int body) { return x.segment<3>(3 * c.bodies() + 3 * body); }
inline auto velocity(const Vec& x, const SystemConfig& c, int body) {
  return x.segment<3>(3 * c.bodies() + 3 * body);
}

/// Planar rotation generator acting on (x, y, z): (x, y, z) -> (y, -x, 0).
/// This is multiplication by -i in the complex plane, the sign for which the
/// Coriolis term reads +2 w J v and the angular invariant reads u'.Ju - w|u|^2.
inline Eigen::Vector3d apply_j(const Eigen::Vector3d& a) { return {a.y(), -a.x(), 0.0}; }

/// Polygonal (or Maxwell, mu > 0) relative equilibrium: ring body j at
/// (cos j zeta, sin j zeta, 0), central body at the origin, zero velocities.
Vec polygon_equilibrium(const SystemConfig& config);

double min_pair_distance(const Vec& state, const SystemConfig& config);

/// Throws CollisionProximity if any pair is closer than radius.
void check_collisions(const Vec& state, const SystemConfig& config, double radius = kCollisionRadius);

/// V = sum_{i<j} m_i m_j / |x_j - x_i|.
double potential(const Vec& state, const SystemConfig& config);
/// dV/dx for every body, 3*bodies entries.
Vec potential_gradient(const Vec& state, const SystemConfig& config);

/// Augmented rotating-frame field:
///   x_j' = v_j
///   v_j' = 2 w diag(J,0) v_j + w^2 (u_j, 0) + grad_j V / m_j
///          + l1 e3 + l2 diag(J,0) x_j + l3 v_j
/// Throws CollisionProximity inside the guard radius.
Vec vector_field(const Vec& state, const SystemConfig& config,
                 const UnfoldingParams& lambdas = UnfoldingParams::Zero());

/// d(vector_field)/d(state), analytic.
Mat field_jacobian(const Vec& state, const SystemConfig& config,
                   const UnfoldingParams& lambdas = UnfoldingParams::Zero());

/// The three unfolding fields as full-state vectors (zero in the position rows):
/// F1 = e3, F2 = diag(J,0) x_j, F3 = v_j.
std::array<Vec, 3> unfolding_fields(const Vec& state, const SystemConfig& config);

struct ConservedQuantities {
  double pz = 0.0;       // sum m_j z_j'
  double angular = 0.0;  // sum m_j (u_j'.J u_j - w |u_j|^2)
};

ConservedQuantities conserved_quantities(const Vec& state, const SystemConfig& config);

/// Jacobi integral: kinetic - w^2/2 sum m|u|^2 - V.
double jacobi_energy(const Vec& state, const SystemConfig& config);

}  // namespace choreo
