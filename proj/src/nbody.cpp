#include "choreo/nbody.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "choreo/errors.hpp"

namespace choreo {

std::string to_string(FamilyType type) {
  switch (type) {
    case FamilyType::Planar: return "planar";
    case FamilyType::Vertical: return "vertical";
    case FamilyType::Secondary: return "secondary";
  }
  return "unknown";
}

FamilyType family_type_from_string(const std::string& s) {
  if (s == "planar") return FamilyType::Planar;
  if (s == "vertical") return FamilyType::Vertical;
  if (s == "secondary") return FamilyType::Secondary;
  throw InvalidInput("unknown family type '" + s + "'");
}

double s_coefficient(int n, int k) {
  if (n < 2) throw InvalidInput("s_coefficient: n must be at least 2");
  const double zeta = 2.0 * std::numbers::pi / n;
  double sum = 0.0;
  for (int j = 1; j < n; ++j) {
    // sin^2(pi k j / n) depends only on k j mod n up to reflection; reducing
    // in integers keeps s_k and s_{n-k} bitwise equal
    long r = ((static_cast<long>(k) * j) % n + n) % n;
    r = std::min(r, n - r);
    const double num = std::sin(r * zeta / 2.0);
    const double den = std::sin(j * zeta / 2.0);
    sum += num * num / (den * den * den);
  }
  return sum / 4.0;
}

SystemConfig::SystemConfig(int n_, double mu_) : n(n_), mu(mu_) {
  if (n < 3) throw InvalidInput("SystemConfig: n must be at least 3");
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw InvalidInput("SystemConfig: mu must be finite and nonnegative");
  frame_freq = std::sqrt(mu + s_coefficient(n, 1));
  zeta = 2.0 * std::numbers::pi / n;
}

int SystemConfig::ring_index(int j) const {
  int r = ((j % n) + n) % n;
  if (r == 0) r = n;
  return has_central_body() ? r : r - 1;
}

Vec polygon_equilibrium(const SystemConfig& c) {
  Vec x = Vec::Zero(c.dim());
  for (int j = 1; j <= c.n; ++j) {
    position(x, c, c.ring_index(j)) << std::cos(j * c.zeta), std::sin(j * c.zeta), 0.0;
  }
  return x;
}

double min_pair_distance(const Vec& x, const SystemConfig& c) {
  double best = std::numeric_limits<double>::infinity();
  const int b = c.bodies();
  for (int i = 0; i < b; ++i)
    for (int j = i + 1; j < b; ++j)
      best = std::min(best, (position(x, c, i) - position(x, c, j)).norm());
  return best;
}

void check_collisions(const Vec& x, const SystemConfig& c, double radius) {
  const double d = min_pair_distance(x, c);
  if (!(d >= radius)) throw CollisionProximity(d, radius);
}

double potential(const Vec& x, const SystemConfig& c) {
  double v = 0.0;
  const int b = c.bodies();
  for (int i = 0; i < b; ++i)
    for (int j = i + 1; j < b; ++j)
      v += c.mass(i) * c.mass(j) / (position(x, c, i) - position(x, c, j)).norm();
  return v;
}

Vec potential_gradient(const Vec& x, const SystemConfig& c) {
  const int b = c.bodies();
  Vec g = Vec::Zero(3 * b);
  for (int i = 0; i < b; ++i) {
    for (int j = i + 1; j < b; ++j) {
      const Eigen::Vector3d r = position(x, c, i) - position(x, c, j);
      const double d = r.norm();
      const Eigen::Vector3d f = c.mass(i) * c.mass(j) * r / (d * d * d);
      g.segment<3>(3 * i) -= f;
      g.segment<3>(3 * j) += f;
    }
  }
  return g;
}

Vec vector_field(const Vec& x, const SystemConfig& c, const UnfoldingParams& lam) {
  check_collisions(x, c);
  const int b = c.bodies();
  const double w = c.frame_freq;
  const Vec grad = potential_gradient(x, c);
  Vec f(c.dim());
  for (int i = 0; i < b; ++i) {
    const Eigen::Vector3d p = position(x, c, i);
    const Eigen::Vector3d v = velocity(x, c, i);
    Eigen::Vector3d a = 2.0 * w * apply_j(v) + grad.segment<3>(3 * i) / c.mass(i);
    a.x() += w * w * p.x();
    a.y() += w * w * p.y();
    a.z() += lam[0];
    a += lam[1] * apply_j(p) + lam[2] * v;
    position(f, c, i) = v;
    velocity(f, c, i) = a;
  }
  return f;
}

Mat field_jacobian(const Vec& x, const SystemConfig& c, const UnfoldingParams& lam) {
  check_collisions(x, c);
  const int b = c.bodies();
  const int vo = 3 * b;
  const double w = c.frame_freq;
  Mat jac = Mat::Zero(c.dim(), c.dim());
  jac.topRightCorner(vo, vo).setIdentity();

  Eigen::Matrix3d jmat;
  jmat << 0, 1, 0, -1, 0, 0, 0, 0, 0;
  for (int i = 0; i < b; ++i) {
    Eigen::Matrix3d pos_block = Eigen::Matrix3d::Zero();
    pos_block(0, 0) = w * w;
    pos_block(1, 1) = w * w;
    pos_block += lam[1] * jmat;
    jac.block<3, 3>(vo + 3 * i, 3 * i) += pos_block;
    jac.block<3, 3>(vo + 3 * i, vo + 3 * i) = 2.0 * w * jmat + lam[2] * Eigen::Matrix3d::Identity();
  }
  for (int i = 0; i < b; ++i) {
    for (int j = i + 1; j < b; ++j) {
      const Eigen::Vector3d r = position(x, c, i) - position(x, c, j);
      const double d2 = r.squaredNorm();
      const double d = std::sqrt(d2);
      const double inv3 = 1.0 / (d2 * d);
      // K = d/dr of r/|r|^3
      const Eigen::Matrix3d k = inv3 * (Eigen::Matrix3d::Identity() - 3.0 * r * r.transpose() / d2);
      // acceleration of i is -m_j r/|r|^3, of j is +m_i r/|r|^3
      jac.block<3, 3>(vo + 3 * i, 3 * i) -= c.mass(j) * k;
      jac.block<3, 3>(vo + 3 * i, 3 * j) += c.mass(j) * k;
      jac.block<3, 3>(vo + 3 * j, 3 * j) -= c.mass(i) * k;
      jac.block<3, 3>(vo + 3 * j, 3 * i) += c.mass(i) * k;
    }
  }
  return jac;
}

std::array<Vec, 3> unfolding_fields(const Vec& x, const SystemConfig& c) {
  std::array<Vec, 3> f{Vec::Zero(c.dim()), Vec::Zero(c.dim()), Vec::Zero(c.dim())};
  for (int i = 0; i < c.bodies(); ++i) {
    velocity(f[0], c, i) = Eigen::Vector3d::UnitZ();
    velocity(f[1], c, i) = apply_j(position(x, c, i));
    velocity(f[2], c, i) = velocity(x, c, i);
  }
  return f;
}

ConservedQuantities conserved_quantities(const Vec& x, const SystemConfig& c) {
  ConservedQuantities q;
  for (int i = 0; i < c.bodies(); ++i) {
    const Eigen::Vector3d p = position(x, c, i);
    const Eigen::Vector3d v = velocity(x, c, i);
    const double m = c.mass(i);
    q.pz += m * v.z();
    q.angular += m * (v.dot(apply_j(p)) - c.frame_freq * (p.x() * p.x() + p.y() * p.y()));
  }
  return q;
}

double jacobi_energy(const Vec& x, const SystemConfig& c) {
  double e = -potential(x, c);
  const double w2 = c.frame_freq * c.frame_freq;
  for (int i = 0; i < c.bodies(); ++i) {
    const Eigen::Vector3d p = position(x, c, i);
    e += 0.5 * c.mass(i) * (velocity(x, c, i).squaredNorm() - w2 * (p.x() * p.x() + p.y() * p.y()));
  }
  return e;
}

}  // namespace choreo
