#include "choreo/choreography.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

#include "choreo/errors.hpp"

namespace choreo {

namespace {

Eigen::Vector2d rotate(double angle, const Eigen::Vector2d& p) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * p.x() - s * p.y(), s * p.x() + c * p.y()};
}

long wrap(long i, long count) { return ((i % count) + count) % count; }

double unwrapped_turns(const std::vector<double>& angles) {
  double total = 0.0;
  for (size_t i = 1; i < angles.size(); ++i) total += std::remainder(angles[i] - angles[i - 1], 2.0 * std::numbers::pi);
  return total / (2.0 * std::numbers::pi);
}

}  // namespace

double omega_of(double nu, int k, const SystemConfig& config) {
  if (!(nu > 0.0)) throw InvalidInput("omega_of: frequency must be positive");
  return (k * config.frame_freq / nu - 1.0) / config.n;
}

int modular_inverse(int a, int m) {
  if (m < 1) throw InvalidInput("modular_inverse: modulus must be positive");
  if (m == 1) return 0;
  // extended Euclid on (a mod m, m)
  long old_r = ((a % m) + m) % m, r = m, old_s = 1, s = 0;
  while (r != 0) {
    const long q = old_r / r;
    std::tie(old_r, r) = std::make_pair(r, old_r - q * r);
    std::tie(old_s, s) = std::make_pair(s, old_s - q * s);
  }
  if (old_r != 1) throw NotCoprime("modular_inverse: " + std::to_string(a) + " has no inverse mod " + std::to_string(m));
  return static_cast<int>(((old_s % m) + m) % m);
}

Resonance make_resonance(const SystemConfig& config, int k, int ell, int m) {
  if (ell < 1 || m < 1) throw InvalidInput("resonance: l and m must be positive");
  if (std::gcd(ell, m) != 1)
    throw NotCoprime("resonance: l = " + std::to_string(ell) + " and m = " + std::to_string(m) + " are not coprime");
  const int n = config.n;
  const long defect = static_cast<long>(k) * ell - m;
  if (defect % n != 0) {
    const int curves = n / std::gcd(n, static_cast<int>(((defect % n) + n) % n));
    throw NotChoreography("resonance " + std::to_string(ell) + ":" + std::to_string(m) + " with k = " +
                              std::to_string(k) + ": k l - m is not divisible by n; the bodies trace " +
                              std::to_string(curves) + " distinct curves",
                          curves);
  }
  Resonance res;
  res.ell = ell;
  res.m = m;
  res.k = k;
  res.n = n;
  res.period = (2.0 * std::numbers::pi / config.frame_freq) * ell / m;
  res.r = static_cast<int>(defect / n);
  const long inv = modular_inverse(ell % m, m);
  const long nm = static_cast<long>(n) * m;
  res.k_tilde = static_cast<int>(wrap(k - static_cast<long>(res.r) * n * inv, nm));
  res.d = std::gcd(k, n);
  return res;
}

std::vector<Resonance> enumerate_resonances(const SystemConfig& config, int k, double lo, double hi, int lmax) {
  if (lmax < 1) throw InvalidInput("enumerate_resonances: lmax must be at least 1");
  if (!(lo <= hi)) throw InvalidInput("enumerate_resonances: empty period interval");
  std::vector<Resonance> out;
  const double base = 2.0 * std::numbers::pi / config.frame_freq;
  for (int ell = 1; ell <= lmax; ++ell)
    for (int m = 1; m <= lmax; ++m) {
      if (std::gcd(ell, m) != 1 || (static_cast<long>(k) * ell - m) % config.n != 0) continue;
      const double t = base * ell / m;
      if (t < lo || t > hi) continue;
      out.push_back(make_resonance(config, k, ell, m));
    }
  std::sort(out.begin(), out.end(), [](const Resonance& a, const Resonance& b) {
    return a.period != b.period ? a.period < b.period : a.ell < b.ell;
  });
  return out;
}

InertialStates inertial_states(const OrbitSolution& orbit, const Resonance& res, int samples_per_period) {
  if (samples_per_period < 1) throw InvalidInput("inertial_states: need at least one sample per period");
  if (std::abs(orbit.period - res.period) >= 1e-8 * res.period) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "orbit period %.12g does not match the resonant period %.12g", orbit.period,
                  res.period);
    throw PeriodMismatch(buf);
  }
  const SystemConfig& c = orbit.config;
  const int unit = 2 * c.n;
  InertialStates st;
  st.per_period = unit * ((samples_per_period + unit - 1) / unit);
  const long count = static_cast<long>(st.per_period) * res.m;
  st.times.resize(count + 1);
  st.bodies.assign(c.n, Mat(3, count + 1));
  for (long i = 0; i <= count; ++i) {
    const double t = res.period * static_cast<double>(i) / st.per_period;
    st.times[i] = t;
    const Vec u = evaluate_orbit(orbit, static_cast<double>(i % st.per_period) / st.per_period);
    for (int j = 1; j <= c.n; ++j) {
      const auto p = u.segment<3>(3 * c.ring_index(j));
      const Eigen::Vector2d q = rotate(c.frame_freq * t, p.head<2>());
      st.bodies[j - 1].col(i) << q.x(), q.y(), p.z();
    }
  }
  return st;
}

ChoreographyPath path_of(const InertialStates& states, const Resonance& res, const std::string& source_id) {
  ChoreographyPath path;
  path.times = states.times;
  path.points = states.bodies.back();
  path.resonance = res;
  path.source_id = source_id;
  return path;
}

ChoreographyPath to_inertial(const OrbitSolution& orbit, const Resonance& res, int samples_per_period,
                             const std::string& source_id) {
  return path_of(inertial_states(orbit, res, samples_per_period), res, source_id);
}

double ChoreographyReport::max_residual() const { return std::max({closure, same_path, rotation, grouping}); }

ChoreographyReport verify_choreography(const ChoreographyPath& path, const InertialStates& states) {
  const Resonance& res = path.resonance;
  const int n = res.n;
  const long count = static_cast<long>(path.points.cols()) - 1;
  const long per = states.per_period;
  if (count < 1 || per < 1 || static_cast<long>(states.bodies.size()) != n || per % n != 0 ||
      count != per * res.m)
    throw InvalidInput("verify_choreography: inconsistent sampling");

  ChoreographyReport rep;
  const Mat& qn = path.points;
  rep.closure = (qn.col(count) - qn.col(0)).norm();

  for (int j = 1; j <= n; ++j) {
    const Mat& qj = states.bodies[j - 1];
    const long shift = static_cast<long>(j) * res.k_tilde * (per / n);
    for (long i = 0; i < count; ++i)
      rep.same_path = std::max(rep.same_path, (qj.col(i) - qn.col(wrap(i + shift, count))).norm());
  }

  const double turn = -2.0 * std::numbers::pi * res.ell / res.m;
  for (long i = 0; i < count; ++i) {
    const Eigen::Vector2d back = qn.col(wrap(i - per, count)).head<2>();
    rep.rotation = std::max(rep.rotation, (back - rotate(turn, qn.col(i).head<2>())).norm());
  }

  const int step = n / res.d;
  const double zeta = 2.0 * std::numbers::pi / n;
  for (int j = 1; j <= n; ++j) {
    const Mat& a = states.bodies[j - 1];
    const Mat& b = states.bodies[(j - 1 + step) % n];
    for (long i = 0; i < count; ++i) {
      const Eigen::Vector2d p = rotate(step * zeta, a.col(i).head<2>());
      rep.grouping = std::max({rep.grouping, (b.col(i).head<2>() - p).norm(), std::abs(b(2, i) - a(2, i))});
    }
  }

  const Eigen::Vector2d centroid = qn.leftCols(count).topRows<2>().rowwise().mean();
  std::vector<double> angles(count + 1);
  for (long i = 0; i <= count; ++i) angles[i] = std::atan2(qn(1, i) - centroid.y(), qn(0, i) - centroid.x());
  rep.winding_raw = unwrapped_turns(angles);
  rep.winding = static_cast<int>(std::lround(rep.winding_raw));
  return rep;
}

KnotFit knot_type(const ChoreographyPath& path) {
  const Mat& p = path.points;
  const long count = p.cols();
  if (count < 8) throw InvalidInput("knot_type: too few samples");
  const Vec rho = p.topRows<2>().colwise().norm().transpose();
  const Vec z = p.row(2).transpose();
  const double scale = std::max(1.0, rho.maxCoeff());
  if (z.maxCoeff() - z.minCoeff() < 1e-8 * scale) throw NotToroidal("knot_type: planar path, zero minor radius");

  // algebraic circle fit in the (rho, z) half-plane
  Mat a(count, 3);
  Vec rhs(count);
  for (long i = 0; i < count; ++i) {
    a.row(i) << rho[i], z[i], 1.0;
    rhs[i] = -(rho[i] * rho[i] + z[i] * z[i]);
  }
  const Eigen::Vector3d sol = a.colPivHouseholderQr().solve(rhs);
  KnotFit fit;
  fit.major_radius = -sol[0] / 2.0;
  fit.center_z = -sol[1] / 2.0;
  const double r2 = fit.major_radius * fit.major_radius + fit.center_z * fit.center_z - sol[2];
  if (!(r2 > 0.0)) throw NotToroidal("knot_type: no torus fits the path");
  fit.minor_radius = std::sqrt(r2);
  for (long i = 0; i < count; ++i)
    fit.deviation = std::max(fit.deviation, std::abs(std::hypot(rho[i] - fit.major_radius, z[i] - fit.center_z) -
                                                     fit.minor_radius));
  if (fit.deviation > 0.2 * fit.minor_radius) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "knot_type: path deviates %.3g from a torus of minor radius %.3g", fit.deviation,
                  fit.minor_radius);
    throw NotToroidal(buf);
  }
  std::vector<double> lon(count), mer(count);
  for (long i = 0; i < count; ++i) {
    lon[i] = std::atan2(p(1, i), p(0, i));
    mer[i] = std::atan2(z[i] - fit.center_z, rho[i] - fit.major_radius);
  }
  fit.longitudinal_turns = unwrapped_turns(lon);
  fit.meridional_turns = unwrapped_turns(mer);
  fit.ell = static_cast<int>(std::lround(std::abs(fit.longitudinal_turns)));
  fit.m = static_cast<int>(std::lround(std::abs(fit.meridional_turns)));
  return fit;
}

void write_choreography(const std::string& file, const ChoreographyPath& path, const ChoreographyReport& report,
                        const SystemConfig& config, const KnotFit* knot) {
  FILE* f = std::fopen(file.c_str(), "w");
  if (!f) throw Error("cannot write " + file);
  const Resonance& r = path.resonance;
  std::fprintf(f, "# choreo-path 1\n");
  std::fprintf(f, "# n %d mu %.17g k %d ell %d m %d k_tilde %d d %d\n", config.n, config.mu, r.k, r.ell, r.m,
               r.k_tilde, r.d);
  std::fprintf(f, "# period %.17g choreography_period %.17g\n", r.period, r.choreography_period());
  if (!path.source_id.empty()) std::fprintf(f, "# source %s\n", path.source_id.c_str());
  std::fprintf(f, "# closure %.17g same_path %.17g rotation %.17g grouping %.17g winding %d\n", report.closure,
               report.same_path, report.rotation, report.grouping, report.winding);
  if (knot)
    std::fprintf(f, "# knot %d %d major_radius %.17g minor_radius %.17g deviation %.17g\n", knot->ell, knot->m,
                 knot->major_radius, knot->minor_radius, knot->deviation);
  std::fprintf(f, "# columns t x y z\n");
  for (long i = 0; i < path.points.cols(); ++i)
    std::fprintf(f, "%.17g %.17g %.17g %.17g\n", path.times[i], path.points(0, i), path.points(1, i),
                 path.points(2, i));
  if (std::fclose(f) != 0) throw Error("cannot write " + file);
}

}  // namespace choreo
