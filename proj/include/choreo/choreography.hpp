#pragma once

#include <string>
#include <utility>
#include <vector>

#include "choreo/collocation.hpp"

namespace choreo {

/// An l:m resonance of a family with wave number k: period (2 pi / frame_freq)(l/m)
/// with k l - m divisible by n.
struct Resonance {
  int ell = 1;
  int m = 1;
  int k = 0;
  int n = 0;
  double period = 0.0;  // rotating-frame period T_{l:m}
  int r = 0;            // (k l - m) / n
  int k_tilde = 0;      // body time-shift index, in [0, n m)
  int d = 1;            // gcd(k, n)

  double choreography_period() const { return m * period; }
};

/// Frequency ratio (1/n)(k frame_freq / nu - 1) of the inertial-frame phase.
double omega_of(double nu, int k, const SystemConfig& config);

/// a^{-1} mod m in [0, m); 0 for m = 1. Throws NotCoprime.
int modular_inverse(int a, int m);

/// Builds the resonance record, checking coprimality and k l = m (mod n).
/// Throws NotCoprime, or NotChoreography with the number of distinct curves
/// n / gcd(n, k l - m) when the divisibility fails.
Resonance make_resonance(const SystemConfig& config, int k, int ell, int m);

/// All resonances with l, m <= lmax whose period lies in [lo, hi], by period.
std::vector<Resonance> enumerate_resonances(const SystemConfig& config, int k, double lo, double hi, int lmax);

/// Inertial-frame samples over one choreography period m T. Each body is a
/// 3 x (count + 1) matrix of positions at times t_i = i m T / count; the last
/// column closes the period.
struct InertialStates {
  std::vector<double> times;
  std::vector<Mat> bodies;  // ring bodies 1..n (central body omitted)
  int per_period = 0;       // samples per rotating-frame period T
};

struct ChoreographyPath {
  std::vector<double> times;
  Mat points;  // 3 x samples, path of body n
  Resonance resonance;
  std::string source_id;
};

/// Samples of every ring body, rotated into the inertial frame. The number of
/// samples per rotating period is rounded up to a multiple of 2n so that all
/// body shifts fall on the grid. Throws PeriodMismatch unless the orbit period
/// is within 1e-8 T_res.
InertialStates inertial_states(const OrbitSolution& orbit, const Resonance& res, int samples_per_period);
ChoreographyPath to_inertial(const OrbitSolution& orbit, const Resonance& res, int samples_per_period,
                             const std::string& source_id = "");
ChoreographyPath path_of(const InertialStates& states, const Resonance& res, const std::string& source_id = "");

struct ChoreographyReport {
  double closure = 0.0;      // |q_n(m T) - q_n(0)|
  double same_path = 0.0;    // max_j |q_j(t) - q_n(t + j k_tilde T / n)|
  double rotation = 0.0;     // max |q_n(t - T) - R(-2 pi l / m) q_n(t)|, planar
  double grouping = 0.0;     // max |q_{j+n/d}(t) - R((n/d) zeta) q_j(t)|
  double winding_raw = 0.0;  // signed turns of q_n about the path centroid
  int winding = 0;

  double max_residual() const;
};

ChoreographyReport verify_choreography(const ChoreographyPath& path, const InertialStates& states);

struct KnotFit {
  int ell = 0;  // turns around the z axis
  int m = 0;    // turns around the tube
  double major_radius = 0.0;
  double minor_radius = 0.0;
  double center_z = 0.0;
  double deviation = 0.0;  // max distance from the fitted torus surface
  double longitudinal_turns = 0.0;
  double meridional_turns = 0.0;
};

/// Fits a torus of revolution about the z axis and counts the windings of the
/// path along its two cycles. Throws NotToroidal when the path is planar or
/// strays more than 20% of the minor radius from the fitted torus.
KnotFit knot_type(const ChoreographyPath& path);

/// Plain-text export: header comment lines followed by "t x y z" rows.
void write_choreography(const std::string& file, const ChoreographyPath& path, const ChoreographyReport& report,
                        const SystemConfig& config, const KnotFit* knot = nullptr);

}  // namespace choreo
