#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "choreo/collocation.hpp"
#include "choreo/nbody.hpp"

namespace choreo {

/// A purely imaginary eigenvalue pair +-i*frequency of the equilibrium,
/// labelled by the discrete-Fourier wave number of its eigenvector.
///
/// The eigenvector v (complex, full state dimension) generates the periodic
/// ansatz Re(exp(i*frequency*t) v). It is scaled so that |v| = sqrt(2), i.e. the
/// ansatz has unit mean-square norm over one period, and its phase is fixed so
/// that the ansatz is reversible about t = 0.
struct ModeRecord {
  double frequency = 0.0;
  int wave_number = 0;
  FamilyType family = FamilyType::Planar;
  Eigen::VectorXcd eigenvector;
  double fourier_purity = 0.0;  // energy fraction in the dominant wave number
  int multiplicity = 1;         // eigenvalues within the cluster tolerance
  bool continuable() const { return multiplicity == 1; }
  double period() const;
};

/// Eigenvalues closer than this (relative) are treated as one cluster.
/// Defective clusters split at the sqrt(machine epsilon) level in floating
/// point, so this is looser than the 1e-8 nominal threshold.
inline constexpr double kClusterTolerance = 1e-6;
inline constexpr double kPurityThreshold = 0.99;

/// Jacobian of the unaugmented field at the relative equilibrium.
Mat equilibrium_jacobian(const SystemConfig& config);

/// All eigenvalues of the equilibrium Jacobian.
Eigen::VectorXcd equilibrium_eigenvalues(const SystemConfig& config);
/// Largest |Re| among eigenvalues with nonzero imaginary part, leaving out the
/// centre-of-mass pair at the frame frequency; zero when the equilibrium is
/// linearly stable.
double max_oscillatory_real_part(const SystemConfig& config);
/// Dominant wave number (1..n) of the ring-body components of an eigenvector
/// and the energy fraction it carries.
std::pair<int, double> classify_wave_number(const Eigen::VectorXcd& eigenvector,
                                            const SystemConfig& config, FamilyType family);

/// Analytic vertical frequencies sqrt(mu + s_k), k = 1..n-1, and sqrt(mu + n)
/// for k = n when a central body is present.
std::vector<ModeRecord> vertical_modes(const SystemConfig& config);

/// Purely imaginary planar eigenvalues with positive imaginary part, sorted by
/// wave number, then by decreasing frequency. Throws AmbiguousClassification
/// for a simple eigenvalue whose eigenvector has purity below 0.99.
std::vector<ModeRecord> planar_modes(const SystemConfig& config);

/// Small-amplitude guess on the given mesh:
///   x(tau) = equilibrium + amplitude * Re(exp(2 pi i tau) v),  T = 2 pi / frequency,
/// unfolding parameters zero.
OrbitSolution lyapunov_predictor(const ModeRecord& mode, double amplitude, const SystemConfig& config,
                                 const Mesh& mesh);

}  // namespace choreo
