#include "choreo/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "choreo/errors.hpp"

namespace choreo {

using cd = std::complex<double>;

double ModeRecord::period() const { return 2.0 * std::numbers::pi / frequency; }

Mat equilibrium_jacobian(const SystemConfig& config) {
  return field_jacobian(polygon_equilibrium(config), config);
}

Eigen::VectorXcd equilibrium_eigenvalues(const SystemConfig& config) {
  Eigen::EigenSolver<Mat> es(equilibrium_jacobian(config), false);
  return es.eigenvalues();
}

double max_oscillatory_real_part(const SystemConfig& config) {
  const Eigen::VectorXcd eig = equilibrium_eigenvalues(config);
  double worst = 0.0;
  const double w = config.frame_freq;
  for (int i = 0; i < eig.size(); ++i) {
    const double im = std::abs(eig[i].imag());
    if (im <= 1e-6) continue;
    // the centre-of-mass Jordan block at the frame frequency splits at the
    // square root of round-off; it is not an oscillation of the ring
    if (std::abs(im - w) <= kClusterTolerance * std::max(1.0, w)) continue;
    worst = std::max(worst, std::abs(eig[i].real()));
  }
  return worst;
}

namespace {

int cluster_size(const Eigen::VectorXcd& eig, cd lambda) {
  int count = 0;
  const double scale = std::max(1.0, std::abs(lambda));
  for (int i = 0; i < eig.size(); ++i)
    if (std::abs(eig[i] - lambda) <= kClusterTolerance * scale) ++count;
  return count;
}

// Fixes the free complex phase of an eigenvector so that the real ansatz is
// reversible in time: x of the reference body even, y odd.
void normalize_planar(Eigen::VectorXcd& v, const SystemConfig& config) {
  v *= std::sqrt(2.0) / v.norm();
  const int b = config.ring_index(config.n);
  const cd xi = v[3 * b];
  const cd eta = v[3 * b + 1];
  cd rot;
  if (std::abs(xi) > 1e-8) {
    rot = std::conj(xi) / std::abs(xi);
  } else {
    // eta * rot should be i * positive
    rot = cd(0.0, 1.0) * std::conj(eta) / std::abs(eta);
  }
  v *= rot;
}

}  // namespace

std::pair<int, double> classify_wave_number(const Eigen::VectorXcd& v, const SystemConfig& config,
                                            FamilyType family) {
  const int n = config.n;
  const double zeta = config.zeta;
  std::vector<double> energy(n, 0.0);
  double total = 0.0;
  for (int p = 0; p < n; ++p) {
    cd a_hat = 0.0, c_hat = 0.0, z_hat = 0.0;
    for (int j = 1; j <= n; ++j) {
      const int b = config.ring_index(j);
      const cd xi = v[3 * b], eta = v[3 * b + 1], zz = v[3 * b + 2];
      const cd phase = std::polar(1.0, -j * p * zeta);
      if (family == FamilyType::Vertical) {
        z_hat += zz * phase;
      } else {
        a_hat += (xi + cd(0, 1) * eta) * std::polar(1.0, -j * zeta) * phase;
        c_hat += (xi - cd(0, 1) * eta) * std::polar(1.0, j * zeta) * phase;
      }
    }
    energy[p] = std::norm(a_hat) + std::norm(c_hat) + std::norm(z_hat);
    total += energy[p];
  }
  if (!(total > 0.0)) return {n, 0.0};
  const int best = static_cast<int>(std::max_element(energy.begin(), energy.end()) - energy.begin());
  return {best == 0 ? n : best, energy[best] / total};
}

std::vector<ModeRecord> vertical_modes(const SystemConfig& config) {
  const int n = config.n;
  const int dim = config.dim();
  const Eigen::VectorXcd eig = equilibrium_eigenvalues(config);
  std::vector<ModeRecord> out;
  const int kmax = config.has_central_body() ? n : n - 1;
  for (int k = 1; k <= kmax; ++k) {
    ModeRecord r;
    r.family = FamilyType::Vertical;
    r.wave_number = k;
    r.frequency = (k == n) ? std::sqrt(config.mu + n) : std::sqrt(config.mu + s_coefficient(n, k));
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim);
    const int vo = 3 * config.bodies();
    for (int j = 1; j <= n; ++j) {
      const int b = config.ring_index(j);
      const cd z = (k == n) ? cd(1.0) : std::polar(1.0, j * k * config.zeta);
      v[3 * b + 2] = z;
      v[vo + 3 * b + 2] = cd(0.0, r.frequency) * z;
    }
    if (k == n) {
      const cd z0 = -n / config.mu;
      v[2] = z0;
      v[vo + 2] = cd(0.0, r.frequency) * z0;
    }
    v *= std::sqrt(2.0) / v.norm();
    r.eigenvector = v;
    r.fourier_purity = classify_wave_number(v, config, FamilyType::Vertical).second;
    r.multiplicity = cluster_size(eig, cd(0.0, r.frequency));
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ModeRecord> planar_modes(const SystemConfig& config) {
  const int bodies = config.bodies();
  const int dim = config.dim();
  const int vo = 3 * bodies;
  // planar coordinates: x, y of every position, then of every velocity
  std::vector<int> idx;
  for (int b = 0; b < bodies; ++b) idx.insert(idx.end(), {3 * b, 3 * b + 1});
  for (int b = 0; b < bodies; ++b) idx.insert(idx.end(), {vo + 3 * b, vo + 3 * b + 1});
  const int p = static_cast<int>(idx.size());
  const Mat full = equilibrium_jacobian(config);
  Mat planar(p, p);
  for (int r = 0; r < p; ++r)
    for (int c = 0; c < p; ++c) planar(r, c) = full(idx[r], idx[c]);

  Eigen::EigenSolver<Mat> es(planar);
  const Eigen::VectorXcd eig_full = equilibrium_eigenvalues(config);
  const Eigen::VectorXcd& ev = es.eigenvalues();

  std::vector<ModeRecord> out;
  std::vector<cd> taken;
  for (int i = 0; i < ev.size(); ++i) {
    const cd lam = ev[i];
    const double freq = lam.imag();
    if (freq <= 1e-6) continue;
    if (std::abs(lam.real()) > kClusterTolerance * std::max(1.0, freq)) continue;
    bool dup = false;
    for (const cd& t : taken)
      if (std::abs(t - lam) <= kClusterTolerance * std::max(1.0, freq)) dup = true;
    if (dup) continue;
    taken.push_back(lam);

    const int mult = cluster_size(eig_full, cd(0.0, freq));
    // Centre-of-mass translation seen from the rotating frame: a defective
    // pair at exactly the frame frequency. It carries no family.
    if (mult > 1 && std::abs(freq - config.frame_freq) <= kClusterTolerance * config.frame_freq) continue;

    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim);
    for (int r = 0; r < p; ++r) v[idx[r]] = es.eigenvectors()(r, i);
    normalize_planar(v, config);

    ModeRecord rec;
    rec.family = FamilyType::Planar;
    rec.frequency = freq;
    rec.eigenvector = v;
    rec.multiplicity = mult;
    auto [k, purity] = classify_wave_number(v, config, FamilyType::Planar);
    rec.wave_number = k;
    rec.fourier_purity = purity;
    if (mult == 1 && purity < kPurityThreshold)
      throw AmbiguousClassification("planar mode at frequency " + std::to_string(freq) +
                                    " has Fourier purity " + std::to_string(purity));
    out.push_back(std::move(rec));
  }
  std::sort(out.begin(), out.end(), [](const ModeRecord& a, const ModeRecord& b) {
    if (a.wave_number != b.wave_number) return a.wave_number < b.wave_number;
    return a.frequency > b.frequency;
  });
  return out;
}

OrbitSolution lyapunov_predictor(const ModeRecord& mode, double amplitude, const SystemConfig& config,
                                 const Mesh& mesh) {
  if (!(mode.frequency > 0.0)) throw InvalidInput("lyapunov_predictor: mode frequency must be positive");
  if (mode.eigenvector.size() != config.dim()) throw InvalidInput("lyapunov_predictor: eigenvector size mismatch");
  const Vec eq = polygon_equilibrium(config);
  OrbitSolution o = OrbitSolution::constant(config, eq, 2.0 * std::numbers::pi / mode.frequency, mesh);
  o.wave_number = mode.wave_number;
  o.family = mode.family;
  for (int g = 0; g < mesh.node_count(); ++g) {
    const cd e = std::polar(1.0, 2.0 * std::numbers::pi * mesh.node_time(g));
    o.nodes.col(g) += amplitude * (e * mode.eigenvector).real();
  }
  return o;
}

}  // namespace choreo
