#include "choreo/collocation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>

#include "choreo/errors.hpp"

namespace choreo {

Mesh Mesh::uniform(int intervals, int degree) {
  if (intervals < 1) throw InvalidInput("mesh needs at least one interval");
  Mesh m;
  m.degree = degree;
  m.breakpoints.resize(intervals + 1);
  for (int i = 0; i <= intervals; ++i) m.breakpoints[i] = static_cast<double>(i) / intervals;
  m.breakpoints.back() = 1.0;
  m.validate();
  return m;
}

double Mesh::node_time(int g) const {
  const int i = std::min(g / degree, intervals() - 1);
  const int l = g - i * degree;
  return breakpoints[i] + width(i) * l / degree;
}

int Mesh::locate(double t) const {
  auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
  int i = static_cast<int>(it - breakpoints.begin()) - 1;
  return std::clamp(i, 0, intervals() - 1);
}

void Mesh::validate() const {
  if (degree < 2 || degree > 7) throw InvalidInput("mesh degree must lie in 2..7");
  if (breakpoints.size() < 2) throw InvalidInput("mesh needs at least one interval");
  if (breakpoints.front() != 0.0 || breakpoints.back() != 1.0)
    throw InvalidInput("mesh must span [0, 1]");
  for (size_t i = 1; i < breakpoints.size(); ++i)
    if (!(breakpoints[i] > breakpoints[i - 1])) throw InvalidInput("mesh breakpoints must increase strictly");
}

void lagrange_basis(int degree, double z, Vec& values, Vec* derivatives) {
  const int p = degree + 1;
  values.resize(p);
  if (derivatives) derivatives->setZero(p);
  auto node = [degree](int l) { return static_cast<double>(l) / degree; };
  for (int l = 0; l < p; ++l) {
    double v = 1.0;
    for (int k = 0; k < p; ++k)
      if (k != l) v *= (z - node(k)) / (node(l) - node(k));
    values[l] = v;
    if (derivatives) {
      double d = 0.0;
      for (int j = 0; j < p; ++j) {
        if (j == l) continue;
        double term = 1.0 / (node(l) - node(j));
        for (int k = 0; k < p; ++k)
          if (k != l && k != j) term *= (z - node(k)) / (node(l) - node(k));
        d += term;
      }
      (*derivatives)[l] = d;
    }
  }
}

namespace {

// Golub-Welsch on [0, 1].
void gauss_legendre(int m, Vec& points, Vec& weights) {
  Mat jac = Mat::Zero(m, m);
  for (int k = 1; k < m; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    jac(k, k - 1) = b;
    jac(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(jac);
  points.resize(m);
  weights.resize(m);
  for (int k = 0; k < m; ++k) {
    points[k] = 0.5 * (es.eigenvalues()[k] + 1.0);
    const double v0 = es.eigenvectors()(0, k);
    weights[k] = v0 * v0;  // 2 v0^2 on [-1, 1], halved
  }
}

CollocationRule make_rule(int degree) {
  CollocationRule r;
  r.degree = degree;
  gauss_legendre(degree, r.gauss_points, r.gauss_weights);
  r.basis.resize(degree, degree + 1);
  r.basis_deriv.resize(degree, degree + 1);
  Vec v, d;
  for (int c = 0; c < degree; ++c) {
    lagrange_basis(degree, r.gauss_points[c], v, &d);
    r.basis.row(c) = v.transpose();
    r.basis_deriv.row(c) = d.transpose();
  }
  r.node_weights = r.basis.transpose() * r.gauss_weights;
  return r;
}

}  // namespace

const CollocationRule& CollocationRule::get(int degree) {
  static std::mutex mtx;
  static std::map<int, CollocationRule> cache;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(degree);
  if (it == cache.end()) it = cache.emplace(degree, make_rule(degree)).first;
  return it->second;
}

double OrbitSolution::frequency() const { return 2.0 * std::numbers::pi / period; }

Vec OrbitSolution::pack() const {
  const int d = config.dim();
  const int g = mesh.node_count();
  Vec x(d * g + 4);
  x.head(d * g) = Eigen::Map<const Vec>(nodes.data(), d * g);
  x[d * g] = period;
  x.tail<3>() = lambdas;
  return x;
}

void OrbitSolution::unpack(const Vec& flat) {
  const int d = config.dim();
  const int g = mesh.node_count();
  if (flat.size() != d * g + 4) throw InvalidInput("unpack: size mismatch");
  nodes = Eigen::Map<const Mat>(flat.data(), d, g);
  period = flat[d * g];
  lambdas = flat.tail<3>();
}

OrbitSolution OrbitSolution::constant(const SystemConfig& config, const Vec& state, double period,
                                      const Mesh& mesh) {
  OrbitSolution o;
  o.config = config;
  o.mesh = mesh;
  o.nodes = state.replicate(1, mesh.node_count());
  o.period = period;
  return o;
}

namespace {

double reduce_time(double t) {
  if (t >= 0.0 && t <= 1.0) return t;
  double r = t - std::floor(t);
  return r;
}

}  // namespace

Vec evaluate_orbit(const OrbitSolution& orbit, double t) {
  t = reduce_time(t);
  const Mesh& m = orbit.mesh;
  const int i = m.locate(t);
  const double z = (t - m.breakpoints[i]) / m.width(i);
  Vec v;
  lagrange_basis(m.degree, z, v);
  return orbit.nodes.middleCols(i * m.degree, m.degree + 1) * v;
}

Vec evaluate_orbit_derivative(const OrbitSolution& orbit, double t) {
  t = reduce_time(t);
  const Mesh& m = orbit.mesh;
  const int i = m.locate(t);
  const double z = (t - m.breakpoints[i]) / m.width(i);
  Vec v, d;
  lagrange_basis(m.degree, z, v, &d);
  return orbit.nodes.middleCols(i * m.degree, m.degree + 1) * d / m.width(i);
}

double orbit_min_distance(const OrbitSolution& orbit) {
  double best = std::numeric_limits<double>::infinity();
  for (int g = 0; g < orbit.nodes.cols(); ++g)
    best = std::min(best, min_pair_distance(orbit.nodes.col(g), orbit.config));
  return best;
}

Vec inner_product_weights(const Mesh& mesh, int dim) {
  const auto& rule = CollocationRule::get(mesh.degree);
  const int g = mesh.node_count();
  Vec node_w = Vec::Zero(g);
  for (int i = 0; i < mesh.intervals(); ++i)
    for (int l = 0; l <= mesh.degree; ++l) node_w[i * mesh.degree + l] += mesh.width(i) * rule.node_weights[l];
  Vec w(dim * g + 4);
  for (int k = 0; k < g; ++k) w.segment(k * dim, dim).setConstant(node_w[k]);
  w.tail<4>().setOnes();
  return w;
}

double weighted_dot(const Vec& a, const Vec& b, const Vec& weights) {
  return (a.array() * b.array() * weights.array()).sum();
}

double weighted_norm(const Vec& a, const Vec& weights) { return std::sqrt(weighted_dot(a, a, weights)); }

// ---------------------------------------------------------------------------

CollocationSystem::CollocationSystem(const SystemConfig& config, const Mesh& mesh,
                                     const PhaseConstraints& constraints, const ArclengthConstraint& arclength)
    : config_(config),
      mesh_(mesh),
      rule_(&CollocationRule::get(mesh.degree)),
      arclength_(arclength),
      dim_(config.dim()),
      nodes_(mesh.node_count()) {
  mesh_.validate();
  size_ = dim_ * nodes_ + 4;
  if (arclength_.anchor.size() != size_ || arclength_.direction.size() != size_)
    throw InvalidInput("arclength constraint does not match the mesh");
  weights_ = inner_product_weights(mesh_, dim_);
  ref_body_ = config_.ring_index(config_.n);
  const int m = mesh_.degree;
  const int n_int = mesh_.intervals();
  ref_pos_.resize(3, n_int * m);
  ref_vel_.resize(3, n_int * m);
  for (int i = 0; i < n_int; ++i) {
    for (int c = 0; c < m; ++c) {
      const double t = mesh_.breakpoints[i] + mesh_.width(i) * rule_->gauss_points[c];
      const Vec x = evaluate_orbit(constraints.reference, t);
      const Vec dx = evaluate_orbit_derivative(constraints.reference, t);
      ref_pos_.col(i * m + c) = x.segment<3>(3 * ref_body_);
      ref_vel_.col(i * m + c) = dx.segment<3>(3 * ref_body_);
    }
  }
}

void CollocationSystem::collocation_point(const Vec& x, int i, int c, Vec& value, Vec& deriv) const {
  const int m = mesh_.degree;
  const double h = mesh_.width(i);
  value = Vec::Zero(dim_);
  deriv = Vec::Zero(dim_);
  for (int l = 0; l <= m; ++l) {
    const auto u = x.segment((i * m + l) * dim_, dim_);
    value += rule_->basis(c, l) * u;
    deriv += rule_->basis_deriv(c, l) * u;
  }
  deriv /= h;
}

Vec CollocationSystem::border_values(const Vec& x) const {
  const int m = mesh_.degree;
  Vec b = Vec::Zero(4);
  Vec val, der;
  for (int i = 0; i < mesh_.intervals(); ++i) {
    const double h = mesh_.width(i);
    for (int c = 0; c < m; ++c) {
      collocation_point(x, i, c, val, der);
      const double w = h * rule_->gauss_weights[c];
      const Eigen::Vector3d p = val.segment<3>(3 * ref_body_);
      b[0] += w * p.y();
      b[1] += w * p.z();
      b[2] += w * (p - ref_pos_.col(i * m + c)).dot(ref_vel_.col(i * m + c));
    }
  }
  b[3] = weighted_dot(arclength_.direction, x - arclength_.anchor, weights_) - arclength_.step;
  return b;
}

Mat CollocationSystem::border_rows() const {
  const int m = mesh_.degree;
  Mat b = Mat::Zero(4, size_);
  for (int i = 0; i < mesh_.intervals(); ++i) {
    const double h = mesh_.width(i);
    for (int c = 0; c < m; ++c) {
      const double w = h * rule_->gauss_weights[c];
      for (int l = 0; l <= m; ++l) {
        const int col = (i * m + l) * dim_ + 3 * ref_body_;
        const double coef = w * rule_->basis(c, l);
        b(0, col + 1) += coef;
        b(1, col + 2) += coef;
        for (int a = 0; a < 3; ++a) b(2, col + a) += coef * ref_vel_(a, i * m + c);
      }
    }
  }
  b.row(3) = (weights_.array() * arclength_.direction.array()).matrix().transpose();
  return b;
}

Vec CollocationSystem::residual(const Vec& x) const {
  const int m = mesh_.degree;
  const double period = x[dim_ * nodes_];
  const UnfoldingParams lam = x.tail<3>();
  Vec r(size_);
  Vec val, der;
  for (int i = 0; i < mesh_.intervals(); ++i) {
    for (int c = 0; c < m; ++c) {
      collocation_point(x, i, c, val, der);
      r.segment((i * m + c) * dim_, dim_) = der - period * vector_field(val, config_, lam);
    }
  }
  const int per = mesh_.intervals() * m * dim_;
  r.segment(per, dim_) = x.segment((nodes_ - 1) * dim_, dim_) - x.segment(0, dim_);
  r.tail<4>() = border_values(x);
  return r;
}

double CollocationSystem::derivative_scale(const Vec& x) const {
  double peak = 0.0;
  Vec val, der;
  for (int i = 0; i < mesh_.intervals(); ++i)
    for (int c = 0; c < mesh_.degree; ++c) {
      collocation_point(x, i, c, val, der);
      peak = std::max(peak, der.lpNorm<Eigen::Infinity>());
    }
  return peak;
}

Vec assemble_residual(const OrbitSolution& candidate, const PhaseConstraints& constraints) {
  const Vec x = candidate.pack();
  ArclengthConstraint dummy{x, Vec::Zero(x.size()), 0.0};
  CollocationSystem sys(candidate.config, candidate.mesh, constraints, dummy);
  return sys.residual(x).head(x.size() - 1);
}

namespace {

// Local block of one interval: rows = m*dim collocation equations,
// columns = (m+1)*dim node values followed by T, l1, l2, l3.
struct LocalBlock {
  Mat nodes;
  Mat params;
};

}  // namespace

Mat CollocationSystem::dense_jacobian(const Vec& x) const {
  const int m = mesh_.degree;
  const double period = x[dim_ * nodes_];
  const UnfoldingParams lam = x.tail<3>();
  Mat jac = Mat::Zero(size_, size_);
  Vec val, der;
  for (int i = 0; i < mesh_.intervals(); ++i) {
    const double h = mesh_.width(i);
    for (int c = 0; c < m; ++c) {
      collocation_point(x, i, c, val, der);
      const Mat a = field_jacobian(val, config_, lam);
      const Vec f = vector_field(val, config_, lam);
      const auto uf = unfolding_fields(val, config_);
      const int row = (i * m + c) * dim_;
      for (int l = 0; l <= m; ++l) {
        auto blk = jac.block(row, (i * m + l) * dim_, dim_, dim_);
        blk += -period * rule_->basis(c, l) * a;
        blk.diagonal().array() += rule_->basis_deriv(c, l) / h;
      }
      jac.block(row, dim_ * nodes_, dim_, 1) = -f;
      for (int k = 0; k < 3; ++k) jac.block(row, dim_ * nodes_ + 1 + k, dim_, 1) = -period * uf[k];
    }
  }
  const int per = mesh_.intervals() * m * dim_;
  for (int a = 0; a < dim_; ++a) {
    jac(per + a, (nodes_ - 1) * dim_ + a) = 1.0;
    jac(per + a, a) = -1.0;
  }
  jac.bottomRows(4) = border_rows();
  return jac;
}

std::unique_ptr<BorderedFactorization> CollocationSystem::factorize(const Vec& x) const {
  const int m = mesh_.degree;
  const int n_int = mesh_.intervals();
  const int d = dim_;
  const double period = x[d * nodes_];
  const UnfoldingParams lam = x.tail<3>();
  const int n_inner = (m - 1) * d;
  const int red_size = (n_int + 1) * d + 4;

  auto fac = std::make_unique<BorderedFactorization>();
  fac->dim_ = d;
  fac->degree_ = m;
  fac->intervals_ = n_int;
  fac->blocks_.resize(n_int);

  // Border rows, reduced in place as interiors are eliminated.
  Mat border = border_rows();
  // Condensed rows of each interval: d x (2d + 4).
  std::vector<Mat> condensed(n_int);

  int sign = 1;
  double logdet = 0.0;
  Vec val, der;
  for (int i = 0; i < n_int; ++i) {
    const double h = mesh_.width(i);
    Mat loc = Mat::Zero(m * d, (m + 1) * d);
    Mat par = Mat::Zero(m * d, 4);
    for (int c = 0; c < m; ++c) {
      collocation_point(x, i, c, val, der);
      const Mat a = field_jacobian(val, config_, lam);
      const Vec f = vector_field(val, config_, lam);
      const auto uf = unfolding_fields(val, config_);
      for (int l = 0; l <= m; ++l) {
        auto blk = loc.block(c * d, l * d, d, d);
        blk = -period * rule_->basis(c, l) * a;
        blk.diagonal().array() += rule_->basis_deriv(c, l) / h;
      }
      par.block(c * d, 0, d, 1) = -f;
      for (int k = 0; k < 3; ++k) par.block(c * d, 1 + k, d, 1) = -period * uf[k];
    }
    Mat rest(m * d, 2 * d + 4);
    rest.leftCols(d) = loc.leftCols(d);
    rest.middleCols(d, d) = loc.rightCols(d);
    rest.rightCols(4) = par;

    auto& blk = fac->blocks_[i];
    blk.qr.compute(loc.middleCols(d, n_inner));
    const Mat qt_rest = blk.qr.householderQ().adjoint() * rest;
    blk.top_rest = qt_rest.topRows(n_inner);
    condensed[i] = qt_rest.bottomRows(d);

    const auto& qr_mat = blk.qr.matrixQR();
    for (int k = 0; k < n_inner; ++k) {
      const double r = qr_mat(k, k);
      if (r == 0.0 || !std::isfinite(r)) throw SingularJacobian("singular interior collocation block");
      if (r < 0) sign = -sign;
      logdet += std::log(std::abs(r));
    }
    const auto& tau = blk.qr.hCoeffs();
    for (int k = 0; k < tau.size(); ++k)
      if (tau[k] != 0.0) sign = -sign;

    // Eliminate the interior columns from the border rows.
    const Mat e = border.middleCols(i * m * d + d, n_inner);
    const auto r_upper = qr_mat.topLeftCorner(n_inner, n_inner).triangularView<Eigen::Upper>();
    blk.border_mult = r_upper.transpose().solve(e.transpose()).transpose();
    border.middleCols(i * m * d, d) -= blk.border_mult * blk.top_rest.leftCols(d);
    border.middleCols((i + 1) * m * d, d) -= blk.border_mult * blk.top_rest.middleCols(d, d);
    border.rightCols(4) -= blk.border_mult * blk.top_rest.rightCols(4);
  }

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(n_int * d * (2 * d + 4) + 2 * d + 4 * red_size);
  auto add = [&trip](int r, int c, double v) {
    if (v != 0.0) trip.emplace_back(r, c, v);
  };
  const int pcol = (n_int + 1) * d;
  for (int i = 0; i < n_int; ++i) {
    const Mat& cm = condensed[i];
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) {
        add(i * d + r, i * d + c, cm(r, c));
        add(i * d + r, (i + 1) * d + c, cm(r, d + c));
      }
      for (int k = 0; k < 4; ++k) add(i * d + r, pcol + k, cm(r, 2 * d + k));
    }
  }
  for (int a = 0; a < d; ++a) {
    add(n_int * d + a, n_int * d + a, 1.0);
    add(n_int * d + a, a, -1.0);
  }
  for (int r = 0; r < 4; ++r) {
    for (int b = 0; b <= n_int; ++b)
      for (int a = 0; a < d; ++a) add(pcol + r, b * d + a, border(r, b * m * d + a));
    for (int k = 0; k < 4; ++k) add(pcol + r, pcol + k, border(r, d * nodes_ + k));
  }
  Eigen::SparseMatrix<double> red(red_size, red_size);
  red.setFromTriplets(trip.begin(), trip.end());
  red.makeCompressed();
  fac->lu_.compute(red);
  if (fac->lu_.info() != Eigen::Success) throw SingularJacobian("reduced collocation system is singular");
  const double lad = fac->lu_.logAbsDeterminant();
  if (!std::isfinite(lad)) throw SingularJacobian("reduced collocation system is singular");
  sign *= static_cast<int>(fac->lu_.signDeterminant());
  if (sign == 0) throw SingularJacobian("reduced collocation system is singular");
  fac->det_sign_ = sign;
  fac->log_abs_det_ = logdet + lad;
  return fac;
}

Vec BorderedFactorization::solve(const Vec& rhs) const {
  const int d = dim_;
  const int m = degree_;
  const int n_int = intervals_;
  const int n_inner = (m - 1) * d;
  const int nodes = n_int * m + 1;
  const int full = d * nodes + 4;
  if (rhs.size() != full) throw InvalidInput("bordered solve: size mismatch");

  const int red_size = (n_int + 1) * d + 4;
  Vec red = Vec::Zero(red_size);
  std::vector<Vec> tops(n_int);
  Vec bvec = rhs.tail<4>();
  for (int i = 0; i < n_int; ++i) {
    const Vec q = blocks_[i].qr.householderQ().adjoint() * rhs.segment(i * m * d, m * d);
    tops[i] = q.head(n_inner);
    red.segment(i * d, d) = q.tail(d);
    bvec -= blocks_[i].border_mult * tops[i];
  }
  red.segment(n_int * d, d) = rhs.segment(n_int * m * d, d);
  red.tail<4>() = bvec;
  const Vec y = lu_.solve(red);

  Vec out(full);
  const Vec p = y.tail<4>();
  for (int b = 0; b <= n_int; ++b) out.segment(b * m * d, d) = y.segment(b * d, d);
  out.tail<4>() = p;
  for (int i = 0; i < n_int; ++i) {
    const auto& blk = blocks_[i];
    Vec known(2 * d + 4);
    known << y.segment(i * d, d), y.segment((i + 1) * d, d), p;
    Vec r = tops[i] - blk.top_rest * known;
    const auto r_upper = blk.qr.matrixQR().topLeftCorner(n_inner, n_inner).triangularView<Eigen::Upper>();
    out.segment(i * m * d + d, n_inner) = r_upper.solve(r);
  }
  return out;
}

// ---------------------------------------------------------------------------

NewtonResult newton_correct(const OrbitSolution& guess, const PhaseConstraints& constraints,
                            const ArclengthConstraint& arclength, const NewtonSettings& settings) {
  CollocationSystem sys(guess.config, guess.mesh, constraints, arclength);
  Vec x = guess.pack();
  Vec r = sys.residual(x);
  double rnorm = r.lpNorm<Eigen::Infinity>();
  if (!std::isfinite(rnorm)) throw NoConvergence("non-finite residual at the initial guess");
  double last = 0.0;
  for (int it = 1; it <= settings.max_iterations; ++it) {
    std::shared_ptr<const BorderedFactorization> fac = sys.factorize(x);
    // near close approaches the residual floor is set by round-off in T*f
    const bool stagnated = it > 1 && last < 1e-9 * std::max(1.0, x.lpNorm<Eigen::Infinity>()) &&
                           rnorm < settings.stagnation_tolerance * std::max(1.0, sys.derivative_scale(x));
    if (rnorm < settings.tolerance || stagnated) {
      NewtonResult res;
      res.orbit = guess;
      res.orbit.unpack(x);
      res.iterations = it;
      res.residual_norm = rnorm;
      res.last_correction = last;
      res.factorization = fac;
      return res;
    }
    const Vec dx = fac->solve(-r);
    if (!dx.allFinite()) throw SingularJacobian("non-finite Newton update");
    double alpha = 1.0;
    bool accepted = false;
    for (int damp = 0; damp < 8; ++damp, alpha *= 0.5) {
      const Vec trial = x + alpha * dx;
      try {
        const Vec rt = sys.residual(trial);
        const double tn = rt.lpNorm<Eigen::Infinity>();
        if (std::isfinite(tn) && tn < 10.0 * rnorm + 1e-12) {
          x = trial;
          r = rt;
          rnorm = tn;
          accepted = true;
          break;
        }
      } catch (const CollisionProximity&) {
        if (damp == 7) throw;
      }
    }
    if (!accepted) throw NoConvergence("Newton iteration diverged");
    last = alpha * dx.lpNorm<Eigen::Infinity>();
  }
  throw NoConvergence("Newton iteration did not converge in " + std::to_string(settings.max_iterations) +
                      " iterations (residual " + std::to_string(rnorm) + ")");
}

// ---------------------------------------------------------------------------

OrbitSolution remesh(const OrbitSolution& orbit, const Mesh& mesh) {
  mesh.validate();
  OrbitSolution out = orbit;
  out.mesh = mesh;
  out.nodes.resize(orbit.config.dim(), mesh.node_count());
  for (int g = 0; g < mesh.node_count(); ++g) out.nodes.col(g) = evaluate_orbit(orbit, mesh.node_time(g));
  return out;
}

Vec remesh_flat(const Vec& flat, const Mesh& from, const Mesh& to, int dim) {
  OrbitSolution tmp;
  tmp.config = SystemConfig();
  tmp.mesh = from;
  const int g = from.node_count();
  tmp.nodes = Eigen::Map<const Mat>(flat.data(), dim, g);
  Vec out(dim * to.node_count() + 4);
  for (int k = 0; k < to.node_count(); ++k) out.segment(k * dim, dim) = evaluate_orbit(tmp, to.node_time(k));
  out.tail<4>() = flat.tail<4>();
  return out;
}

Mesh adapted_mesh(const OrbitSolution& orbit, int target_intervals) {
  const Mesh& mesh = orbit.mesh;
  const int m = mesh.degree;
  const int n = mesh.intervals();
  if (target_intervals < 1) throw InvalidInput("adapt_mesh: target interval count must be positive");

  // m-th derivative of each interval polynomial (constant), from the m-th
  // forward difference of its equally spaced node values.
  std::vector<Vec> dm(n);
  std::vector<double> binom(m + 1);
  binom[0] = 1.0;
  for (int l = 1; l <= m; ++l) binom[l] = binom[l - 1] * (m - l + 1) / l;
  // differences at the round-off level of the node values carry no information
  const double noise = 16.0 * std::numeric_limits<double>::epsilon() * std::pow(2.0, m) *
                       std::max(1.0, orbit.nodes.cwiseAbs().maxCoeff());
  for (int i = 0; i < n; ++i) {
    Vec acc = Vec::Zero(orbit.nodes.rows());
    for (int l = 0; l <= m; ++l) acc += (((m - l) % 2) ? -1.0 : 1.0) * binom[l] * orbit.nodes.col(i * m + l);
    acc = (acc.array().abs() <= noise).select(0.0, acc);
    dm[i] = acc / std::pow(mesh.width(i) / m, m);
  }
  std::vector<double> phi(n);
  double peak = 0.0;
  for (int i = 0; i < n; ++i) {
    // equidistribute h |x^(m)|^(1/m); smoother than differencing once more
    phi[i] = std::pow(dm[i].lpNorm<Eigen::Infinity>(), 1.0 / m);
    peak = std::max(peak, phi[i]);
  }
  if (!(peak > 0.0) || !std::isfinite(peak)) return Mesh::uniform(target_intervals, m);
  for (auto& p : phi) p = std::max(p, 0.05 * peak);
  // smooth the density so the estimate is stable under repeated adaptation
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<double> sm(n);
    for (int i = 0; i < n; ++i) sm[i] = 0.25 * phi[(i + n - 1) % n] + 0.5 * phi[i] + 0.25 * phi[(i + 1) % n];
    phi.swap(sm);
  }

  std::vector<double> cum(n + 1, 0.0);
  for (int i = 0; i < n; ++i) cum[i + 1] = cum[i] + phi[i] * mesh.width(i);
  Mesh out;
  out.degree = m;
  out.breakpoints.assign(target_intervals + 1, 0.0);
  int i = 0;
  for (int j = 1; j < target_intervals; ++j) {
    const double goal = cum[n] * j / target_intervals;
    while (i < n - 1 && cum[i + 1] < goal) ++i;
    out.breakpoints[j] = mesh.breakpoints[i] + (goal - cum[i]) / phi[i];
  }
  out.breakpoints.back() = 1.0;
  out.validate();
  return out;
}

OrbitSolution adapt_mesh(const OrbitSolution& orbit, int target_intervals) {
  return remesh(orbit, adapted_mesh(orbit, target_intervals));
}

}  // namespace choreo
