#include "choreo/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "choreo/errors.hpp"

namespace choreo {

void ContinuationSettings::validate() const {
  if (!(amplitude > 0.0)) throw InvalidInput("amplitude must be positive");
  if (!(min_step > 0.0 && min_step <= initial_step && initial_step <= max_step))
    throw InvalidInput("step sizes must satisfy 0 < min <= initial <= max");
  if (max_steps < 0) throw InvalidInput("max_steps must be nonnegative");
  if (intervals < 10) throw InvalidInput("continuation needs at least 10 mesh intervals");
  if (degree < 2 || degree > 7) throw InvalidInput("collocation degree must lie in 2..7");
  if (!(max_period > 0.0)) throw InvalidInput("max_period must be positive");
  if (!(collision_radius > 0.0)) throw InvalidInput("collision radius must be positive");
  if (adapt_every < 0) throw InvalidInput("adapt_every must be nonnegative");
}

std::string to_string(EventKind kind) {
  switch (kind) {
    case EventKind::BranchPoint: return "branch_point";
    case EventKind::Fold: return "fold";
    case EventKind::Collision: return "collision";
    case EventKind::PeriodTarget: return "period_target";
  }
  return "unknown";
}

EventKind event_kind_from_string(const std::string& s) {
  if (s == "branch_point") return EventKind::BranchPoint;
  if (s == "fold") return EventKind::Fold;
  if (s == "collision") return EventKind::Collision;
  if (s == "period_target") return EventKind::PeriodTarget;
  throw InvalidInput("unknown event kind '" + s + "'");
}

std::pair<double, double> FamilyBranch::period_range() const {
  if (orbits.empty()) return {0.0, 0.0};
  double lo = orbits.front().period, hi = lo;
  for (const auto& o : orbits) {
    lo = std::min(lo, o.period);
    hi = std::max(hi, o.period);
  }
  return {lo, hi};
}

namespace {

int period_index(const Vec& flat) { return static_cast<int>(flat.size()) - 4; }

// Corrects base + delta * tangent onto {<X - base, tangent>_w = delta}, with
// base as the phase reference.
NewtonResult correct_from(const OrbitSolution& base, const Vec& tangent, double delta, const NewtonSettings& ns) {
  OrbitSolution guess = base;
  const Vec x0 = base.pack();
  guess.unpack(x0 + delta * tangent);
  PhaseConstraints pc{base};
  ArclengthConstraint ac{x0, tangent, delta};
  return newton_correct(guess, pc, ac, ns);
}

// Unit tangent from the factorization of [F_X; w.prev], oriented along prev.
Vec tangent_from(const BorderedFactorization& fac, const Vec& prev, const Vec& weights) {
  Vec rhs = Vec::Zero(prev.size());
  rhs[rhs.size() - 1] = 1.0;
  Vec t = fac.solve(rhs);
  t /= weighted_norm(t, weights);
  if (weighted_dot(t, prev, weights) < 0.0) t = -t;
  return t;
}

std::string format_id(const SystemConfig& c, FamilyType f, int k, double freq) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "n%d_mu%g_%s_k%d_f%.6f", c.n, c.mu, to_string(f).c_str(), k, freq);
  return buf;
}

void adapt_member(FamilyBranch& b, int j) {
  const auto& s = b.settings;
  const OrbitSolution& old = b.orbits[j];
  try {
    const Mesh mesh = adapted_mesh(old, s.intervals);
    OrbitSolution y = remesh(old, mesh);
    const Vec w = inner_product_weights(mesh, old.config.dim());
    Vec t = remesh_flat(b.tangents[j], old.mesh, mesh, old.config.dim());
    t /= weighted_norm(t, w);
    NewtonResult nr = correct_from(y, t, 0.0, s.newton);
    b.tangents[j] = tangent_from(*nr.factorization, t, w);
    b.det_signs[j] = nr.factorization->det_sign();
    b.orbits[j] = std::move(nr.orbit);
  } catch (const NumericalError&) {
    // keep the current mesh
  }
}

struct Trial {
  NewtonResult nr;
  Vec tangent;
};

Trial trial_at(const FamilyBranch& b, int i, double delta) {
  Trial tr;
  tr.nr = correct_from(b.orbits[i], b.tangents[i], delta, b.settings.newton);
  const Vec w = inner_product_weights(b.orbits[i].mesh, b.config.dim());
  tr.tangent = tangent_from(*tr.nr.factorization, b.tangents[i], w);
  return tr;
}

std::optional<BranchEvent> locate_branch_point(const FamilyBranch& b, int i) {
  try {
    const double full = b.steps[i];
    double lo = 0.0, hi = full;
    Trial t_lo = trial_at(b, i, lo);
    Trial t_hi = trial_at(b, i, hi);
    const int s_lo = t_lo.nr.factorization->det_sign();
    if (s_lo == t_hi.nr.factorization->det_sign()) return std::nullopt;
    for (int it = 0; it < 80; ++it) {
      const double dt = std::abs(t_hi.nr.orbit.period - t_lo.nr.orbit.period);
      if ((dt < 1e-8 && hi - lo < 1e-6 * std::max(1.0, full)) || hi - lo < 1e-11) break;
      const double mid = 0.5 * (lo + hi);
      Trial t_mid = trial_at(b, i, mid);
      if (t_mid.nr.factorization->det_sign() == s_lo) {
        lo = mid;
        t_lo = std::move(t_mid);
      } else {
        hi = mid;
        t_hi = std::move(t_mid);
      }
    }
    BranchEvent ev;
    ev.kind = EventKind::BranchPoint;
    ev.step = i;
    ev.offset = lo;
    ev.orbit = t_lo.nr.orbit;
    ev.tangent = t_lo.tangent;
    return ev;
  } catch (const NumericalError&) {
    return std::nullopt;
  }
}

std::optional<BranchEvent> locate_fold(const FamilyBranch& b, int i) {
  try {
    const double full = b.steps[i];
    double lo = 0.0, hi = full;
    Trial t_lo = trial_at(b, i, lo);
    auto tcomp = [](const Trial& t) { return t.tangent[period_index(t.tangent)]; };
    const double g_lo = tcomp(t_lo);
    for (int it = 0; it < 60 && hi - lo > 1e-9 * std::max(1.0, full); ++it) {
      const double mid = 0.5 * (lo + hi);
      Trial t_mid = trial_at(b, i, mid);
      if ((tcomp(t_mid) > 0) == (g_lo > 0)) {
        lo = mid;
        t_lo = std::move(t_mid);
      } else {
        hi = mid;
      }
    }
    BranchEvent ev;
    ev.kind = EventKind::Fold;
    ev.step = i;
    ev.offset = lo;
    ev.orbit = t_lo.nr.orbit;
    ev.tangent = t_lo.tangent;
    return ev;
  } catch (const NumericalError&) {
    return std::nullopt;
  }
}

OrbitSolution locate_period_between(const FamilyBranch& b, int i, double target) {
  const double tol = 1e-9 * target;
  double a = 0.0, c = b.steps[i];
  double fa = b.orbits[i].period - target;
  OrbitSolution best = b.orbits[i];
  if (std::abs(fa) <= tol) return best;
  NewtonResult rc = correct_from(b.orbits[i], b.tangents[i], c, b.settings.newton);
  double fc = rc.orbit.period - target;
  if (std::abs(fc) <= tol) return rc.orbit;
  if (fa * fc > 0.0) throw NotBracketed("period target not bracketed after recorrection");
  int side = 0;
  for (int it = 0; it < 100; ++it) {
    const double x = (a * fc - c * fa) / (fc - fa);
    NewtonResult r = correct_from(b.orbits[i], b.tangents[i], x, b.settings.newton);
    const double fx = r.orbit.period - target;
    if (std::abs(fx) <= tol) return r.orbit;
    if (fx * fc > 0.0) {
      c = x;
      fc = fx;
      if (side == -1) fa *= 0.5;
      side = -1;
    } else {
      a = x;
      fa = fx;
      if (side == 1) fc *= 0.5;
      side = 1;
    }
    if (std::abs(c - a) < 1e-15) return r.orbit;
  }
  throw NoConvergence("period location did not converge");
}

}  // namespace

FamilyBranch begin_family(const ModeRecord& mode, const SystemConfig& config, const ContinuationSettings& settings) {
  settings.validate();
  if (mode.multiplicity > 1)
    throw DegenerateMode("mode at frequency " + std::to_string(mode.frequency) + " has multiplicity " +
                         std::to_string(mode.multiplicity));
  const Mesh mesh = Mesh::uniform(settings.intervals, settings.degree);
  const OrbitSolution pred = lyapunov_predictor(mode, settings.amplitude, config, mesh);
  const OrbitSolution eq = OrbitSolution::constant(config, polygon_equilibrium(config), pred.period, mesh);
  const Vec w = inner_product_weights(mesh, config.dim());
  Vec dir = pred.pack() - eq.pack();
  dir /= weighted_norm(dir, w);
  PhaseConstraints pc{pred};
  ArclengthConstraint ac{eq.pack(), dir, settings.amplitude};
  NewtonResult nr = newton_correct(pred, pc, ac, settings.newton);

  FamilyBranch b;
  b.config = config;
  b.family = mode.family;
  b.wave_number = mode.wave_number;
  b.id = format_id(config, mode.family, mode.wave_number, mode.frequency);
  b.provenance.source = "mode";
  b.provenance.frequency = mode.frequency;
  b.settings = settings;
  b.tangents.push_back(tangent_from(*nr.factorization, dir, w));
  b.det_signs.push_back(nr.factorization->det_sign());
  b.newton_iterations.push_back(nr.iterations);
  b.orbits.push_back(std::move(nr.orbit));
  b.current_step = settings.initial_step;
  return b;
}

FamilyBranch start_family(const ModeRecord& mode, const SystemConfig& config, const ContinuationSettings& settings) {
  FamilyBranch b = begin_family(mode, config, settings);
  continue_family(b);
  return b;
}

void arclength_step(FamilyBranch& b, const ContinuationSettings& s) {
  if (b.empty()) throw InvalidInput("arclength_step: empty branch");
  const int i = static_cast<int>(b.orbits.size()) - 1;
  const OrbitSolution& x = b.orbits[i];
  const Vec& t = b.tangents[i];
  const Vec w = inner_product_weights(x.mesh, x.config.dim());
  const Vec x0 = x.pack();
  double ds = std::clamp(b.current_step, s.min_step, s.max_step);
  bool collided = false;
  std::string last_error;
  for (;;) {
    try {
      NewtonResult nr = correct_from(x, t, ds, s.newton);
      const Vec dx = nr.orbit.pack() - x0;
      if (weighted_norm(dx, w) > 10.0 * ds) throw NoConvergence("corrector left the step neighbourhood");
      if (orbit_min_distance(nr.orbit) < s.collision_radius)
        throw CollisionProximity(orbit_min_distance(nr.orbit), s.collision_radius);

      const int sign = nr.factorization->det_sign();
      b.tangents.push_back(tangent_from(*nr.factorization, t, w));
      b.det_flips.push_back(sign != b.det_signs[i] ? 1 : 0);
      b.det_signs.push_back(sign);
      b.steps.push_back(ds);
      b.newton_iterations.push_back(nr.iterations);
      b.orbits.push_back(std::move(nr.orbit));
      if (nr.iterations <= 4) {
        if (++b.fast_steps >= 4) {
          ds = std::min(1.3 * ds, s.max_step);
          b.fast_steps = 0;
        }
      } else {
        b.fast_steps = 0;
      }
      b.current_step = ds;
      const int j = i + 1;
      if (s.adapt_every > 0 && j % s.adapt_every == 0) adapt_member(b, j);
      return;
    } catch (const CollisionProximity& e) {
      collided = true;
      last_error = e.what();
    } catch (const NoConvergence& e) {
      collided = false;
      last_error = e.what();
    } catch (const SingularJacobian& e) {
      collided = false;
      last_error = e.what();
    }
    b.fast_steps = 0;
    ds *= 0.5;
    if (ds < s.min_step) {
      b.current_step = s.min_step;
      if (collided) throw CollisionProximity(0.0, s.collision_radius);
      throw StepFailure("step size fell below minimum: " + last_error);
    }
  }
}

std::vector<BranchEvent> detect_events_between(const FamilyBranch& b, int i) {
  std::vector<BranchEvent> out;
  if (i < 0 || i + 1 >= static_cast<int>(b.orbits.size())) return out;
  if (b.det_flips[i])
    if (auto ev = locate_branch_point(b, i)) out.push_back(std::move(*ev));
  const Vec& t0 = b.tangents[i];
  const Vec& t1 = b.tangents[i + 1];
  if (t0[period_index(t0)] * t1[period_index(t1)] < 0.0)
    if (auto ev = locate_fold(b, i)) out.push_back(std::move(*ev));
  return out;
}

std::vector<BranchEvent> detect_branch_points(const FamilyBranch& b) {
  std::vector<BranchEvent> out;
  for (int i = 0; i + 1 < static_cast<int>(b.orbits.size()); ++i) {
    auto evs = detect_events_between(b, i);
    for (auto& e : evs) out.push_back(std::move(e));
  }
  return out;
}

void continue_family(FamilyBranch& b) {
  const auto& s = b.settings;
  s.validate();
  b.termination = "max steps";
  while (static_cast<int>(b.orbits.size()) - 1 < s.max_steps) {
    try {
      arclength_step(b, s);
    } catch (const CollisionProximity&) {
      b.termination = "collision";
      BranchEvent ev;
      ev.kind = EventKind::Collision;
      ev.step = static_cast<int>(b.orbits.size()) - 1;
      ev.orbit = b.orbits.back();
      b.events.push_back(std::move(ev));
      return;
    } catch (const StepFailure&) {
      b.termination = "step failure";
      return;
    }
    const int i = static_cast<int>(b.orbits.size()) - 2;
    for (auto& ev : detect_events_between(b, i)) b.events.push_back(std::move(ev));
    const double t0 = b.orbits[i].period, t1 = b.orbits[i + 1].period;
    for (double target : s.period_targets) {
      if ((t0 - target) * (t1 - target) <= 0.0 && t0 != target) {
        try {
          BranchEvent ev;
          ev.kind = EventKind::PeriodTarget;
          ev.step = i;
          ev.target = target;
          ev.orbit = locate_period_between(b, i, target);
          b.events.push_back(std::move(ev));
        } catch (const Error&) {
        }
      }
    }
    if (b.orbits.back().period > s.max_period) {
      b.termination = "period bound";
      return;
    }
  }
}

OrbitSolution locate_period(const FamilyBranch& b, double target) {
  const double tol = 1e-9 * target;
  for (const auto& o : b.orbits)
    if (std::abs(o.period - target) <= tol) return o;
  for (int i = 0; i + 1 < static_cast<int>(b.orbits.size()); ++i) {
    const double f0 = b.orbits[i].period - target, f1 = b.orbits[i + 1].period - target;
    if (f0 * f1 < 0.0) return locate_period_between(b, i, target);
  }
  throw NotBracketed("period " + std::to_string(target) + " is not bracketed by the branch");
}

Vec branch_null_vector(const FamilyBranch& b, const BranchEvent& ev) {
  if (ev.kind != EventKind::BranchPoint) throw NullSpaceAmbiguous("event is not a branch point");
  const Vec w = inner_product_weights(ev.orbit.mesh, b.config.dim());
  const Vec& t = ev.tangent;
  NewtonResult nr = correct_from(ev.orbit, t, 0.0, b.settings.newton);
  const auto& fac = *nr.factorization;

  std::mt19937 gen(20240611u);
  std::normal_distribution<double> nd;
  const int size = static_cast<int>(t.size());
  auto orth = [&](Vec& v, const Vec& against) { v -= weighted_dot(v, against, w) * against; };
  Vec v1(size), v2(size);
  for (int k = 0; k < size; ++k) v1[k] = nd(gen);
  for (int k = 0; k < size; ++k) v2[k] = nd(gen);
  double g1 = 0.0, g2 = 0.0;
  for (int it = 0; it < 12; ++it) {
    orth(v1, t);
    v1 /= weighted_norm(v1, w);
    orth(v2, t);
    orth(v2, v1);
    v2 /= weighted_norm(v2, w);
    Vec y1 = fac.solve(v1);
    Vec y2 = fac.solve(v2);
    orth(y1, t);
    g1 = weighted_norm(y1, w);
    y1 /= g1;
    orth(y2, t);
    orth(y2, y1);
    g2 = weighted_norm(y2, w);
    v1 = y1;
    v2 = y2;
  }
  if (!(g1 > 0.0) || !std::isfinite(g1)) throw NullSpaceAmbiguous("inverse iteration failed");
  if (g2 > 1e-2 * g1)
    throw NullSpaceAmbiguous("no isolated singular direction (growth ratio " + std::to_string(g2 / g1) + ")");
  return v1;
}

FamilyBranch branch_switch(const FamilyBranch& parent, const BranchEvent& ev, const ContinuationSettings& settings,
                           int direction) {
  settings.validate();
  if (direction != 1 && direction != -1) throw InvalidInput("direction must be +1 or -1");
  const Vec phi = branch_null_vector(parent, ev);
  const Vec w = inner_product_weights(ev.orbit.mesh, parent.config.dim());
  const double delta = direction * settings.initial_step;
  NewtonResult nr = correct_from(ev.orbit, phi, delta, settings.newton);

  FamilyBranch b;
  b.config = parent.config;
  b.family = FamilyType::Secondary;
  b.wave_number = parent.wave_number;
  char suffix[64];
  std::snprintf(suffix, sizeof suffix, "_s%d%c", ev.step, direction > 0 ? 'p' : 'm');
  b.id = parent.id + suffix;
  b.provenance.source = "switch";
  b.provenance.parent_id = parent.id;
  b.provenance.direction = direction;
  for (size_t k = 0; k < parent.events.size(); ++k)
    if (parent.events[k].kind == ev.kind && parent.events[k].step == ev.step &&
        parent.events[k].offset == ev.offset)
      b.provenance.parent_event = static_cast<int>(k);
  b.settings = settings;
  Vec t = tangent_from(*nr.factorization, phi, w);
  if (direction < 0) t = -t;
  b.tangents.push_back(t);
  b.det_signs.push_back(nr.factorization->det_sign());
  b.newton_iterations.push_back(nr.iterations);
  nr.orbit.family = FamilyType::Secondary;
  b.orbits.push_back(std::move(nr.orbit));
  b.current_step = settings.initial_step;
  continue_family(b);
  return b;
}

}  // namespace choreo
