#include "cli_commands.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>

#include "choreo/branch_io.hpp"
#include "choreo/choreography.hpp"
#include "choreo/continuation.hpp"
#include "choreo/errors.hpp"
#include "choreo/spectrum.hpp"
#include "choreo/verifier.hpp"

using namespace choreo;
namespace fs = std::filesystem;

std::string output_directory(const std::string& flag) {
  std::string dir = flag;
  if (dir.empty()) {
    const char* env = std::getenv("CHOREO_OUT");
    dir = (env && *env) ? env : ".";
  }
  fs::create_directories(dir);
  return dir;
}

namespace {

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void print_summary(const FamilyBranch& b, const std::string& file) {
  const auto [lo, hi] = b.period_range();
  std::printf("branch %s\n", b.id.c_str());
  std::printf("file %s\n", file.c_str());
  std::printf("orbits %zu\n", b.orbits.size());
  std::printf("period_range %.17g %.17g\n", lo, hi);
  std::printf("termination %s\n", b.termination.c_str());
  for (size_t i = 0; i < b.events.size(); ++i) {
    const BranchEvent& e = b.events[i];
    std::printf("event %zu %s step %d period %.17g\n", i, to_string(e.kind).c_str(), e.step, e.orbit.period);
  }
}

std::string save(const FamilyBranch& b, const std::string& flag) {
  const std::string dir = output_directory(flag);
  const std::string file = join(dir, b.id + ".branch");
  write_branch(file, b);
  update_index(dir, index_entry(file, b));
  return file;
}

}  // namespace

int cmd_spectrum(const SpectrumArgs& a) {
  const SystemConfig config(a.n, a.mu);
  std::vector<ModeRecord> modes = planar_modes(config);
  const auto vertical = vertical_modes(config);
  modes.insert(modes.end(), vertical.begin(), vertical.end());

  const std::string dir = output_directory(a.out);
  char name[96];
  std::snprintf(name, sizeof name, "spectrum_n%d_mu%g.txt", a.n, a.mu);
  const std::string file = join(dir, name);
  FILE* f = std::fopen(file.c_str(), "w");
  if (!f) throw Error("cannot write " + file);
  std::fprintf(f, "choreo-spectrum 1\nsystem %d %.17g\n", a.n, a.mu);
  std::fprintf(f, "max_real_part %.17g\nmodes %zu\n", max_oscillatory_real_part(config), modes.size());

  std::printf("%-9s %3s %20s %20s %5s %9s\n", "family", "k", "frequency", "period", "mult", "purity");
  for (const auto& m : modes) {
    std::printf("%-9s %3d %20.12f %20.12f %5d %9.6f%s\n", to_string(m.family).c_str(), m.wave_number, m.frequency,
                m.period(), m.multiplicity, m.fourier_purity, m.continuable() ? "" : "  (clustered)");
    std::fprintf(f, "mode %s %d %.17g %.17g %d %.17g\n", to_string(m.family).c_str(), m.wave_number, m.frequency,
                 m.period(), m.multiplicity, m.fourier_purity);
  }
  std::fclose(f);
  std::printf("max |Re| of oscillatory eigenvalues: %.3e\n", max_oscillatory_real_part(config));
  std::printf("written %s\n", file.c_str());
  return kExitOk;
}

int cmd_continue(const ContinueArgs& a) {
  const SystemConfig config(a.n, a.mu);
  const FamilyType type = family_type_from_string(a.family);
  if (type == FamilyType::Secondary) throw InvalidInput("families start from planar or vertical modes");
  const auto modes = type == FamilyType::Planar ? planar_modes(config) : vertical_modes(config);
  const ModeRecord* chosen = nullptr;
  for (const auto& m : modes) {
    if (m.wave_number != a.k) continue;
    if (a.frequency > 0.0 && std::abs(m.frequency - a.frequency) > 1e-3 * a.frequency) continue;
    chosen = &m;
    break;
  }
  if (!chosen) throw InvalidInput("no " + a.family + " mode with k = " + std::to_string(a.k));

  ContinuationSettings s;
  s.max_steps = a.steps;
  s.initial_step = a.initial_step;
  s.max_step = std::max(a.max_step, a.initial_step);
  s.max_period = a.max_period;
  s.intervals = a.intervals;
  s.period_targets = a.targets;
  s.validate();

  const FamilyBranch b = start_family(*chosen, config, s);
  const std::string file = save(b, a.out);
  print_summary(b, file);
  return b.termination == "step failure" ? kExitNumerical : kExitOk;
}

int cmd_scan(const ScanArgs& a) {
  const FamilyBranch b = read_branch(a.branch);
  const auto [lo, hi] = b.period_range();
  const auto list = enumerate_resonances(b.config, b.wave_number, lo, hi, a.lmax);
  std::printf("branch %s k %d period_range %.17g %.17g lmax %d\n", b.id.c_str(), b.wave_number, lo, hi, a.lmax);
  std::printf("%4s %4s %20s %8s %4s %5s\n", "ell", "m", "period", "k_tilde", "d", "r");
  for (const auto& r : list)
    std::printf("%4d %4d %20.12f %8d %4d %5d\n", r.ell, r.m, r.period, r.k_tilde, r.d, r.r);
  std::printf("resonances %zu\n", list.size());
  return kExitOk;
}

int cmd_extract(const ExtractArgs& a) {
  const FamilyBranch b = read_branch(a.branch);
  const Resonance res = make_resonance(b.config, b.wave_number, a.ell, a.m);
  const OrbitSolution orbit = locate_period(b, res.period);
  const InertialStates states = inertial_states(orbit, res, a.samples);
  const ChoreographyPath path = path_of(states, res, b.id);
  const ChoreographyReport rep = verify_choreography(path, states);

  double max_z = 0.0;
  for (const auto& body : states.bodies) max_z = std::max(max_z, body.row(2).cwiseAbs().maxCoeff());
  KnotFit knot;
  bool have_knot = false;
  std::string knot_note;
  if (max_z > 1e-6) {
    try {
      knot = knot_type(path);
      have_knot = true;
    } catch (const NotToroidal& e) {
      knot_note = e.what();
    }
  }

  const std::string dir = output_directory(a.out);
  const std::string file = join(dir, b.id + "_" + std::to_string(a.ell) + "-" + std::to_string(a.m) + ".path");
  write_choreography(file, path, rep, b.config, have_knot ? &knot : nullptr);

  std::printf("resonance %d:%d k %d k_tilde %d d %d r %d\n", res.ell, res.m, res.k, res.k_tilde, res.d, res.r);
  std::printf("period %.17g located %.17g choreography_period %.17g\n", res.period, orbit.period,
              res.choreography_period());
  std::printf("max_lambda %.3e\n", orbit.lambdas.cwiseAbs().maxCoeff());
  std::printf("closure %.3e\nsame_path %.3e\nrotation %.3e\ngrouping %.3e\nwinding %d (%.6f)\n", rep.closure,
              rep.same_path, rep.rotation, rep.grouping, rep.winding, rep.winding_raw);
  if (have_knot)
    std::printf("knot %d %d deviation %.3e minor_radius %.3e\n", knot.ell, knot.m, knot.deviation, knot.minor_radius);
  else if (!knot_note.empty())
    std::printf("knot none (%s)\n", knot_note.c_str());
  std::printf("written %s\n", file.c_str());

  const bool ok = rep.max_residual() <= a.tol && rep.winding == res.ell;
  std::printf("verification %s\n", ok ? "passed" : "FAILED");
  return ok ? kExitOk : kExitVerification;
}

int cmd_switch(const SwitchArgs& a) {
  const FamilyBranch b = read_branch(a.branch);
  if (a.event < 0 || a.event >= static_cast<int>(b.events.size()))
    throw InvalidInput("event index " + std::to_string(a.event) + " out of range (branch has " +
                       std::to_string(b.events.size()) + " events)");
  const BranchEvent& ev = b.events[a.event];
  if (ev.kind != EventKind::BranchPoint)
    throw InvalidInput("event " + std::to_string(a.event) + " is a " + to_string(ev.kind) +
                       ", not a branch point; there is no branch to switch to");
  if (a.direction != 1 && a.direction != -1) throw InvalidInput("direction must be +1 or -1");
  ContinuationSettings s = b.settings;
  s.max_steps = a.steps;
  s.period_targets.clear();
  const FamilyBranch nb = branch_switch(b, ev, s, a.direction);
  const std::string file = save(nb, a.out);
  std::printf("parent %s event %d direction %d\n", b.id.c_str(), a.event, a.direction);
  print_summary(nb, file);
  return nb.termination == "step failure" ? kExitNumerical : kExitOk;
}
