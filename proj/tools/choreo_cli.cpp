#include <CLI11.hpp>
#include <cstdio>
#include <functional>

#include "choreo/errors.hpp"
#include "cli_commands.hpp"

namespace {

int guarded(const std::function<int()>& fn) {
  try {
    return fn();
  } catch (const choreo::NotChoreography& e) {
    std::fprintf(stderr, "not a choreography: %s\n", e.what());
    std::printf("curves %d\n", e.curve_count());
    return kExitVerification;
  } catch (const choreo::DegenerateMode& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  } catch (const choreo::FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const choreo::InvalidInput& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const choreo::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lyapunov families of the n-body polygon and their choreographies"};
  app.require_subcommand(1);
  std::function<int()> action;

  SpectrumArgs sp;
  auto* spectrum = app.add_subcommand("spectrum", "Mode table of the polygonal relative equilibrium");
  spectrum->add_option("--n", sp.n, "Number of ring bodies")->required()->check(CLI::Range(3, 1000));
  spectrum->add_option("--mu", sp.mu, "Central mass (0: no central body)")->check(CLI::NonNegativeNumber);
  spectrum->add_option("--out", sp.out, "Output directory");
  spectrum->callback([&] { action = [&] { return cmd_spectrum(sp); }; });

  ContinueArgs co;
  auto* cont = app.add_subcommand("continue", "Continue the Lyapunov family of one mode");
  cont->add_option("--n", co.n, "Number of ring bodies")->required()->check(CLI::Range(3, 1000));
  cont->add_option("--k", co.k, "Wave number of the mode")->required()->check(CLI::PositiveNumber);
  cont->add_option("--family", co.family, "planar or vertical")
      ->required()
      ->check(CLI::IsMember({"planar", "vertical"}));
  cont->add_option("--mu", co.mu, "Central mass")->check(CLI::NonNegativeNumber);
  cont->add_option("--frequency", co.frequency, "Select the mode with this frequency when k is shared");
  cont->add_option("--steps", co.steps, "Maximum number of continuation steps")->check(CLI::NonNegativeNumber);
  cont->add_option("--step", co.initial_step, "Initial arclength step")->check(CLI::PositiveNumber);
  cont->add_option("--max-step", co.max_step, "Largest arclength step")->check(CLI::PositiveNumber);
  cont->add_option("--max-period", co.max_period, "Stop beyond this period")->check(CLI::PositiveNumber);
  cont->add_option("--intervals", co.intervals, "Mesh intervals")->check(CLI::Range(10, 100000));
  cont->add_option("--target", co.targets, "Locate orbits with these periods along the way");
  cont->add_option("--out", co.out, "Output directory");
  cont->callback([&] { action = [&] { return cmd_continue(co); }; });

  ScanArgs sc;
  auto* scan = app.add_subcommand("scan", "List the resonances inside a branch's period range");
  scan->add_option("--branch", sc.branch, "Branch file")->required();
  scan->add_option("--lmax", sc.lmax, "Largest l and m")->check(CLI::PositiveNumber);
  scan->callback([&] { action = [&] { return cmd_scan(sc); }; });

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Locate an l:m resonant orbit and certify its choreography");
  extract->add_option("--branch", ex.branch, "Branch file")->required();
  extract->add_option("--ell", ex.ell, "Winding number l")->required()->check(CLI::PositiveNumber);
  extract->add_option("--m", ex.m, "Symmetry order m")->required()->check(CLI::PositiveNumber);
  extract->add_option("--tol", ex.tol, "Largest accepted residual")->check(CLI::PositiveNumber);
  extract->add_option("--samples", ex.samples, "Samples per rotating-frame period")->check(CLI::PositiveNumber);
  extract->add_option("--out", ex.out, "Output directory");
  extract->callback([&] { action = [&] { return cmd_extract(ex); }; });

  SwitchArgs sw;
  auto* sw_cmd = app.add_subcommand("switch", "Start the branch bifurcating at a branch point");
  sw_cmd->add_option("--branch", sw.branch, "Branch file")->required();
  sw_cmd->add_option("--event", sw.event, "Event index in the branch file")->required();
  sw_cmd->add_option("--direction", sw.direction, "+1 or -1")->check(CLI::IsMember({1, -1}));
  sw_cmd->add_option("--steps", sw.steps, "Maximum number of continuation steps")->check(CLI::NonNegativeNumber);
  sw_cmd->add_option("--out", sw.out, "Output directory");
  sw_cmd->callback([&] { action = [&] { return cmd_switch(sw); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  return guarded(action);
}
