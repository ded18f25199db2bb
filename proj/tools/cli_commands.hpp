#pragma once

#include <string>
#include <vector>

// Exit codes of the command-line tool.
enum ExitCode { kExitOk = 0, kExitUsage = 2, kExitNumerical = 3, kExitVerification = 4 };

struct SpectrumArgs {
  int n = 0;
  double mu = 0.0;
  std::string out;
};

struct ContinueArgs {
  int n = 0;
  int k = 0;
  std::string family = "planar";
  double mu = 0.0;
  double frequency = 0.0;  // picks among modes sharing k; 0 = first listed
  int steps = 500;
  double initial_step = 0.02;
  double max_step = 0.5;
  double max_period = 40.0;
  int intervals = 100;
  std::vector<double> targets;
  std::string out;
};

struct ScanArgs {
  std::string branch;
  int lmax = 16;
};

struct ExtractArgs {
  std::string branch;
  int ell = 0;
  int m = 0;
  double tol = 1e-5;
  int samples = 400;
  std::string out;
};

struct SwitchArgs {
  std::string branch;
  int event = 0;
  int direction = 1;
  int steps = 500;
  std::string out;
};

int cmd_spectrum(const SpectrumArgs& a);
int cmd_continue(const ContinueArgs& a);
int cmd_scan(const ScanArgs& a);
int cmd_extract(const ExtractArgs& a);
int cmd_switch(const SwitchArgs& a);

/// --out if given, else $CHOREO_OUT, else the current directory; created on demand.
std::string output_directory(const std::string& flag);
