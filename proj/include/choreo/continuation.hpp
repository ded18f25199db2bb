#pragma once

#include <optional>
#include <string>
#include <vector>

#include "choreo/collocation.hpp"
#include "choreo/spectrum.hpp"

namespace choreo {

struct ContinuationSettings {
  double amplitude = 1e-3;  // size of the first orbit, in the weighted L2 norm
  double initial_step = 0.02;
  double min_step = 1e-6;
  double max_step = 0.5;
  int max_steps = 500;
  double max_period = 40.0;
  double collision_radius = kCollisionRadius;
  int intervals = 100;
  int degree = 4;
  int adapt_every = 5;  // 0 disables mesh adaptation
  std::vector<double> period_targets;
  NewtonSettings newton;

  /// Throws InvalidInput unless 0 < min <= initial <= max, intervals >= 10, ...
  void validate() const;
};

enum class EventKind { BranchPoint, Fold, Collision, PeriodTarget };
std::string to_string(EventKind kind);
EventKind event_kind_from_string(const std::string& s);

struct BranchEvent {
  EventKind kind = EventKind::BranchPoint;
  int step = 0;         // member preceding the event
  double offset = 0.0;  // arclength from that member
  double target = 0.0;  // requested period (PeriodTarget only)
  OrbitSolution orbit;
  Vec tangent;  // branch tangent at the event orbit (empty for Collision)
};

struct Provenance {
  std::string source = "mode";  // "mode" or "switch"
  double frequency = 0.0;       // mode frequency
  std::string parent_id;
  int parent_event = -1;
  int direction = 0;
};

struct FamilyBranch {
  std::string id;
  SystemConfig config;
  FamilyType family = FamilyType::Planar;
  int wave_number = 0;
  Provenance provenance;
  ContinuationSettings settings;

  std::vector<OrbitSolution> orbits;
  std::vector<Vec> tangents;          // unit tangent at every member, weighted norm
  std::vector<double> steps;          // steps[i]: arclength from member i to i+1
  std::vector<int> det_signs;         // determinant sign at member i on its own mesh
  std::vector<int> det_flips;         // sign change between member i and i+1, same mesh
  std::vector<int> newton_iterations;
  std::vector<BranchEvent> events;
  std::string termination = "none";

  double current_step = 0.0;
  int fast_steps = 0;

  bool empty() const { return orbits.empty(); }
  std::pair<double, double> period_range() const;
};

/// First corrected orbit of the family of a simple mode, without continuing.
/// Throws DegenerateMode for a clustered eigenvalue.
FamilyBranch begin_family(const ModeRecord& mode, const SystemConfig& config, const ContinuationSettings& settings);

/// begin_family followed by continue_family.
FamilyBranch start_family(const ModeRecord& mode, const SystemConfig& config, const ContinuationSettings& settings);

/// Advances until max steps, the period bound, a collision or step failure and
/// records the termination reason. Events are located along the way.
void continue_family(FamilyBranch& branch);

/// One accepted pseudo-arclength step. Halves the step on corrector failure;
/// throws StepFailure at the minimum step (CollisionProximity when the last
/// failure was a collision).
void arclength_step(FamilyBranch& branch, const ContinuationSettings& settings);

/// Branch points (determinant sign changes) and folds (sign changes of the
/// period component of the tangent) between consecutive members, located by
/// bisection on arclength.
std::vector<BranchEvent> detect_branch_points(const FamilyBranch& branch);
std::vector<BranchEvent> detect_events_between(const FamilyBranch& branch, int step);

/// Starts the bifurcating branch at a located branch point in the given
/// direction (+1 or -1) and continues it. Throws NullSpaceAmbiguous at folds
/// or when the singular direction is not unique.
FamilyBranch branch_switch(const FamilyBranch& branch, const BranchEvent& event, const ContinuationSettings& settings,
                           int direction = 1);

/// Orbit of the branch with period target, by secant iteration on arclength
/// between bracketing members. Throws NotBracketed.
OrbitSolution locate_period(const FamilyBranch& branch, double target);

/// Null vector of the singular bordered Jacobian at a branch point, orthogonal
/// to the branch tangent; unit weighted norm.
Vec branch_null_vector(const FamilyBranch& branch, const BranchEvent& event);

}  // namespace choreo
