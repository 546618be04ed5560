#pragma once

// Two-fidelity aerodynamic solvers sharing one result contract.
//
// High fidelity: linear-strength vortex panel method with a Kutta condition,
// followed by an integral boundary layer marched on the inviscid edge speed
// (Thwaites laminar, Michel transition, Head turbulent). Friction is a blend of
// the integrated wall shear and a flat-plate estimate; the Squire-Young
// momentum deficit in excess of friction is added as pressure drag. Lift gets
// the Prandtl-Glauert factor.
//
// Low fidelity: thin-airfoil theory on the discrete camber line plus
// flat-plate friction with a thickness form factor and a lift-dependent
// factor. Its confidence is the geometric plausibility times an estimate of
// the chance that the high-fidelity solver converges on the same section.
// It never reports non-convergence.

#include <functional>
#include <string>

#include "foilrl/geometry.hpp"

namespace foilrl {

enum class Fidelity { high, low };

const char* to_string(Fidelity f);
Fidelity fidelity_from_string(const std::string& s);

struct FlowConditions {
  double angle_of_attack_deg = 2.0;
  double reynolds = 1.0e6;
  double mach = 0.5;

  void validate() const;
  // sqrt(1 - M^2)
  double compressibility_factor() const;
};

struct SolverConfig {
  Fidelity fidelity = Fidelity::high;
  int panels = 255;  // rounded up to an even count, half per surface
  // Carried for configuration parity with iterative solvers; the one-pass
  // boundary layer here never iterates.
  int max_iterations = 200;
  double tolerance = 1e-6;
  double timeout_s = 30.0;
  double nominal_cost_ms = 73.0;
  // Flow with more than this fraction of a surface separated is treated as a
  // failed solve.
  double max_separated_fraction = 0.3;

  static SolverConfig high_fidelity();
  static SolverConfig low_fidelity();
  void validate() const;
};

inline constexpr double kHighFidelityCostMs = 73.0;
inline constexpr double kLowFidelityCostMs = 4.0;
inline constexpr double kMinDrag = 1e-4;

struct AeroResult {
  bool converged = false;
  double cl = 0.0;  // meaningful only when converged
  double cd = 0.0;  // meaningful only when converged
  double confidence = 1.0;
  double cost_ms = 0.0;
  int iterations = 0;
  std::string failure;  // empty on success
};

AeroResult solve_high_fidelity(const AirfoilGeometry& geom, const FlowConditions& flow,
                               const SolverConfig& cfg);
AeroResult solve_low_fidelity(const AirfoilGeometry& geom, const FlowConditions& flow,
                              const SolverConfig& cfg);
AeroResult solve(const AirfoilGeometry& geom, const FlowConditions& flow, const SolverConfig& cfg);

// cl / cd of a converged result; ContractViolation otherwise.
double lift_drag_ratio(const AeroResult& r);

// Building blocks of the low-fidelity model, exposed for tests and tools.
double flat_plate_cf(double reynolds);
double thickness_form_factor(double thickness_ratio);
double zero_lift_angle(const AirfoilGeometry& geom);

// Shape descriptors used by the low-fidelity calibration.
struct SectionFeatures {
  double thickness = 0.0;
  double thickness_position = 0.0;
  double leading_edge = 0.0;         // t(x) / sqrt(x) at x = 0.01
  double trailing_edge_wedge = 0.0;  // thickness slope ahead of the edge, gap removed
};
SectionFeatures section_features(const AirfoilGeometry& geom);

// Multiplies the flat-plate drag; grows with lift.
double lift_drag_factor(double cl);
// Estimated probability that the high-fidelity solver converges.
double convergence_probability(const AirfoilGeometry& geom, double cl);
// Geometric plausibility in [0, 1]: drops on crossing or wavy surfaces.
double confidence_score(const AirfoilGeometry& geom);

using AeroSolver = std::function<AeroResult(const AirfoilGeometry&)>;

AeroSolver make_solver(const SolverConfig& cfg, const FlowConditions& flow);

}  // namespace foilrl
