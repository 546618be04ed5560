#pragma once

#include <Eigen/Dense>

#include <vector>

#include "foilrl/geometry.hpp"

namespace foilrl::detail {

// Panel nodes ordered clockwise: lower trailing edge -> leading edge -> upper
// trailing edge. Panel j joins node j and node j + 1.
struct PanelGeometry {
  std::vector<double> xn, yn;
  std::vector<double> xc, yc, len, tx, ty, nx, ny;
  int lower_panels = 0;

  int panels() const { return static_cast<int>(len.size()); }
  int nodes() const { return static_cast<int>(xn.size()); }
};

// Re-panels a geometry with `per_side` cosine-spaced panels on each surface,
// interpolating the ordinates with a natural cubic spline in the angle
// variable theta = acos(1 - 2x).
PanelGeometry build_panels(const AirfoilGeometry& geom, int per_side);

// Linear-strength vortex panel solver. The influence matrix is factored once;
// each solve only changes the right-hand side.
class VortexPanelSolver {
 public:
  explicit VortexPanelSolver(const PanelGeometry& panels);

  bool singular() const { return singular_; }

  // Nodal vortex strengths for freestream angle `alpha_rad` (unit speed)
  // and prescribed outward normal velocity per panel control point.
  Eigen::VectorXd solve(double alpha_rad, const Eigen::VectorXd& transpiration) const;

  // Circulation lift coefficient (chord 1, unit freestream).
  double lift_coefficient(const Eigen::VectorXd& gamma) const;

 private:
  const PanelGeometry& panels_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  bool singular_ = false;
};

}  // namespace foilrl::detail
