#pragma once

#include <vector>

namespace foilrl::detail {

// Integral boundary layer along one surface, marched from the stagnation
// point. Lengths are chord fractions, speeds are freestream fractions.
struct SurfaceFlow {
  std::vector<double> s;   // arc length from stagnation, s[0] = 0
  std::vector<double> ue;  // edge speed, ue[0] = 0
};

struct BoundaryLayerResult {
  std::vector<double> theta;
  std::vector<double> shape;          // H = delta* / theta
  std::vector<double> displacement;   // delta*
  std::vector<double> cf;
  int transition_index = -1;          // first turbulent station, -1 if laminar
  int separation_index = -1;          // first separated station, -1 if attached
  double separated_fraction = 0.0;    // of the surface arc length
  bool ok = true;

  double theta_te() const { return theta.back(); }
  double shape_te() const { return shape.back(); }
};

inline constexpr double kTurbulentSeparationShape = 2.4;
inline constexpr double kLaminarSeparationLambda = -0.09;
inline constexpr double kTurbulentStartShape = 1.4;

BoundaryLayerResult march_boundary_layer(const SurfaceFlow& flow, double reynolds);

// Squire-Young trailing-edge drag contribution of one surface.
double squire_young(double theta_te, double shape_te, double ue_te);

// Head's shape-factor correlations.
double head_h1_of_h(double h);
double head_h_of_h1(double h1);

}  // namespace foilrl::detail
