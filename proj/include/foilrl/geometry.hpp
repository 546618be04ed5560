#pragma once

// CST (Kulfan) airfoil parameterization.
//
// Surfaces are built as
//   y_upper(x) = C(x) * S_upper(x) + x * te / 2 + le * x * (1 - x)^(n + 0.5)
//   y_lower(x) = C(x) * S_lower(x) - x * te / 2 + le * x * (1 - x)^(n + 0.5)
// with class function C(x) = x^0.5 * (1 - x), S a Bernstein polynomial of
// degree n = 7 over the 8 surface weights, te the trailing-edge thickness and
// le the leading-edge modification weight. Lower-surface weights are signed
// y-values, so a symmetric section has lower = -upper.

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace foilrl {

inline constexpr std::size_t kWeightsPerSurface = 8;
inline constexpr std::size_t kNumParams = 2 * kWeightsPerSurface + 2;
inline constexpr std::size_t kTrailingEdgeIndex = 2 * kWeightsPerSurface;
inline constexpr std::size_t kLeadingEdgeIndex = 2 * kWeightsPerSurface + 1;
inline constexpr double kClassN1 = 0.5;
inline constexpr double kClassN2 = 1.0;

using ParamVector = std::array<double, kNumParams>;

// The 18-component design vector, canonical order:
// upper[0..8), lower[0..8), trailing-edge thickness, leading-edge weight.
class CstParams {
 public:
  CstParams() = default;
  explicit CstParams(const ParamVector& values) : values_(values) {}

  std::span<const double, kWeightsPerSurface> upper() const {
    return std::span<const double, kWeightsPerSurface>(values_.data(), kWeightsPerSurface);
  }
  std::span<double, kWeightsPerSurface> upper() {
    return std::span<double, kWeightsPerSurface>(values_.data(), kWeightsPerSurface);
  }
  std::span<const double, kWeightsPerSurface> lower() const {
    return std::span<const double, kWeightsPerSurface>(values_.data() + kWeightsPerSurface,
                                                       kWeightsPerSurface);
  }
  std::span<double, kWeightsPerSurface> lower() {
    return std::span<double, kWeightsPerSurface>(values_.data() + kWeightsPerSurface,
                                                 kWeightsPerSurface);
  }
  double trailing_edge_thickness() const { return values_[kTrailingEdgeIndex]; }
  double& trailing_edge_thickness() { return values_[kTrailingEdgeIndex]; }
  double leading_edge_weight() const { return values_[kLeadingEdgeIndex]; }
  double& leading_edge_weight() { return values_[kLeadingEdgeIndex]; }

  const ParamVector& values() const { return values_; }
  ParamVector& values() { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  bool all_finite() const;

  friend bool operator==(const CstParams&, const CstParams&) = default;

 private:
  ParamVector values_{};
};

struct ParamBounds {
  ParamVector lower{};
  ParamVector upper{};

  // Bounds used by the environments: upper weights in [-1.5, 1.25], lower
  // weights in [-0.75, 1.5], TE thickness in [0.0005, 0.01], LE weight in
  // [-0.05, 0.775].
  static ParamBounds defaults();

  void validate() const;
  bool contains(const CstParams& p) const;
  CstParams clamp(const CstParams& p) const;
  double range(std::size_t i) const { return upper[i] - lower[i]; }
};

struct AirfoilGeometry {
  std::vector<double> x;  // chordwise stations, x[0] = 0, x[n-1] = 1
  std::vector<double> y_upper;
  std::vector<double> y_lower;

  std::size_t size() const { return x.size(); }
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

// n cosine-spaced stations on [0, 1], clustered at both edges.
std::vector<double> cosine_stations(std::size_t n);

AirfoilGeometry cst_to_geometry(const CstParams& params, std::size_t n_stations = 200);

// Surface ordinates at arbitrary stations (no spacing requirements).
void cst_surfaces(const CstParams& params, std::span<const double> x,
                  std::span<double> y_upper, std::span<double> y_lower);

// Maximum of y_upper - y_lower with a parabolic refinement around the
// largest sampled value.
double max_thickness(const AirfoilGeometry& geom);

enum class ValidityReason { ok, crossing, too_thin, non_finite, bad_stations };

const char* to_string(ValidityReason r);

struct Validity {
  bool valid = true;
  ValidityReason reason = ValidityReason::ok;
  explicit operator bool() const { return valid; }
};

inline constexpr double kDefaultThicknessFloor = 1e-3;
inline constexpr double kCrossingTolerance = 1e-6;

Validity is_valid(const AirfoilGeometry& geom,
                  double thickness_floor = kDefaultThicknessFloor);

struct CstFit {
  CstParams params;
  double residual = 0.0;  // RMS ordinate error, chord fractions
};

// Least-squares fit of all 18 parameters to a closed Selig-ordered loop
// (TE -> upper -> LE -> lower -> TE). The loop is first rotated and scaled so
// the chord runs from the leftmost point to the trailing-edge midpoint.
// Parameters that leave `bounds` are pinned there and the rest refitted.
// The residual is the RMS ordinate error of the returned parameters.
CstFit fit_cst(std::span<const Point2> coords, const ParamBounds& bounds);
// Same fit on known upper and lower surfaces, with no chord normalization.
CstFit fit_cst(const AirfoilGeometry& geom, const ParamBounds& bounds);

// Selig-ordered loop of a geometry, sharing the leading-edge point.
std::vector<Point2> to_selig_loop(const AirfoilGeometry& geom);

struct RawAirfoil {
  std::string name;
  std::vector<Point2> points;  // always Selig order after parsing
};

// Parses Selig or Lednicer text. Lednicer input (a point-count line after the
// name, then upper and lower surfaces each LE -> TE) is converted to Selig
// order. Throws IoError on malformed content.
RawAirfoil parse_airfoil(std::istream& in);
RawAirfoil read_airfoil_file(const std::string& path);
void write_selig(std::ostream& out, const std::string& name, std::span<const Point2> points);

// NACA 4-digit section ("2412"), standard open trailing edge, cosine spacing,
// n points per surface. Used to generate the bundled reset-pool files.
std::vector<Point2> naca4_coordinates(const std::string& digits, std::size_t n_per_side = 121);

}  // namespace foilrl
