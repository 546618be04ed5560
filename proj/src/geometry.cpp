#include "foilrl/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "foilrl/errors.hpp"

namespace foilrl {

namespace {

constexpr int kDegree = static_cast<int>(kWeightsPerSurface) - 1;

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double class_function(double x) { return std::pow(x, kClassN1) * std::pow(1.0 - x, kClassN2); }

// Bernstein basis of degree 7 scaled by the class function.
void shape_basis(double x, std::array<double, kWeightsPerSurface>& out) {
  const double c = class_function(x);
  for (int i = 0; i <= kDegree; ++i) {
    out[i] = c * binomial(kDegree, i) * std::pow(x, i) * std::pow(1.0 - x, kDegree - i);
  }
}

double leading_edge_basis(double x) {
  return x * std::pow(1.0 - x, static_cast<double>(kWeightsPerSurface) + 0.5);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_pair(const std::string& line, double& a, double& b) {
  std::istringstream ss(line);
  if (!(ss >> a >> b)) return false;
  std::string rest;
  ss >> rest;
  return rest.empty();
}

}  // namespace

bool CstParams::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

ParamBounds ParamBounds::defaults() {
  ParamBounds b;
  for (std::size_t i = 0; i < kWeightsPerSurface; ++i) {
    b.lower[i] = -1.5;
    b.upper[i] = 1.25;
    b.lower[kWeightsPerSurface + i] = -0.75;
    b.upper[kWeightsPerSurface + i] = 1.5;
  }
  b.lower[kTrailingEdgeIndex] = 0.0005;
  b.upper[kTrailingEdgeIndex] = 0.01;
  b.lower[kLeadingEdgeIndex] = -0.05;
  b.upper[kLeadingEdgeIndex] = 0.775;
  return b;
}

void ParamBounds::validate() const {
  for (std::size_t i = 0; i < kNumParams; ++i) {
    FOILRL_REQUIRE(std::isfinite(lower[i]) && std::isfinite(upper[i]) && lower[i] < upper[i],
                   InvalidParams, "bounds: lower < upper violated at index " + std::to_string(i));
  }
}

bool ParamBounds::contains(const CstParams& p) const {
  for (std::size_t i = 0; i < kNumParams; ++i) {
    if (!(p[i] >= lower[i] && p[i] <= upper[i])) return false;
  }
  return true;
}

CstParams ParamBounds::clamp(const CstParams& p) const {
  CstParams out = p;
  for (std::size_t i = 0; i < kNumParams; ++i) out[i] = std::clamp(p[i], lower[i], upper[i]);
  return out;
}

std::vector<double> cosine_stations(std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double theta = std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1);
    x[i] = 0.5 * (1.0 - std::cos(theta));
  }
  x.front() = 0.0;
  x.back() = 1.0;
  return x;
}

void cst_surfaces(const CstParams& params, std::span<const double> x, std::span<double> y_upper,
                  std::span<double> y_lower) {
  std::array<double, kWeightsPerSurface> basis{};
  const auto up = params.upper();
  const auto lo = params.lower();
  const double te = params.trailing_edge_thickness();
  const double le = params.leading_edge_weight();
  for (std::size_t k = 0; k < x.size(); ++k) {
    shape_basis(x[k], basis);
    double su = 0.0;
    double sl = 0.0;
    for (std::size_t i = 0; i < kWeightsPerSurface; ++i) {
      su += up[i] * basis[i];
      sl += lo[i] * basis[i];
    }
    const double lem = le * leading_edge_basis(x[k]);
    y_upper[k] = su + x[k] * te / 2.0 + lem;
    y_lower[k] = sl - x[k] * te / 2.0 + lem;
  }
}

AirfoilGeometry cst_to_geometry(const CstParams& params, std::size_t n_stations) {
  FOILRL_REQUIRE(n_stations >= 32, InvalidParams, "cst_to_geometry: need at least 32 stations");
  FOILRL_REQUIRE(params.all_finite(), InvalidParams, "cst_to_geometry: non-finite parameters");
  AirfoilGeometry g;
  g.x = cosine_stations(n_stations);
  g.y_upper.resize(n_stations);
  g.y_lower.resize(n_stations);
  cst_surfaces(params, g.x, g.y_upper, g.y_lower);
  return g;
}

double max_thickness(const AirfoilGeometry& geom) {
  const std::size_t n = geom.size();
  if (n == 0) return 0.0;
  std::size_t best = 0;
  double tmax = geom.y_upper[0] - geom.y_lower[0];
  for (std::size_t i = 1; i < n; ++i) {
    const double t = geom.y_upper[i] - geom.y_lower[i];
    if (t > tmax) {
      tmax = t;
      best = i;
    }
  }
  if (best == 0 || best + 1 >= n) return tmax;

  const double x1 = geom.x[best];
  const double h0 = geom.x[best - 1] - x1;
  const double h2 = geom.x[best + 1] - x1;
  const double d0 = (geom.y_upper[best - 1] - geom.y_lower[best - 1]) - tmax;
  const double d2 = (geom.y_upper[best + 1] - geom.y_lower[best + 1]) - tmax;
  const double a = (d2 * h0 - d0 * h2) / (h0 * h2 * (h2 - h0));
  if (!(a < 0.0)) return tmax;
  const double b = (d0 - a * h0 * h0) / h0;
  const double vertex = -b / (2.0 * a);
  if (vertex < h0 || vertex > h2) return tmax;
  return std::max(tmax, tmax - b * b / (4.0 * a));
}

const char* to_string(ValidityReason r) {
  switch (r) {
    case ValidityReason::ok: return "ok";
    case ValidityReason::crossing: return "crossing";
    case ValidityReason::too_thin: return "too_thin";
    case ValidityReason::non_finite: return "non_finite";
    case ValidityReason::bad_stations: return "bad_stations";
  }
  return "unknown";
}

Validity is_valid(const AirfoilGeometry& geom, double thickness_floor) {
  const std::size_t n = geom.size();
  if (n < 3 || geom.y_upper.size() != n || geom.y_lower.size() != n) {
    return {false, ValidityReason::bad_stations};
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(geom.x[i]) || !std::isfinite(geom.y_upper[i]) ||
        !std::isfinite(geom.y_lower[i])) {
      return {false, ValidityReason::non_finite};
    }
  }
  if (geom.x.front() != 0.0 || geom.x.back() != 1.0) return {false, ValidityReason::bad_stations};
  for (std::size_t i = 1; i < n; ++i) {
    if (!(geom.x[i] > geom.x[i - 1])) return {false, ValidityReason::bad_stations};
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (geom.y_upper[i] - geom.y_lower[i] < -kCrossingTolerance) {
      return {false, ValidityReason::crossing};
    }
  }
  if (max_thickness(geom) < thickness_floor) return {false, ValidityReason::too_thin};
  return {};
}

std::vector<Point2> to_selig_loop(const AirfoilGeometry& geom) {
  const std::size_t n = geom.size();
  std::vector<Point2> pts;
  pts.reserve(2 * n - 1);
  for (std::size_t i = n; i-- > 0;) pts.push_back({geom.x[i], geom.y_upper[i]});
  for (std::size_t i = 1; i < n; ++i) pts.push_back({geom.x[i], geom.y_lower[i]});
  return pts;
}

namespace {
CstFit fit_surfaces(const std::vector<Point2>& upper, const std::vector<Point2>& lower,
                    const ParamBounds& bounds);
}  // namespace

CstFit fit_cst(std::span<const Point2> coords, const ParamBounds& bounds) {
  bounds.validate();
  const std::size_t n = coords.size();
  FOILRL_REQUIRE(n >= 20, FitError,
                 "fit_cst: need at least 20 coordinate points, got " + std::to_string(n));
  for (const auto& p : coords) {
    FOILRL_REQUIRE(std::isfinite(p.x) && std::isfinite(p.y), FitError,
                   "fit_cst: non-finite coordinate");
  }

  std::size_t le = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (coords[i].x < coords[le].x) le = i;
  }
  FOILRL_REQUIRE(le >= 2 && le + 3 <= n, FitError,
                 "fit_cst: cannot split surfaces (leading edge at loop end)");

  // Chord line from the leading edge to the trailing-edge midpoint, rotated
  // onto the x axis.
  const Point2 lep = coords[le];
  const Point2 tep{0.5 * (coords.front().x + coords.back().x),
                   0.5 * (coords.front().y + coords.back().y)};
  const double chord = std::hypot(tep.x - lep.x, tep.y - lep.y);
  FOILRL_REQUIRE(chord > 0.0, FitError, "fit_cst: zero chord");
  const double ca = (tep.x - lep.x) / chord;
  const double sa = (tep.y - lep.y) / chord;

  std::vector<Point2> first;  // loop start -> LE, reversed to LE -> TE
  std::vector<Point2> second;
  for (std::size_t i = le + 1; i-- > 0;) first.push_back(coords[i]);
  for (std::size_t i = le; i < n; ++i) second.push_back(coords[i]);

  auto normalize = [&](std::vector<Point2>& pts) {
    for (auto& p : pts) {
      const double dx = p.x - lep.x;
      const double dy = p.y - lep.y;
      p.x = std::clamp((dx * ca + dy * sa) / chord, 0.0, 1.0);
      p.y = (dy * ca - dx * sa) / chord;
    }
  };
  normalize(first);
  normalize(second);

  auto mean_y = [](const std::vector<Point2>& pts) {
    double s = 0.0;
    for (const auto& p : pts) s += p.y;
    return s / static_cast<double>(pts.size());
  };
  const bool first_is_upper = mean_y(first) >= mean_y(second);
  return fit_surfaces(first_is_upper ? first : second, first_is_upper ? second : first, bounds);
}

CstFit fit_cst(const AirfoilGeometry& geom, const ParamBounds& bounds) {
  bounds.validate();
  FOILRL_REQUIRE(geom.size() >= 10 && geom.y_upper.size() == geom.size() && geom.y_lower.size() == geom.size(),
                 FitError, "fit_cst: geometry needs at least 10 stations per surface");
  std::vector<Point2> upper, lower;
  for (std::size_t i = 0; i < geom.size(); ++i) {
    FOILRL_REQUIRE(std::isfinite(geom.x[i]) && std::isfinite(geom.y_upper[i]) && std::isfinite(geom.y_lower[i]),
                   FitError, "fit_cst: non-finite coordinate");
    upper.push_back({geom.x[i], geom.y_upper[i]});
    lower.push_back({geom.x[i], geom.y_lower[i]});
  }
  return fit_surfaces(upper, lower, bounds);
}

namespace {

CstFit fit_surfaces(const std::vector<Point2>& upper, const std::vector<Point2>& lower,
                    const ParamBounds& bounds) {
  const Eigen::Index rows = static_cast<Eigen::Index>(upper.size() + lower.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, kNumParams);
  Eigen::VectorXd rhs(rows);
  std::array<double, kWeightsPerSurface> basis{};
  Eigen::Index r = 0;
  for (const auto& p : upper) {
    shape_basis(p.x, basis);
    for (std::size_t i = 0; i < kWeightsPerSurface; ++i) a(r, i) = basis[i];
    a(r, kTrailingEdgeIndex) = p.x / 2.0;
    a(r, kLeadingEdgeIndex) = leading_edge_basis(p.x);
    rhs(r++) = p.y;
  }
  for (const auto& p : lower) {
    shape_basis(p.x, basis);
    for (std::size_t i = 0; i < kWeightsPerSurface; ++i) a(r, kWeightsPerSurface + i) = basis[i];
    a(r, kTrailingEdgeIndex) = -p.x / 2.0;
    a(r, kLeadingEdgeIndex) = leading_edge_basis(p.x);
    rhs(r++) = p.y;
  }

  // Least squares with an active set: parameters that land outside their
  // bounds are pinned to the violated bound and the rest are refitted.
  ParamVector v{};
  std::array<bool, kNumParams> pinned{};
  for (std::size_t round = 0; round <= kNumParams; ++round) {
    std::vector<Eigen::Index> free;
    Eigen::VectorXd b = rhs;
    for (std::size_t i = 0; i < kNumParams; ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      if (pinned[i]) {
        b -= a.col(col) * v[i];
      } else {
        free.push_back(col);
      }
    }
    if (free.empty()) break;
    Eigen::MatrixXd af(rows, static_cast<Eigen::Index>(free.size()));
    for (std::size_t k = 0; k < free.size(); ++k) af.col(static_cast<Eigen::Index>(k)) = a.col(free[k]);
    const Eigen::VectorXd sol = af.colPivHouseholderQr().solve(b);
    bool changed = false;
    for (std::size_t k = 0; k < free.size(); ++k) {
      const auto i = static_cast<std::size_t>(free[k]);
      v[i] = sol(static_cast<Eigen::Index>(k));
      if (v[i] < bounds.lower[i] || v[i] > bounds.upper[i]) {
        v[i] = std::clamp(v[i], bounds.lower[i], bounds.upper[i]);
        pinned[i] = true;
        changed = true;
      }
    }
    if (!changed) break;
  }
  CstFit fit;
  fit.params = bounds.clamp(CstParams(v));
  FOILRL_REQUIRE(fit.params.all_finite(), FitError, "fit_cst: least-squares solve failed");

  std::vector<double> xs;
  for (const auto& p : upper) xs.push_back(p.x);
  std::vector<double> yu(xs.size()), yl(xs.size());
  cst_surfaces(fit.params, xs, yu, yl);
  double sq = 0.0;
  for (std::size_t i = 0; i < upper.size(); ++i) sq += (yu[i] - upper[i].y) * (yu[i] - upper[i].y);
  xs.clear();
  for (const auto& p : lower) xs.push_back(p.x);
  yu.assign(xs.size(), 0.0);
  yl.assign(xs.size(), 0.0);
  cst_surfaces(fit.params, xs, yu, yl);
  for (std::size_t i = 0; i < lower.size(); ++i) sq += (yl[i] - lower[i].y) * (yl[i] - lower[i].y);
  fit.residual = std::sqrt(sq / static_cast<double>(rows));
  return fit;
}

}  // namespace

RawAirfoil parse_airfoil(std::istream& in) {
  RawAirfoil out;
  std::string line;
  std::vector<Point2> rows;
  std::vector<std::size_t> blank_before;  // row index following each blank-line group
  bool have_name = false;
  bool pending_blank = false;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty()) {
      pending_blank = true;
      continue;
    }
    double a = 0.0;
    double b = 0.0;
    if (parse_pair(t, a, b)) {
      if (pending_blank && !rows.empty()) blank_before.push_back(rows.size());
      pending_blank = false;
      rows.push_back({a, b});
      continue;
    }
    if (!have_name && rows.empty()) {
      out.name = t;
      have_name = true;
      continue;
    }
    throw IoError("airfoil file: unparseable line '" + t + "'");
  }
  FOILRL_REQUIRE(!rows.empty(), IoError, "airfoil file: no coordinate rows");

  // Lednicer: first row holds the per-surface point counts.
  if (rows.front().x > 1.5 && rows.front().y > 1.5) {
    const auto n_upper = static_cast<std::size_t>(std::lround(rows.front().x));
    const auto n_lower = static_cast<std::size_t>(std::lround(rows.front().y));
    FOILRL_REQUIRE(rows.size() == 1 + n_upper + n_lower, IoError,
                   "airfoil file: Lednicer point counts do not match data rows");
    std::vector<Point2> upper(rows.begin() + 1, rows.begin() + 1 + static_cast<long>(n_upper));
    std::vector<Point2> lower(rows.begin() + 1 + static_cast<long>(n_upper), rows.end());
    std::reverse(upper.begin(), upper.end());
    out.points = std::move(upper);
    std::size_t start = 0;
    if (!lower.empty() && lower.front().x == out.points.back().x &&
        lower.front().y == out.points.back().y) {
      start = 1;
    }
    out.points.insert(out.points.end(), lower.begin() + static_cast<long>(start), lower.end());
  } else {
    out.points = std::move(rows);
  }
  return out;
}

RawAirfoil read_airfoil_file(const std::string& path) {
  std::ifstream in(path);
  FOILRL_REQUIRE(in.good(), IoError, "cannot open airfoil file: " + path);
  RawAirfoil a = parse_airfoil(in);
  if (a.name.empty()) {
    const auto slash = path.find_last_of('/');
    a.name = path.substr(slash == std::string::npos ? 0 : slash + 1);
  }
  return a;
}

void write_selig(std::ostream& out, const std::string& name, std::span<const Point2> points) {
  out << name << '\n';
  char buf[64];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof(buf), " %.7f  %.7f\n", p.x, p.y);
    out << buf;
  }
}

std::vector<Point2> naca4_coordinates(const std::string& digits, std::size_t n_per_side) {
  FOILRL_REQUIRE(digits.size() == 4 && std::all_of(digits.begin(), digits.end(), ::isdigit),
                 InvalidParams, "naca4: expected 4 digits, got '" + digits + "'");
  const double m = (digits[0] - '0') / 100.0;
  const double p = (digits[1] - '0') / 10.0;
  const double t = std::stoi(digits.substr(2)) / 100.0;
  const auto xs = cosine_stations(n_per_side);

  std::vector<Point2> upper(n_per_side), lower(n_per_side);
  for (std::size_t i = 0; i < n_per_side; ++i) {
    const double x = xs[i];
    const double yt = 5.0 * t *
                      (0.2969 * std::sqrt(x) - 0.1260 * x - 0.3516 * x * x +
                       0.2843 * x * x * x - 0.1015 * x * x * x * x);
    double yc = 0.0;
    double dyc = 0.0;
    if (m > 0.0 && p > 0.0) {
      if (x < p) {
        yc = m / (p * p) * (2.0 * p * x - x * x);
        dyc = 2.0 * m / (p * p) * (p - x);
      } else {
        yc = m / ((1.0 - p) * (1.0 - p)) * ((1.0 - 2.0 * p) + 2.0 * p * x - x * x);
        dyc = 2.0 * m / ((1.0 - p) * (1.0 - p)) * (p - x);
      }
    }
    const double th = std::atan(dyc);
    upper[i] = {x - yt * std::sin(th), yc + yt * std::cos(th)};
    lower[i] = {x + yt * std::sin(th), yc - yt * std::cos(th)};
  }
  std::vector<Point2> loop(upper.rbegin(), upper.rend());
  loop.insert(loop.end(), lower.begin() + 1, lower.end());
  return loop;
}

}  // namespace foilrl
