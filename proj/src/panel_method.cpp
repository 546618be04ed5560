#include "panel_method.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "foilrl/errors.hpp"

namespace foilrl::detail {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

class NaturalSpline {
 public:
  NaturalSpline(const std::vector<double>& t, const std::vector<double>& y) : t_(t), y_(y) {
    const std::size_t n = t.size();
    m_.assign(n, 0.0);
    if (n < 3) return;
    std::vector<double> c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = t[i] - t[i - 1];
      const double h1 = t[i + 1] - t[i];
      const double a = h0;
      const double b = 2.0 * (h0 + h1);
      const double rhs = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
      const double denom = b - a * c[i - 1];
      c[i] = h1 / denom;
      d[i] = (rhs - a * d[i - 1]) / denom;
    }
    for (std::size_t i = n - 1; i-- > 1;) m_[i] = d[i] - c[i] * m_[i + 1];
  }

  double operator()(double t) const {
    std::size_t lo = 0;
    std::size_t hi = t_.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if (t_[mid] > t) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    const double h = t_[hi] - t_[lo];
    const double a = (t_[hi] - t) / h;
    const double b = (t - t_[lo]) / h;
    return a * y_[lo] + b * y_[hi] +
           ((a * a * a - a) * m_[lo] + (b * b * b - b) * m_[hi]) * h * h / 6.0;
  }

 private:
  std::vector<double> t_, y_, m_;
};

double station_angle(double x) { return std::acos(std::clamp(1.0 - 2.0 * x, -1.0, 1.0)); }

}  // namespace

PanelGeometry build_panels(const AirfoilGeometry& geom, int per_side) {
  FOILRL_REQUIRE(per_side >= 8, InvalidParams, "panel method: too few panels");
  // The trailing-edge gap is closed linearly along the chord so the Kutta
  // condition acts on a sharp edge.
  const std::size_t ns = geom.size();
  const double gap = geom.y_upper.back() - geom.y_lower.back();
  std::vector<double> theta(ns), yu(ns), yl(ns);
  for (std::size_t i = 0; i < ns; ++i) {
    theta[i] = station_angle(geom.x[i]);
    yu[i] = geom.y_upper[i] - 0.5 * gap * geom.x[i];
    yl[i] = geom.y_lower[i] + 0.5 * gap * geom.x[i];
  }
  const NaturalSpline upper(theta, yu);
  const NaturalSpline lower(theta, yl);

  PanelGeometry p;
  const int m = per_side;
  p.xn.reserve(2 * m + 1);
  p.yn.reserve(2 * m + 1);
  auto node = [&](int k, const NaturalSpline& s) {
    const double th = std::numbers::pi * k / m;
    double x = 0.5 * (1.0 - std::cos(th));
    if (k == 0) x = 0.0;
    if (k == m) x = 1.0;
    p.xn.push_back(x);
    p.yn.push_back(s(th));
  };
  for (int k = m; k >= 1; --k) node(k, lower);
  node(0, upper);
  p.yn.back() = 0.5 * (upper(0.0) + lower(0.0));
  for (int k = 1; k <= m; ++k) node(k, upper);
  p.lower_panels = m;

  const int n = 2 * m;
  p.xc.resize(n);
  p.yc.resize(n);
  p.len.resize(n);
  p.tx.resize(n);
  p.ty.resize(n);
  p.nx.resize(n);
  p.ny.resize(n);
  for (int j = 0; j < n; ++j) {
    const double dx = p.xn[j + 1] - p.xn[j];
    const double dy = p.yn[j + 1] - p.yn[j];
    const double l = std::hypot(dx, dy);
    FOILRL_REQUIRE(l > 0.0, GeometryRejected, "panel method: zero-length panel");
    p.len[j] = l;
    p.tx[j] = dx / l;
    p.ty[j] = dy / l;
    p.nx[j] = -p.ty[j];
    p.ny[j] = p.tx[j];
    p.xc[j] = 0.5 * (p.xn[j] + p.xn[j + 1]);
    p.yc[j] = 0.5 * (p.yn[j] + p.yn[j + 1]);
  }
  return p;
}

VortexPanelSolver::VortexPanelSolver(const PanelGeometry& panels) : panels_(panels) {
  const int n = panels.panels();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + 1, n + 1);
  for (int i = 0; i < n; ++i) {
    const double xi = panels.xc[i];
    const double yi = panels.yc[i];
    const double nxi = panels.nx[i];
    const double nyi = panels.ny[i];
    for (int j = 0; j < n; ++j) {
      const double s = panels.len[j];
      const double rx = xi - panels.xn[j];
      const double ry = yi - panels.yn[j];
      // Control point in the panel frame (tangent, normal).
      const double lx = rx * panels.tx[j] + ry * panels.ty[j];
      const double ly = rx * panels.nx[j] + ry * panels.ny[j];
      const double r1sq = lx * lx + ly * ly;
      const double r2sq = (lx - s) * (lx - s) + ly * ly;
      const double beta = (i == j) ? std::numbers::pi
                                   : std::atan2(ly, lx - s) - std::atan2(ly, lx);
      const double log_r1_r2 = (i == j) ? 0.0 : 0.5 * std::log(r1sq / r2sq);
      const double i0u = beta;
      const double i1u = lx * beta - ly * log_r1_r2;
      const double i0v = log_r1_r2;
      const double i1v = lx * log_r1_r2 - s + ly * beta;
      const double ua = (i0u - i1u / s) / kTwoPi;
      const double ub = (i1u / s) / kTwoPi;
      const double va = -(i0v - i1v / s) / kTwoPi;
      const double vb = -(i1v / s) / kTwoPi;
      // Normal component at control point i.
      const double tn = panels.tx[j] * nxi + panels.ty[j] * nyi;
      const double nn = panels.nx[j] * nxi + panels.ny[j] * nyi;
      a(i, j) += ua * tn + va * nn;
      a(i, j + 1) += ub * tn + vb * nn;
    }
  }
  a(n, 0) = 1.0;
  a(n, n) = 1.0;
  lu_.compute(a);
  const double rc = lu_.rcond();
  singular_ = !(std::isfinite(rc) && rc > 1e-13);
}

Eigen::VectorXd VortexPanelSolver::solve(double alpha_rad, const Eigen::VectorXd& transpiration) const {
  const int n = panels_.panels();
  const double ux = std::cos(alpha_rad);
  const double uy = std::sin(alpha_rad);
  Eigen::VectorXd rhs(n + 1);
  for (int i = 0; i < n; ++i) {
    rhs(i) = -(ux * panels_.nx[i] + uy * panels_.ny[i]);
    if (transpiration.size() == n) rhs(i) += transpiration(i);
  }
  rhs(n) = 0.0;
  return lu_.solve(rhs);
}

double VortexPanelSolver::lift_coefficient(const Eigen::VectorXd& gamma) const {
  double circulation = 0.0;
  for (int j = 0; j < panels_.panels(); ++j) {
    circulation += 0.5 * (gamma(j) + gamma(j + 1)) * panels_.len[j];
  }
  return 2.0 * circulation;
}

}  // namespace foilrl::detail
