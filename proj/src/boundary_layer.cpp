#include "boundary_layer.hpp"

#include <algorithm>
#include <cmath>

namespace foilrl::detail {

namespace {

// Cebeci-Bradshaw fits of Thwaites' shear and shape functions.
void thwaites_functions(double lambda, double& l, double& h) {
  lambda = std::clamp(lambda, -0.1, 0.1);
  if (lambda >= 0.0) {
    l = 0.22 + 1.57 * lambda - 1.8 * lambda * lambda;
    h = 2.61 - 3.75 * lambda + 5.24 * lambda * lambda;
  } else {
    l = 0.22 + 1.402 * lambda + 0.018 * lambda / (lambda + 0.107);
    h = 2.088 + 0.0731 / (lambda + 0.14);
  }
}

double ludwieg_tillmann(double h, double re_theta) {
  re_theta = std::max(re_theta, 10.0);
  return 0.246 * std::pow(10.0, -0.678 * h) * std::pow(re_theta, -0.268);
}

double entrainment(double h1) { return 0.0306 * std::pow(std::max(h1 - 3.0, 1e-3), -0.6169); }

bool michel_transition(double re_theta, double re_x) {
  if (re_x <= 0.0) return false;
  return re_theta > 1.174 * (1.0 + 22400.0 / re_x) * std::pow(re_x, 0.46);
}

}  // namespace

double head_h1_of_h(double h) {
  if (h <= 1.6) return 3.3 + 0.8234 * std::pow(std::max(h - 1.1, 1e-6), -1.287);
  return 3.3 + 1.5501 * std::pow(h - 0.6778, -3.064);
}

double head_h_of_h1(double h1) {
  h1 = std::max(h1, 3.3 + 1e-6);
  if (h1 >= 5.3) return 1.1 + std::pow((h1 - 3.3) / 0.8234, -1.0 / 1.287);
  return 0.6778 + std::pow((h1 - 3.3) / 1.5501, -1.0 / 3.064);
}

double squire_young(double theta_te, double shape_te, double ue_te) {
  return 2.0 * theta_te * std::pow(std::max(ue_te, 0.0), 0.5 * (shape_te + 5.0));
}

BoundaryLayerResult march_boundary_layer(const SurfaceFlow& flow, double reynolds) {
  const std::size_t n = flow.s.size();
  BoundaryLayerResult r;
  r.theta.assign(n, 0.0);
  r.shape.assign(n, 0.0);
  r.displacement.assign(n, 0.0);
  r.cf.assign(n, 0.0);
  if (n < 3) {
    r.ok = false;
    return r;
  }
  const double nu = 1.0 / reynolds;
  const auto& s = flow.s;
  const auto& ue = flow.ue;

  // Stagnation initial condition from the leading velocity gradient.
  const double due0 = std::max((ue[1] - ue[0]) / std::max(s[1] - s[0], 1e-12), 1e-3);
  double integral = 0.0;  // int ue^5 ds
  double theta_sq = 0.075 * nu / due0;
  r.theta[0] = std::sqrt(theta_sq);
  r.shape[0] = 2.61 - 3.75 * 0.075 + 5.24 * 0.075 * 0.075;
  r.cf[0] = 0.0;

  bool turbulent = false;
  std::size_t i = 1;
  for (; i < n; ++i) {
    const double u = std::max(ue[i], 1e-6);
    const double ds = s[i] - s[i - 1];
    const double u5a = std::pow(std::max(ue[i - 1], 0.0), 5);
    const double u5b = std::pow(u, 5);
    integral += 0.5 * (u5a + u5b) * ds;
    theta_sq = 0.45 * nu * integral / std::pow(u, 6);
    if (i == 1) theta_sq = std::max(theta_sq, r.theta[0] * r.theta[0]);
    const double theta = std::sqrt(theta_sq);
    const std::size_t ip = std::min(i + 1, n - 1);
    const double due = (ue[ip] - ue[i - 1]) / std::max(s[ip] - s[i - 1], 1e-12);
    const double lambda = theta_sq * due * reynolds;
    double l = 0.0;
    double h = 0.0;
    thwaites_functions(lambda, l, h);
    r.theta[i] = theta;
    r.shape[i] = h;
    const double re_theta = u * theta * reynolds;
    r.cf[i] = 2.0 * l / std::max(re_theta, 1e-9);
    const double re_x = u * s[i] * reynolds;
    if (lambda < kLaminarSeparationLambda || michel_transition(re_theta, re_x)) {
      turbulent = true;
      r.transition_index = static_cast<int>(i);
      break;
    }
  }

  if (turbulent) {
    double theta = r.theta[i];
    double h = kTurbulentStartShape;
    double h1 = head_h1_of_h(h);
    bool separated = false;
    r.shape[i] = h;
    r.cf[i] = ludwieg_tillmann(h, std::max(ue[i], 1e-6) * theta * reynolds);

    auto rates = [&](double th, double hh1, double u, double du, double& dth, double& dh1) {
      const double hh = separated ? r.shape[r.separation_index] : head_h_of_h1(hh1);
      const double cf = separated ? 0.0 : ludwieg_tillmann(hh, u * th * reynolds);
      dth = 0.5 * cf - (hh + 2.0) * th / u * du;
      // d(u th H1)/ds = u F(H1)
      dh1 = separated ? 0.0 : (entrainment(hh1) - hh1 * (dth + th * du / u)) / th;
    };

    for (std::size_t k = i + 1; k < n; ++k) {
      const double ds = s[k] - s[k - 1];
      const double ua = std::max(ue[k - 1], 1e-6);
      const double ub = std::max(ue[k], 1e-6);
      const double du = (ub - ua) / std::max(ds, 1e-12);
      const int sub = 4;
      const double h_step = ds / sub;
      for (int q = 0; q < sub; ++q) {
        const double u0 = ua + (ub - ua) * q / sub;
        const double u1 = ua + (ub - ua) * (q + 1) / sub;
        double d1t, d1h, d2t, d2h;
        rates(theta, h1, u0, du, d1t, d1h);
        const double tp = std::max(theta + h_step * d1t, 1e-9);
        const double hp = h1 + h_step * d1h;
        rates(tp, hp, u1, du, d2t, d2h);
        theta = std::max(theta + 0.5 * h_step * (d1t + d2t), 1e-9);
        h1 = h1 + 0.5 * h_step * (d1h + d2h);
        h1 = std::clamp(h1, 3.3 + 1e-6, 20.0);
      }
      if (!std::isfinite(theta) || !std::isfinite(h1)) {
        r.ok = false;
        return r;
      }
      h = separated ? r.shape[r.separation_index] : head_h_of_h1(h1);
      if (!separated && h > kTurbulentSeparationShape) {
        separated = true;
        h = kTurbulentSeparationShape;
        r.separation_index = static_cast<int>(k);
      }
      r.theta[k] = theta;
      r.shape[k] = h;
      r.cf[k] = separated ? 0.0 : ludwieg_tillmann(h, ub * theta * reynolds);
    }
  }

  for (std::size_t k = 0; k < n; ++k) r.displacement[k] = r.theta[k] * r.shape[k];
  if (r.separation_index >= 0) {
    r.separated_fraction = (s.back() - s[r.separation_index]) / std::max(s.back(), 1e-12);
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::isfinite(r.theta[k]) || !std::isfinite(r.shape[k])) r.ok = false;
  }
  return r;
}

}  // namespace foilrl::detail
