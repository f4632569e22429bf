#include "glider/hydro.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "glider/errors.hpp"

namespace glider {

void FlowConditions::validate() const {
  if (!(density > 0.0) || !(viscosity > 0.0) || !(speed > 0.0)) {
    throw InvalidArgument("flow conditions: density, viscosity and speed must be positive");
  }
}

AngleOfAttack AngleOfAttack::degrees(double deg) {
  if (!std::isfinite(deg) || std::abs(deg) > 90.0) {
    throw InvalidArgument("angle of attack must lie in [-90, 90] deg, got " + std::to_string(deg));
  }
  AngleOfAttack a;
  a.degrees_ = deg;
  return a;
}

double reynolds(const FlowConditions& flow, double length) {
  if (!(length > 0.0)) throw InvalidArgument("reynolds: length must be positive");
  if (!(flow.density > 0.0) || !(flow.viscosity > 0.0) || !(flow.speed >= 0.0)) {
    throw InvalidArgument("reynolds: invalid flow conditions");
  }
  return flow.density * flow.speed * length / flow.viscosity;
}

double skin_friction(double re) {
  if (!(re > 0.0)) throw InvalidArgument("skin_friction: Reynolds number must be positive");
  if (re < kTransitionReynolds) return 1.328 / std::sqrt(re);
  return 0.074 * std::pow(re, -0.2);
}

namespace {

double aspect_ratio(const MeshFeatures& f) {
  return std::clamp(f.span * f.span / f.planform_area, 0.1, 20.0);
}

}  // namespace

double parasitic_drag(const MeshFeatures& f, const FlowConditions& flow) {
  const double fineness = std::clamp(f.max_diameter / f.length, 0.0, 10.0);
  const double form = 1.0 + 1.5 * std::pow(fineness, 1.5) + 7.0 * std::pow(fineness, 3.0);
  return skin_friction(reynolds(flow, f.length)) * form * (f.wetted_area / f.reference_area);
}

HydroCoeffs oracle_coefficients(const MeshFeatures& f, AngleOfAttack alpha, const FlowConditions& flow) {
  if (std::abs(alpha.deg()) > kOracleEnvelopeDeg) {
    throw OutOfEnvelope("oracle_coefficients: |alpha| = " + std::to_string(std::abs(alpha.deg())) +
                        " deg exceeds the 45 deg envelope");
  }
  if (!(f.volume > 0.0) || !(f.wetted_area > 0.0) || !(f.length > 0.0) || !(f.max_diameter > 0.0) ||
      !(f.planform_area > 0.0) || !(f.span > 0.0) || !(f.reference_area > 0.0)) {
    throw InvalidArgument("oracle_coefficients: mesh features must be positive");
  }
  flow.validate();

  const double ar = aspect_ratio(f);
  const double lift_slope = 2.0 * kPi * ar / (ar + 2.0);
  const double a = alpha.rad();

  HydroCoeffs out;
  out.cl = lift_slope * std::sin(a) * std::cos(a) * (f.planform_area / f.reference_area);
  const double induced = out.cl * out.cl / (kPi * kOswaldEfficiency * ar) * (f.reference_area / f.planform_area);
  out.cd = parasitic_drag(f, flow) + induced;
  return out;
}

double efficiency(const HydroCoeffs& c) {
  if (!(c.cd > 0.0)) throw InvalidArgument("efficiency: drag coefficient must be positive");
  return c.cl / c.cd;
}

}  // namespace glider
