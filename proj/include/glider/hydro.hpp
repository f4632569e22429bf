#pragma once

// Analytic lift/drag oracle. Coefficients are normalized by the volumetric
// reference area V^(2/3) of the hull.

#include "glider/geometry.hpp"

namespace glider {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSeawaterDensity = 1025.0;     // kg/m^3
inline constexpr double kSeawaterViscosity = 1.08e-3;  // Pa s
inline constexpr double kDefaultFlowSpeed = 0.3;       // m/s
inline constexpr double kTransitionReynolds = 5.0e5;
inline constexpr double kOswaldEfficiency = 0.8;
inline constexpr double kOracleEnvelopeDeg = 45.0;

struct FlowConditions {
  double density = kSeawaterDensity;
  double viscosity = kSeawaterViscosity;
  double speed = kDefaultFlowSpeed;

  // Throws InvalidArgument unless every field is positive.
  void validate() const;
};

class AngleOfAttack {
 public:
  AngleOfAttack() = default;
  static AngleOfAttack degrees(double deg);
  static AngleOfAttack radians(double rad) { return degrees(rad * 180.0 / kPi); }

  // Stored in degrees so configured angles read back exactly.
  double deg() const { return degrees_; }
  double rad() const { return degrees_ * kPi / 180.0; }
  AngleOfAttack operator-() const { return degrees(-degrees_); }

 private:
  double degrees_ = 0.0;
};

struct HydroCoeffs {
  double cd = 0.0;
  double cl = 0.0;
};

double reynolds(const FlowConditions& flow, double length);

// Flat-plate skin friction: laminar Blasius below Re = 5e5, turbulent
// one-fifth power law above.
double skin_friction(double re);

// Throws OutOfEnvelope for |alpha| > 45 deg.
HydroCoeffs oracle_coefficients(const MeshFeatures& f, AngleOfAttack alpha, const FlowConditions& flow);

// Zero-lift (parasitic) part of the oracle drag.
double parasitic_drag(const MeshFeatures& f, const FlowConditions& flow);

// Lift-to-drag ratio cl / cd.
double efficiency(const HydroCoeffs& c);

}  // namespace glider
