#pragma once

// Planar (x, z) glide model. z points down, theta is the trajectory angle
// below the horizontal. Force coefficients are dimensional: C* = c * A_ref in m^2,
// so drag is 0.5 * rho * C_d* * v^2.

#include <filesystem>
#include <vector>

#include "glider/hydro.hpp"

namespace glider {

inline constexpr double kGravity = 9.81;
inline constexpr double kAtmosphere = 101325.0;

struct GliderPhysical {
  double hull_mass = 5.0;          // kg, inertial mass of the point model
  double ballast = 0.1;            // kg, net mass; positive sinks
  double drag_area = 0.02;         // C_d*, m^2
  double lift_area = 0.05;         // C_l*, m^2
  double shifter_stroke = 0.16;    // m
  double shifter_mass = 0.8;       // kg
  double ballast_capacity = 2.0;   // kg, largest |ballast| the pump can hold

  void validate() const;
};

// Dimensional coefficients from reference-area-normalized ones.
GliderPhysical with_coefficients(GliderPhysical phys, const HydroCoeffs& coeffs, double reference_area);

struct BuoyancyConfig {
  double depth = 100.0;                  // m
  double chamber_pressure = kAtmosphere; // Pa
  double pump_efficiency = 1.0;          // (0, 1]
  double gravity = kGravity;
  double density = kSeawaterDensity;

  void validate() const;
  // rho g h - P_chamber; pump work uses the rho g h approximation.
  double pressure_difference() const { return density * gravity * depth - chamber_pressure; }
};

struct GlideState {
  double t = 0.0;
  double x = 0.0;
  double z = 0.0;
  double vx = 0.0;
  double vz = 0.0;

  double speed() const;
  double theta() const;  // atan2(vz, vx)
};

struct SteadyGlide {
  double speed = 0.0;
  double theta = 0.0;  // positive descending, negative on the ascending branch

  double vx() const;
  double vz() const;
};

// Closed-form force balance: v^2 = |dm| g / (0.5 rho sqrt(Cd*^2 + Cl*^2)) and
// tan(theta) = Cd* / Cl*. Non-positive ballast gives the mirrored ascending glide.
SteadyGlide steady_glide(double ballast, double density, double drag_area, double lift_area,
                         double gravity = kGravity);

// One-way pump work g h dm / eta_g.
double pump_work(const BuoyancyConfig& cfg, double ballast);
double pump_work_round_trip(const BuoyancyConfig& cfg, double ballast);

// dm g (cd / cl) / eta_g; independent of depth.
double work_per_distance(double ballast, double cd, double cl, double pump_efficiency, double gravity = kGravity);

struct SimOptions {
  // -1 flips the lift direction; used to check that the identity tests notice.
  double lift_sign = 1.0;
};

// Semi-implicit Euler from rest under net body force, quadratic drag against
// the velocity and lift perpendicular to it. Returns every step, initial state
// included. Throws std::runtime_error naming the step if the state turns non-finite.
std::vector<GlideState> simulate(const GliderPhysical& phys, const BuoyancyConfig& cfg, double dt, double duration,
                                 const SimOptions& options = {});

struct CycleSummary {
  double depth = 0.0;
  double speed = 0.0;
  double theta = 0.0;  // descent angle, rad
  double vx = 0.0;
  double vz = 0.0;
  double descent_distance = 0.0;
  double ascent_distance = 0.0;
  double distance = 0.0;
  double duration = 0.0;
  double energy = 0.0;
  double work_per_distance = 0.0;
};

// One descend/ascend sawtooth at steady glide on both branches.
CycleSummary dive_cycle(const GliderPhysical& phys, const BuoyancyConfig& cfg, double depth);

// CSV columns t, x, z, v_x, v_z, theta_deg.
void write_trajectory_csv(const std::vector<GlideState>& states, const std::filesystem::path& path,
                          std::size_t stride = 1);

}  // namespace glider
