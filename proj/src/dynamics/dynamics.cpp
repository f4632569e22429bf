#include "glider/dynamics.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>

#include "glider/errors.hpp"
#include "glider/json_io.hpp"

namespace glider {

void GliderPhysical::validate() const {
  if (!(hull_mass > 0.0)) throw InvalidArgument("glider: hull mass must be positive");
  if (!(drag_area > 0.0)) throw InvalidArgument("glider: drag area must be positive");
  if (!std::isfinite(lift_area)) throw InvalidArgument("glider: lift area must be finite");
  if (!(std::abs(ballast) <= ballast_capacity)) {
    throw InvalidArgument("glider: |ballast| exceeds the buoyancy engine capacity");
  }
}

GliderPhysical with_coefficients(GliderPhysical phys, const HydroCoeffs& coeffs, double reference_area) {
  if (!(reference_area > 0.0)) throw InvalidArgument("with_coefficients: reference area must be positive");
  phys.drag_area = coeffs.cd * reference_area;
  phys.lift_area = coeffs.cl * reference_area;
  return phys;
}

void BuoyancyConfig::validate() const {
  if (!(depth >= 0.0)) throw InvalidArgument("buoyancy: depth must be non-negative");
  if (!(pump_efficiency > 0.0 && pump_efficiency <= 1.0)) {
    throw InvalidArgument("buoyancy: pump efficiency must lie in (0, 1]");
  }
  if (!(gravity > 0.0) || !(density > 0.0)) throw InvalidArgument("buoyancy: gravity and density must be positive");
}

double GlideState::speed() const { return std::hypot(vx, vz); }
double GlideState::theta() const { return std::atan2(vz, vx); }

double SteadyGlide::vx() const { return speed * std::cos(theta); }
double SteadyGlide::vz() const { return speed * std::sin(theta); }

SteadyGlide steady_glide(double ballast, double density, double drag_area, double lift_area, double gravity) {
  if (!(density > 0.0) || !(gravity > 0.0)) throw InvalidArgument("steady_glide: density and gravity must be positive");
  if (!(drag_area > 0.0)) throw InvalidArgument("steady_glide: drag area must be positive");
  const double resultant = std::hypot(drag_area, lift_area);
  SteadyGlide out;
  out.speed = std::sqrt(std::abs(ballast) * gravity / (0.5 * density * resultant));
  out.theta = std::atan2(drag_area, lift_area);
  if (ballast < 0.0) out.theta = -out.theta;
  return out;
}

double pump_work(const BuoyancyConfig& cfg, double ballast) {
  cfg.validate();
  if (ballast < 0.0) throw InvalidArgument("pump_work: ballast must be non-negative");
  return cfg.gravity * cfg.depth * ballast / cfg.pump_efficiency;
}

double pump_work_round_trip(const BuoyancyConfig& cfg, double ballast) { return 2.0 * pump_work(cfg, ballast); }

double work_per_distance(double ballast, double cd, double cl, double pump_efficiency, double gravity) {
  if (!(cl > 0.0)) throw InvalidArgument("work_per_distance: lift coefficient must be positive");
  if (!(pump_efficiency > 0.0 && pump_efficiency <= 1.0)) {
    throw InvalidArgument("work_per_distance: pump efficiency must lie in (0, 1]");
  }
  return ballast * gravity * (cd / cl) / pump_efficiency;
}

std::vector<GlideState> simulate(const GliderPhysical& phys, const BuoyancyConfig& cfg, double dt, double duration,
                                 const SimOptions& options) {
  phys.validate();
  cfg.validate();
  if (!(dt > 0.0 && dt <= 0.1)) throw InvalidArgument("simulate: dt must lie in (0, 0.1]");
  if (!(duration >= 10.0 * dt)) throw InvalidArgument("simulate: duration must be at least 10 steps");

  const auto steps = static_cast<long>(std::llround(duration / dt));
  const double q = 0.5 * cfg.density;
  const double body_force = phys.ballast * cfg.gravity;
  // Lift turns the path toward the horizontal on both branches.
  const double lift_side = options.lift_sign * (phys.ballast >= 0.0 ? 1.0 : -1.0);

  std::vector<GlideState> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  GlideState s;
  out.push_back(s);
  for (long k = 1; k <= steps; ++k) {
    const double v = s.speed();
    const double fx = -q * phys.drag_area * v * s.vx + lift_side * q * phys.lift_area * v * s.vz;
    const double fz = body_force - q * phys.drag_area * v * s.vz - lift_side * q * phys.lift_area * v * s.vx;
    s.vx += dt * fx / phys.hull_mass;
    s.vz += dt * fz / phys.hull_mass;
    s.x += dt * s.vx;
    s.z += dt * s.vz;
    s.t = static_cast<double>(k) * dt;
    if (!std::isfinite(s.x) || !std::isfinite(s.z) || !std::isfinite(s.vx) || !std::isfinite(s.vz)) {
      throw std::runtime_error("simulate: state became non-finite at step " + std::to_string(k));
    }
    out.push_back(s);
  }
  return out;
}

CycleSummary dive_cycle(const GliderPhysical& phys, const BuoyancyConfig& cfg, double depth) {
  phys.validate();
  if (!(depth > 0.0)) throw InvalidArgument("dive_cycle: depth must be positive");
  if (phys.ballast == 0.0) throw InvalidArgument("dive_cycle: zero ballast does not glide");
  BuoyancyConfig at_depth = cfg;
  at_depth.depth = depth;
  at_depth.validate();

  const double dm = std::abs(phys.ballast);
  const SteadyGlide descent = steady_glide(dm, cfg.density, phys.drag_area, phys.lift_area, cfg.gravity);
  const SteadyGlide ascent = steady_glide(-dm, cfg.density, phys.drag_area, phys.lift_area, cfg.gravity);

  CycleSummary c;
  c.depth = depth;
  c.speed = descent.speed;
  c.theta = descent.theta;
  c.vx = descent.vx();
  c.vz = descent.vz();
  c.descent_distance = depth / descent.vz() * descent.vx();
  c.ascent_distance = depth / -ascent.vz() * ascent.vx();
  c.distance = 2.0 * (depth / c.vz) * c.vx;
  c.duration = depth / descent.vz() + depth / -ascent.vz();
  c.energy = pump_work_round_trip(at_depth, dm);
  c.work_per_distance = c.energy / c.distance;
  return c;
}

void write_trajectory_csv(const std::vector<GlideState>& states, const std::filesystem::path& path,
                          std::size_t stride) {
  if (stride == 0) stride = 1;
  std::ostringstream os;
  os << std::setprecision(17);
  os << "t,x,z,v_x,v_z,theta_deg\n";
  for (std::size_t i = 0; i < states.size(); i += stride) {
    const auto& s = states[i];
    const double theta = s.speed() > 0.0 ? s.theta() * 180.0 / kPi : 0.0;
    os << s.t << ',' << s.x << ',' << s.z << ',' << s.vx << ',' << s.vz << ',' << theta << '\n';
  }
  write_text_atomic(path, os.str());
}

}  // namespace glider
