#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <tuple>

#include "glider/dataset.hpp"
#include "glider/errors.hpp"

namespace glider {

void GeometrySettings::validate() const {
  if (!(semi_x > 0.0) || !(semi_y > 0.0) || !(semi_z > 0.0)) {
    throw InvalidArgument("geometry: semi-axes must be positive");
  }
  if (subdivisions < 0 || subdivisions > 7) throw InvalidArgument("geometry: subdivisions must be in [0, 7]");
  if (nx < 2 || ny < 2 || nz < 2) throw InvalidArgument("geometry: cage dimensions must be >= 2");
  if (!(margin >= 0.0)) throw InvalidArgument("geometry: margin must be non-negative");
}

std::pair<TriMesh, DeformationCage> make_base_geometry(const GeometrySettings& geometry) {
  geometry.validate();
  TriMesh mesh = make_ellipsoid(geometry.semi_x, geometry.semi_y, geometry.semi_z, geometry.subdivisions);
  DeformationCage cage = bind_cage(mesh, geometry.nx, geometry.ny, geometry.nz, geometry.margin);
  return {std::move(mesh), std::move(cage)};
}

namespace {

// Writes handle offsets in terms of lattice stations. Stations are scaled to the
// lattice so the patterns also apply to cages other than 4x3x3.
class CageEditor {
 public:
  CageEditor(const DeformationCage& cage, double body_length)
      : cage_(cage), length_(body_length), params_(CageParams::zeros(cage)) {
    center_ = 0.5 * (cage.box_min + cage.box_max);
  }

  double length() const { return length_; }
  int last_x() const { return cage_.nx - 1; }

  // Station as a fraction of the x lattice, rounded to the nearest index.
  int station(double fraction) const { return static_cast<int>(std::lround(fraction * last_x())); }

  void scale_axis(int axis, double factor) {
    for (std::size_t c = 0; c < cage_.control_count(); ++c) {
      add(c, axis, (cage_.rest[c][axis] - center_[axis]) * (factor - 1.0));
    }
  }

  // Scales the y/z cross-section of one x station about the body axis.
  void scale_section(int i, double factor) {
    for (int j = 0; j < cage_.ny; ++j) {
      for (int k = 0; k < cage_.nz; ++k) {
        const std::size_t c = cage_.index(i, j, k);
        add(c, 1, (cage_.rest[c].y() - center_.y()) * (factor - 1.0));
        add(c, 2, (cage_.rest[c].z() - center_.z()) * (factor - 1.0));
      }
    }
  }

  void shift_station(int i, double dx) {
    for (int j = 0; j < cage_.ny; ++j) {
      for (int k = 0; k < cage_.nz; ++k) add(cage_.index(i, j, k), 0, dx);
    }
  }

  // Symmetric lateral bulge on the mid-height row of station i.
  void wing(int i, double amount) {
    const int k = cage_.nz / 2;
    add(cage_.index(i, 0, k), 1, -amount);
    add(cage_.index(i, cage_.ny - 1, k), 1, amount);
  }

  // Vertical push of the bottom (sign -1) or top (sign +1) centre row.
  void fin(int i, double amount, int sign) {
    const int j = cage_.ny / 2;
    const int k = sign < 0 ? 0 : cage_.nz - 1;
    add(cage_.index(i, j, k), 2, sign * amount);
  }

  void jitter(std::mt19937_64& rng, double amplitude) {
    std::uniform_real_distribution<double> u(-amplitude, amplitude);
    for (Eigen::Index p = 0; p < params_.offsets.size(); ++p) params_.offsets[p] += u(rng);
  }

  CageParams take() { return std::move(params_); }

 private:
  void add(std::size_t control, int axis, double value) {
    params_.offsets[static_cast<Eigen::Index>(3 * control + axis)] += value;
  }

  const DeformationCage& cage_;
  double length_;
  Vec3 center_;
  CageParams params_;
};

using Archetype = std::function<void(CageEditor&, double gain)>;

struct NamedArchetype {
  std::string name;
  Archetype apply;
};

void winged(CageEditor& e, double gain, std::initializer_list<std::pair<double, double>> stations) {
  for (const auto& [where, weight] : stations) e.wing(e.station(where), 0.55 * e.length() * gain * weight);
}

const std::vector<NamedArchetype>& archetypes() {
  static const std::vector<NamedArchetype> table = {
      {"torpedo",
       [](CageEditor& e, double g) {
         e.scale_axis(1, std::max(0.45, 1.0 - 0.25 * g));
         e.scale_axis(2, std::max(0.55, 1.0 - 0.15 * g));
         e.shift_station(0, -0.05 * e.length() * g);
         e.shift_station(e.last_x(), 0.05 * e.length() * g);
       }},
      {"winged-1", [](CageEditor& e, double g) { winged(e, g, {{2.0 / 3.0, 1.0}}); }},
      {"winged-2", [](CageEditor& e, double g) { winged(e, g, {{1.0 / 3.0, 0.8}, {2.0 / 3.0, 0.8}}); }},
      {"winged-3", [](CageEditor& e, double g) { winged(e, g, {{0.0, 0.5}, {1.0 / 3.0, 0.8}, {1.0, 0.6}}); }},
      {"winged-4",
       [](CageEditor& e, double g) {
         winged(e, g, {{0.0, 0.5}, {1.0 / 3.0, 0.7}, {2.0 / 3.0, 0.7}, {1.0, 0.5}});
       }},
      {"ray",
       [](CageEditor& e, double g) {
         e.scale_axis(1, 1.0 + 0.5 * g);
         e.scale_axis(2, 1.0 - 0.3 * std::min(g, 1.5));
         winged(e, g, {{1.0 / 3.0, 0.3}, {2.0 / 3.0, 0.3}});
       }},
      {"keeled",
       [](CageEditor& e, double g) {
         e.scale_axis(1, 0.85);
         e.fin(e.station(1.0 / 3.0), 0.25 * e.length() * g, -1);
         e.fin(e.station(2.0 / 3.0), 0.25 * e.length() * g, -1);
       }},
      {"dorsal",
       [](CageEditor& e, double g) {
         e.fin(e.station(1.0 / 3.0), 0.2 * e.length() * g, +1);
         e.fin(e.station(2.0 / 3.0), 0.2 * e.length() * g, +1);
         e.fin(e.station(2.0 / 3.0), 0.1 * e.length() * g, -1);
       }},
      {"pointed",
       [](CageEditor& e, double g) {
         e.scale_section(0, std::max(0.3, 1.0 - 0.5 * g));
         e.scale_section(e.last_x(), 1.0 + 0.2 * g);
         e.shift_station(0, -0.08 * e.length() * g);
       }},
      {"swept-tail",
       [](CageEditor& e, double g) {
         e.scale_axis(2, std::max(0.6, 1.0 - 0.2 * g));
         winged(e, g, {{2.0 / 3.0, 0.4}, {1.0, 0.9}});
       }},
  };
  return table;
}

constexpr double kJitterFraction = 0.02;

void check_shape(const BaseShapeFamily& family, const BaseShape& shape) {
  if (shape.params.size() != family.cage.param_count()) {
    throw GenerationError("shape '" + shape.name + "' has the wrong parameter count");
  }
  if (!shape.params.all_finite()) throw GenerationError("shape '" + shape.name + "' has non-finite offsets");
  try {
    mesh_features(deform(family.cage, shape.params, family.base));
  } catch (const std::exception& err) {
    throw GenerationError("archetype '" + shape.name + "' produced a degenerate hull: " + err.what());
  }
}

}  // namespace

const std::vector<std::string>& archetype_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& a : archetypes()) out.push_back(a.name);
    return out;
  }();
  return names;
}

BaseShapeFamily make_base_family(std::uint64_t seed, int n, const GeometrySettings& geometry) {
  if (n < 2) throw InvalidArgument("make_base_family: need at least two base shapes");
  BaseShapeFamily family;
  family.geometry = geometry;
  family.seed = seed;
  std::tie(family.base, family.cage) = make_base_geometry(geometry);
  const double length = 2.0 * geometry.semi_x;

  const auto& table = archetypes();
  const auto count = static_cast<int>(table.size());
  for (int i = 0; i < n; ++i) {
    const auto& archetype = table[static_cast<std::size_t>(i % count)];
    const int variant = i / count;
    const double gain = 1.0 + 0.35 * variant;

    CageEditor editor(family.cage, length);
    archetype.apply(editor, gain);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(i)};
    std::mt19937_64 rng(seq);
    editor.jitter(rng, kJitterFraction * length);

    BaseShape shape{archetype.name + "/v" + std::to_string(variant), editor.take()};
    check_shape(family, shape);
    family.shapes.push_back(std::move(shape));
  }
  return family;
}

BaseShapeFamily make_family(const GeometrySettings& geometry, std::vector<BaseShape> shapes) {
  BaseShapeFamily family;
  family.geometry = geometry;
  std::tie(family.base, family.cage) = make_base_geometry(geometry);
  for (const auto& s : shapes) check_shape(family, s);
  family.shapes = std::move(shapes);
  return family;
}

}  // namespace glider
