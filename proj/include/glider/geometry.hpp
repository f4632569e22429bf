#pragma once

// Hull geometry: triangle meshes, the ellipsoid base shape, the free-form
// deformation cage that maps a short offset vector to a deformed hull, and
// the scalar features consumed by the hydrodynamics oracle.

#include <array>
#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace glider {

using Vec3 = Eigen::Vector3d;

// Closed triangle mesh; faces are counterclockwise seen from outside.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
};

// True when every face index is in range and every undirected edge is shared by
// exactly two faces with opposite orientation.
bool is_watertight(const TriMesh& mesh);

// Divergence-theorem volume; positive for outward-oriented closed meshes.
double signed_volume(const TriMesh& mesh);

double surface_area(const TriMesh& mesh);

// Icosphere refined `subdivisions` times (1-to-4 split, midpoints projected back
// onto the unit sphere) and scaled per axis by the semi-axes (a, b, c).
TriMesh make_ellipsoid(double a, double b, double c, int subdivisions);

// Degree-n Bernstein basis polynomial B_{i,n}(t).
double bernstein(int n, int i, double t);

// Trivariate Bernstein lattice enclosing a mesh. Control point (i, j, k) has
// flat index (i * ny + j) * nz + k and occupies offsets [3*idx, 3*idx + 3) of
// the parameter vector.
struct DeformationCage {
  int nx = 2;
  int ny = 2;
  int nz = 2;
  Vec3 box_min = Vec3::Zero();
  Vec3 box_max = Vec3::Zero();
  std::vector<Vec3> rest;
  // vertex count x control-point count; each row sums to one.
  Eigen::MatrixXd weights;

  std::size_t control_count() const { return rest.size(); }
  std::size_t param_count() const { return 3 * rest.size(); }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>((i * ny + j) * nz + k);
  }
};

// Handle offsets of a cage, flattened as [dx0, dy0, dz0, dx1, ...] in meters.
struct CageParams {
  Eigen::VectorXd offsets;

  CageParams() = default;
  explicit CageParams(Eigen::VectorXd values) : offsets(std::move(values)) {}
  static CageParams zeros(const DeformationCage& cage) {
    return CageParams(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cage.param_count())));
  }

  std::size_t size() const { return static_cast<std::size_t>(offsets.size()); }
  bool all_finite() const { return offsets.allFinite(); }
  Vec3 handle(std::size_t control) const {
    return offsets.segment<3>(static_cast<Eigen::Index>(3 * control));
  }
};

DeformationCage bind_cage(const TriMesh& mesh, int nx, int ny, int nz, double margin);

// Moves every vertex to the weighted sum of displaced control points. Throws
// InvalidArgument on a length mismatch and DegenerateShape when the result has
// non-positive signed volume.
TriMesh deform(const DeformationCage& cage, const CageParams& params, const TriMesh& mesh);

// (1 - t) * a + t * b.
CageParams interpolate(const CageParams& a, const CageParams& b, double t);

struct MeshFeatures {
  double volume = 0.0;            // m^3
  double wetted_area = 0.0;       // m^2
  double length = 0.0;            // x extent, m
  double max_diameter = 0.0;      // largest y/z section extent, m
  double planform_area = 0.0;     // projection onto the x-y plane, m^2
  double span = 0.0;              // y extent, m
  double reference_area = 0.0;    // volume^(2/3), m^2
};

inline constexpr int kDiameterSlices = 64;
inline constexpr int kPlanformResolution = 256;

// Throws InvalidGeometry for meshes that are not watertight or have no volume.
MeshFeatures mesh_features(const TriMesh& mesh);

}  // namespace glider
