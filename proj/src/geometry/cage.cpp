#include <cmath>
#include <string>

#include "glider/errors.hpp"
#include "glider/geometry.hpp"

namespace glider {

double bernstein(int n, int i, double t) {
  if (i < 0 || i > n) return 0.0;
  double binom = 1.0;
  for (int k = 1; k <= i; ++k) binom = binom * (n - i + k) / k;
  return binom * std::pow(t, i) * std::pow(1.0 - t, n - i);
}

DeformationCage bind_cage(const TriMesh& mesh, int nx, int ny, int nz, double margin) {
  if (nx < 2 || ny < 2 || nz < 2) throw InvalidArgument("bind_cage: lattice dimensions must be >= 2");
  if (!(margin >= 0.0)) throw InvalidArgument("bind_cage: margin must be non-negative");
  if (mesh.vertices.empty()) throw InvalidGeometry("bind_cage: empty mesh");
  if (!is_watertight(mesh)) throw InvalidGeometry("bind_cage: mesh is not watertight");

  Vec3 lo = mesh.vertices.front();
  Vec3 hi = lo;
  for (const auto& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const Vec3 extent = hi - lo;
  for (int axis = 0; axis < 3; ++axis) {
    if (!(extent[axis] > 0.0)) {
      throw InvalidGeometry("bind_cage: zero bounding-box extent on axis " + std::to_string(axis));
    }
  }

  DeformationCage cage;
  cage.nx = nx;
  cage.ny = ny;
  cage.nz = nz;
  cage.box_min = lo - margin * extent;
  cage.box_max = hi + margin * extent;
  const Vec3 size = cage.box_max - cage.box_min;

  cage.rest.resize(static_cast<std::size_t>(nx * ny * nz));
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      for (int k = 0; k < nz; ++k) {
        const Vec3 u(double(i) / (nx - 1), double(j) / (ny - 1), double(k) / (nz - 1));
        cage.rest[cage.index(i, j, k)] = cage.box_min + u.cwiseProduct(size);
      }
    }
  }

  const auto rows = static_cast<Eigen::Index>(mesh.vertices.size());
  cage.weights.resize(rows, static_cast<Eigen::Index>(cage.rest.size()));
  std::vector<double> bx(nx), by(ny), bz(nz);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Vec3 u = (mesh.vertices[r] - cage.box_min).cwiseQuotient(size);
    for (int i = 0; i < nx; ++i) bx[i] = bernstein(nx - 1, i, u.x());
    for (int j = 0; j < ny; ++j) by[j] = bernstein(ny - 1, j, u.y());
    for (int k = 0; k < nz; ++k) bz[k] = bernstein(nz - 1, k, u.z());
    for (int i = 0; i < nx; ++i) {
      for (int j = 0; j < ny; ++j) {
        for (int k = 0; k < nz; ++k) {
          cage.weights(r, static_cast<Eigen::Index>(cage.index(i, j, k))) = bx[i] * by[j] * bz[k];
        }
      }
    }
  }
  return cage;
}

TriMesh deform(const DeformationCage& cage, const CageParams& params, const TriMesh& mesh) {
  if (params.size() != cage.param_count()) {
    throw InvalidArgument("deform: expected " + std::to_string(cage.param_count()) +
                          " offsets, got " + std::to_string(params.size()));
  }
  if (static_cast<Eigen::Index>(mesh.vertices.size()) != cage.weights.rows()) {
    throw InvalidArgument("deform: mesh is not the mesh bound to this cage");
  }

  const auto controls = static_cast<Eigen::Index>(cage.control_count());
  Eigen::MatrixXd moved(controls, 3);
  for (Eigen::Index c = 0; c < controls; ++c) {
    moved.row(c) = (cage.rest[c] + params.handle(c)).transpose();
  }
  const Eigen::MatrixXd positions = cage.weights * moved;

  TriMesh out;
  out.faces = mesh.faces;
  out.vertices.resize(mesh.vertices.size());
  for (Eigen::Index r = 0; r < positions.rows(); ++r) out.vertices[r] = positions.row(r).transpose();

  const double volume = signed_volume(out);
  if (!(volume > 0.0)) {
    throw DegenerateShape("deform: signed volume " + std::to_string(volume) + " is not positive");
  }
  return out;
}

CageParams interpolate(const CageParams& a, const CageParams& b, double t) {
  if (a.size() != b.size()) throw InvalidArgument("interpolate: parameter lengths differ");
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("interpolate: t must lie in [0, 1]");
  return CageParams((1.0 - t) * a.offsets + t * b.offsets);
}

}  // namespace glider
